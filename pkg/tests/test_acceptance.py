"""Acceptance gate: one test per release criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion. Each test enforces its criterion at the stated sample counts and
tolerances; a failure here blocks release.
"""

import json
import random
import time

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from studiolens.cli import main as cli_main
from studiolens.config import ANALYTIC_KINDS, EngineConfig
from studiolens.consistency import consistency
from studiolens.contrast import ContrastConfig, contrast_ratio, legible_contrast
from studiolens.feedback import (
    Annotation,
    ContestRecord,
    ContestStore,
    StatusAction,
    TransitionError,
    diff,
    export_labels,
    update_statuses,
)
from studiolens.ideas import extract_ideas, fluency
from studiolens.model import Color, validate_version_chain
from studiolens.report import analyze, report_bytes
from studiolens.semantics import flexibility, load_embeddings, semantic_distance
from studiolens.service import ServiceConfig, create_app
from studiolens.spatial import (
    SpatialPoint,
    amoeba_cluster,
    assign_scales,
    build_cluster_tree,
    multiscale,
)

from conftest import (
    DOCUMENT_FIXTURES,
    fixture_path,
    image_el,
    load_doc,
    make_doc,
    text_el,
)
from oracles import (
    oracle_amoeba,
    oracle_average_linkage,
    oracle_contrast_analysis,
    oracle_recursive_clusters,
)

TOY_PATH = str(fixture_path("toy_vectors.txt"))


def ok(name: str):
    print(f"\n[ACCEPTANCE] {name}: PASS", flush=True)


# =====================================================================
# Criterion 1: oracle equivalence, exact, full suite under 60 s.
# =====================================================================

def test_oracle_equivalence():
    start = time.monotonic()

    # Edge-filter clustering vs brute force on 500 random point sets.
    rng = random.Random(20260809)
    for trial in range(500):
        n = rng.randint(1, 12)
        style = trial % 4
        if style == 0:
            coords = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(n)]
        elif style == 1:
            coords = [(float(rng.randint(0, 6)), float(rng.randint(0, 6))) for _ in range(n)]
        elif style == 2:
            coords = [(float(rng.randint(0, 60)), 4.0) for _ in range(n)]
        else:
            base = [(rng.uniform(0, 20), rng.uniform(0, 20)) for _ in range((n + 1) // 2)]
            coords = (base + [(x + 80, y + 80) for x, y in base])[:n]
        k = rng.choice([0.0, 0.5, 1.0, 2.0])
        points = [SpatialPoint(f"p{i}", x, y) for i, (x, y) in enumerate(coords)]
        got = {frozenset(c) for c in amoeba_cluster(points, k).clusters}
        expected = oracle_amoeba(points, k)
        assert got == expected, f"trial {trial}: {coords} k={k}"

    # Flexibility vs exhaustive average-linkage trace on idea sets <= 8.
    table = load_embeddings(TOY_PATH)
    vocabulary = sorted(table.entries)
    from studiolens.ideas import Idea
    for trial in range(300):
        size = rng.randint(1, 8)
        terms = rng.sample(vocabulary, size)
        tau = rng.choice([0.1, 0.25, 0.5, 0.6, 0.8, 1.1, 1.5, 1.9])
        ideas = [Idea(term=t, source_element_ids=("e",), origin="text_token") for t in terms]
        got = {frozenset(c.member_idea_terms) for c in flexibility(ideas, table, tau).categories}
        expected = oracle_average_linkage(
            terms, lambda a, b: semantic_distance(a, b, table), tau)
        assert got == expected, f"trial {trial}: {terms} tau={tau}"

    # Contrast vs the naive per-cell oracle on every committed fixture.
    config = ContrastConfig(block_resolution=64)
    for name in DOCUMENT_FIXTURES:
        doc = load_doc(name)
        result = legible_contrast(doc, config)
        expected = oracle_contrast_analysis(doc, config)
        grid = result.grid
        assert (grid.cols, grid.rows) == (expected["cols"], expected["rows"]), name
        for row in range(grid.rows):
            for col in range(grid.cols):
                c = grid.at(col, row)
                assert (c.r, c.g, c.b) == expected["grid"][row][col], (name, col, row)
        assert result.high_contrast_fraction == expected["fraction"], name
        got_runs = sorted(
            (f.orientation, f.index, f.start, f.length) for f in result.line_box_findings)
        assert got_runs == expected["runs"], name
        assert {frozenset(f.cells) for f in result.loud_area_findings} == expected["loud_regions"], name

    elapsed = time.monotonic() - start
    assert elapsed < 60, f"oracle suite took {elapsed:.1f}s"
    ok(f"oracle equivalence (amoeba x500, flexibility x300, contrast fixtures; {elapsed:.1f}s)")


# =====================================================================
# Criterion 2: invariant suites, >= 200 randomized cases per property.
# =====================================================================

def _random_spatial_doc(rng, max_elements=20, allow_empty=False):
    n = rng.randint(0 if allow_empty else 1, max_elements)
    elements = [
        image_el(f"e{i}", rng.randint(0, 900), rng.randint(0, 900),
                 rng.choice([8, 16, 32, 64]), rng.choice([8, 16, 32, 64]))
        for i in range(n)
    ]
    return make_doc(elements, width=1024, height=1024)


def test_invariant_cluster_tree_leaf_partition():
    rng = random.Random(11)
    for _ in range(200):
        doc = _random_spatial_doc(rng)
        tree = build_cluster_tree(doc)
        seen = []
        for leaf in tree.leaves():
            seen.extend(leaf.element_ids)
        assert sorted(seen) == sorted(doc.element_ids())
    ok("cluster-tree leaf partition (200 random documents)")


def _tree_shape(node):
    return (tuple(node.element_ids), tuple(_tree_shape(c) for c in node.children))


def test_invariant_similarity_invariance():
    rng = random.Random(12)
    for _ in range(200):
        doc = _random_spatial_doc(rng, max_elements=14)
        elements = [e.to_json() for e in doc.elements]
        moved = make_doc(
            [
                dict(e, bbox={"x": e["bbox"]["x"] * 2 + 64, "y": e["bbox"]["y"] * 2 + 128,
                              "w": e["bbox"]["w"] * 2, "h": e["bbox"]["h"] * 2})
                for e in elements
            ],
            width=2048, height=2048,
        )
        t1, t2 = build_cluster_tree(doc), build_cluster_tree(moved)
        assert _tree_shape(t1.root) == _tree_shape(t2.root)
        assert assign_scales(doc) == assign_scales(moved)
        assert multiscale(doc, tree=t1).scale_count == multiscale(moved, tree=t2).scale_count
    ok("similarity invariance of spatial results (200 random documents)")


WORDS = ["river", "garden", "bridge", "model", "texture", "light", "shadow",
         "profile", "ramp", "tower", "grid", "facade", "the", "of"]


def _random_text_doc(rng, max_elements=6):
    n = rng.randint(0, max_elements)
    elements = [
        text_el(f"t{i}", i * 40, 0, 30, 10,
                text=" ".join(rng.choices(WORDS, k=rng.randint(0, 6))))
        for i in range(n)
    ]
    return make_doc(elements)


def test_invariant_fluency_monotone_and_permutation():
    rng = random.Random(13)
    for _ in range(200):
        doc = _random_text_doc(rng)
        base = fluency(doc)
        extended = make_doc(
            [e.to_json() for e in doc.elements]
            + [text_el("new", 900, 900, 10, 10, text="zeppelin quartz")])
        assert fluency(extended).idea_count == base.idea_count + 2
        shuffled_elements = [e.to_json() for e in doc.elements]
        rng.shuffle(shuffled_elements)
        shuffled = fluency(make_doc(shuffled_elements))
        assert {i.term for i in shuffled.ideas} == {i.term for i in base.ideas}
    ok("fluency monotonicity + permutation invariance (200 random documents)")


def test_invariant_flexibility_bounded_and_tau_monotone():
    rng = random.Random(14)
    table = load_embeddings(TOY_PATH)
    from studiolens.ideas import Idea
    vocabulary = sorted(table.entries)
    for _ in range(200):
        size = rng.randint(1, 10)
        terms = rng.sample(vocabulary, min(size, len(vocabulary)))
        ideas = [Idea(term=t, source_element_ids=("e",), origin="text_token") for t in terms]
        counts = [
            flexibility(ideas, table, tau).category_count
            for tau in (0.1, 0.4, 0.8, 1.2, 1.9)
        ]
        assert all(c <= len(terms) for c in counts)  # flexibility <= fluency
        assert counts == sorted(counts, reverse=True)  # non-increasing in tau
    ok("flexibility bounded by fluency + tau monotonicity (200 random idea sets)")


def test_invariant_consistency_score_and_repair():
    rng = random.Random(15)
    sizes = [8, 10, 12, 14, 18]
    families = ["Inter", "Georgia", "Mono"]
    for _ in range(200):
        n = rng.randint(0, 10)
        elements = [
            text_el(f"t{i}", rng.randint(0, 900), rng.randint(0, 900), 80, 20, text="x",
                    semantic_type=rng.choice(["heading", "body", "caption"]),
                    font_size=rng.choice(sizes), font_family=rng.choice(families))
            for i in range(n)
        ]
        doc = make_doc(elements)
        result = consistency(doc, build_cluster_tree(doc))
        assert 0.0 <= result.score <= 1.0
        assert (result.score == 1.0) == (result.findings == ())
        if not result.findings:
            continue
        repaired = {}
        for finding in result.findings:
            for eid in finding.deviant_element_ids:
                repaired.setdefault(eid, {})[finding.attribute] = finding.modal_value
        fixed_elements = []
        for e in elements:
            e2 = dict(e)
            style = dict(e2.get("style", {}))
            style.update(repaired.get(e["id"], {}))
            e2["style"] = style
            fixed_elements.append(e2)
        fixed_doc = make_doc(fixed_elements)
        fixed = consistency(fixed_doc, build_cluster_tree(fixed_doc))
        assert {(f.group_key, f.attribute) for f in result.findings} & \
            {(f.group_key, f.attribute) for f in fixed.findings} == set()
    ok("consistency score range + idempotent repair (200 random documents)")


def test_invariant_contrast_ratio_properties():
    rng = random.Random(16)
    assert contrast_ratio(Color(0, 0, 0), Color(255, 255, 255)) == pytest.approx(21.0, abs=1e-9)
    for _ in range(200):
        c1 = Color(rng.randint(0, 255), rng.randint(0, 255), rng.randint(0, 255))
        c2 = Color(rng.randint(0, 255), rng.randint(0, 255), rng.randint(0, 255))
        assert contrast_ratio(c1, c2) == contrast_ratio(c2, c1)
        assert contrast_ratio(c1, c2) >= 1.0
    ok("contrast ratio symmetry, floor, black-white 21.0 (200 random pairs)")


def test_invariant_annotation_state_machine():
    order = {"open": 0, "touched": 1, "addressed": 2, "validated": 3}
    rng = random.Random(17)
    base = [
        text_el("e1", 10, 10, 100, 20, text="a"),
        text_el("e2", 10, 50, 100, 20, text="b"),
    ]
    moved = [dict(base[0], bbox={"x": 80, "y": 10, "w": 100, "h": 20}), base[1]]
    chain = validate_version_chain([
        make_doc(base, version=1), make_doc(moved, version=2)])
    for _ in range(200):
        ann = Annotation(id="a1", doc_id="doc", created_version=1, author_id="prof",
                         kind="redline", body="x",
                         target_element_ids=(rng.choice(["e1", "e2"]),))
        actions = []
        for _ in range(rng.randint(0, 3)):
            actions.append(StatusAction(
                annotation_id="a1", actor_id="x",
                role=rng.choice(["student", "instructor"]),
                action=rng.choice(["mark_addressed", "validate"]), version=2))
        try:
            updated, events = update_statuses(chain, [ann], actions=actions)
        except TransitionError:
            continue
        trajectory = [order[ann.status]]
        for event in events:
            before, after = event.transition.split("->")
            assert order[after] > order[before]
            trajectory.append(order[after])
        assert trajectory == sorted(trajectory)
        final = updated[0]
        if final.status in ("addressed", "validated"):
            assert final.resolved_version is not None
    ok("annotation state machine partial order (200 random action sequences)")


def test_invariant_diff_composition():
    rng = random.Random(18)
    ids = [f"e{i}" for i in range(8)]
    for _ in range(200):
        def version(v):
            return make_doc([
                text_el(eid, rng.randint(0, 500), rng.randint(0, 500), 50, 20, text="x")
                for eid in rng.sample(ids, rng.randint(1, 8))
            ], version=v)
        v1, v2, v3 = version(1), version(2), version(3)
        d12, d23, d13 = diff(v1, v2), diff(v2, v3), diff(v1, v3)

        def apply(id_set, d):
            return (id_set - set(d.removed)) | set(d.added)

        start = {e.id for e in v1.elements}
        assert apply(apply(start, d12), d23) == apply(start, d13)
    ok("diff composition over element-id sets (200 random version triples)")


def test_invariant_export_prefix(tmp_path):
    store = ContestStore(tmp_path)
    previous = []
    for i in range(200):
        store.append(ContestRecord(
            id=f"contest-{i:04d}", doc_id=f"d{i % 5}", version=1, analytic="fluency",
            computed_value=i, verdict="valid", rationale="", author_id="prof",
            timestamp=f"2026-04-01T10:{i // 60:02d}:{i % 60:02d}Z"))
        current = list(export_labels(store))
        assert current[:len(previous)] == previous
        previous = current
    ok("append-only label export prefix property (200 appends)")


# =====================================================================
# Criterion 3: anchored scenario fixtures.
# =====================================================================

def test_scenario_scale_imbalance_and_poster_findings():
    lopsided = load_doc("scales_lopsided.json")
    result = multiscale(lopsided)
    assert result.scale_histogram == {0: 35, 1: 2}
    assert len(result.imbalance_findings) == 1
    finding = result.imbalance_findings[0]
    assert finding.ratio == 17.5
    assert finding.sparse_scale == 1  # the wide zoom with only 2 elements

    poster = load_doc("poster_v1.json")
    cons = consistency(poster, build_cluster_tree(poster))
    assert cons.findings, "expected at least one consistency finding"
    for f in cons.findings:
        assert f.deviant_element_ids == ("b3",)
        assert f.group_key == "semantic_type:body"
    assert {f.attribute for f in cons.findings} == {"font_family", "font_size"}

    contrast = legible_contrast(poster)
    assert len(contrast.loud_area_findings) == 1
    assert contrast.loud_area_findings[0].element_ids == ("e_sky",)
    assert contrast.flagged
    ok("anchored scenarios: 35:2 scale imbalance 17.5, mis-styled block, loud sky")


# =====================================================================
# Criterion 4: family-resemblance rule.
# =====================================================================

def test_family_resemblance_rule():
    poster = load_doc("poster_v1.json")
    table = load_embeddings(TOY_PATH)

    full = analyze(poster, EngineConfig(), table)
    serialized = report_bytes(full).decode("utf-8")
    for banned in ("\"overall\"", "\"overall_score\"", "\"composite\"",
                   "\"composite_score\"", "\"total_score\"", "\"creativity_score\"",
                   "\"combined_score\"", "\"final_score\""):
        assert banned not in serialized

    # Disable each analytic in turn; the remainder still forms a valid report.
    for kind in ANALYTIC_KINDS:
        config = EngineConfig(enabled=tuple(k for k in ANALYTIC_KINDS if k != kind))
        partial = analyze(poster, config, table)
        assert set(partial["results"]) == set(ANALYTIC_KINDS) - {kind}

    # Inject a recognizer-plugin failure: warning recorded, suite intact.
    broken = analyze(poster, EngineConfig(recognizer_cmd=("/nonexistent/recognizer",)), table)
    assert any("recognizer" in w for w in broken["warnings"])
    assert "fluency" in broken["results"]

    # Missing embeddings degrade flexibility to a warning.
    degraded = analyze(poster, EngineConfig())
    assert "flexibility" not in degraded["results"]
    assert set(degraded["results"]) == set(ANALYTIC_KINDS) - {"flexibility"}
    assert any("flexibility" in w for w in degraded["warnings"])
    ok("family resemblance: no composite score, partial suites stay valid")


# =====================================================================
# Criterion 5: end-to-end service round trip, no dashboard required.
# =====================================================================

def test_end_to_end_round_trip(tmp_path):
    poster_text = fixture_path("poster_v1.json").read_text()
    config = ServiceConfig(data_dir=str(tmp_path / "data"), embeddings_path=TOY_PATH)
    client = TestClient(create_app(config))

    put = client.post("/documents", content=poster_text)
    assert put.status_code == 201

    served = client.get("/documents/riverside-poster/versions/1/report")
    assert served.status_code == 200
    assert served.content == client.get("/documents/riverside-poster/versions/1/report").content

    contest = client.post("/contests", json={
        "doc_id": "riverside-poster", "version": 1, "analytic": "fluency",
        "verdict": "invalid", "rationale": "counts words from the template",
        "user_value": 9, "timestamp": "2026-04-02T08:00:00Z",
    })
    assert contest.status_code == 201

    export_once = client.get("/labels/export").text
    export_again = client.get("/labels/export").text
    assert export_once == export_again
    record = json.loads(export_once.splitlines()[0])
    assert record["verdict"] == "invalid"
    assert record["rationale"] == "counts words from the template"

    runner = CliRunner()
    cli_result = runner.invoke(cli_main, [
        "analyze", str(fixture_path("poster_v1.json")), "--embeddings", TOY_PATH])
    assert cli_result.exit_code == 0
    assert cli_result.output.encode() == served.content + b"\n"

    restarted = TestClient(create_app(config))
    assert restarted.get("/documents/riverside-poster/versions/1/report").content == served.content
    assert restarted.get("/labels/export").text == export_once
    assert restarted.get("/documents").json() == {"riverside-poster": [1]}
    ok("end-to-end: put -> report -> contest -> export, CLI byte-equal, restart stable")
