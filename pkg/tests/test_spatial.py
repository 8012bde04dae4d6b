"""Spatial clustering, the cluster tree, scales, and whitespace."""

import math
import random

import pytest

from studiolens.model import ProcessEvent
from studiolens.spatial import (
    SpatialPoint,
    amoeba_cluster,
    assign_scales,
    build_cluster_tree,
    multiscale,
    whitespace,
)

from conftest import image_el, load_doc, make_doc, text_el
from oracles import oracle_amoeba, oracle_recursive_clusters, oracle_whitespace_ratio


def pts(coords):
    return [SpatialPoint(f"p{i}", x, y) for i, (x, y) in enumerate(coords)]


def partition(result):
    return {frozenset(c) for c in result.clusters}


def square_el(eid, x, y, side, zoom=None):
    return image_el(eid, x, y, side, side, zoom_level=zoom)


# ------------------------------------------------------------- amoeba

def test_three_equal_collinear_points_one_cluster():
    result = amoeba_cluster(pts([(0, 0), (10, 0), (20, 0)]), k=1.0)
    assert len(result.clusters) == 1
    assert result.collinear


def test_two_tight_pairs_split():
    # Points 0, 1, 100, 101 on a line: chained edges 1, 99, 1.
    result = amoeba_cluster(pts([(0, 0), (1, 0), (100, 0), (101, 0)]), k=1.0)
    assert result.mean_edge_length == pytest.approx(101 / 3)
    expected_std = math.sqrt(
        ((1 - 101 / 3) ** 2 * 2 + (99 - 101 / 3) ** 2) / 3)
    assert result.std_edge_length == pytest.approx(expected_std)
    assert partition(result) == {frozenset({"p0", "p1"}), frozenset({"p2", "p3"})}
    assert partition(result) == oracle_amoeba(pts([(0, 0), (1, 0), (100, 0), (101, 0)]), 1.0)


def test_single_point_singleton():
    result = amoeba_cluster(pts([(5, 5)]), k=1.0)
    assert partition(result) == {frozenset({"p0"})}


def test_two_points_always_cohere():
    result = amoeba_cluster(pts([(0, 0), (1000, 1000)]), k=0.0)
    assert len(result.clusters) == 1


def test_zero_points_rejected():
    with pytest.raises(ValueError):
        amoeba_cluster([], k=1.0)


def test_negative_k_rejected():
    with pytest.raises(ValueError):
        amoeba_cluster(pts([(0, 0)]), k=-1)


def test_huge_k_single_cluster():
    rng = random.Random(1)
    coords = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(8)]
    result = amoeba_cluster(pts(coords), k=1e9)
    assert len(result.clusters) == 1


def test_all_coincident_points_stay_together():
    result = amoeba_cluster(pts([(5.0, 5.0)] * 8), k=1e9)
    assert len(result.clusters) == 1
    assert len(result.jittered_ids) == 7


def test_k_zero_equal_edges_single_cluster():
    result = amoeba_cluster(pts([(0, 0), (7, 0), (14, 0), (21, 0)]), k=0.0)
    assert len(result.clusters) == 1


def test_coincident_points_jittered_deterministically():
    coords = [(5, 5), (5, 5), (50, 50)]
    first = amoeba_cluster(pts(coords), k=1.0)
    second = amoeba_cluster(pts(coords), k=1.0)
    assert first == second
    assert set(first.jittered_ids) == {"p1"}  # p0 anchors its coincident group


def test_matches_oracle_on_random_sets():
    rng = random.Random(2024)
    for trial in range(120):
        n = rng.randint(1, 12)
        style = trial % 3
        if style == 0:
            coords = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(n)]
        elif style == 1:
            coords = [(float(rng.randint(0, 6)), float(rng.randint(0, 6))) for _ in range(n)]
        else:
            coords = [(float(rng.randint(0, 50)), 3.0) for _ in range(n)]
        k = rng.choice([0.0, 0.5, 1.0, 2.0])
        points = pts(coords)
        assert partition(amoeba_cluster(points, k)) == oracle_amoeba(points, k), (
            f"mismatch on trial {trial}: {coords} k={k}")


# ------------------------------------------------------------- tree

def test_two_element_doc_single_leaf():
    doc = make_doc([square_el("a", 0, 0, 10), square_el("b", 500, 500, 10)])
    tree = build_cluster_tree(doc)
    assert tree.depth == 1
    assert tree.root.children == []
    assert set(tree.root.element_ids) == {"a", "b"}


def test_two_far_triads_split_once():
    elements = []
    for i, (bx, by) in enumerate([(0, 0), (800, 800)]):
        for j, (dx, dy) in enumerate([(0, 0), (30, 0), (0, 30)]):
            elements.append(square_el(f"g{i}e{j}", bx + dx, by + dy, 10))
    doc = make_doc(elements)
    tree = build_cluster_tree(doc, k=1.0)
    assert tree.depth == 2
    assert len(tree.root.children) == 2
    leaf_sets = {frozenset(leaf.element_ids) for leaf in tree.leaves()}
    assert leaf_sets == {
        frozenset({"g0e0", "g0e1", "g0e2"}),
        frozenset({"g1e0", "g1e1", "g1e2"}),
    }
    assert leaf_sets == oracle_recursive_clusters(doc, 1.0, 3, 6)


def test_affinity_merges_across_distance():
    # Collinear centers at x = 0, 10, 25, 35 (chained edges 10, 15, 10):
    # geometry alone cuts the middle edge; halving it keeps one cluster.
    elements = [
        square_el("e1", 0, 100, 2),
        square_el("e2", 10, 100, 2),
        square_el("e3", 25, 100, 2),
        square_el("e4", 35, 100, 2),
    ]
    doc = make_doc(elements, width=100, height=200)
    without = build_cluster_tree(doc, k=1.0)
    assert len(without.root.children) == 2
    events = [ProcessEvent(timestamp="t", actor_id="s", action="select_group",
                           element_ids=("e2", "e3"))]
    with_events = build_cluster_tree(doc, k=1.0, events=events, beta=0.5)
    assert with_events.root.children == []
    assert with_events.depth == 1


def test_min_split_size_floor():
    with pytest.raises(ValueError):
        build_cluster_tree(make_doc([]), min_split_size=2)


def test_empty_doc_tree():
    tree = build_cluster_tree(make_doc([]))
    assert tree.depth == 1
    assert tree.root.element_ids == ()
    assert tree.scale_histogram == {}


def test_max_depth_bounds_recursion():
    rng = random.Random(5)
    elements = [
        square_el(f"e{i}", rng.uniform(0, 1000), rng.uniform(0, 1000), 4)
        for i in range(40)
    ]
    doc = make_doc(elements)
    for limit in (2, 3, 4):
        tree = build_cluster_tree(doc, max_depth=limit)
        assert tree.depth <= limit


def test_leaf_partition_property():
    rng = random.Random(99)
    for _ in range(30):
        n = rng.randint(1, 25)
        elements = [
            square_el(f"e{i}", rng.randint(0, 900), rng.randint(0, 900), rng.randint(5, 40))
            for i in range(n)
        ]
        doc = make_doc(elements)
        tree = build_cluster_tree(doc)
        seen = []
        for leaf in tree.leaves():
            seen.extend(leaf.element_ids)
        assert sorted(seen) == sorted(doc.element_ids())


def test_tree_determinism():
    rng = random.Random(123)
    elements = [
        square_el(f"e{i}", rng.randint(0, 500), rng.randint(0, 500), 10)
        for i in range(15)
    ]
    doc = make_doc(elements)
    assert build_cluster_tree(doc).to_json() == build_cluster_tree(doc).to_json()


def _tree_shape(node):
    return (tuple(node.element_ids), tuple(_tree_shape(c) for c in node.children))


def test_similarity_invariance():
    rng = random.Random(31)
    for _ in range(15):
        n = rng.randint(2, 18)
        elements = [
            square_el(f"e{i}", rng.randint(0, 400), rng.randint(0, 400), rng.choice([8, 16, 32]))
            for i in range(n)
        ]
        doc = make_doc(elements, width=1024, height=1024)
        moved = make_doc(
            [
                dict(e, bbox={"x": e["bbox"]["x"] * 2 + 16, "y": e["bbox"]["y"] * 2 + 32,
                              "w": e["bbox"]["w"] * 2, "h": e["bbox"]["h"] * 2})
                for e in elements
            ],
            width=2048, height=2048,
        )
        t1 = build_cluster_tree(doc)
        t2 = build_cluster_tree(moved)
        assert _tree_shape(t1.root) == _tree_shape(t2.root)
        assert assign_scales(doc) == assign_scales(moved)
        assert t1.scale_histogram == t2.scale_histogram


# ------------------------------------------------------------- scales

def test_uniform_sizes_single_scale():
    doc = make_doc([square_el(f"e{i}", i * 50, 0, 20) for i in range(4)])
    scales = assign_scales(doc)
    assert set(scales.values()) == {0}


def test_zoom_metadata_buckets():
    doc = make_doc([
        square_el("a", 0, 0, 10, zoom=1.0),
        square_el("b", 50, 0, 10, zoom=1.0),
        square_el("c", 100, 0, 10, zoom=4.0),
    ])
    scales = assign_scales(doc)
    assert scales == {"a": 0, "b": 0, "c": 1}


def test_size_derived_levels():
    # Diagonals proportional to 10, 10, 12, 160; median 11. The log4 ratios
    # land at about -0.07, -0.07, 0.06, and 1.93, binning to 0, 0, 0, 2.
    doc = make_doc([
        square_el("a", 0, 0, 10),
        square_el("b", 100, 0, 10),
        square_el("c", 200, 0, 12),
        square_el("d", 300, 0, 160),
    ])
    assert assign_scales(doc) == {"a": 0, "b": 0, "c": 0, "d": 2}


def test_zoom_rounding_three_sig_figs():
    doc = make_doc([
        square_el("a", 0, 0, 10, zoom=1.0001),
        square_el("b", 50, 0, 10, zoom=1.0002),
    ])
    assert assign_scales(doc) == {"a": 0, "b": 0}


def test_empty_doc_no_scales():
    assert assign_scales(make_doc([])) == {}


# ------------------------------------------------------------- multiscale

def test_lopsided_fixture_imbalance(lopsided):
    result = multiscale(lopsided)
    assert result.scale_histogram == {0: 35, 1: 2}
    assert len(result.imbalance_findings) == 1
    finding = result.imbalance_findings[0]
    assert finding.ratio == 17.5
    assert finding.sparse_scale == 1
    assert (finding.count_a, finding.count_b) == (35, 2)


def test_single_scale_no_findings():
    doc = make_doc([square_el(f"e{i}", i * 50, 0, 20) for i in range(6)])
    result = multiscale(doc)
    assert result.scale_count == 1
    assert result.imbalance_findings == ()


def test_balanced_histogram_no_findings():
    elements = [square_el(f"a{i}", i * 30, 0, 10, zoom=1.0) for i in range(10)]
    elements += [square_el(f"b{i}", i * 30, 200, 10, zoom=4.0) for i in range(10)]
    result = multiscale(make_doc(elements), scale_ratio_rho=4.0)
    assert result.imbalance_findings == ()


# ------------------------------------------------------------- whitespace

def test_whitespace_empty_doc():
    result = whitespace(make_doc([]), grid_resolution=32)
    assert result.whitespace_ratio == 1.0
    assert result.cluster_count == 0


def test_whitespace_full_cover():
    doc = make_doc([image_el("full", 0, 0, 1000, 1000)], width=1000, height=1000)
    result = whitespace(doc, grid_resolution=32)
    assert result.whitespace_ratio == 0.0
    assert result.cluster_count == 1


def test_whitespace_resolution_floor():
    with pytest.raises(ValueError):
        whitespace(make_doc([]), grid_resolution=8)


def test_whitespace_matches_oracle_on_poster(poster_v1):
    result = whitespace(poster_v1, grid_resolution=64)
    assert result.whitespace_ratio == oracle_whitespace_ratio(poster_v1, 64)


def test_whitespace_matches_oracle_on_random_docs():
    rng = random.Random(17)
    for _ in range(10):
        n = rng.randint(0, 8)
        elements = [
            image_el(f"e{i}", rng.randint(0, 800), rng.randint(0, 800),
                     rng.randint(20, 300), rng.randint(20, 300))
            for i in range(n)
        ]
        doc = make_doc(elements)
        result = whitespace(doc, grid_resolution=32)
        assert result.whitespace_ratio == oracle_whitespace_ratio(doc, 32)
