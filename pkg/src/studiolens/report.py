"""Per-document analytic reports, member breakdowns, and course rollups.

A report carries one independent result per enabled analytic: its score, an
explanation payload whose items are indexed to the concrete elements that
produced them, and a snapshot of the parameters used. There is deliberately
no combined score anywhere: each analytic only tends to indicate quality,
so results stay separate and a failed or disabled analytic simply leaves a
warning while the rest of the suite stands.

Reports serialize canonically (sorted keys, fixed separators) so repeated
analysis of the same document and config is byte-identical and diffs stay
readable.
"""

from __future__ import annotations

import json
from dataclasses import asdict

from . import ideas as ideas_mod
from . import semantics as semantics_mod
from . import spatial as spatial_mod
from .consistency import consistency as run_consistency
from .consistency import consistency_per_scale
from .contrast import legible_contrast
from .config import ANALYTIC_KINDS, EngineConfig
from .model import DesignDocument, ProcessEvent

REPORT_SCHEMA_VERSION = 1

# Field names that would amount to a composite creativity score; the report
# validator rejects any of these anywhere in a serialized report.
BANNED_SCORE_FIELDS = frozenset({
    "overall", "overall_score", "composite", "composite_score",
    "total_score", "creativity_score", "combined_score", "final_score",
})


class ReportValidationError(Exception):
    pass


class ExplanationError(Exception):
    pass


def _fluency_entry(doc: DesignDocument, config: EngineConfig, idea_config) -> tuple[dict, list[str]]:
    result = ideas_mod.fluency(doc, idea_config)
    payload = {
        "idea_count": result.idea_count,
        "element_counts": dict(sorted(result.element_counts.items())),
        "ideas": [
            {
                "term": idea.term,
                "source_element_ids": list(idea.source_element_ids),
                "origin": idea.origin,
                "ref": f"fluency/idea/{idea.term}",
            }
            for idea in result.ideas
        ],
    }
    refs = sorted({eid for idea in result.ideas for eid in idea.source_element_ids})
    entry = {
        "score": result.idea_count,
        "payload": payload,
        "element_refs": refs,
        "config": {
            "stopwords_path": config.stopwords_path,
            "keep_descriptors_whole": config.keep_descriptors_whole,
            "recognizer_cmd": list(config.recognizer_cmd),
        },
    }
    return entry, list(result.warnings)


def _flexibility_entry(doc, config: EngineConfig, idea_config, embeddings) -> tuple[dict, list[str]]:
    idea_list, warnings = ideas_mod.extract_ideas(doc, idea_config)
    result = semantics_mod.flexibility(idea_list, embeddings, config.tau)
    sources = {idea.term: idea.source_element_ids for idea in idea_list}
    categories = []
    for i, cat in enumerate(result.categories):
        element_ids = sorted({eid for term in cat.member_idea_terms for eid in sources[term]})
        categories.append({
            "members": list(cat.member_idea_terms),
            "medoid": cat.medoid_term,
            "element_ids": element_ids,
            "ref": f"flexibility/category/{i}",
        })
    payload = {
        "category_count": result.category_count,
        "categories": categories,
        "distance_threshold_used": result.distance_threshold_used,
        "oov_terms": list(result.oov_terms),
        "merges": [[list(a), list(b), d] for a, b, d in result.merges],
        "distance_matrix": semantics_mod.distance_matrix([i.term for i in idea_list], embeddings),
    }
    refs = sorted({eid for cat in categories for eid in cat["element_ids"]})
    entry = {
        "score": result.category_count,
        "payload": payload,
        "element_refs": refs,
        "config": {"tau": config.tau, "embeddings": embeddings.source_label},
    }
    return entry, warnings


def _consistency_entry(doc, tree, config: EngineConfig) -> tuple[dict, list[str]]:
    cfg = config.consistency_config()
    result = run_consistency(doc, tree, cfg)
    per_scale = consistency_per_scale(
        doc, tree, cfg,
        tree_builder=lambda sub: spatial_mod.build_cluster_tree(
            sub, config.amoeba_k, config.min_split_size, config.max_depth,
        ),
    )
    ws = spatial_mod.whitespace(doc, config.grid_resolution, config.amoeba_k)
    findings = [
        dict(f.to_json(), ref=f"visual_consistency/finding/{i}")
        for i, f in enumerate(result.findings)
    ]
    payload = {
        "mode_used": result.mode_used,
        "findings": findings,
        "evaluated_group_count": result.evaluated_group_count,
        "unevaluated": list(result.unevaluated),
        "per_scale": {
            str(level): {
                "score": sub.score,
                "mode_used": sub.mode_used,
                "findings": [f.to_json() for f in sub.findings],
            }
            for level, sub in per_scale.items()
        },
        "whitespace": {
            "cluster_count": ws.cluster_count,
            "whitespace_ratio": ws.whitespace_ratio,
        },
    }
    refs = sorted({eid for f in result.findings for eid in f.deviant_element_ids})
    entry = {
        "score": result.score,
        "payload": payload,
        "element_refs": refs,
        "config": {
            "epsilon_numeric": cfg.epsilon_numeric,
            "delta_color": cfg.delta_color,
            "typed_mode_threshold": cfg.typed_mode_threshold,
            "grid_resolution": config.grid_resolution,
        },
    }
    warnings = [f"visual_consistency left groups unevaluated: {u}" for u in result.unevaluated]
    return entry, warnings


def _cluster_nodes_json(node: spatial_mod.ClusterNode, path: str) -> dict:
    out = node.to_json()
    out["ref"] = f"multiscale_organization/cluster/{path}"
    out["children"] = [
        _cluster_nodes_json(child, f"{path}.{i}" if path != "root" else str(i))
        for i, child in enumerate(node.children)
    ]
    return out


def _multiscale_entry(doc, tree, config: EngineConfig) -> dict:
    result = spatial_mod.multiscale(doc, config.scale_ratio_rho, tree=tree)
    by_scale: dict[int, list[str]] = {}
    for eid, level in sorted(result.scale_assignment.items()):
        by_scale.setdefault(level, []).append(eid)
    findings = []
    for i, f in enumerate(result.imbalance_findings):
        findings.append({
            "scale_a": f.scale_a,
            "scale_b": f.scale_b,
            "count_a": f.count_a,
            "count_b": f.count_b,
            "ratio": f.ratio,
            "sparse_scale": f.sparse_scale,
            "element_ids": by_scale.get(f.sparse_scale, []),
            "ref": f"multiscale_organization/imbalance/{i}",
        })
    payload = {
        "scale_count": result.scale_count,
        "scale_histogram": {str(k): v for k, v in sorted(result.scale_histogram.items())},
        "scale_assignment": dict(sorted(result.scale_assignment.items())),
        "imbalance_findings": findings,
        "cluster_tree": {
            "depth": tree.depth,
            "root": _cluster_nodes_json(tree.root, "root"),
        },
    }
    refs = sorted(result.scale_assignment)
    return {
        "score": result.scale_count,
        "payload": payload,
        "element_refs": refs,
        "config": {
            "scale_ratio_rho": config.scale_ratio_rho,
            "amoeba_k": config.amoeba_k,
            "min_split_size": config.min_split_size,
            "max_depth": config.max_depth,
            "beta": config.beta,
        },
    }


def _contrast_entry(doc, config: EngineConfig) -> dict:
    result = legible_contrast(doc, config.contrast)
    lines = [
        dict(f.to_json(), ref=f"legible_contrast/line/{i}")
        for i, f in enumerate(result.line_box_findings)
    ]
    loud = [
        dict(f.to_json(), ref=f"legible_contrast/loud/{i}")
        for i, f in enumerate(result.loud_area_findings)
    ]
    payload = {
        "high_contrast_fraction": result.high_contrast_fraction,
        "line_box_findings": lines,
        "loud_area_findings": loud,
        "flagged": result.flagged,
        "grid": {
            "cols": result.grid.cols,
            "rows": result.grid.rows,
            "block_size": result.grid.block_size,
            "cell_w": result.grid.cell_w,
            "cell_h": result.grid.cell_h,
        },
    }
    refs = sorted(
        {eid for f in result.line_box_findings for eid in f.element_ids}
        | {eid for f in result.loud_area_findings for eid in f.element_ids}
    )
    return {
        "score": result.score,
        "payload": payload,
        "element_refs": refs,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config.contrast).items()},
    }


def _breakdown(doc, config, idea_config, embeddings, events) -> dict:
    """Per-author analytics over each author's element subset."""
    by_author: dict[str, list[str]] = {}
    for element in doc.elements:
        key = element.author_id if element.author_id is not None else "unattributed"
        by_author.setdefault(key, []).append(element.id)

    idea_counts = {}
    for author, ids in by_author.items():
        sub = doc.restricted_to(ids)
        sub_ideas, _ = ideas_mod.extract_ideas(sub, idea_config)
        idea_counts[author] = len(sub_ideas)
    idea_total = sum(idea_counts.values())

    out = {}
    for author in sorted(by_author):
        ids = by_author[author]
        sub = doc.restricted_to(ids)
        results = {}
        for kind in config.enabled:
            try:
                if kind == "fluency":
                    entry, _ = _fluency_entry(sub, config, idea_config)
                elif kind == "flexibility":
                    if embeddings is None:
                        continue
                    entry, _ = _flexibility_entry(sub, config, idea_config, embeddings)
                elif kind == "visual_consistency":
                    tree = spatial_mod.build_cluster_tree(
                        sub, config.amoeba_k, config.min_split_size, config.max_depth, events, config.beta)
                    entry, _ = _consistency_entry(sub, tree, config)
                elif kind == "multiscale_organization":
                    tree = spatial_mod.build_cluster_tree(
                        sub, config.amoeba_k, config.min_split_size, config.max_depth, events, config.beta)
                    entry = _multiscale_entry(sub, tree, config)
                else:
                    entry = _contrast_entry(sub, config)
            except Exception:
                continue
            results[kind] = {"score": entry["score"], "element_refs": entry["element_refs"]}
        out[author] = {
            "element_count": len(ids),
            "element_share": len(ids) / len(doc.elements),
            "idea_count": idea_counts[author],
            "idea_share": (idea_counts[author] / idea_total) if idea_total else 0.0,
            "results": results,
        }
    return out


def analyze(
    doc: DesignDocument,
    config: EngineConfig | None = None,
    embeddings: semantics_mod.EmbeddingTable | None = None,
    events: list[ProcessEvent] | None = None,
) -> dict:
    """Run every enabled analytic over a document and assemble the report.

    A failing analytic degrades to a warning and is omitted; the remainder
    of the suite is still a valid report. Deterministic: same (doc, config,
    embeddings, events) yields byte-identical serialization.
    """
    config = config or EngineConfig()
    warnings: list[str] = []
    results: dict[str, dict] = {}

    idea_config = None
    if "fluency" in config.enabled or "flexibility" in config.enabled:
        idea_config = config.idea_config()

    tree = None
    if "visual_consistency" in config.enabled or "multiscale_organization" in config.enabled:
        if doc.elements:
            tree = spatial_mod.build_cluster_tree(
                doc, config.amoeba_k, config.min_split_size, config.max_depth, events, config.beta)
        else:
            tree = spatial_mod.build_cluster_tree(doc)

    for kind in ANALYTIC_KINDS:
        if kind not in config.enabled:
            continue
        try:
            if kind == "fluency":
                entry, w = _fluency_entry(doc, config, idea_config)
                warnings.extend(w)
            elif kind == "flexibility":
                if embeddings is None:
                    warnings.append("flexibility skipped: no embedding table loaded")
                    continue
                entry, w = _flexibility_entry(doc, config, idea_config, embeddings)
                warnings.extend(w)
            elif kind == "visual_consistency":
                entry, w = _consistency_entry(doc, tree, config)
                warnings.extend(w)
            elif kind == "multiscale_organization":
                entry = _multiscale_entry(doc, tree, config)
            else:
                entry = _contrast_entry(doc, config)
        except Exception as exc:  # family resemblance: partial suites are valid
            warnings.append(f"{kind} failed: {exc}")
            continue
        results[kind] = entry

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "doc_id": doc.doc_id,
        "version": doc.version,
        "team_id": doc.team_id,
        "author_ids": list(doc.author_ids),
        "config_hash": config.config_hash(),
        "results": results,
        "member_breakdown": _breakdown(doc, config, idea_config or config.idea_config(), embeddings, events),
        "warnings": warnings,
    }
    validate_report(report, doc)
    return report


def report_bytes(report: dict) -> bytes:
    """Canonical serialization: sorted keys, compact separators."""
    return json.dumps(report, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _walk_banned(obj, path=""):
    if isinstance(obj, dict):
        for key, value in obj.items():
            if key in BANNED_SCORE_FIELDS:
                raise ReportValidationError(f"composite score field {key!r} at {path or 'root'}")
            _walk_banned(value, f"{path}.{key}" if path else key)
    elif isinstance(obj, list):
        for i, value in enumerate(obj):
            _walk_banned(value, f"{path}[{i}]")


def _collect_element_ids(obj, out: set[str]):
    if isinstance(obj, dict):
        for key, value in obj.items():
            if key in ("element_ids", "source_element_ids", "deviant_element_ids", "element_refs") and isinstance(value, list):
                out.update(v for v in value if isinstance(v, str))
            else:
                _collect_element_ids(value, out)
    elif isinstance(obj, list):
        for value in obj:
            _collect_element_ids(value, out)


def validate_report(report: dict, doc: DesignDocument) -> None:
    """Enforce report invariants.

    Every result must carry its indexical element references, every
    referenced element must exist in the analyzed version, result keys must
    be known analytics, and no composite score may appear anywhere.
    """
    _walk_banned(report)
    known = set(ANALYTIC_KINDS)
    valid_ids = set(doc.element_ids())
    for kind, entry in report.get("results", {}).items():
        if kind not in known:
            raise ReportValidationError(f"unknown analytic kind {kind!r}")
        for required in ("score", "payload", "element_refs", "config"):
            if required not in entry:
                raise ReportValidationError(f"result {kind} missing {required!r}")
        referenced: set[str] = set()
        _collect_element_ids(entry, referenced)
        unknown_ids = referenced - valid_ids
        if unknown_ids:
            raise ReportValidationError(
                f"result {kind} references unknown elements: {sorted(unknown_ids)}")
    counts = [b["element_count"] for b in report.get("member_breakdown", {}).values()]
    if counts and sum(counts) != len(doc.elements):
        raise ReportValidationError("member breakdown does not partition the element set")


def _cell_rects(cells, grid_info) -> list[dict]:
    cw, ch = grid_info["cell_w"], grid_info["cell_h"]
    return [
        {"x": col * cw, "y": row * ch, "w": cw, "h": ch}
        for col, row in cells
    ]


def _geometry_for(doc: DesignDocument, element_ids) -> list[dict]:
    out = []
    for eid in element_ids:
        element = doc.element_by_id(eid)
        if element is not None:
            out.append({"element_id": eid, "bbox": element.bbox.to_json()})
    return out


def resolve_explanation(report: dict, doc: DesignDocument, analytic: str, item_ref: str) -> dict:
    """Resolve an item reference into overlay geometry for the UI.

    Returns the element ids, their boxes, and for grid-based findings the
    cell rectangles in canvas units.
    """
    if analytic not in report.get("results", {}):
        raise ExplanationError(f"analytic {analytic!r} not present in report")
    entry = report["results"][analytic]
    payload = entry["payload"]

    def found(item, extra=None):
        ids = item.get("element_ids") or item.get("source_element_ids") or item.get("deviant_element_ids") or []
        out = {
            "analytic": analytic,
            "ref": item_ref,
            "element_ids": list(ids),
            "geometry": _geometry_for(doc, ids),
        }
        if extra:
            out.update(extra)
        return out

    pools = []
    if analytic == "fluency":
        pools.append(payload["ideas"])
    elif analytic == "flexibility":
        pools.append(payload["categories"])
    elif analytic == "visual_consistency":
        pools.append(payload["findings"])
    elif analytic == "multiscale_organization":
        pools.append(payload["imbalance_findings"])
        stack = [payload["cluster_tree"]["root"]]
        clusters = []
        while stack:
            node = stack.pop()
            clusters.append(node)
            stack.extend(node["children"])
        for node in clusters:
            if node["ref"] == item_ref:
                return {
                    "analytic": analytic,
                    "ref": item_ref,
                    "element_ids": list(node["element_ids"]),
                    "geometry": _geometry_for(doc, node["element_ids"]),
                    "cluster_box": node["bounding_box"],
                    "level": node["level"],
                }
    elif analytic == "legible_contrast":
        for item in payload["line_box_findings"] + payload["loud_area_findings"]:
            if item["ref"] == item_ref:
                cells = [tuple(c) for c in item["cells"]] if "cells" in item else None
                if cells is None:
                    if item["orientation"] == "h":
                        cells = [(c, item["index"]) for c in range(item["start"], item["start"] + item["length"])]
                    else:
                        cells = [(item["index"], r) for r in range(item["start"], item["start"] + item["length"])]
                return found(item, {"cell_rects": _cell_rects(cells, payload["grid"])})
    else:
        raise ExplanationError(f"unknown analytic {analytic!r}")

    for pool in pools:
        for item in pool:
            if item.get("ref") == item_ref:
                extra = None
                if analytic == "visual_consistency":
                    extra = {"modal_value": item["modal_value"], "attribute": item["attribute"]}
                if analytic == "multiscale_organization":
                    extra = {"sparse_scale": item["sparse_scale"], "ratio": item["ratio"]}
                return found(item, extra)
    raise ExplanationError(f"item {item_ref!r} not found in {analytic} payload")


def _recurrent(categories_by_doc: dict[str, set[str]], threshold: int) -> list[dict]:
    seen: dict[str, set[str]] = {}
    for doc_id, categories in categories_by_doc.items():
        for category in categories:
            seen.setdefault(category, set()).add(doc_id)
    return [
        {"category": category, "count": len(doc_ids), "doc_ids": sorted(doc_ids)}
        for category, doc_ids in sorted(seen.items())
        if len(doc_ids) >= threshold
    ]


def _report_categories(report: dict) -> set[str]:
    out = set()
    results = report.get("results", {})
    for finding in results.get("visual_consistency", {}).get("payload", {}).get("findings", []):
        out.add(f"visual_consistency/{finding['attribute']}")
    multiscale = results.get("multiscale_organization", {}).get("payload", {})
    if multiscale.get("imbalance_findings"):
        out.add("multiscale_organization/scale_imbalance")
    contrast = results.get("legible_contrast", {}).get("payload", {})
    if contrast.get("loud_area_findings"):
        out.add("legible_contrast/loud_area")
    if contrast.get("line_box_findings"):
        out.add("legible_contrast/line_box")
    return out


def _aggregate(reports: list[dict], annotations: list, recurrence_threshold: int) -> dict:
    doc_ids = sorted({r["doc_id"] for r in reports})
    scores: dict[str, list[float]] = {}
    categories_by_doc: dict[str, set[str]] = {}
    for report in reports:
        cats = categories_by_doc.setdefault(report["doc_id"], set())
        cats.update(_report_categories(report))
        for kind, entry in report["results"].items():
            scores.setdefault(kind, []).append(entry["score"])
    for annotation in annotations:
        if annotation.category:
            categories_by_doc.setdefault(annotation.doc_id, set()).add(annotation.category)
    status_counts = {"open": 0, "touched": 0, "addressed": 0, "validated": 0}
    for annotation in annotations:
        status_counts[annotation.status] += 1
    return {
        "doc_ids": doc_ids,
        "report_count": len(reports),
        "mean_scores": {
            kind: sum(vals) / len(vals) for kind, vals in sorted(scores.items())
        },
        "annotation_counts": status_counts,
        "recurrent_problems": _recurrent(categories_by_doc, recurrence_threshold),
    }


def rollup(
    reports: list[dict],
    annotations_by_doc: dict[str, list] | None = None,
    recurrence_threshold: int = 2,
) -> dict:
    """Aggregate reports and feedback at student, team, and course levels."""
    annotations_by_doc = annotations_by_doc or {}

    def annotations_for(doc_ids) -> list:
        out = []
        for doc_id in doc_ids:
            out.extend(annotations_by_doc.get(doc_id, []))
        return out

    course_docs = {r["doc_id"] for r in reports}
    by_team: dict[str, list[dict]] = {}
    by_student: dict[str, list[dict]] = {}
    for report in reports:
        if report.get("team_id"):
            by_team.setdefault(report["team_id"], []).append(report)
        for author in report.get("author_ids", []):
            by_student.setdefault(author, []).append(report)

    return {
        "schema_version": 1,
        "course": _aggregate(reports, annotations_for(course_docs), recurrence_threshold),
        "teams": {
            team: _aggregate(team_reports, annotations_for({r["doc_id"] for r in team_reports}), recurrence_threshold)
            for team, team_reports in sorted(by_team.items())
        },
        "students": {
            student: _aggregate(student_reports, annotations_for({r["doc_id"] for r in student_reports}), recurrence_threshold)
            for student, student_reports in sorted(by_student.items())
        },
    }
