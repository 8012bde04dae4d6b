"""Visual-consistency analytic: attribute agreement within comparable groups.

Two comparison modes, picked automatically. When enough text elements carry
schema types (heading, body, ...), elements of the same type are compared
attribute by attribute against the group's modal value. Without type
metadata, structurally corresponding members of equal-sized leaf clusters
are compared instead: members are ranked by position inside each cluster and
rank-mates across clusters form the comparison groups.

Equality is tolerance-based so sub-visual differences (antialiasing,
rounding on export) do not get flagged: numeric attributes use a relative
epsilon, colors a per-channel delta.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .model import Color, DesignDocument, Element
from .spatial import ClusterTree

ATTRIBUTES = ("font_family", "font_size", "font_weight", "font_style", "fill", "stroke", "background")

MODE_TYPED = "typed"
MODE_CLUSTER = "cluster_correspondence"


@dataclass(frozen=True)
class ConsistencyConfig:
    epsilon_numeric: float = 0.05
    delta_color: float = 8 / 255
    typed_mode_threshold: float = 0.5


@dataclass(frozen=True)
class ConsistencyFinding:
    attribute: str
    group_key: str
    modal_value: object
    deviant_element_ids: tuple[str, ...]
    severity: float

    def to_json(self) -> dict:
        modal = self.modal_value
        if isinstance(modal, Color):
            modal = modal.to_json()
        return {
            "attribute": self.attribute,
            "group_key": self.group_key,
            "modal_value": modal,
            "deviant_element_ids": list(self.deviant_element_ids),
            "severity": self.severity,
        }


@dataclass(frozen=True)
class ConsistencyResult:
    score: float
    findings: tuple[ConsistencyFinding, ...]
    mode_used: str
    evaluated_group_count: int
    unevaluated: tuple[str, ...] = ()
    per_scale: dict[int, "ConsistencyResult"] | None = None


def _values_equal(attribute: str, a, b, config: ConsistencyConfig) -> bool:
    if isinstance(a, Color) and isinstance(b, Color):
        delta = config.delta_color * 255
        return (
            abs(a.r - b.r) <= delta
            and abs(a.g - b.g) <= delta
            and abs(a.b - b.b) <= delta
            and abs(a.a - b.a) <= config.delta_color
        )
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        scale = max(abs(a), abs(b))
        return abs(a - b) <= config.epsilon_numeric * scale
    return a == b


def _sort_key(value):
    if isinstance(value, Color):
        return (1, (value.r, value.g, value.b, value.a))
    if isinstance(value, (int, float)):
        return (0, (float(value),))
    return (2, (str(value),))


def _modal_value(values: list):
    """Most frequent exact value; ties resolved lexicographically so the
    result is independent of member order."""
    counts = Counter()
    originals = {}
    for v in values:
        key = _sort_key(v)
        counts[key] += 1
        originals[key] = v
    best = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return originals[best[0]]


def _evaluate_group(
    group_key: str,
    members: list[Element],
    config: ConsistencyConfig,
) -> tuple[list[ConsistencyFinding], int]:
    """Compare every attribute carried by at least two members.

    Returns the findings plus the number of attribute comparisons evaluated
    (clean comparisons count toward the score with severity zero).
    """
    findings = []
    evaluated = 0
    members = sorted(members, key=lambda e: e.id)
    for attribute in ATTRIBUTES:
        carriers = [e for e in members if getattr(e.style, attribute) is not None]
        if len(carriers) < 2:
            continue
        evaluated += 1
        values = [getattr(e.style, attribute) for e in carriers]
        modal = _modal_value(values)
        deviants = [
            e.id for e in carriers
            if not _values_equal(attribute, getattr(e.style, attribute), modal, config)
        ]
        if deviants:
            findings.append(ConsistencyFinding(
                attribute=attribute,
                group_key=group_key,
                modal_value=modal,
                deviant_element_ids=tuple(sorted(deviants)),
                severity=len(deviants) / len(carriers),
            ))
    return findings, evaluated


def _typed_groups(doc: DesignDocument) -> dict[str, list[Element]]:
    groups: dict[str, list[Element]] = {}
    for element in doc.elements:
        if element.kind == "text" and element.semantic_type is not None:
            groups.setdefault(element.semantic_type, []).append(element)
    return groups


def _cluster_groups(doc: DesignDocument, tree: ClusterTree) -> tuple[dict[str, list[Element]], list[str]]:
    """Rank-mate groups across equal-cardinality leaf clusters.

    Members inside a cluster are ordered by (y, then x); members at the same
    rank across clusters of one cardinality class form a group. Cardinality
    classes with a single cluster have no counterpart and are reported as
    unevaluated.
    """
    leaves = [leaf for leaf in tree.leaves() if len(leaf.element_ids) >= 2]
    by_size: dict[int, list] = {}
    for leaf in leaves:
        by_size.setdefault(len(leaf.element_ids), []).append(leaf)
    groups: dict[str, list[Element]] = {}
    unevaluated: list[str] = []
    for size in sorted(by_size):
        clusters = by_size[size]
        if len(clusters) < 2:
            unevaluated.append(f"clusters(size={size}): no equal-cardinality counterpart")
            continue
        ordered_members = []
        for leaf in clusters:
            elements = [doc.element_by_id(eid) for eid in leaf.element_ids]
            elements.sort(key=lambda e: (e.bbox.y, e.bbox.x, e.id))
            ordered_members.append(elements)
        ordered_members.sort(key=lambda els: (els[0].bbox.y, els[0].bbox.x, els[0].id))
        for rank in range(size):
            key = f"clusters(size={size})[rank {rank}]"
            groups[key] = [members[rank] for members in ordered_members]
    return groups, unevaluated


def consistency(
    doc: DesignDocument,
    tree: ClusterTree,
    config: ConsistencyConfig | None = None,
) -> ConsistencyResult:
    """Score attribute agreement and emit element-indexed findings.

    Score is 1 - mean severity over every evaluated comparison (a clean
    comparison contributes severity 0), and 1.0 when nothing was comparable.
    """
    config = config or ConsistencyConfig()
    text_elements = [e for e in doc.elements if e.kind == "text"]
    typed = [e for e in text_elements if e.semantic_type is not None]
    use_typed = bool(text_elements) and len(typed) >= config.typed_mode_threshold * len(text_elements)

    unevaluated: list[str] = []
    if use_typed:
        mode = MODE_TYPED
        groups = {f"semantic_type:{name}": members for name, members in _typed_groups(doc).items()}
    else:
        mode = MODE_CLUSTER
        groups, unevaluated = _cluster_groups(doc, tree)

    findings: list[ConsistencyFinding] = []
    evaluated = 0
    for key in sorted(groups):
        members = groups[key]
        if len(members) < 2:
            continue
        group_findings, group_evaluated = _evaluate_group(key, members, config)
        findings.extend(group_findings)
        evaluated += group_evaluated

    if evaluated == 0:
        score = 1.0
    else:
        score = 1.0 - sum(f.severity for f in findings) / evaluated
    findings.sort(key=lambda f: (f.group_key, f.attribute))
    return ConsistencyResult(
        score=score,
        findings=tuple(findings),
        mode_used=mode,
        evaluated_group_count=evaluated,
        unevaluated=tuple(unevaluated),
    )


def consistency_per_scale(
    doc: DesignDocument,
    tree: ClusterTree,
    config: ConsistencyConfig | None = None,
    scale_assignment: dict[str, int] | None = None,
    tree_builder=None,
) -> dict[int, ConsistencyResult]:
    """Run the consistency comparison inside each scale level.

    Only scales with at least one element appear in the map. The cluster
    substrate is rebuilt over each scale's elements (tree_builder defaults
    to the standard recursive clustering with its default parameters).
    """
    from .spatial import assign_scales, build_cluster_tree

    config = config or ConsistencyConfig()
    if scale_assignment is None:
        scale_assignment = assign_scales(doc)
    if tree_builder is None:
        tree_builder = build_cluster_tree
    by_scale: dict[int, list[str]] = {}
    for eid, level in scale_assignment.items():
        by_scale.setdefault(level, []).append(eid)
    out: dict[int, ConsistencyResult] = {}
    for level in sorted(by_scale):
        sub = doc.restricted_to(by_scale[level])
        out[level] = consistency(sub, tree_builder(sub), config)
    return out
