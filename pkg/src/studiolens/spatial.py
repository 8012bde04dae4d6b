"""Spatial clustering and the multiscale-organization analytic.

Clustering follows the Delaunay edge-pruning approach: triangulate element
centroids, drop every edge longer than mean + k * std of the edge lengths,
and read clusters off the connected components. Applying the same rule
recursively inside each cluster yields the nested group tree that both the
multiscale and the consistency analytics consume.

Degenerate inputs are handled explicitly: a single point is a singleton
cluster, two points always cohere (one edge never exceeds its own mean),
collinear point sets are chained along the line, and coincident centroids
are separated by a deterministic id-hash jitter so results stay reproducible.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .model import BBox, DesignDocument, ProcessEvent

# Process actions treated as co-manipulation for affinity weighting.
AFFINITY_ACTIONS = ("move", "resize", "restyle", "select_group")


@dataclass(frozen=True)
class SpatialPoint:
    id: str
    x: float
    y: float
    size: float = 0.0


@dataclass(frozen=True)
class AmoebaResult:
    clusters: tuple[tuple[str, ...], ...]  # each cluster: sorted point ids
    mean_edge_length: float | None
    std_edge_length: float | None
    threshold: float | None
    jittered_ids: tuple[str, ...] = ()
    collinear: bool = False


@dataclass
class ClusterNode:
    element_ids: tuple[str, ...]
    bounding_box: BBox | None
    level: int
    children: list["ClusterNode"] = field(default_factory=list)
    mean_edge_length: float | None = None

    def leaves(self) -> list["ClusterNode"]:
        if not self.children:
            return [self]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def to_json(self) -> dict:
        return {
            "element_ids": list(self.element_ids),
            "bounding_box": self.bounding_box.to_json() if self.bounding_box else None,
            "level": self.level,
            "mean_edge_length": self.mean_edge_length,
            "children": [c.to_json() for c in self.children],
        }


@dataclass(frozen=True)
class ClusterTree:
    root: ClusterNode
    depth: int
    scale_histogram: dict[int, int]

    def leaves(self) -> list[ClusterNode]:
        return self.root.leaves()

    def to_json(self) -> dict:
        return {
            "root": self.root.to_json(),
            "depth": self.depth,
            "scale_histogram": {str(k): v for k, v in sorted(self.scale_histogram.items())},
        }


def _hash_unit(seed: str) -> tuple[float, float]:
    digest = hashlib.sha256(seed.encode("utf-8")).digest()
    angle = int.from_bytes(digest[:8], "big") / 2**64 * 2 * math.pi
    radius = 0.5 + int.from_bytes(digest[8:16], "big") / 2**64 * 0.5
    return math.cos(angle) * radius, math.sin(angle) * radius


def _resolve_coincident(points: list[SpatialPoint], jitter_scale: float) -> tuple[list[SpatialPoint], tuple[str, ...]]:
    """Jitter coincident centroids apart, deterministically from their ids.

    Within a coincident group the lexicographically smallest id stays put.
    """
    eps = 1e-6 * (jitter_scale if jitter_scale > 0 else 1.0)
    jittered: list[str] = []
    out = list(points)
    salt = 0
    while True:
        groups: dict[tuple[float, float], list[int]] = {}
        for i, p in enumerate(out):
            groups.setdefault((p.x, p.y), []).append(i)
        colliding = [idxs for idxs in groups.values() if len(idxs) > 1]
        if not colliding:
            break
        for idxs in colliding:
            idxs = sorted(idxs, key=lambda i: out[i].id)
            for i in idxs[1:]:
                p = out[i]
                dx, dy = _hash_unit(f"{p.id}:{salt}")
                out[i] = SpatialPoint(p.id, p.x + dx * eps, p.y + dy * eps, p.size)
                if p.id not in jittered:
                    jittered.append(p.id)
        salt += 1
    return out, tuple(sorted(jittered))


def _collinear(coords: np.ndarray) -> bool:
    if len(coords) < 3:
        return True
    base = coords[0]
    direction = None
    span = float(np.max(np.abs(coords - base))) or 1.0
    for p in coords[1:]:
        d = p - base
        if np.hypot(d[0], d[1]) > 0:
            direction = d
            break
    if direction is None:
        return True
    for p in coords[1:]:
        d = p - base
        cross = direction[0] * d[1] - direction[1] * d[0]
        if abs(cross) > 1e-12 * span * span:
            return False
    return True


def _delaunay_edges(points: list[SpatialPoint]) -> tuple[list[tuple[int, int]], bool]:
    """Index pairs of the Delaunay graph; collinear sets fall back to
    consecutive-neighbor chaining along the line."""
    coords = np.array([[p.x, p.y] for p in points], dtype=np.float64)
    n = len(points)
    if n == 2:
        return [(0, 1)], False
    if _collinear(coords):
        order = sorted(range(n), key=lambda i: (coords[i][0], coords[i][1]))
        return [(order[i], order[i + 1]) for i in range(n - 1)], True
    try:
        tri = Delaunay(coords)
    except QhullError:
        order = sorted(range(n), key=lambda i: (coords[i][0], coords[i][1]))
        return [(order[i], order[i + 1]) for i in range(n - 1)], True
    edges = set()
    used = set()
    for simplex in tri.simplices:
        for i in range(3):
            a, b = int(simplex[i]), int(simplex[(i + 1) % 3])
            edges.add((min(a, b), max(a, b)))
            used.add(a)
            used.add(b)
    if len(used) < n:
        # Qhull dropped near-coincident vertices as coplanar; the graph
        # would leave them stranded. Chain instead.
        order = sorted(range(n), key=lambda i: (coords[i][0], coords[i][1]))
        return [(order[i], order[i + 1]) for i in range(n - 1)], True
    return sorted(edges), False


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def amoeba_cluster(
    points: list[SpatialPoint],
    k: float = 1.0,
    affinity: dict[frozenset, float] | None = None,
    jitter_scale: float | None = None,
) -> AmoebaResult:
    """One level of Delaunay edge-pruning clustering.

    Edge lengths (optionally shrunk by the co-manipulation affinity factor)
    longer than mean + k * std are cut; connected components are the
    clusters. k >= 0; at least one point required.
    """
    if not points:
        raise ValueError("amoeba_cluster requires at least one point")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if len(points) == 1:
        return AmoebaResult(((points[0].id,),), None, None, None)

    if jitter_scale is None:
        xs = [p.x for p in points]
        ys = [p.y for p in points]
        jitter_scale = math.hypot(max(xs) - min(xs), max(ys) - min(ys)) or 1.0
    points, jittered = _resolve_coincident(points, jitter_scale)

    edges, collinear = _delaunay_edges(points)
    lengths = []
    for a, b in edges:
        d = math.hypot(points[a].x - points[b].x, points[a].y - points[b].y)
        if affinity:
            factor = affinity.get(frozenset((points[a].id, points[b].id)))
            if factor is not None:
                d *= factor
        lengths.append(d)
    mean = sum(lengths) / len(lengths)
    std = math.sqrt(sum((x - mean) ** 2 for x in lengths) / len(lengths))
    threshold = mean + k * std

    uf = _UnionFind(len(points))
    for (a, b), d in zip(edges, lengths):
        if d <= threshold:
            uf.union(a, b)
    components: dict[int, list[str]] = {}
    for i, p in enumerate(points):
        components.setdefault(uf.find(i), []).append(p.id)
    clusters = tuple(sorted((tuple(sorted(ids)) for ids in components.values())))
    return AmoebaResult(
        clusters=clusters,
        mean_edge_length=mean,
        std_edge_length=std,
        threshold=threshold,
        jittered_ids=jittered,
        collinear=collinear,
    )


def affinity_from_events(events: list[ProcessEvent] | None, beta: float = 0.5) -> dict[frozenset, float]:
    """Distance-shrink factors for element pairs manipulated together."""
    if not events:
        return {}
    out: dict[frozenset, float] = {}
    for event in events:
        if event.action not in AFFINITY_ACTIONS or len(event.element_ids) < 2:
            continue
        ids = sorted(set(event.element_ids))
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                out[frozenset((a, b))] = beta
    return out


def _points_for(doc: DesignDocument, element_ids) -> list[SpatialPoint]:
    points = []
    for eid in element_ids:
        el = doc.element_by_id(eid)
        points.append(SpatialPoint(eid, el.bbox.cx, el.bbox.cy, el.bbox.diagonal))
    return points


def _covering_bbox(doc: DesignDocument, element_ids) -> BBox | None:
    boxes = [doc.element_by_id(eid).bbox for eid in element_ids]
    if not boxes:
        return None
    x0 = min(b.x for b in boxes)
    y0 = min(b.y for b in boxes)
    x1 = max(b.x + b.w for b in boxes)
    y1 = max(b.y + b.h for b in boxes)
    return BBox(x0, y0, x1 - x0, y1 - y0)


def build_cluster_tree(
    doc: DesignDocument,
    k: float = 1.0,
    min_split_size: int = 3,
    max_depth: int = 6,
    events: list[ProcessEvent] | None = None,
    beta: float = 0.5,
) -> ClusterTree:
    """Recursively nested spatial groups.

    Each node re-runs the edge-pruning step on its members; recursion stops
    below min_split_size members, at max_depth, or when no further split
    occurs. A process log, when given, shrinks effective distances between
    co-manipulated elements by beta before pruning.
    """
    if min_split_size < 3:
        raise ValueError(f"min_split_size must be >= 3, got {min_split_size}")
    affinity = affinity_from_events(events, beta)
    jitter_scale = doc.canvas.diagonal

    def grow(element_ids: tuple[str, ...], level: int) -> ClusterNode:
        node = ClusterNode(
            element_ids=tuple(sorted(element_ids)),
            bounding_box=_covering_bbox(doc, element_ids),
            level=level,
        )
        if len(element_ids) < min_split_size or level >= max_depth - 1:
            return node
        result = amoeba_cluster(_points_for(doc, node.element_ids), k, affinity, jitter_scale)
        node.mean_edge_length = result.mean_edge_length
        if len(result.clusters) <= 1:
            return node
        node.children = [grow(cluster, level + 1) for cluster in result.clusters]
        return node

    all_ids = tuple(doc.element_ids())
    root = grow(all_ids, 0) if all_ids else ClusterNode((), None, 0)

    def depth_of(node: ClusterNode) -> int:
        if not node.children:
            return 1
        return 1 + max(depth_of(c) for c in node.children)

    scales = assign_scales(doc)
    histogram: dict[int, int] = {}
    for level in scales.values():
        histogram[level] = histogram.get(level, 0) + 1
    return ClusterTree(root=root, depth=depth_of(root), scale_histogram=histogram)


def _round_sig3(value: float) -> float:
    return float(f"{value:.3g}")


def assign_scales(doc: DesignDocument) -> dict[str, int]:
    """Scale level per element.

    When at least half the elements carry zoom metadata, levels are the
    distinct zoom values (rounded to 3 significant figures; absent zoom
    defaults to 1.0, the natural authoring scale). Otherwise levels derive
    from element size: log4 of the diagonal against the median diagonal,
    rounded to the nearest bin, shifted so the smallest level is 0.
    """
    if not doc.elements:
        return {}
    with_zoom = [e for e in doc.elements if e.zoom_level is not None]
    if len(with_zoom) * 2 >= len(doc.elements):
        buckets = {
            e.id: _round_sig3(e.zoom_level if e.zoom_level is not None else 1.0)
            for e in doc.elements
        }
        ordered = sorted(set(buckets.values()))
        index = {z: i for i, z in enumerate(ordered)}
        return {eid: index[z] for eid, z in buckets.items()}

    diagonals = {e.id: e.bbox.diagonal for e in doc.elements}
    values = sorted(diagonals.values())
    mid = len(values) // 2
    median = values[mid] if len(values) % 2 == 1 else (values[mid - 1] + values[mid]) / 2.0
    raw = {
        eid: math.floor(math.log(d / median, 4) + 0.5)
        for eid, d in diagonals.items()
    }
    low = min(raw.values())
    return {eid: level - low for eid, level in raw.items()}


@dataclass(frozen=True)
class ImbalanceFinding:
    scale_a: int
    scale_b: int
    count_a: int
    count_b: int
    ratio: float
    sparse_scale: int  # the scale that needs more work


@dataclass(frozen=True)
class MultiscaleResult:
    scale_count: int
    scale_histogram: dict[int, int]
    imbalance_findings: tuple[ImbalanceFinding, ...]
    scale_assignment: dict[str, int]
    tree: ClusterTree


def multiscale(
    doc: DesignDocument,
    scale_ratio_rho: float = 4.0,
    tree: ClusterTree | None = None,
    k: float = 1.0,
    min_split_size: int = 3,
    max_depth: int = 6,
    events: list[ProcessEvent] | None = None,
    beta: float = 0.5,
) -> MultiscaleResult:
    """Scale histogram plus findings for lopsided scale pairs.

    A pair of scales is flagged when the element-count ratio between them
    reaches scale_ratio_rho; the finding points at the sparse scale.
    """
    if tree is None:
        tree = build_cluster_tree(doc, k, min_split_size, max_depth, events, beta)
    scales = assign_scales(doc)
    histogram = dict(tree.scale_histogram)
    findings = []
    levels = sorted(histogram)
    for i, a in enumerate(levels):
        for b in levels[i + 1:]:
            ca, cb = histogram[a], histogram[b]
            ratio = max(ca, cb) / min(ca, cb)
            if ratio >= scale_ratio_rho:
                findings.append(ImbalanceFinding(
                    scale_a=a, scale_b=b, count_a=ca, count_b=cb,
                    ratio=ratio, sparse_scale=a if ca < cb else b,
                ))
    return MultiscaleResult(
        scale_count=len([s for s, c in histogram.items() if c > 0]),
        scale_histogram=histogram,
        imbalance_findings=tuple(findings),
        scale_assignment=scales,
        tree=tree,
    )


@dataclass(frozen=True)
class WhitespaceResult:
    cluster_count: int
    whitespace_ratio: float


def whitespace(doc: DesignDocument, grid_resolution: int = 64, k: float = 1.0) -> WhitespaceResult:
    """Root-level cluster count and the fraction of empty grid cells.

    A cell counts as covered when any element bbox contains its center.
    """
    if grid_resolution < 16:
        raise ValueError(f"grid_resolution must be >= 16, got {grid_resolution}")
    if not doc.elements:
        return WhitespaceResult(cluster_count=0, whitespace_ratio=1.0)
    result = amoeba_cluster(_points_for(doc, doc.element_ids()), k, None, doc.canvas.diagonal)
    cw = doc.canvas.width / grid_resolution
    ch = doc.canvas.height / grid_resolution
    covered = 0
    for row in range(grid_resolution):
        cy = (row + 0.5) * ch
        for col in range(grid_resolution):
            cx = (col + 0.5) * cw
            if any(e.bbox.contains_point(cx, cy) for e in doc.elements):
                covered += 1
    total = grid_resolution * grid_resolution
    return WhitespaceResult(
        cluster_count=len(result.clusters),
        whitespace_ratio=(total - covered) / total,
    )
