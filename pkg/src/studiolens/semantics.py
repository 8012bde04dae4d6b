"""Word-embedding tables, semantic distance, and the flexibility analytic.

Distance between terms is 1 - cosine similarity over vectors from a
plain-text table (``term v1 v2 ... vd`` per line, the common pretrained
word-vector layout), so it ranges over [0, 2]. Ideas are grouped into
categories by average-linkage agglomerative clustering that stops once the
closest pair of clusters is farther apart than the threshold tau.

Determinism: terms are sorted before clustering and ties are broken by the
lexicographically smallest cluster pair, so the resulting partition does not
depend on idea input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ideas import Idea


class EmbeddingError(Exception):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    entries: dict[str, np.ndarray]
    source_label: str
    duplicate_count: int = 0

    def __contains__(self, term: str) -> bool:
        return term in self.entries

    def vector(self, term: str) -> np.ndarray | None:
        """Vector for a term; multiword terms fall back to the mean of their
        in-vocabulary tokens. None when nothing is embeddable."""
        v = self.entries.get(term)
        if v is not None:
            return v
        if " " in term:
            parts = [self.entries[t] for t in term.split(" ") if t in self.entries]
            if parts:
                return np.mean(parts, axis=0)
        return None


def load_embeddings(path, expected_dimension: int | None = None) -> EmbeddingTable:
    """Load a plain-text vector table.

    Duplicate terms: last occurrence wins, counted for the caller's warning.
    A line whose vector length disagrees with the table dimension fails with
    its line number.
    """
    entries: dict[str, np.ndarray] = {}
    dimension = expected_dimension
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise EmbeddingError(f"line {lineno}: expected 'term v1 ... vd'")
            term = parts[0]
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingError(f"line {lineno}: {exc}") from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingError(f"line {lineno}: non-finite vector component")
            if dimension is None:
                dimension = vec.shape[0]
            elif vec.shape[0] != dimension:
                raise EmbeddingError(
                    f"line {lineno}: dimension mismatch, expected {dimension} got {vec.shape[0]}"
                )
            if term in entries:
                duplicates += 1
            entries[term] = vec
    if not entries:
        raise EmbeddingError(f"empty embedding file: {path}")
    return EmbeddingTable(
        dimension=int(dimension),
        entries=entries,
        source_label=str(path),
        duplicate_count=duplicates,
    )


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 1.0  # zero vectors carry no direction; treat as uncorrelated
    cos = float(np.dot(u, v)) / (nu * nv)
    cos = max(-1.0, min(1.0, cos))
    return 1.0 - cos


def semantic_distance(a: str, b: str, table: EmbeddingTable) -> float | None:
    """1 - cosine over the table, in [0, 2]; None when either term is
    incomparable (out of vocabulary with no composable tokens)."""
    if a == b:
        return 0.0
    va = table.vector(a)
    vb = table.vector(b)
    if va is None or vb is None:
        return None
    return cosine_distance(va, vb)


@dataclass(frozen=True)
class Category:
    member_idea_terms: tuple[str, ...]
    medoid_term: str


@dataclass(frozen=True)
class FlexibilityResult:
    category_count: int
    categories: tuple[Category, ...]
    distance_threshold_used: float
    oov_terms: tuple[str, ...]
    # Merge trace (cluster A members, cluster B members, linkage distance),
    # in merge order; lets the UI draw the dendrogram.
    merges: tuple[tuple[tuple[str, ...], tuple[str, ...], float], ...] = ()


def _medoid(members: list[str], dist: dict[tuple[str, str], float]) -> str:
    if len(members) == 1:
        return members[0]
    best = None
    best_mean = math.inf
    for m in sorted(members):
        total = sum(dist[(min(m, o), max(m, o))] for o in members if o != m)
        mean = total / (len(members) - 1)
        if mean < best_mean - 1e-15:
            best = m
            best_mean = mean
    assert best is not None
    return best


def flexibility(ideas: list[Idea], table: EmbeddingTable, tau: float = 0.6) -> FlexibilityResult:
    """Categorize ideas by semantic distance.

    Average-linkage agglomerative clustering over the embeddable terms;
    merging stops when the minimum average inter-cluster distance exceeds
    tau. Fully out-of-vocabulary terms become singleton categories and are
    listed in oov_terms (unknown ideas must not silently merge). The medoid
    is the member minimizing mean distance to its co-members, lexicographic
    smallest on ties.
    """
    if not 0.0 < tau < 2.0:
        raise ValueError(f"tau must be in (0, 2), got {tau}")
    terms = sorted({idea.term for idea in ideas})
    if not terms:
        return FlexibilityResult(0, (), tau, ())

    embeddable = [t for t in terms if table.vector(t) is not None]
    oov = tuple(t for t in terms if table.vector(t) is None)

    # Pairwise distances once, keyed on the sorted term pair.
    dist: dict[tuple[str, str], float] = {}
    for i, a in enumerate(embeddable):
        for b in embeddable[i + 1:]:
            d = semantic_distance(a, b, table)
            assert d is not None
            dist[(a, b)] = d

    clusters: list[tuple[str, ...]] = [(t,) for t in embeddable]
    merges: list[tuple[tuple[str, ...], tuple[str, ...], float]] = []

    def linkage(ca: tuple[str, ...], cb: tuple[str, ...]) -> float:
        total = 0.0
        for a in ca:
            for b in cb:
                total += dist[(min(a, b), max(a, b))]
        return total / (len(ca) * len(cb))

    while len(clusters) > 1:
        best_pair = None
        best_d = math.inf
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                pair = tuple(sorted((clusters[i], clusters[j])))
                d = linkage(clusters[i], clusters[j])
                if d < best_d or (d == best_d and best_pair is not None and pair < best_pair):
                    best_d = d
                    best_pair = pair
        if best_pair is None or best_d > tau:
            break
        ca, cb = best_pair
        clusters = [c for c in clusters if c != ca and c != cb]
        clusters.append(tuple(sorted(ca + cb)))
        merges.append((ca, cb, best_d))

    categories = [
        Category(member_idea_terms=c, medoid_term=_medoid(list(c), dist))
        for c in clusters
    ]
    categories.extend(Category(member_idea_terms=(t,), medoid_term=t) for t in oov)
    categories.sort(key=lambda c: c.member_idea_terms)
    return FlexibilityResult(
        category_count=len(categories),
        categories=tuple(categories),
        distance_threshold_used=tau,
        oov_terms=oov,
        merges=tuple(merges),
    )


def distance_matrix(terms: list[str], table: EmbeddingTable) -> dict:
    """Pairwise distance export for the UI: sorted terms plus a row-major
    matrix; incomparable pairs are null."""
    ordered = sorted(set(terms))
    rows = []
    for a in ordered:
        row = []
        for b in ordered:
            d = semantic_distance(a, b, table)
            row.append(None if d is None else round(d, 12))
        rows.append(row)
    return {"terms": ordered, "distances": rows}
