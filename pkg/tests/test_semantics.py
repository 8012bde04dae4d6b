"""Embedding tables, semantic distance, and flexibility categorization."""

import itertools
import math
import random

import numpy as np
import pytest

from studiolens.ideas import Idea
from studiolens.semantics import (
    EmbeddingError,
    EmbeddingTable,
    flexibility,
    load_embeddings,
    semantic_distance,
)

from conftest import fixture_path
from oracles import oracle_average_linkage


def ideas_for(terms):
    return [Idea(term=t, source_element_ids=("e1",), origin="text_token") for t in terms]


def table_from(entries):
    return EmbeddingTable(
        dimension=len(next(iter(entries.values()))),
        entries={k: np.array(v, dtype=float) for k, v in entries.items()},
        source_label="inline",
    )


def partition(result):
    return {frozenset(c.member_idea_terms) for c in result.categories}


def test_load_two_line_file(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1 0\nb 0 1\n")
    table = load_embeddings(path)
    assert table.dimension == 2
    assert set(table.entries) == {"a", "b"}


def test_dimension_mismatch_reports_line(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1 0\nb 0 1\nc 1 2 3\n")
    with pytest.raises(EmbeddingError) as err:
        load_embeddings(path)
    assert "line 3" in str(err.value)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("\n\n")
    with pytest.raises(EmbeddingError):
        load_embeddings(path)


def test_non_finite_component_rejected(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1 nan\n")
    with pytest.raises(EmbeddingError):
        load_embeddings(path)


def test_duplicate_terms_last_wins(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 1 0\na 0 1\n")
    table = load_embeddings(path)
    assert table.duplicate_count == 1
    assert list(table.entries["a"]) == [0.0, 1.0]


def test_toy_fixture_loads(toy_table):
    assert toy_table.dimension == 3
    assert len(toy_table.entries) == 10


def test_distance_identity(toy_table):
    assert semantic_distance("dog", "dog", toy_table) == 0.0


def test_distance_orthogonal_and_antipodal():
    table = table_from({"x": [1, 0, 0], "y": [0, 1, 0], "nx": [-1, 0, 0]})
    assert semantic_distance("x", "y", table) == pytest.approx(1.0, abs=1e-12)
    assert semantic_distance("x", "nx", table) == pytest.approx(2.0, abs=1e-12)


def test_engineered_toy_distances(toy_table):
    assert semantic_distance("dog", "cat", toy_table) == pytest.approx(0.2, abs=1e-12)
    assert semantic_distance("dog", "car", toy_table) == pytest.approx(1.4, abs=1e-12)
    assert semantic_distance("cat", "car", toy_table) == pytest.approx(1.4, abs=1e-12)


def test_both_oov_incomparable(toy_table):
    assert semantic_distance("zeppelin", "quartz", toy_table) is None


def test_multiword_term_composes_from_tokens(toy_table):
    # mean of dog (1,0,0) and cat (4,3,0) is (2.5,1.5,0), so the cosine
    # against dog is 2.5 / |(2.5,1.5,0)| = 5 / sqrt(34).
    d = semantic_distance("dog cat", "dog", toy_table)
    assert d == pytest.approx(1 - 5 / math.sqrt(34), abs=1e-12)


def test_dog_cat_car_categories(toy_table):
    result = flexibility(ideas_for(["dog", "cat", "car"]), toy_table, tau=0.6)
    assert result.category_count == 2
    assert partition(result) == {frozenset({"dog", "cat"}), frozenset({"car"})}
    expected = oracle_average_linkage(
        ["dog", "cat", "car"],
        lambda a, b: semantic_distance(a, b, toy_table),
        0.6,
    )
    assert partition(result) == expected


def test_identical_vectors_single_category():
    table = table_from({"a": [1, 0], "b": [1, 0], "c": [2, 0]})
    result = flexibility(ideas_for(["a", "b", "c"]), table, tau=0.1)
    assert result.category_count == 1


def test_empty_idea_list():
    table = table_from({"a": [1, 0]})
    result = flexibility([], table, tau=0.6)
    assert result.category_count == 0
    assert result.categories == ()


def test_oov_terms_become_singletons(toy_table):
    result = flexibility(ideas_for(["dog", "cat", "zeppelin"]), toy_table, tau=0.6)
    assert result.oov_terms == ("zeppelin",)
    assert frozenset({"zeppelin"}) in partition(result)
    assert result.category_count == 2


def test_tau_bounds(toy_table):
    with pytest.raises(ValueError):
        flexibility(ideas_for(["dog"]), toy_table, tau=0.0)
    with pytest.raises(ValueError):
        flexibility(ideas_for(["dog"]), toy_table, tau=2.0)


def test_tau_extremes(toy_table):
    terms = sorted(toy_table.entries)
    ideas = ideas_for(terms)
    tiny = flexibility(ideas, toy_table, tau=1e-9)
    assert tiny.category_count == len(terms)
    wide = flexibility(ideas, toy_table, tau=1.999)
    assert wide.category_count == 1


def test_tau_monotonicity(toy_table):
    terms = sorted(toy_table.entries)
    ideas = ideas_for(terms)
    counts = [
        flexibility(ideas, toy_table, tau=t).category_count
        for t in (0.05, 0.2, 0.4, 0.6, 0.9, 1.2, 1.6, 1.95)
    ]
    assert counts == sorted(counts, reverse=True)


def test_medoid_minimizes_mean_distance(toy_table):
    result = flexibility(ideas_for(["river", "park", "tree"]), toy_table, tau=1.0)
    cluster = next(c for c in result.categories if len(c.member_idea_terms) == 3)
    best = min(
        cluster.member_idea_terms,
        key=lambda m: (
            sum(semantic_distance(m, o, toy_table) for o in cluster.member_idea_terms if o != m),
            m,
        ),
    )
    assert cluster.medoid_term == best


def test_permutation_invariance(toy_table):
    terms = ["dog", "cat", "car", "sky", "tree", "park"]
    rng = random.Random(7)
    reference = partition(flexibility(ideas_for(terms), toy_table, tau=0.8))
    for _ in range(20):
        shuffled = terms[:]
        rng.shuffle(shuffled)
        assert partition(flexibility(ideas_for(shuffled), toy_table, tau=0.8)) == reference


def test_matches_exhaustive_trace_on_random_subsets(toy_table):
    rng = random.Random(42)
    vocabulary = sorted(toy_table.entries)
    for _ in range(120):
        size = rng.randint(1, 8)
        terms = rng.sample(vocabulary, size)
        tau = rng.choice([0.1, 0.3, 0.6, 0.9, 1.3, 1.7])
        got = partition(flexibility(ideas_for(terms), toy_table, tau=tau))
        expected = oracle_average_linkage(
            terms, lambda a, b: semantic_distance(a, b, toy_table), tau)
        assert got == expected


def test_distance_symmetry_and_range(toy_table):
    rng = random.Random(3)
    vocabulary = sorted(toy_table.entries)
    for _ in range(200):
        a, b = rng.sample(vocabulary, 2)
        d_ab = semantic_distance(a, b, toy_table)
        d_ba = semantic_distance(b, a, toy_table)
        assert d_ab == d_ba
        assert 0.0 <= d_ab <= 2.0


def test_category_count_bounded(toy_table):
    for terms in itertools.combinations(sorted(toy_table.entries), 4):
        result = flexibility(ideas_for(list(terms)), toy_table, tau=0.6)
        assert result.category_count <= len(terms)
