import itertools

import numpy as np
import pytest

from rainbow.generators import onefactorization_knn, round_robin_kn
from rainbow.graph_core import EdgeColouredGraph
from rainbow.pseudorandom import (
    boundedness,
    check_regular,
    check_typical,
    colour_cover_check,
    density_discrepancy,
    high_min_degree_core,
    random_orientation,
    sample_colour_subgraph,
    sample_edge_subgraph,
    sample_vertex_subsets,
)


def complete(n):
    return EdgeColouredGraph(n, {e: i for i, e in enumerate(itertools.combinations(range(n), 2))})


def test_regularity_examples():
    assert check_regular(complete(10), 0.2, 1.0, 10)[0]
    star = EdgeColouredGraph(10, {(0, v): v for v in range(1, 10)})
    assert not check_regular(star, 0.1, 0.5, 10)[0]
    assert check_regular(onefactorization_knn(5), 0.0, 1.0, 5)[0]


def test_typicality_examples():
    ok, rep = check_typical(complete(10), 0.2, 1.0, 10)
    assert ok and rep.min_codegree == 8
    assert check_typical(onefactorization_knn(7), 0.0, 1.0, 7)[0]
    pairs = {e: i for i, e in enumerate(list(itertools.combinations(range(5), 2)) + list(itertools.combinations(range(5, 10), 2)))}
    assert not check_typical(EdgeColouredGraph(10, pairs), 0.3, 0.4, 10)[0]


def test_boundedness_examples():
    rep = boundedness(onefactorization_knn(6))
    assert (rep.global_bound, rep.local_bound) == (6, 1)
    assert boundedness(complete(6)).global_bound == 1
    empty = boundedness(EdgeColouredGraph(4, {}))
    assert (empty.global_bound, empty.local_bound) == (0, 0)


def test_discrepancy_examples(rng):
    g = onefactorization_knn(8)
    res = density_discrepancy(g, range(3), range(8, 12), 1.0, 0.01, 8)
    assert res.discrepancy == 0
    k10 = complete(10)
    res = density_discrepancy(k10, range(5), range(5, 10), 1.0, 1.0, 10)
    assert res.discrepancy == 0 and res.passes
    half, _ = sample_edge_subgraph(onefactorization_knn(20), 0.5, rng)
    for _ in range(100):
        a = rng.choice(20, size=14, replace=False)
        b = 20 + rng.choice(20, size=14, replace=False)
        res = density_discrepancy(half, a.tolist(), b.tolist(), 0.5, 0.3, 20)
        assert res.passes or res.skipped


def test_colour_sampling_extremes(rng):
    g = onefactorization_knn(6)
    chosen, rest = sample_colour_subgraph(g, 0.0, rng)
    assert chosen.n_edges == 0 and rest == g
    chosen, rest = sample_colour_subgraph(g, 1.0, rng)
    assert chosen == g and rest.n_edges == 0
    chosen, rest = sample_edge_subgraph(g, 1.0, rng)
    assert chosen == g and rest.n_edges == 0


def test_colour_sampling_partitions_whole_classes(rng):
    g = onefactorization_knn(20)
    chosen, rest = sample_colour_subgraph(g, 0.3, rng)
    assert not set(chosen.colours()) & set(rest.colours())
    assert chosen.n_edges + rest.n_edges == g.n_edges
    for c, edges in chosen.colour_classes().items():
        assert len(edges) == 20


def test_colour_sampling_regularity_rate():
    g = onefactorization_knn(50)
    hits = sum(
        check_regular(sample_colour_subgraph(g, 0.3, np.random.default_rng(s))[0], 0.5, 0.3, 50)[0]
        for s in range(200)
    )
    assert hits >= 190


def test_vertex_subsets(rng):
    g = round_robin_kn(10)
    assert sample_vertex_subsets(g, 10, rng).graph.n_edges == g.n_edges
    assert sample_vertex_subsets(g, 0, rng).graph.n_edges == 0
    two = sample_vertex_subsets(g, (3, 4), rng)
    a, b = two.sets
    assert not set(a) & set(b) and two.graph.n_edges == 12


def test_vertex_subset_boundedness_scaling():
    g = round_robin_kn(100)
    ok = 0
    for s in range(200):
        sub = sample_vertex_subsets(g, 50, np.random.default_rng(s)).graph
        ok += boundedness(sub).global_bound <= 2 * 0.25 * 50
    assert ok >= 190


def test_colour_cover_examples():
    g = onefactorization_knn(6)
    assert colour_cover_check(g, 6, 0.0).ok
    single = EdgeColouredGraph(6, {(0, 1): 0})
    assert not colour_cover_check(single, 1, 0.0, n=6).ok
    big = onefactorization_knn(200)
    hits = 0
    for s in range(100):
        r = np.random.default_rng(s)
        half, _ = sample_edge_subgraph(big, 0.5, r)
        hits += colour_cover_check(half, 40, 0.1, r, n=400, samples=200).ok
    assert hits >= 95


def test_orientation_examples():
    one = random_orientation(EdgeColouredGraph(2, {(0, 1): 0}), np.random.default_rng(0))
    assert one.arcs in ([(0, 1)], [(1, 0)])
    assert random_orientation(EdgeColouredGraph(3, {}), np.random.default_rng(0)).arcs == []
    # Each attempt succeeds with probability about 0.47 on K_20, so a few seeds need more than three retries.
    attempts = []
    for s in range(100):
        o = random_orientation(round_robin_kn(20), np.random.default_rng(s), retry_cap=50)
        assert o.min_out_degree >= 6
        attempts.append(o.attempts)
    assert np.mean(attempts) <= 3
    assert sum(a <= 4 for a in attempts) >= 85


def test_core_examples():
    k = complete(8)
    assert high_min_degree_core(k, 0.3).vertices == list(range(8))
    g = complete(10).without_edges([(0, v) for v in range(1, 10)])
    assert high_min_degree_core(g, 0.4, n=10).vertices == list(range(1, 10))
    sparse = EdgeColouredGraph(10, {(0, 1): 0, (2, 3): 1})
    assert high_min_degree_core(sparse, 0.2).warning


@pytest.mark.parametrize("prob", [-0.1, 1.5])
def test_bad_probability(prob, rng):
    with pytest.raises(ValueError):
        sample_colour_subgraph(onefactorization_knn(3), prob, rng)
