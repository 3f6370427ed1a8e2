import itertools

import numpy as np
import pytest

from rainbow.generators import onefactorization_knn, random_bipartite
from rainbow.graph_core import EdgeColouredGraph, GraphError
from rainbow.regularize import (
    DegreeSequencePair,
    RegularizationError,
    gale_ryser_check,
    gale_ryser_realize,
    ore_ryser_slack,
    regular_bipartite_subgraph,
    regular_general_subgraph,
    regularize_add_vertices,
    regularize_with_reserve,
    reserve_dense_complement,
    thin_large_colours,
)


def bipartite(n, edges):
    return EdgeColouredGraph(2 * n, {e: i for i, e in enumerate(edges)}, (list(range(n)), list(range(n, 2 * n))))


def complete(n):
    return EdgeColouredGraph(n, {e: i for i, e in enumerate(itertools.combinations(range(n), 2))})


def is_regular(g, d, vertices=None):
    return all(g.degree(v) == d for v in (vertices if vertices is not None else g.vertices()))


def test_k33_to_six_cycle():
    res = regular_bipartite_subgraph(onefactorization_knn(3), 2)
    assert res.feasible and is_regular(res.graph, 2) and res.graph.n_edges == 6


def test_six_cycle_to_perfect_matching():
    c6 = bipartite(3, [(0, 3), (3, 1), (1, 4), (4, 2), (2, 5), (5, 0)])
    res = regular_bipartite_subgraph(c6, 1)
    assert res.feasible and is_regular(res.graph, 1)


def test_padded_star_has_witness():
    star = bipartite(3, [(0, 3), (0, 4), (0, 5)])
    res = regular_bipartite_subgraph(star, 1)
    assert not res.feasible
    assert ore_ryser_slack(star, 1, res.witness) < 0
    # every witness found by enumeration is also rejected by the slack formula
    bad = [T for r in range(4) for T in itertools.combinations(range(3, 6), r) if ore_ryser_slack(star, 1, list(T)) < 0]
    assert bad


def test_random_dense_bipartite_regular_subgraph(rng):
    g = random_bipartite(40, 0.97, rng)
    d = int(0.9 * 40)
    res = regular_bipartite_subgraph(g, d)
    assert res.feasible and is_regular(res.graph, d)
    assert set(res.graph.edges()) <= set(g.edges())


def test_general_regular_subgraph_examples():
    cyc = regular_general_subgraph(complete(5), 2)
    assert is_regular(cyc, 2)
    seen, v, prev = {0}, 0, None
    while True:
        nxt = [u for u in cyc.neighbours(v) if u != prev and (u not in seen or (u == 0 and len(seen) == 5))]
        if not nxt or nxt[0] == 0:
            break
        prev, v = v, nxt[0]
        seen.add(v)
    assert len(seen) == 5
    four = regular_general_subgraph(complete(6), 4)
    assert is_regular(four, 4) and four.n_edges == 12
    with pytest.raises(GraphError):
        regular_general_subgraph(EdgeColouredGraph(6, {(0, 1): 0, (2, 3): 1}), 2)


def test_thin_identity_and_empty(rng):
    g = bipartite(10, [(i, 10 + j) for i in range(10) for j in range(10)])
    res = thin_large_colours(g, 0.01, 1, rng)
    assert res.large_colours == 0 and res.graph == g
    empty = bipartite(4, [])
    assert thin_large_colours(empty, 0.05, 2, rng).graph.n_edges == 0


def test_thin_deletes_only_large_colours(rng):
    g = onefactorization_knn(40).with_colours(range(38))
    res = thin_large_colours(g, 0.05, 1, rng, n=40)
    assert set(res.graph.edges()) <= set(g.edges())
    assert res.large_colours == 38


def test_thin_example_outside_precondition():
    # 90 colours of size 100 with eps = 0.05: every colour is large and the
    # degree floor 99.5 is above the degree 90, so no attempt can succeed
    g = onefactorization_knn(100).with_colours(range(90))
    outcomes = [thin_large_colours(g, 0.05, 1, np.random.default_rng(s), n=100, retry_cap=3) for s in range(5)]
    assert not any(r.success for r in outcomes)
    assert all(r.warning for r in outcomes)


def test_reserve_regular_input_unchanged():
    g = onefactorization_knn(5)
    h, patch = regularize_with_reserve(g, bipartite(5, []), 5)
    assert h == g and patch == []


def single_switch_instance():
    edges = [(0, 5), (0, 6), (0, 7), (1, 4), (2, 4), (3, 4), (1, 5), (2, 6), (3, 7)]
    return bipartite(4, edges), bipartite(4, [(1, 6)])


def test_reserve_single_switch():
    g, reserve = single_switch_instance()
    h, patch = regularize_with_reserve(g, reserve, 2)
    assert patch == [(1, 6)]
    assert set(g.edges()) - set(h.edges()) == {(0, 6), (1, 4)}
    total = h.union(reserve.edge_subgraph(patch))
    assert is_regular(total, 2)


def test_reserve_empty_with_surplus_fails():
    g, _ = single_switch_instance()
    with pytest.raises(RegularizationError):
        regularize_with_reserve(g, bipartite(4, []), 2)


def test_add_vertices_complete():
    res = regularize_add_vertices(onefactorization_knn(5), 0.0, 1.0)
    assert res.d == 5 and res.added_per_side == 0 and res.graph == onefactorization_knn(5)


def test_add_vertices_random(rng):
    g = random_bipartite(50, 0.5, rng)
    gamma = 0.1
    res = regularize_add_vertices(g, gamma, 0.5)
    assert is_regular(res.graph, res.d)
    assert len(res.graph.bipartition[0]) <= (1 + 9 * gamma) * 50
    assert set(g.edges()) <= set(res.graph.edges())
    assert len(set(res.graph.colours()) - set(g.colours())) == res.graph.n_edges - g.n_edges


def test_add_vertices_regular_n20():
    g = onefactorization_knn(20).with_colours(range(15))
    res = regularize_add_vertices(g, 0.0, 0.75, n=20)
    assert res.d == 15 and res.added_per_side == 0


def _brute_force_realizable(xs, ys):
    cells = [(i, j) for i in range(len(xs)) for j in range(len(ys))]
    for mask in range(1 << len(cells)):
        dx, dy = [0] * len(xs), [0] * len(ys)
        for k, (i, j) in enumerate(cells):
            if mask >> k & 1:
                dx[i] += 1
                dy[j] += 1
        if dx == list(xs) and dy == list(ys):
            return True
    return False


def test_gale_ryser_examples():
    res = gale_ryser_realize(DegreeSequencePair([2, 1, 1], [2, 1, 1]))
    assert res.feasible and _brute_force_realizable([2, 1, 1], [2, 1, 1])
    dx, dy = [0] * 3, [0] * 3
    for i, j in res.edges:
        dx[i] += 1
        dy[j] += 1
    assert dx == [2, 1, 1] and dy == [2, 1, 1]
    ok, t, _ = gale_ryser_check(DegreeSequencePair([2, 2], [3, 1]))
    assert not ok and t == 1
    assert gale_ryser_realize(DegreeSequencePair([0] * 4, [0] * 4)).edges == []


def test_gale_ryser_matches_brute_force(rng):
    for _ in range(200):
        a, b = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        xs = rng.integers(0, b + 1, size=a).tolist()
        ys = rng.integers(0, a + 1, size=b).tolist()
        assert gale_ryser_check(DegreeSequencePair(xs, ys))[0] == _brute_force_realizable(xs, ys)


def test_reserve_dense_complement(rng):
    g = onefactorization_knn(10)
    res = reserve_dense_complement(g, 0.0, rng)
    assert res.graph == g and res.reserve.n_edges == 0
    res = reserve_dense_complement(onefactorization_knn(10).with_colours(range(8)), 0.2, rng)
    assert is_regular(res.graph, 6)
    assert not set(res.graph.edges()) & set(res.reserve.edges())
    with pytest.raises(GraphError):
        reserve_dense_complement(onefactorization_knn(10).with_colours(range(1)), 0.2, rng)


def test_reserve_density_on_average():
    sizes = []
    for s in range(40):
        r = np.random.default_rng(s)
        res = reserve_dense_complement(onefactorization_knn(10), 0.2, r)
        assert is_regular(res.graph, 8)
        sizes.append(res.reserve.n_edges)
    assert abs(np.mean(sizes) - 10) < 4
