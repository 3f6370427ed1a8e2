import itertools

import numpy as np
import pytest

from rainbow.config import PipelineConfig
from rainbow.generators import cyclic_square, generalized_square, onefactorization_knn
from rainbow.graph_core import EdgeColouredGraph, GeneralizedLatinSquare, GraphError, RainbowMatching, square_to_bipartite, verify
from rainbow.matchings import (
    ExtensionError,
    HypothesisError,
    complete_matching,
    extend_matching_once,
    few_large_colours_gate,
    knn_transversal_pipeline,
    many_colours_gate,
    near_matching_decomposition,
    perfect_matching_decomposition,
    spread_out,
    verify_family,
)
from rainbow.pseudorandom import sample_colour_subgraph


def bip(n, coloured_edges):
    return EdgeColouredGraph(2 * n, dict(coloured_edges), (list(range(n)), list(range(n, 2 * n))))


def rainbow_knn(n):
    return bip(n, {(i, n + j): i * n + j for i in range(n) for j in range(n)})


def test_two_colour_k22():
    # colour classes are the stars at 0 and 1, so both perfect matchings are rainbow
    g = bip(2, {(0, 2): 0, (0, 3): 0, (1, 2): 1, (1, 3): 1})
    fam = near_matching_decomposition(g, PipelineConfig(), np.random.default_rng(0))
    assert len(fam) == 2
    assert not verify_family(fam, g)


def test_proper_two_colouring_has_no_rainbow_perfect_matching():
    g = square_to_bipartite(cyclic_square(2))
    fam = near_matching_decomposition(g, PipelineConfig(), np.random.default_rng(0))
    assert not verify_family(fam, g, "matching")
    assert max(fam.sizes(), default=0) == 1


def test_empty_graph_gives_empty_family():
    assert len(near_matching_decomposition(bip(3, {}))) == 0


@pytest.mark.parametrize("seed", range(2))
def test_near_decomposition_k100(seed):
    g = onefactorization_knn(100).with_colours(range(90))
    fam = near_matching_decomposition(g, PipelineConfig(), np.random.default_rng(seed))
    assert not verify_family(fam, g, "matching")
    assert sum(size >= 80 for size in fam.sizes()) >= 0.5 * 90
    assert all(not set(m.edges) - set(g.edges()) for m in fam.matchings)


def test_spread_out_fixed_point():
    g = rainbow_knn(4)
    family = [RainbowMatching([(i, 4 + (i + s) % 4) for i in range(4)]) for s in range(4)]
    out = spread_out(g, family, 0.001)
    assert out.diagnostics["moves"] == 0
    assert [set(m.edges) for m in out.matchings] == [set(m.edges) for m in family]


def test_spread_out_single_swap():
    g = rainbow_knn(6)
    m1 = RainbowMatching([(i, 6 + i) for i in range(6)])
    m2 = RainbowMatching([(i, 6 + (i + 1) % 6) for i in range(1, 6)])
    out = spread_out(g, [m1, m2], 0.001, np.random.default_rng(0))
    assert out.diagnostics["moves"] == 1
    union = [e for m in out.matchings for e in m.edges]
    degree = {v: 0 for v in range(12)}
    for u, v in union:
        degree[u] += 1
        degree[v] += 1
    assert set(degree.values()) == {2}
    for m in out.matchings:
        assert verify(m, g, "perfect_matching").valid


def test_spread_out_empty():
    assert len(spread_out(rainbow_knn(3), [], 0.01)) == 0


def test_extend_with_complete_reserves(rng):
    g = rainbow_knn(6)
    m = RainbowMatching([(i, 6 + i) for i in range(5)])
    reserve = g.without_edges(m.edges)
    out = extend_matching_once(m, reserve, reserve, reserve, 5, 11, rng, banned_colours={g.colour(*e) for e in m.edges})
    assert len(out) == 6
    assert verify(out, g, "perfect_matching").valid


def unique_rotation_instance():
    m = RainbowMatching([(1, 5), (2, 6), (3, 7)])
    host = bip(4, {(1, 5): 0, (2, 6): 1, (3, 7): 2})
    e = bip(4, {(1, 6): 10, (3, 4): 11})
    dx = bip(4, {(0, 5): 20, (0, 7): 21})
    dy = bip(4, {(2, 4): 30})
    return m, host, e, dx, dy


def test_extend_unique_rotation():
    m, host, e, dx, dy = unique_rotation_instance()
    out = extend_matching_once(m, e, dx, dy, 0, 4)
    assert out.edges == frozenset({(0, 5), (1, 6), (2, 4), (3, 7)})
    # exhaustive search over (u, v) quadruples finds exactly this one
    partner = {a: b for x, y in m.edges for a, b in ((x, y), (y, x))}
    found = []
    for w1, w2 in itertools.product(dx.neighbours(0), dy.neighbours(4)):
        u, v = partner[w1], partner[w2]
        if (min(u, v), max(u, v)) in e:
            found.append((u, v))
    assert found == [(1, 6)]
    full = host.union(e).union(dx).union(dy)
    assert verify(out, full, "perfect_matching").valid


def test_extend_empty_e_fails():
    m, host, _, dx, dy = unique_rotation_instance()
    with pytest.raises(ExtensionError) as info:
        extend_matching_once(m, bip(4, {}), dx, dy, 0, 4)
    assert info.value.bottleneck == "no E-edge"


def test_complete_already_perfect():
    g = rainbow_knn(3)
    m = RainbowMatching([(i, 3 + i) for i in range(3)])
    res = complete_matching(m, g, bip(3, {}), bip(3, {}), bip(3, {}))
    assert res.success and res.matching == m and res.rounds == 0


def test_complete_rejects_shared_colours():
    g = rainbow_knn(3)
    m = RainbowMatching([(0, 3)])
    shared = bip(3, {(1, 4): g.colour(0, 3)})
    with pytest.raises(GraphError):
        complete_matching(m, g, shared, bip(3, {}), bip(3, {}))


def test_complete_from_near_perfect(rng):
    n = 60
    host = square_to_bipartite(generalized_square(n, n * n // 2, rng))
    perm = rng.permutation(n)
    edges, cols = [], set()
    for x in range(n):
        c = host.colour(x, n + int(perm[x]))
        if c not in cols and len(edges) < n - 2:
            edges.append((x, n + int(perm[x])))
            cols.add(c)
    rest = host.without_colours(cols)
    from rainbow.pseudorandom import split_colours

    e, dx, dy = split_colours(rest, (0.3, 0.3, 0.3), rng)
    res = complete_matching(RainbowMatching(edges), host, e, dx, dy, rng)
    assert res.success
    assert verify(res.matching, host, "perfect_matching").valid


def test_perfect_decomposition_trivial():
    g = bip(2, {(0, 2): 0, (1, 3): 1, (0, 3): 2, (1, 2): 3})
    fam = perfect_matching_decomposition(g, bip(2, {}), PipelineConfig(), np.random.default_rng(0))
    assert 1 <= len(fam) <= 2
    assert not verify_family(fam, g)


def test_perfect_decomposition_empty_reserve_reports_failures():
    g = onefactorization_knn(10).with_colours(range(9))
    fam = perfect_matching_decomposition(g, bip(10, {}), PipelineConfig(), np.random.default_rng(0))
    assert fam.diagnostics["failures"]
    assert not verify_family(fam, g)


@pytest.mark.parametrize("seed", range(3))
def test_perfect_decomposition_many_colours(seed):
    rng = np.random.default_rng(seed)
    n = 60
    g = square_to_bipartite(generalized_square(n, n * n // 2, rng))
    reserve, main = sample_colour_subgraph(g, 0.15, rng)
    fam = perfect_matching_decomposition(main, reserve, PipelineConfig(), rng)
    assert not verify_family(fam, g)
    assert len(fam) >= 0.5 * main.min_degree()


def test_transversal_gate_rejects_z3():
    with pytest.raises(HypothesisError):
        knn_transversal_pipeline(cyclic_square(3), 0.01)


def test_transversal_pipeline_small(rng):
    sq = generalized_square(40, 800, rng)
    fam = knn_transversal_pipeline(sq, 0.001, PipelineConfig(), rng)
    assert not verify_family(fam, square_to_bipartite(sq))
    assert len(fam) >= 10


def test_many_colours_gate_examples(rng):
    assert many_colours_gate(rainbow_knn(6), 0.4).passes
    for n in range(6, 12):
        assert not many_colours_gate(onefactorization_knn(n), 0.1).passes
    # at n = 5 the count 5 equals 2 eps n^2 exactly, so the gate passes there
    boundary = many_colours_gate(onefactorization_knn(5), 0.1)
    assert boundary.passes and boundary.implication_holds is False
    n, eps = 40, 0.1
    target = int(np.ceil(2 * eps * n * n))
    res = many_colours_gate(square_to_bipartite(generalized_square(n, target, rng)), eps)
    assert res.passes and res.colours == target and res.implication_holds


def test_few_large_colours_gate():
    assert not few_large_colours_gate(onefactorization_knn(10), 0.01).passes
    assert few_large_colours_gate(rainbow_knn(10), 0.01).passes
