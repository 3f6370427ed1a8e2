import itertools

import numpy as np
import pytest

from rainbow.config import PipelineConfig
from rainbow.generators import circulant_colouring, round_robin_kn, split_colouring
from rainbow.graph_core import CycleFactor, EdgeColouredGraph, GraphError, verify, verify_pairwise_disjoint
from rainbow.hamilton import (
    DirectedReserve,
    RotationError,
    absorb_small_cycle,
    circulant_decomposition,
    complete_hamiltonian,
    hamiltonian_decomposition,
    large_colour_gate,
    near_design,
    prime_partition,
    two_factor_decomposition,
)
from rainbow.pseudorandom import split_colours


def rainbow_kn(n, offset=0):
    return EdgeColouredGraph(n, {e: offset + i for i, e in enumerate(itertools.combinations(range(n), 2))})


def cycle_edges(cyc):
    return {tuple(sorted((cyc[i], cyc[(i + 1) % len(cyc)]))) for i in range(len(cyc))}


def test_circulant_small_cases():
    host, cycles = circulant_decomposition(3)
    assert len(cycles) == 1
    assert [host.colour(*e) for e in [(0, 1), (1, 2), (0, 2)]] == [1, 0, 2]
    host, (c1, c2) = circulant_decomposition(5)
    assert c1.edges == frozenset({(1, 2), (2, 3), (3, 4), (0, 4), (0, 1)})
    assert {host.colour(*e) for e in c1.edges} == {0, 1, 2, 3, 4}
    assert c2.edges == frozenset({(1, 3), (2, 4), (0, 3), (1, 4), (0, 2)})
    assert c1.edges | c2.edges == frozenset(host.edges())
    with pytest.raises(GraphError):
        circulant_decomposition(4)


@pytest.mark.parametrize("p", [7, 11, 13, 31])
def test_circulant_exact(p):
    host, cycles = circulant_decomposition(p)
    assert len(cycles) == (p - 1) // 2
    for c in cycles:
        assert verify(c, host, "hamiltonian_cycle").valid
    assert verify_pairwise_disjoint(cycles).valid
    assert sum(len(c.edges) for c in cycles) == host.n_edges


def test_prime_partition_single_prime():
    pp = prime_partition(35, 5, 0.1)
    assert pp.k1 == pp.k2 == 5
    assert sum(pp.sizes) == 35 and all(m % 5 == 0 for m in pp.sizes)


def test_prime_partition_two_primes():
    pp = prime_partition(210, 5, 0.5)
    assert (pp.k1, pp.k2) == (5, 7)
    assert sum(pp.sizes) == 210
    assert all(m % q == 0 for m, q in zip(pp.sizes, pp.primes))
    assert {5, 7} == set(pp.primes)


def test_prime_partition_errors():
    with pytest.raises(GraphError):
        prime_partition(3, 5, 0.5)
    with pytest.raises(GraphError):
        prime_partition(100, 8, 0.1)


def test_near_design_single_part(rng):
    d = near_design(20, 1, 5, 0.1, rng)
    assert d.s == 1
    assert d.cooccurrence(0, 1) == len(d.partitions)


def test_near_design_cooccurrence(rng):
    d = near_design(120, 4, 5, 0.1, rng, tol=0.25)
    assert d.worst_relative_gap <= 0.25
    for part in d.partitions:
        assert sorted(v for block in part for v in block) == list(range(120))
    block = np.array([[next(j for j, bl in enumerate(part) if v in bl) for v in range(120)] for part in d.partitions])
    gaps = np.array([
        abs(int((block[:, x] == block[:, y]).sum()) - d.expected_cooccurrence) / d.expected_cooccurrence
        for x in range(120) for y in range(x + 1, 120)
    ])
    assert (gaps <= 0.25).mean() >= 0.95


def test_near_design_infeasible_primes(rng):
    with pytest.raises(GraphError):
        near_design(100, 2, 8, 0.1, rng)


def test_two_factor_empty():
    assert len(two_factor_decomposition(EdgeColouredGraph(6, {}), EdgeColouredGraph(6, {}))) == 0


def test_two_factors_are_rainbow_and_long(rng):
    g = split_colouring(round_robin_kn(90), 3000, rng)
    J, G = split_colours(g, (0.4, 0.6), rng)
    fam = two_factor_decomposition(G, J, PipelineConfig(), rng, k=3)
    assert len(fam) >= 1
    for f in fam.factors:
        assert verify(f, g, "cycle_factor", min_cycle_length=3).valid
    assert verify_pairwise_disjoint(fam.factors).valid


def test_join_with_complete_reserves(rng):
    c1, c2 = [0, 1, 2, 3, 4], [5, 6, 7, 8, 9]
    E, F, G = rainbow_kn(10, 100), rainbow_kn(10, 200), rainbow_kn(10, 300)
    from rainbow.hamilton import join_two_cycles

    cycle, new = join_two_cycles(c1, c2, E, F, G, rng=rng)
    assert sorted(cycle) == list(range(10))
    assert len(new) == 3
    assert len(cycle_edges(cycle) - cycle_edges(c1) - cycle_edges(c2)) == 3


def test_join_unique_triple():
    from rainbow.hamilton import join_two_cycles

    c1, c2 = [0, 1, 2, 3, 4], [5, 6, 7, 8, 9]
    E = EdgeColouredGraph(10, {(0, 7): 100, (2, 5): 101})
    F = EdgeColouredGraph(10, {(1, 9): 200})
    G = EdgeColouredGraph(10, {(6, 8): 300})
    # exhaustive enumeration of (x0, a, b) with the G-edge between pred(a) and pred(b)
    succ1 = {c1[i]: c1[(i + 1) % 5] for i in range(5)}
    pred2 = {c2[(i + 1) % 5]: c2[i] for i in range(5)}
    admissible = [
        (x0, a, b)
        for x0 in c1 for a in E.neighbours(x0) if a in pred2
        for b in F.neighbours(succ1[x0]) if b in pred2
        if (min(pred2[a], pred2[b]), max(pred2[a], pred2[b])) in G
    ]
    assert admissible == [(0, 7, 9)]
    cycle, new = join_two_cycles(c1, c2, E, F, G)
    assert cycle == [1, 2, 3, 4, 0, 7, 8, 6, 5, 9]
    assert sorted(new) == [(0, 7), (1, 9), (6, 8)]


def test_join_empty_g_fails():
    from rainbow.hamilton import join_two_cycles

    with pytest.raises(RotationError):
        join_two_cycles([0, 1, 2], [3, 4, 5], rainbow_kn(6, 10), rainbow_kn(6, 50), EdgeColouredGraph(6, {}))


def test_absorb_with_complete_reserves(rng):
    cycles = [[0, 1, 2], [3, 4, 5, 6, 7, 8, 9, 10, 11]]
    dx = DirectedReserve.orient(rainbow_kn(12, 100), rng)
    dy = DirectedReserve.orient(rainbow_kn(12, 200), rng)
    new_cycles, new = absorb_small_cycle(cycles, 0, (0, 1), rainbow_kn(12, 300), dx, dy, rng=rng)
    assert len(new_cycles) == 1 and sorted(new_cycles[0]) == list(range(12))
    assert (0, 1) not in cycle_edges(new_cycles[0])


def test_absorb_empty_dx_fails(rng):
    cycles = [[0, 1, 2], [3, 4, 5, 6, 7, 8]]
    empty = DirectedReserve.orient(EdgeColouredGraph(9, {}), rng)
    dy = DirectedReserve.orient(rainbow_kn(9, 200), rng)
    with pytest.raises(RotationError) as info:
        absorb_small_cycle(cycles, 0, (0, 1), rainbow_kn(9, 300), empty, dy)
    assert info.value.bottleneck == "empty DX out-neighbourhood"


def test_complete_already_hamiltonian(rng):
    host = rainbow_kn(6)
    f = CycleFactor([[0, 1, 2, 3, 4, 5]])
    empty = EdgeColouredGraph(6, {})
    d = DirectedReserve.orient(empty, rng)
    res = complete_hamiltonian(f, host, empty, empty, empty, d, d, rng)
    assert res.success and res.cycle == f and res.steps == 0


def test_complete_two_cycles_k30():
    n = 30
    host = rainbow_kn(n)
    wins = 0
    for s in range(50):
        r = np.random.default_rng(s)
        perm = [int(v) for v in r.permutation(n)]
        f = CycleFactor([perm[:15], perm[15:]])
        rest = host.without_edges(f.edge_list())
        e1, e2, e3, dx, dy = split_colours(rest, (0.2,) * 5, r)
        res = complete_hamiltonian(f, host, e1, e2, e3, DirectedReserve.orient(dx, r), DirectedReserve.orient(dy, r), r)
        wins += res.success and verify(res.cycle, host, "hamiltonian_cycle").valid
    assert wins >= 45


def test_complete_rejects_shared_colours(rng):
    host = rainbow_kn(6)
    f = CycleFactor([[0, 1, 2], [3, 4, 5]])
    clash = host.edge_subgraph([(0, 1)])
    d = DirectedReserve.orient(EdgeColouredGraph(6, {}), rng)
    with pytest.raises(GraphError):
        complete_hamiltonian(f, host, clash, clash, clash, d, d, rng)


def test_pipeline_triangle():
    tri = rainbow_kn(3)
    fam = hamiltonian_decomposition(tri, 0.1)
    assert len(fam) == 1 and verify(fam.cycles[0], tri, "hamiltonian_cycle").valid


def test_gate_rejects_one_factorization():
    # a 1-factorization of K_10 has 9 colours of size 5; with eps = 0.2 only 8 may be large
    ok, big, limit = large_colour_gate(round_robin_kn(10), 0.2)
    assert not ok and big == 9 and limit == pytest.approx(8)
    with pytest.raises(GraphError):
        hamiltonian_decomposition(round_robin_kn(10), 0.2)
    # eps below 1/n lets the same colouring through
    assert large_colour_gate(round_robin_kn(10), 0.05)[0]


def test_generic_pipeline_on_circulant_31():
    with pytest.raises(GraphError):
        hamiltonian_decomposition(circulant_colouring(31), 0.1)
    fam = hamiltonian_decomposition(circulant_colouring(31), 0.1, PipelineConfig(), np.random.default_rng(0), check_gate=False)
    for c in fam.cycles:
        assert verify(c, fam.host, "hamiltonian_cycle").valid


def test_pipeline_many_colours(rng):
    g = split_colouring(round_robin_kn(90), 3000, rng)
    fam = hamiltonian_decomposition(g, 0.1, PipelineConfig(factor_k=3), np.random.default_rng(1))
    assert len(fam) >= 1
    for c in fam.cycles:
        assert verify(c, g, "hamiltonian_cycle").valid
    assert verify_pairwise_disjoint(fam.cycles).valid
