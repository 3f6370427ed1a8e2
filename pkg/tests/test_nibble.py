import numpy as np
import pytest

from rainbow.generators import onefactorization_knn, random_bipartite
from rainbow.graph_core import EdgeColouredGraph, GraphError, verify
from rainbow.nibble import EdgeArrays, NibbleConfig, edge_assignment_round, near_perfect_rainbow_matching


def test_alpha_zero_changes_nothing(rng):
    g = onefactorization_knn(8)
    out = edge_assignment_round(g, 0.0, 8, rng)
    assert len(out.matching) == 0
    assert out.survivor == g


def test_full_size_colours_are_never_killed():
    # with b = |E(c)| nothing is killed: a colour either vanishes (it was chosen)
    # or keeps every edge that avoids the matched vertices
    g = onefactorization_knn(30)
    for s in range(50):
        out = edge_assignment_round(g, 0.3, 30, np.random.default_rng(s))
        matched = out.matching.vertices()
        survivors = out.survivor.colour_classes()
        for c, edges in g.colour_classes().items():
            free = {e for e in edges if not set(e) & matched}
            assert set(survivors.get(c, ())) in (set(), free)


def test_bad_bound_is_rejected_in_strict_mode(rng):
    with pytest.raises(GraphError):
        edge_assignment_round(onefactorization_knn(6), 0.5, 2, rng)


def test_round_keeps_expected_share():
    n, alpha = 64, 0.1
    g = onefactorization_knn(n)
    arr_fracs = []
    for s in range(500):
        out = edge_assignment_round(g, alpha, n, np.random.default_rng(s))
        arr_fracs.append(len(out.survivor.bipartition[0]) / n)
    mean = float(np.mean(arr_fracs))
    assert (1 - alpha) * 0.95 <= mean <= (1 - alpha) * 1.05


def test_single_edge():
    g = EdgeColouredGraph(2, {(0, 1): 0}, ([0], [1]))
    res = near_perfect_rainbow_matching(g, NibbleConfig(alpha=1.0, T=1), np.random.default_rng(0))
    assert len(res.matching) == 1


def test_structure_and_conservation(rng):
    g = onefactorization_knn(64)
    res = near_perfect_rainbow_matching(g, NibbleConfig(alpha=0.05, p=0.1), rng)
    assert verify(res.matching, g, "matching").valid
    assert res.conservation_holds(128)
    assert res.rounds_run == NibbleConfig(alpha=0.05, p=0.1).rounds() == 47
    edges = [t.edges for t in res.trajectory]
    assert edges == sorted(edges, reverse=True)
    assert sum(t.matching_size for t in res.trajectory) == len(res.matching)


def test_deterministic_for_fixed_seed():
    g = onefactorization_knn(32)
    a = near_perfect_rainbow_matching(g, NibbleConfig(seed=7))
    b = near_perfect_rainbow_matching(g, NibbleConfig(seed=7))
    assert a.matching == b.matching
    assert np.array_equal(a.edge_index, b.edge_index)


def test_edge_index_matches_matching(rng):
    g = onefactorization_knn(16)
    arr = EdgeArrays.from_graph(g)
    res = near_perfect_rainbow_matching(arr, NibbleConfig(), rng)
    assert set(arr.edge_pairs(res.edge_index)) == set(res.matching.edges)


@pytest.mark.parametrize("mode", ["schedule", "max-class", "mean-degree"])
def test_bound_modes_all_valid(mode, rng):
    g = random_bipartite(40, 0.6, rng)
    res = near_perfect_rainbow_matching(g, NibbleConfig(b_mode=mode), rng)
    assert verify(res.matching, g, "matching").valid
    assert res.conservation_holds(80)


def test_stop_on_violation_halts_early(rng):
    g = random_bipartite(40, 0.3, rng)
    res = near_perfect_rainbow_matching(g, NibbleConfig(gamma=0.0, stop_on_violation=True), rng)
    assert res.stopped_early and res.rounds_run < NibbleConfig().rounds()
    assert verify(res.matching, g, "matching").valid


def test_unknown_mode_and_non_bipartite():
    with pytest.raises(GraphError):
        near_perfect_rainbow_matching(onefactorization_knn(4), NibbleConfig(b_mode="nope"))
    with pytest.raises(GraphError):
        EdgeArrays.from_graph(EdgeColouredGraph(3, {(0, 1): 0}))
