import itertools

import numpy as np
import pytest

from rainbow.generators import circulant_colouring, cyclic_square, generalized_square, random_bipartite
from rainbow.graph_core import EdgeColouredGraph, GeneralizedLatinSquare, GraphError, square_to_bipartite, verify
from rainbow.oracle import (
    brute_force_max_rainbow_matching_size,
    cycle_key,
    enumerate_transversals,
    matching_to_transversal,
    max_disjoint_transversals,
    max_rainbow_matching,
    rainbow_hamiltonian_exists,
    transversal_to_matching,
)


def test_max_rainbow_matching_examples():
    assert max_rainbow_matching(square_to_bipartite(cyclic_square(2))).optimum == 1
    assert max_rainbow_matching(square_to_bipartite(cyclic_square(3))).optimum == 3
    rainbow = square_to_bipartite(GeneralizedLatinSquare(((0, 1), (2, 3))))
    assert max_rainbow_matching(rainbow).optimum == 2


def test_max_rainbow_matching_witnesses_are_valid():
    g = square_to_bipartite(cyclic_square(3))
    res = max_rainbow_matching(g)
    assert res.witnesses
    for w in res.witnesses:
        assert verify(w, g, "matching").valid and len(w) == 3


@pytest.mark.parametrize("seed", range(15))
def test_max_rainbow_matching_against_permutations(seed):
    rng = np.random.default_rng(seed)
    g = random_bipartite(int(rng.integers(2, 6)), 0.7, rng)
    classes = list(g.colour_classes().values())
    # merge colours to create conflicts
    recol = {e: i % 4 for i, es in enumerate(classes) for e in es}
    g = EdgeColouredGraph(g.n_vertices, recol, g.bipartition, check=False)
    assert max_rainbow_matching(g).optimum == brute_force_max_rainbow_matching_size(g)


def test_enumerate_transversals_examples():
    assert enumerate_transversals(cyclic_square(3)).optimum == 3
    assert enumerate_transversals(cyclic_square(2)).optimum == 0
    assert enumerate_transversals(GeneralizedLatinSquare(((5,),))).optimum == 1


def test_enumerate_transversals_matches_permutations(rng):
    for _ in range(30):
        n = int(rng.integers(1, 6))
        sq = generalized_square(n, int(rng.integers(n, n * n + 1)), rng)
        cells = sq.cell
        expect = {p for p in itertools.permutations(range(n)) if len({cells[i][p[i]] for i in range(n)}) == n}
        assert {tuple(w) for w in enumerate_transversals(sq).witnesses} == expect


def test_max_disjoint_examples():
    assert max_disjoint_transversals(cyclic_square(3)).optimum == 3
    assert max_disjoint_transversals(cyclic_square(2)).optimum == 0
    assert max_disjoint_transversals(GeneralizedLatinSquare(((0,),))).optimum == 1


def test_max_disjoint_z4_and_z5():
    # cyclic squares of even order have no transversal at all
    assert max_disjoint_transversals(cyclic_square(4)).optimum == 0
    assert max_disjoint_transversals(cyclic_square(5)).optimum == 5


def test_transversal_matching_round_trip():
    m = transversal_to_matching((2, 0, 1), 3)
    assert matching_to_transversal(m, 3) == (2, 0, 1)


def test_rainbow_hamiltonian_examples():
    res = rainbow_hamiltonian_exists(circulant_colouring(5))
    assert res.optimum == 1
    keys = {cycle_key(w.cycles[0]) for w in res.witnesses}
    assert cycle_key([1, 2, 3, 4, 0]) in keys and cycle_key([1, 3, 0, 2, 4]) in keys
    path = EdgeColouredGraph(4, {(0, 1): 0, (1, 2): 1, (2, 3): 2})
    assert rainbow_hamiltonian_exists(path).optimum == 0
    triangle = EdgeColouredGraph(3, {(0, 1): 0, (1, 2): 1, (0, 2): 2})
    assert rainbow_hamiltonian_exists(triangle).optimum == 1


def test_oracle_size_limits():
    with pytest.raises(GraphError):
        rainbow_hamiltonian_exists(circulant_colouring(41))
