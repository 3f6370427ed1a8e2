import numpy as np
import pytest

from rainbow.generators import cyclic_square, generalized_square, round_robin_kn
from rainbow.graph_core import (
    CycleFactor,
    EdgeColouredGraph,
    GeneralizedLatinSquare,
    GraphError,
    RainbowForest,
    RainbowMatching,
    bipartite_to_square,
    graph_from_json,
    graph_to_json,
    read_graph_text,
    read_square_csv,
    square_to_bipartite,
    structure_from_json,
    symmetric_square_to_complete,
    verify,
    verify_pairwise_disjoint,
    write_graph_text,
    write_square_csv,
)
from rainbow.hamilton import circulant_decomposition


def test_one_by_one_square():
    g = square_to_bipartite(GeneralizedLatinSquare(((0,),)))
    assert g.n_edges == 1
    assert g.colour(0, 1) == 0


def test_z3_square_gives_three_perfect_matchings():
    g = square_to_bipartite(cyclic_square(3))
    assert g.n_edges == 9
    classes = g.colour_classes()
    assert len(classes) == 3
    for edges in classes.values():
        assert verify(RainbowMatching(edges[:1]), g).valid
        assert len({v for e in edges for v in e}) == 6


def test_two_by_two_square():
    g = square_to_bipartite(GeneralizedLatinSquare(((0, 1), (1, 0))))
    assert sorted(len(es) for es in g.colour_classes().values()) == [2, 2]
    assert g.is_proper()


def test_invalid_square_rejected():
    with pytest.raises(GraphError):
        GeneralizedLatinSquare(((0, 0), (1, 2)))
    with pytest.raises(GraphError):
        GeneralizedLatinSquare(((0, 1), (0, 2)))


def test_round_trip_z3_and_single_cell():
    assert bipartite_to_square(square_to_bipartite(cyclic_square(3))) == cyclic_square(3)
    g = EdgeColouredGraph(2, {(0, 1): 7}, ([0], [1]))
    assert bipartite_to_square(g).cell == ((7,),)


def test_incomplete_bipartite_rejected():
    g = EdgeColouredGraph(4, {(0, 2): 0, (0, 3): 1, (1, 2): 1}, ([0, 1], [2, 3]))
    with pytest.raises(GraphError):
        bipartite_to_square(g)


@pytest.mark.parametrize("seed", range(10))
def test_round_trip_random_squares(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 51))
    sq = generalized_square(n, int(rng.integers(n, n * n + 1)), rng)
    g = square_to_bipartite(sq)
    assert g.is_proper()
    assert bipartite_to_square(g) == sq


def test_symmetric_square_to_complete():
    g = symmetric_square_to_complete(cyclic_square(3))
    assert g.colour(0, 1) == 1 and g.colour(0, 2) == 2 and g.colour(1, 2) == 0
    assert symmetric_square_to_complete(GeneralizedLatinSquare(((0, 1), (1, 0)))).n_edges == 1
    with pytest.raises(GraphError):
        symmetric_square_to_complete(GeneralizedLatinSquare(((0, 1), (2, 0))))


def test_verify_examples():
    g = square_to_bipartite(cyclic_square(3))
    assert verify(RainbowMatching(), g).valid
    diag = RainbowMatching([(0, 3), (1, 4), (2, 5)])
    assert {g.colour(*e) for e in diag.edges} == {0, 2, 1}
    assert verify(diag, g, "perfect_matching").valid
    same = [e for e, c in g.colour_map.items() if c == 0][:2]
    rep = verify(RainbowMatching(same), g)
    assert "repeated colour" in rep.codes()


def test_verify_reports_foreign_edges_and_cycles():
    g = round_robin_kn(6)
    rep = verify(RainbowMatching([(0, 9)]), g)
    assert "foreign edge" in rep.codes()
    tri = RainbowForest([(0, 1), (1, 2), (0, 2)])
    assert "cycle" in verify(tri, g, "forest").codes()
    path = RainbowForest([(0, 1), (1, 2)], spanning=True)
    assert "not spanning" in verify(path, g).codes()
    short = CycleFactor([[0, 1, 2], [3, 4, 5]])
    assert verify(short, g, "cycle_factor", min_cycle_length=4).codes() >= {"short cycle"}


def test_pairwise_disjoint_examples():
    g = round_robin_kn(6)
    classes = list(g.colour_classes().values())
    assert verify_pairwise_disjoint([RainbowMatching(classes[0]), RainbowMatching(classes[1])]).valid
    m = RainbowMatching(classes[0])
    assert not verify_pairwise_disjoint([m, m]).valid
    host, cycles = circulant_decomposition(5)
    assert verify_pairwise_disjoint(cycles).valid
    assert sum(len(c.edge_list()) for c in cycles) == 10 == host.n_edges


def test_text_formats_round_trip(rng):
    sq = generalized_square(6, 20, rng)
    assert read_square_csv(write_square_csv(sq)) == sq
    g = square_to_bipartite(sq)
    assert read_graph_text(write_graph_text(g)) == g
    assert graph_from_json(graph_to_json(g)) == g
    k = round_robin_kn(7)
    assert read_graph_text(write_graph_text(k)) == k


def test_malformed_files():
    with pytest.raises(GraphError):
        read_graph_text("n 3\n0 1\n")
    with pytest.raises(GraphError):
        read_square_csv("0,1\nx,0\n")
    with pytest.raises(GraphError):
        read_graph_text("")


def test_structure_json_round_trip():
    for s in (RainbowMatching([(0, 3)]), CycleFactor([[0, 1, 2]]), RainbowForest([(0, 1)], spanning=True)):
        assert structure_from_json(s.to_json()) == s


def test_graph_rejects_loops_and_parallel_edges():
    with pytest.raises(GraphError):
        EdgeColouredGraph(3, {(1, 1): 0})
    with pytest.raises(GraphError):
        EdgeColouredGraph(3, [(0, 1, 0), (1, 0, 1)])
