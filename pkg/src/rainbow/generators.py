"""Instance generators: 1-factorizations, generalized squares, circulant colourings."""

from __future__ import annotations

import numpy as np

from .graph_core import EdgeColouredGraph, GeneralizedLatinSquare, GraphError, bipartite_sides


def cyclic_square(n: int) -> GeneralizedLatinSquare:
    """The Cayley table of Z_n: cell (i, j) holds i + j mod n."""
    if n < 1:
        raise GraphError("n must be positive")
    return GeneralizedLatinSquare(tuple(tuple((i + j) % n for j in range(n)) for i in range(n)))


def onefactorization_knn(n: int) -> EdgeColouredGraph:
    """K_{n,n} coloured by x_i y_j -> i + j mod n; every class is a perfect matching."""
    col = {(i, n + j): (i + j) % n for i in range(n) for j in range(n)}
    return EdgeColouredGraph(2 * n, col, bipartite_sides(n))


def round_robin_kn(n: int) -> EdgeColouredGraph:
    """Round-robin proper colouring of K_n.

    For even n the classes are n - 1 perfect matchings.  For odd n we colour
    K_{n+1} and drop the extra vertex, giving n classes of size (n - 1)/2.
    """
    if n < 2:
        return EdgeColouredGraph(max(n, 0), {})
    m = n if n % 2 == 0 else n + 1
    fixed = m - 1
    col = {}
    for r in range(m - 1):
        pairs = [(r, fixed)]
        for i in range(1, m // 2):
            pairs.append(((r + i) % (m - 1), (r - i) % (m - 1)))
        for u, v in pairs:
            if u < n and v < n:
                col[(min(u, v), max(u, v))] = r
    return EdgeColouredGraph(n, col)


def circulant_colouring(n: int) -> EdgeColouredGraph:
    """K_n on Z_n with colour(ij) = i + j mod n (proper when n is odd)."""
    col = {(i, j): (i + j) % n for i in range(n) for j in range(i + 1, n)}
    return EdgeColouredGraph(n, col)


def _split_classes(classes: list[list], target: int, rng: np.random.Generator) -> dict:
    """Split colour classes into ``target`` new classes, as evenly as possible.

    Each class of size s receives r pieces (sum of r equals target, r <= s);
    its elements are shuffled and dealt into the pieces.  Returns a map from
    element to new colour id.
    """
    sizes = [len(c) for c in classes]
    total = sum(sizes)
    if target < len(classes):
        raise GraphError(f"cannot reach {target} colours: already {len(classes)} classes")
    if target > total:
        raise GraphError(f"cannot reach {target} colours with only {total} edges")
    # distribute extra pieces proportionally to class size, capped by size
    pieces = [1] * len(classes)
    extra = target - len(classes)
    order = rng.permutation(len(classes))
    while extra > 0:
        progressed = False
        for i in order:
            if extra == 0:
                break
            if pieces[i] < sizes[i]:
                pieces[i] += 1
                extra -= 1
                progressed = True
        if not progressed:
            break
    out = {}
    next_colour = 0
    for cls, r in zip(classes, pieces):
        idx = rng.permutation(len(cls))
        for k, i in enumerate(idx):
            out[cls[i]] = next_colour + (k % r)
        next_colour += r
    return out


def generalized_square(n: int, symbols: int, rng: np.random.Generator) -> GeneralizedLatinSquare:
    """A random generalized Latin square with exactly ``symbols`` symbols.

    Starts from a row/column/symbol-permuted cyclic square and splits its
    symbol classes at random.  Requires n <= symbols <= n*n.
    """
    if symbols < n:
        raise GraphError(f"a generalized square of side {n} needs at least {n} symbols")
    if symbols > n * n:
        raise GraphError(f"at most {n * n} symbols fit in a square of side {n}")
    rows = rng.permutation(n)
    cols = rng.permutation(n)
    syms = rng.permutation(n)
    base = [[int(syms[(rows[i] + cols[j]) % n]) for j in range(n)] for i in range(n)]
    classes: list[list] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            classes[base[i][j]].append((i, j))
    relabel = _split_classes(classes, symbols, rng)
    return GeneralizedLatinSquare(tuple(tuple(relabel[(i, j)] for j in range(n)) for i in range(n)))


def split_colouring(graph: EdgeColouredGraph, colours: int, rng: np.random.Generator) -> EdgeColouredGraph:
    """Refine the colouring of ``graph`` to exactly ``colours`` classes (stays proper)."""
    classes = [list(v) for _, v in sorted(graph.colour_classes().items())]
    relabel = _split_classes(classes, colours, rng)
    return EdgeColouredGraph(graph.n_vertices, {e: relabel[e] for e in graph.edges()}, graph.bipartition)


def random_bipartite(n: int, prob: float, rng: np.random.Generator) -> EdgeColouredGraph:
    """Random bipartite graph G(n, n, prob) coloured rainbow (colour = edge index)."""
    mask = rng.random((n, n)) < prob
    col = {}
    for i, j in zip(*np.nonzero(mask)):
        col[(int(i), n + int(j))] = len(col)
    return EdgeColouredGraph(2 * n, col, bipartite_sides(n))


GENERATOR_KINDS = ("onefactorization-knn", "onefactorization-kn", "generalized-square", "circulant")
