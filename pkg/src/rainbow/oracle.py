"""Exhaustive baselines for small instances."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

from .graph_core import (
    CycleFactor,
    EdgeColouredGraph,
    GeneralizedLatinSquare,
    GraphError,
    RainbowMatching,
    norm,
)

MAX_MATCHING_SIDE = 8
MAX_TRANSVERSAL_SIDE = 7
MAX_PACKING_SIDE = 5
MAX_HAMILTON_VERTICES = 10


@dataclass
class OracleResult:
    optimum: int
    witnesses: list = field(default_factory=list)
    enumerated: int = 0

    def to_json(self) -> dict:
        return {
            "optimum": self.optimum,
            "enumerated": self.enumerated,
            "witnesses": [w.to_json() if hasattr(w, "to_json") else list(w) for w in self.witnesses],
        }


def max_rainbow_matching(graph: EdgeColouredGraph) -> OracleResult:
    """Largest rainbow matching and every rainbow matching of that size."""
    if graph.bipartition is not None:
        side = max(len(graph.bipartition[0]), len(graph.bipartition[1]))
    else:
        side = graph.n_vertices // 2
    if side > MAX_MATCHING_SIDE:
        raise GraphError(f"instance too large for the oracle ({side} > {MAX_MATCHING_SIDE} per side)")
    # branch over the vertices of one side (or over edges for non-bipartite hosts)
    if graph.bipartition is not None:
        left = sorted(graph.bipartition[0])
        groups = [[norm(x, y) for y in sorted(graph.neighbours(x))] for x in left]
    else:
        groups = [[e] for e in graph.edges()]
    colour = graph.colour_map
    best = 0
    witnesses: list[frozenset] = []
    count = 0

    def rec(i: int, chosen: list, used_v: set, used_c: set):
        nonlocal best, witnesses, count
        count += 1
        if len(chosen) + (len(groups) - i) < best:
            return
        if i == len(groups):
            if len(chosen) > best:
                best, witnesses = len(chosen), [frozenset(chosen)]
            elif len(chosen) == best:
                witnesses.append(frozenset(chosen))
            return
        for u, v in groups[i]:
            c = colour[(u, v)]
            if u in used_v or v in used_v or c in used_c:
                continue
            chosen.append((u, v))
            used_v.update((u, v))
            used_c.add(c)
            rec(i + 1, chosen, used_v, used_c)
            chosen.pop()
            used_v.difference_update((u, v))
            used_c.discard(c)
        rec(i + 1, chosen, used_v, used_c)

    rec(0, [], set(), set())
    uniq = sorted(set(witnesses), key=lambda s: sorted(s))
    return OracleResult(best, [RainbowMatching(w) for w in uniq], count)


def enumerate_transversals(square: GeneralizedLatinSquare) -> OracleResult:
    """All transversals, each as a tuple ``perm`` with cells (i, perm[i])."""
    n = square.n
    if n > MAX_TRANSVERSAL_SIDE:
        raise GraphError(f"square too large for the oracle ({n} > {MAX_TRANSVERSAL_SIDE})")
    found = []
    count = 0
    perm: list[int] = []
    used_cols: set[int] = set()
    used_syms: set[int] = set()

    def rec(i: int):
        nonlocal count
        count += 1
        if i == n:
            found.append(tuple(perm))
            return
        for j in range(n):
            s = square.cell[i][j]
            if j in used_cols or s in used_syms:
                continue
            perm.append(j)
            used_cols.add(j)
            used_syms.add(s)
            rec(i + 1)
            perm.pop()
            used_cols.discard(j)
            used_syms.discard(s)

    rec(0)
    return OracleResult(n if found else 0, found, count)


def transversal_to_matching(perm, n: int) -> RainbowMatching:
    return RainbowMatching((i, n + j) for i, j in enumerate(perm))


def matching_to_transversal(matching: RainbowMatching, n: int) -> tuple[int, ...]:
    cells = {}
    for u, v in matching.edges:
        x, y = (u, v) if u < n else (v, u)
        cells[x] = y - n
    return tuple(cells[i] for i in range(n))


def max_disjoint_transversals(square: GeneralizedLatinSquare) -> OracleResult:
    """Largest family of pairwise cell-disjoint transversals (branch and bound)."""
    n = square.n
    if n > MAX_PACKING_SIDE:
        raise GraphError(f"square too large for the packing oracle ({n} > {MAX_PACKING_SIDE})")
    trans = enumerate_transversals(square).witnesses
    cells = [frozenset(enumerate(t)) for t in trans]
    best: list[int] = []
    count = 0

    def rec(start: int, chosen: list[int], used: frozenset):
        nonlocal best, count
        count += 1
        if len(chosen) > len(best):
            best = list(chosen)
        if len(best) == n:
            return
        # at most (n*n - |used|) / n more transversals fit
        if len(chosen) + (n * n - len(used)) // n <= len(best):
            return
        for k in range(start, len(trans)):
            if cells[k].isdisjoint(used):
                chosen.append(k)
                rec(k + 1, chosen, used | cells[k])
                chosen.pop()

    rec(0, [], frozenset())
    return OracleResult(len(best), [trans[k] for k in best], count)


def rainbow_hamiltonian_exists(graph: EdgeColouredGraph, all_witnesses: bool = True) -> OracleResult:
    """Every rainbow Hamiltonian cycle (as vertex sequences starting at vertex 0)."""
    n = graph.n_vertices
    if n > MAX_HAMILTON_VERTICES:
        raise GraphError(f"graph too large for the oracle ({n} > {MAX_HAMILTON_VERTICES})")
    if n < 3:
        return OracleResult(0, [], 0)
    adj = graph.adjacency
    found = []
    count = 0
    path = [0]
    on_path = {0}
    used_c: set[int] = set()

    def rec():
        nonlocal count
        count += 1
        if not all_witnesses and found:
            return
        v = path[-1]
        if len(path) == n:
            c = adj[v].get(0)
            if c is not None and c not in used_c and path[1] < path[-1]:
                found.append(tuple(path))
            return
        for u, c in sorted(adj[v].items()):
            if u in on_path or c in used_c:
                continue
            path.append(u)
            on_path.add(u)
            used_c.add(c)
            rec()
            path.pop()
            on_path.discard(u)
            used_c.discard(c)

    rec()
    return OracleResult(1 if found else 0, [CycleFactor([c]) for c in found], count)


def cycle_key(cycle) -> frozenset:
    """Orientation- and rotation-free identity of a cycle: its edge set."""
    m = len(cycle)
    return frozenset(norm(cycle[i], cycle[(i + 1) % m]) for i in range(m))


def brute_force_max_rainbow_matching_size(graph: EdgeColouredGraph) -> int:
    """Independent check by enumerating permutations (bipartite hosts only)."""
    xs, ys = sorted(graph.bipartition[0]), sorted(graph.bipartition[1])
    best = 0
    for perm in permutations(ys):
        edges = [(x, y) for x, y in zip(xs, perm) if norm(x, y) in graph]
        # a largest rainbow subset keeps one edge per colour
        seen, cnt = set(), 0
        for x, y in edges:
            c = graph.colour(x, y)
            if c not in seen:
                seen.add(c)
                cnt += 1
        best = max(best, cnt)
    return best
