"""Edge-coloured graphs, generalized Latin squares and structure verification.

Vertices and colours are dense non-negative integers.  A balanced bipartite
graph keeps its two sides as an explicit ``bipartition``; squares map row ``i``
to vertex ``i`` and column ``j`` to vertex ``n + j``.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

Edge = tuple[int, int]

# Colour ids at or above this value are dummy colours (patch edges added while
# regularizing); they never appear in emitted structures.
DUMMY_COLOUR_BASE = 1 << 40


class GraphError(ValueError):
    """Raised when a graph, square or structure violates its invariants."""


def norm(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def is_dummy(colour: int) -> bool:
    return colour >= DUMMY_COLOUR_BASE


class EdgeColouredGraph:
    """An immutable simple graph with an edge colouring.

    ``colours`` maps each edge ``(u, v)`` (any orientation) to a colour id.
    Parallel edges and loops are rejected.  If ``bipartition`` is given it must
    be a pair of disjoint equal-size vertex sets and every edge must cross it.
    """

    __slots__ = ("n_vertices", "_colour", "bipartition", "_adj", "_classes")

    def __init__(
        self,
        n_vertices: int,
        colours: Mapping[Edge, int] | Iterable[tuple[int, int, int]],
        bipartition: tuple[Iterable[int], Iterable[int]] | None = None,
        *,
        check: bool = True,
    ):
        self.n_vertices = int(n_vertices)
        items = colours.items() if isinstance(colours, Mapping) else (((u, v), c) for u, v, c in colours)
        col: dict[Edge, int] = {}
        for (u, v), c in items:
            e = norm(int(u), int(v))
            if check:
                if e[0] == e[1]:
                    raise GraphError(f"loop at vertex {e[0]}")
                if e[0] < 0 or e[1] >= self.n_vertices:
                    raise GraphError(f"edge {e} out of range for {self.n_vertices} vertices")
                if c < 0:
                    raise GraphError(f"negative colour {c} on edge {e}")
                if e in col:
                    raise GraphError(f"parallel edge {e}")
            col[e] = int(c)
        self._colour = col
        if bipartition is not None:
            xs, ys = frozenset(bipartition[0]), frozenset(bipartition[1])
            if check:
                if xs & ys:
                    raise GraphError("bipartition sides overlap")
                if len(xs) != len(ys):
                    raise GraphError("bipartition sides differ in size")
                for u, v in col:
                    if not ((u in xs and v in ys) or (u in ys and v in xs)):
                        raise GraphError(f"edge {(u, v)} does not cross the bipartition")
            bipartition = (xs, ys)
        self.bipartition = bipartition
        self._adj: dict[int, dict[int, int]] | None = None
        self._classes: dict[int, list[Edge]] | None = None

    # -- basic queries -------------------------------------------------

    def __len__(self) -> int:
        return self.n_vertices

    def __contains__(self, e: object) -> bool:
        return isinstance(e, tuple) and len(e) == 2 and norm(*e) in self._colour

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EdgeColouredGraph):
            return NotImplemented
        return (
            self.n_vertices == other.n_vertices
            and self._colour == other._colour
            and self.bipartition == other.bipartition
        )

    def __hash__(self) -> int:
        return hash((self.n_vertices, frozenset(self._colour.items())))

    def __repr__(self) -> str:
        kind = "bipartite " if self.bipartition else ""
        return f"<EdgeColouredGraph {kind}n={self.n_vertices} e={len(self._colour)} colours={len(self.colour_classes())}>"

    @property
    def n_edges(self) -> int:
        return len(self._colour)

    def edges(self) -> list[Edge]:
        """Edges in sorted order (deterministic iteration)."""
        return sorted(self._colour)

    def colour(self, u: int, v: int) -> int:
        return self._colour[norm(u, v)]

    def get_colour(self, u: int, v: int) -> int | None:
        return self._colour.get(norm(u, v))

    @property
    def colour_map(self) -> Mapping[Edge, int]:
        return self._colour

    def vertices(self) -> range:
        return range(self.n_vertices)

    @property
    def adjacency(self) -> dict[int, dict[int, int]]:
        """``adjacency[u][v]`` is the colour of ``uv``."""
        if self._adj is None:
            adj: dict[int, dict[int, int]] = {v: {} for v in range(self.n_vertices)}
            for (u, v), c in sorted(self._colour.items()):
                adj[u][v] = c
                adj[v][u] = c
            self._adj = adj
        return self._adj

    def neighbours(self, v: int) -> dict[int, int]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> list[int]:
        adj = self.adjacency
        return [len(adj[v]) for v in range(self.n_vertices)]

    def min_degree(self, vertices: Iterable[int] | None = None) -> int:
        vs = self.vertices() if vertices is None else vertices
        return min((self.degree(v) for v in vs), default=0)

    def max_degree(self) -> int:
        return max(self.degrees(), default=0)

    def colour_classes(self) -> dict[int, list[Edge]]:
        if self._classes is None:
            classes: dict[int, list[Edge]] = defaultdict(list)
            for e, c in sorted(self._colour.items()):
                classes[c].append(e)
            self._classes = dict(classes)
        return self._classes

    def colours(self) -> list[int]:
        return sorted(self.colour_classes())

    def is_proper(self) -> bool:
        for v, nb in self.adjacency.items():
            if len(set(nb.values())) != len(nb):
                return False
        return True

    def side_of(self, v: int) -> int:
        if self.bipartition is None:
            raise GraphError("graph has no bipartition")
        return 0 if v in self.bipartition[0] else 1

    # -- derived graphs ------------------------------------------------

    def edge_subgraph(self, edges: Iterable[Edge]) -> "EdgeColouredGraph":
        col = {}
        for u, v in edges:
            e = norm(u, v)
            col[e] = self._colour[e]
        return EdgeColouredGraph(self.n_vertices, col, self.bipartition, check=False)

    def without_edges(self, edges: Iterable[Edge]) -> "EdgeColouredGraph":
        drop = {norm(u, v) for u, v in edges}
        col = {e: c for e, c in self._colour.items() if e not in drop}
        return EdgeColouredGraph(self.n_vertices, col, self.bipartition, check=False)

    def with_colours(self, keep: Iterable[int]) -> "EdgeColouredGraph":
        keep = set(keep)
        col = {e: c for e, c in self._colour.items() if c in keep}
        return EdgeColouredGraph(self.n_vertices, col, self.bipartition, check=False)

    def without_colours(self, drop: Iterable[int]) -> "EdgeColouredGraph":
        drop = set(drop)
        col = {e: c for e, c in self._colour.items() if c not in drop}
        return EdgeColouredGraph(self.n_vertices, col, self.bipartition, check=False)

    def restricted_to(self, vertices: Iterable[int]) -> "EdgeColouredGraph":
        """Induced subgraph, keeping vertex ids (other vertices become isolated)."""
        vs = set(vertices)
        col = {e: c for e, c in self._colour.items() if e[0] in vs and e[1] in vs}
        bip = None
        if self.bipartition is not None:
            bip = (self.bipartition[0] & vs, self.bipartition[1] & vs)
            if len(bip[0]) != len(bip[1]):
                bip = None
        return EdgeColouredGraph(self.n_vertices, col, bip, check=False)

    def union(self, other: "EdgeColouredGraph") -> "EdgeColouredGraph":
        col = dict(self._colour)
        for e, c in other._colour.items():
            if e in col and col[e] != c:
                raise GraphError(f"edge {e} coloured differently in the two graphs")
            col[e] = c
        return EdgeColouredGraph(max(self.n_vertices, other.n_vertices), col, self.bipartition, check=False)

    def relabelled(self, mapping: Mapping[int, int], n_vertices: int, bipartition=None) -> "EdgeColouredGraph":
        col = {norm(mapping[u], mapping[v]): c for (u, v), c in self._colour.items()}
        return EdgeColouredGraph(n_vertices, col, bipartition)


# -- squares -------------------------------------------------------------


@dataclass(frozen=True)
class GeneralizedLatinSquare:
    """An ``n x n`` symbol array with no repeated symbol in a row or column."""

    cell: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(s) for s in r) for r in self.cell)
        object.__setattr__(self, "cell", rows)
        n = len(rows)
        for r in rows:
            if len(r) != n:
                raise GraphError("square is not n x n")
            if any(s < 0 for s in r):
                raise GraphError("symbols must be non-negative")
            if len(set(r)) != n:
                raise GraphError("symbol repeated within a row")
        for j in range(n):
            col = [rows[i][j] for i in range(n)]
            if len(set(col)) != n:
                raise GraphError("symbol repeated within a column")

    @classmethod
    def from_array(cls, arr) -> "GeneralizedLatinSquare":
        return cls(tuple(tuple(int(x) for x in row) for row in np.asarray(arr)))

    @property
    def n(self) -> int:
        return len(self.cell)

    def symbols(self) -> set[int]:
        return {s for row in self.cell for s in row}

    def is_symmetric(self) -> bool:
        n = self.n
        return all(self.cell[i][j] == self.cell[j][i] for i in range(n) for j in range(i + 1, n))

    def to_array(self) -> np.ndarray:
        return np.array(self.cell, dtype=np.int64).reshape(self.n, self.n)


def bipartite_sides(n: int) -> tuple[range, range]:
    return range(n), range(n, 2 * n)


def square_to_bipartite(square: GeneralizedLatinSquare) -> EdgeColouredGraph:
    """Row ``i`` becomes vertex ``i``, column ``j`` becomes vertex ``n + j``."""
    n = square.n
    col = {(i, n + j): square.cell[i][j] for i in range(n) for j in range(n)}
    return EdgeColouredGraph(2 * n, col, bipartite_sides(n))


def bipartite_to_square(graph: EdgeColouredGraph) -> GeneralizedLatinSquare:
    if graph.bipartition is None:
        raise GraphError("graph is not bipartite")
    xs, ys = sorted(graph.bipartition[0]), sorted(graph.bipartition[1])
    n = len(xs)
    if graph.n_edges != n * n:
        raise GraphError(f"graph is not complete bipartite ({graph.n_edges} of {n * n} edges)")
    cells = []
    for x in xs:
        row = []
        for y in ys:
            c = graph.get_colour(x, y)
            if c is None:
                raise GraphError(f"missing edge {(x, y)}")
            row.append(c)
        cells.append(tuple(row))
    return GeneralizedLatinSquare(tuple(cells))


def symmetric_square_to_complete(square: GeneralizedLatinSquare) -> EdgeColouredGraph:
    if not square.is_symmetric():
        raise GraphError("square is not symmetric")
    n = square.n
    col = {(i, j): square.cell[i][j] for i in range(n) for j in range(i + 1, n)}
    return EdgeColouredGraph(n, col)


# -- structures ----------------------------------------------------------


@dataclass(frozen=True)
class RainbowMatching:
    edges: frozenset[Edge] = frozenset()

    def __init__(self, edges: Iterable[Edge] = ()):
        object.__setattr__(self, "edges", frozenset(norm(u, v) for u, v in edges))

    def __len__(self) -> int:
        return len(self.edges)

    def vertices(self) -> set[int]:
        return {v for e in self.edges for v in e}

    def edge_list(self) -> list[Edge]:
        return sorted(self.edges)

    def to_json(self) -> dict:
        return {"kind": "matching", "edges": [list(e) for e in self.edge_list()]}


@dataclass(frozen=True)
class CycleFactor:
    cycles: tuple[tuple[int, ...], ...] = ()

    def __init__(self, cycles: Iterable[Sequence[int]] = ()):
        object.__setattr__(self, "cycles", tuple(tuple(int(v) for v in c) for c in cycles))

    def edge_list(self) -> list[Edge]:
        out = []
        for cyc in self.cycles:
            m = len(cyc)
            if m == 2:
                out.append(norm(cyc[0], cyc[1]))
                continue
            for i in range(m):
                out.append(norm(cyc[i], cyc[(i + 1) % m]))
        return sorted(out)

    @property
    def edges(self) -> frozenset[Edge]:
        return frozenset(self.edge_list())

    def vertices(self) -> list[int]:
        return [v for c in self.cycles for v in c]

    def to_json(self) -> dict:
        return {"kind": "cycle_factor", "cycles": [list(c) for c in self.cycles]}


@dataclass(frozen=True)
class RainbowForest:
    edges: frozenset[Edge] = frozenset()
    spanning: bool = False

    def __init__(self, edges: Iterable[Edge] = (), spanning: bool = False):
        object.__setattr__(self, "edges", frozenset(norm(u, v) for u, v in edges))
        object.__setattr__(self, "spanning", bool(spanning))

    def __len__(self) -> int:
        return len(self.edges)

    def vertices(self) -> set[int]:
        return {v for e in self.edges for v in e}

    def edge_list(self) -> list[Edge]:
        return sorted(self.edges)

    def to_json(self) -> dict:
        return {"kind": "forest", "spanning": self.spanning, "edges": [list(e) for e in self.edge_list()]}


Structure = RainbowMatching | CycleFactor | RainbowForest


def structure_from_json(obj: Mapping) -> Structure:
    kind = obj["kind"]
    if kind == "matching":
        return RainbowMatching(tuple(e) for e in obj["edges"])
    if kind == "cycle_factor":
        return CycleFactor(obj["cycles"])
    if kind == "forest":
        return RainbowForest((tuple(e) for e in obj["edges"]), obj.get("spanning", False))
    raise GraphError(f"unknown structure kind {kind!r}")


def path_to_forest(path: Sequence[int], spanning: bool = False) -> RainbowForest:
    return RainbowForest(((path[i], path[i + 1]) for i in range(len(path) - 1)), spanning)


# -- verification --------------------------------------------------------


@dataclass
class Violation:
    code: str
    detail: str

    def to_json(self) -> dict:
        return {"code": self.code, "detail": self.detail}


@dataclass
class VerificationReport:
    kind: str
    violations: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid

    def add(self, code: str, detail: str) -> None:
        self.violations.append(Violation(code, detail))

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def to_json(self) -> dict:
        return {"kind": self.kind, "valid": self.valid, "violations": [v.to_json() for v in self.violations]}


def _check_edges_rainbow(edges: Sequence[Edge], host: EdgeColouredGraph, report: VerificationReport) -> list[Edge]:
    known = []
    seen_colour: dict[int, Edge] = {}
    for e in edges:
        c = host.get_colour(*e)
        if c is None:
            report.add("foreign edge", f"{e} is not an edge of the host")
            continue
        known.append(e)
        if is_dummy(c):
            report.add("dummy colour", f"{e} carries dummy colour {c}")
        if c in seen_colour:
            report.add("repeated colour", f"{seen_colour[c]} and {e} both have colour {c}")
        else:
            seen_colour[c] = e
    return known


def _components(vertices: Iterable[int], edges: Iterable[Edge]) -> int:
    parent = {v: v for v in vertices}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = len(parent)
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            comps -= 1
    return comps


def verify(
    candidate: Structure,
    host: EdgeColouredGraph,
    kind: str | None = None,
    *,
    min_cycle_length: int = 3,
    vertices: Iterable[int] | None = None,
) -> VerificationReport:
    """Check a structure against the host and return every violated invariant.

    ``kind`` is one of ``matching``, ``perfect_matching``, ``cycle_factor``,
    ``hamiltonian_cycle``, ``forest`` and ``spanning_tree``; by default it is
    inferred from the candidate's type.  ``vertices`` restricts the vertex set
    a spanning structure must cover (default: every host vertex, or every
    non-isolated one for matchings of a bipartite host).
    """
    if kind is None:
        if isinstance(candidate, RainbowMatching):
            kind = "matching"
        elif isinstance(candidate, CycleFactor):
            kind = "cycle_factor"
        else:
            kind = "spanning_tree" if candidate.spanning else "forest"
    report = VerificationReport(kind)
    target = set(host.vertices()) if vertices is None else set(vertices)

    if kind in ("matching", "perfect_matching"):
        edges = sorted(norm(*e) for e in candidate.edges)
        known = _check_edges_rainbow(edges, host, report)
        used: dict[int, Edge] = {}
        for e in edges:
            for v in e:
                if v in used:
                    report.add("shared vertex", f"{used[v]} and {e} share vertex {v}")
                else:
                    used[v] = e
        if kind == "perfect_matching":
            missing = sorted(target - set(used))
            if missing:
                report.add("not spanning", f"{len(missing)} uncovered vertices, e.g. {missing[:5]}")
        del known
        return report

    if kind in ("cycle_factor", "hamiltonian_cycle"):
        cycles = candidate.cycles
        seen: dict[int, int] = {}
        for i, cyc in enumerate(cycles):
            if len(cyc) < max(3, min_cycle_length):
                report.add("short cycle", f"cycle {i} has length {len(cyc)}")
            for v in cyc:
                if v in seen:
                    report.add("shared vertex", f"vertex {v} in cycles {seen[v]} and {i}")
                else:
                    seen[v] = i
        edges = []
        for cyc in cycles:
            m = len(cyc)
            if m >= 2:
                edges.extend(norm(cyc[j], cyc[(j + 1) % m]) for j in range(m if m > 2 else 1))
        _check_edges_rainbow(edges, host, report)
        missing = sorted(target - set(seen))
        if missing:
            report.add("not spanning", f"{len(missing)} uncovered vertices, e.g. {missing[:5]}")
        extra = sorted(set(seen) - target)
        if extra:
            report.add("foreign vertex", f"vertices outside the target set: {extra[:5]}")
        if kind == "hamiltonian_cycle" and len(cycles) != 1:
            report.add("disconnected", f"{len(cycles)} cycles instead of one")
        return report

    if kind in ("forest", "spanning_tree"):
        edges = sorted(norm(*e) for e in candidate.edges)
        _check_edges_rainbow(edges, host, report)
        verts = {v for e in edges for v in e}
        comps = _components(verts, edges)
        if len(edges) != len(verts) - comps:
            report.add("cycle", f"{len(edges)} edges on {len(verts)} vertices in {comps} components")
        if kind == "spanning_tree":
            missing = sorted(target - verts)
            if missing:
                report.add("not spanning", f"{len(missing)} uncovered vertices, e.g. {missing[:5]}")
            if comps > 1:
                report.add("disconnected", f"{comps} components")
        return report

    raise GraphError(f"unknown structure kind {kind!r}")


def verify_pairwise_disjoint(family: Sequence[Structure]) -> VerificationReport:
    report = VerificationReport("family")
    owner: dict[Edge, int] = {}
    for i, s in enumerate(family):
        for e in sorted(s.edges):
            if e in owner:
                report.add("shared edge", f"{e} in structures {owner[e]} and {i}")
            else:
                owner[e] = i
    return report


def strip_dummy(edges: Iterable[Edge], colour_of) -> list[Edge]:
    """Drop edges whose colour (as given by ``colour_of(u, v)``) is a dummy colour."""
    return [e for e in edges if not is_dummy(colour_of(*e))]


def proper_colouring_violations(graph: EdgeColouredGraph) -> list[tuple[int, int]]:
    """Pairs (vertex, colour) where the colour appears twice at the vertex."""
    bad = []
    for v, nb in graph.adjacency.items():
        seen = set()
        for c in nb.values():
            if c in seen:
                bad.append((v, c))
            seen.add(c)
    return bad


def brute_force_valid(candidate: Structure, host: EdgeColouredGraph, kind: str) -> bool:
    """Re-derive validity from scratch over all edge pairs (small instances only)."""
    edges = sorted(norm(*e) for e in candidate.edges)
    if any(e not in host for e in edges):
        return False
    for e, f in combinations(edges, 2):
        if host.colour(*e) == host.colour(*f):
            return False
    if any(is_dummy(host.colour(*e)) for e in edges):
        return False
    if kind in ("matching", "perfect_matching"):
        for e, f in combinations(edges, 2):
            if set(e) & set(f):
                return False
        if kind == "perfect_matching":
            covered = {v for e in edges for v in e}
            return covered == set(host.vertices())
        return True
    if kind in ("forest", "spanning_tree"):
        verts = sorted({v for e in edges for v in e})
        # acyclic iff no subset of edges forms a cycle; use repeated leaf stripping
        live = list(edges)
        changed = True
        while changed and live:
            changed = False
            deg: dict[int, int] = defaultdict(int)
            for u, v in live:
                deg[u] += 1
                deg[v] += 1
            keep = [e for e in live if deg[e[0]] > 1 and deg[e[1]] > 1]
            if len(keep) != len(live):
                live = keep
                changed = True
        if live:
            return False
        if kind == "spanning_tree":
            return len(edges) == host.n_vertices - 1 and set(verts) == set(host.vertices())
        return True
    raise GraphError(f"unsupported kind {kind!r}")


# -- file formats --------------------------------------------------------


def read_square_csv(text: str) -> GeneralizedLatinSquare:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(x.strip() for x in r)]
    try:
        return GeneralizedLatinSquare(tuple(tuple(int(x) for x in r) for r in rows))
    except ValueError as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"malformed square file: {exc}") from exc


def write_square_csv(square: GeneralizedLatinSquare) -> str:
    return "".join(",".join(str(s) for s in row) + "\n" for row in square.cell)


def read_graph_text(text: str) -> EdgeColouredGraph:
    """Parse ``n <count> [bipartite]`` followed by ``u v c`` lines.

    For bipartite graphs ``count`` is the total number of vertices; the first
    half is one side and the second half the other.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphError("empty graph file")
    head = lines[0].split()
    if len(head) < 2 or head[0] != "n":
        raise GraphError(f"bad header {lines[0]!r}")
    try:
        count = int(head[1])
        triples = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 3:
                raise GraphError(f"bad edge line {ln!r}")
            triples.append(tuple(int(p) for p in parts))
    except ValueError as exc:
        raise GraphError(f"malformed graph file: {exc}") from exc
    bip = None
    if len(head) > 2:
        if head[2] != "bipartite":
            raise GraphError(f"unknown header flag {head[2]!r}")
        if count % 2:
            raise GraphError("bipartite graph needs an even vertex count")
        bip = bipartite_sides(count // 2)
    return EdgeColouredGraph(count, triples, bip)


def write_graph_text(graph: EdgeColouredGraph) -> str:
    head = f"n {graph.n_vertices}"
    if graph.bipartition is not None:
        half = graph.n_vertices // 2
        if graph.bipartition != (frozenset(range(half)), frozenset(range(half, 2 * half))):
            raise GraphError("only the first-half/second-half bipartition can be written")
        head += " bipartite"
    body = "".join(f"{u} {v} {c}\n" for (u, v), c in sorted(graph.colour_map.items()))
    return head + "\n" + body


def graph_to_json(graph: EdgeColouredGraph) -> dict:
    out = {
        "n_vertices": graph.n_vertices,
        "edges": [[u, v, c] for (u, v), c in sorted(graph.colour_map.items())],
    }
    if graph.bipartition is not None:
        out["bipartition"] = [sorted(graph.bipartition[0]), sorted(graph.bipartition[1])]
    return out


def graph_from_json(obj: Mapping) -> EdgeColouredGraph:
    bip = obj.get("bipartition")
    return EdgeColouredGraph(obj["n_vertices"], [tuple(t) for t in obj["edges"]], tuple(bip) if bip else None)


def dumps(obj) -> str:
    """Stable JSON text (sorted keys) so identical runs give identical bytes."""
    return json.dumps(obj, sort_keys=True, indent=1)


def iter_edges_of(structures: Iterable[Structure]) -> Iterator[Edge]:
    for s in structures:
        yield from sorted(s.edges)
