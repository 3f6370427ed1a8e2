"""Pseudorandomness checkers (regularity, typicality, boundedness) and samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .graph_core import EdgeColouredGraph, GraphError, norm

TOL = 1e-9


@dataclass
class TypicalityReport:
    gamma_achieved: float
    delta_estimate: float
    worst_vertex: int | None = None
    worst_pair: tuple[int, int] | None = None
    min_degree: int = 0
    max_degree: int = 0
    min_codegree: int | None = None
    max_codegree: int | None = None

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BoundednessReport:
    global_bound: int
    local_bound: int
    largest_colours: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _within(value: float, centre: float, gamma: float) -> bool:
    return (1 - gamma) * centre - TOL <= value <= (1 + gamma) * centre + TOL


def _relative_gap(value: float, centre: float) -> float:
    if centre == 0:
        return 0.0 if value == 0 else math.inf
    return abs(value - centre) / centre


def adjacency_matrix(graph: EdgeColouredGraph) -> np.ndarray:
    a = np.zeros((graph.n_vertices, graph.n_vertices), dtype=np.int32)
    if graph.n_edges:
        e = np.array(graph.edges(), dtype=np.int64)
        a[e[:, 0], e[:, 1]] = 1
        a[e[:, 1], e[:, 0]] = 1
    return a


def _sides(graph: EdgeColouredGraph) -> list[list[int]]:
    if graph.bipartition is None:
        return [list(graph.vertices())]
    return [sorted(graph.bipartition[0]), sorted(graph.bipartition[1])]


def check_regular(graph: EdgeColouredGraph, gamma: float, delta: float, n: int) -> tuple[bool, TypicalityReport]:
    """Every degree lies in (1 +- gamma) delta n; bipartite parts have size (1 +- gamma) n."""
    target = delta * n
    degs = graph.degrees()
    verts = [v for side in _sides(graph) for v in side]
    worst, gap = None, 0.0
    for v in verts:
        g = _relative_gap(degs[v], target)
        if worst is None or g > gap:
            worst, gap = v, g
    ok = all(_within(degs[v], target, gamma) for v in verts)
    if graph.bipartition is not None:
        for side in _sides(graph):
            if not _within(len(side), n, gamma):
                ok = False
            gap = max(gap, _relative_gap(len(side), n))
    mean = float(np.mean([degs[v] for v in verts])) if verts else 0.0
    rep = TypicalityReport(
        gamma_achieved=gap,
        delta_estimate=mean / n if n else 0.0,
        worst_vertex=worst,
        min_degree=min((degs[v] for v in verts), default=0),
        max_degree=max((degs[v] for v in verts), default=0),
    )
    return ok, rep


def check_typical(graph: EdgeColouredGraph, gamma: float, delta: float, n: int) -> tuple[bool, TypicalityReport]:
    """Regularity plus every codegree in (1 +- gamma) delta^2 n (pairs within a side when bipartite)."""
    ok, rep = check_regular(graph, gamma, delta, n)
    a = adjacency_matrix(graph)
    target = delta * delta * n
    lo = hi = None
    pair_gap = 0.0
    for side in _sides(graph):
        if len(side) < 2:
            continue
        idx = np.array(side)
        sub = a[idx]
        co = sub @ sub.T
        iu = np.triu_indices(len(side), 1)
        vals = co[iu]
        gaps = np.abs(vals - target) / target if target > 0 else np.where(vals == 0, 0.0, np.inf)
        k = int(np.argmax(gaps))
        g = float(gaps[k])
        if rep.worst_pair is None or g > pair_gap:
            rep.worst_pair = (int(idx[iu[0][k]]), int(idx[iu[1][k]]))
            pair_gap = g
        rep.gamma_achieved = max(rep.gamma_achieved, g)
        mn, mx = int(vals.min()), int(vals.max())
        lo = mn if lo is None else min(lo, mn)
        hi = mx if hi is None else max(hi, mx)
        if not (mn >= (1 - gamma) * target - TOL and mx <= (1 + gamma) * target + TOL):
            ok = False
    rep.min_codegree, rep.max_codegree = lo, hi
    return ok, rep


def boundedness(graph: EdgeColouredGraph) -> BoundednessReport:
    sizes = sorted((len(v) for v in graph.colour_classes().values()), reverse=True)
    local = 0
    for v, nb in graph.adjacency.items():
        counts: dict[int, int] = {}
        for c in nb.values():
            counts[c] = counts.get(c, 0) + 1
        if counts:
            local = max(local, max(counts.values()))
    return BoundednessReport(global_bound=sizes[0] if sizes else 0, local_bound=local, largest_colours=sizes[:20])


@dataclass
class DiscrepancyResult:
    discrepancy: float
    bound: float
    passes: bool
    skipped: bool = False
    reason: str = ""


def density_discrepancy(graph: EdgeColouredGraph, A, B, p: float, gamma: float, n: int | None = None) -> DiscrepancyResult:
    """|e(A, B) - p|A||B|| against the bound 2 |A|^(1/2) |B| gamma^(1/2) n^(1/2) p."""
    A, B = set(A), set(B)
    if n is None:
        n = len(graph.bipartition[0]) if graph.bipartition else graph.n_vertices
    if A & B:
        return DiscrepancyResult(0.0, 0.0, False, True, "A and B overlap")
    if gamma > 0 and p > 0 and len(B) < 1.0 / (gamma * p * p) - TOL:
        return DiscrepancyResult(0.0, 0.0, False, True, f"|B| = {len(B)} below 1/(gamma p^2)")
    e = sum(1 for a in A for b in graph.neighbours(a) if b in B)
    disc = abs(e - p * len(A) * len(B))
    bound = 2 * math.sqrt(len(A)) * len(B) * math.sqrt(gamma) * math.sqrt(n) * p
    return DiscrepancyResult(float(disc), bound, disc <= bound + TOL)


def _check_prob(prob: float) -> None:
    if not 0 <= prob <= 1:
        raise GraphError(f"probability {prob} outside [0, 1]")


def sample_colour_subgraph(graph: EdgeColouredGraph, prob: float, rng: np.random.Generator):
    """Keep each whole colour class independently with probability ``prob``."""
    _check_prob(prob)
    colours = graph.colours()
    keep = rng.random(len(colours)) < prob
    chosen = {c for c, k in zip(colours, keep) if k}
    return graph.with_colours(chosen), graph.without_colours(chosen)


def split_colours(graph: EdgeColouredGraph, weights, rng: np.random.Generator) -> list[EdgeColouredGraph]:
    """Assign every colour class to one of several parts with the given probabilities.

    Weights may sum to less than 1; the remaining mass means "in no part".
    """
    colours = graph.colours()
    cum = np.cumsum(np.asarray(weights, dtype=float))
    if cum[-1] > 1 + TOL:
        raise GraphError("colour split weights exceed 1")
    draws = rng.random(len(colours))
    slot = np.searchsorted(cum, draws, side="right")
    parts: list[set[int]] = [set() for _ in weights]
    for c, s in zip(colours, slot):
        if s < len(weights):
            parts[s].add(c)
    return [graph.with_colours(p) for p in parts]


def sample_edge_subgraph(graph: EdgeColouredGraph, prob: float, rng: np.random.Generator):
    """Keep each edge independently with probability ``prob``."""
    _check_prob(prob)
    edges = graph.edges()
    keep = rng.random(len(edges)) < prob
    chosen = [e for e, k in zip(edges, keep) if k]
    return graph.edge_subgraph(chosen), graph.without_edges(chosen)


@dataclass
class VertexSample:
    sets: tuple[list[int], ...]
    graph: EdgeColouredGraph


def sample_vertex_subsets(graph: EdgeColouredGraph, sizes, rng: np.random.Generator) -> VertexSample:
    """One uniform random vertex set (int size) or two disjoint ones (pair of sizes).

    A single set gives the induced subgraph G[A]; a pair gives the bipartite
    subgraph G[A, B] of edges between them.
    """
    n = graph.n_vertices
    if isinstance(sizes, int):
        if not 0 <= sizes <= n:
            raise GraphError(f"cannot sample {sizes} of {n} vertices")
        A = sorted(int(v) for v in rng.permutation(n)[:sizes])
        return VertexSample((A,), graph.restricted_to(A))
    a, b = sizes
    if a < 0 or b < 0 or a + b > n:
        raise GraphError(f"cannot sample disjoint sets of sizes {a} and {b} from {n} vertices")
    perm = rng.permutation(n)
    A = sorted(int(v) for v in perm[:a])
    B = sorted(int(v) for v in perm[a : a + b])
    sa, sb = set(A), set(B)
    col = {e: c for e, c in graph.colour_map.items() if (e[0] in sa and e[1] in sb) or (e[0] in sb and e[1] in sa)}
    bip = (A, B) if a == b else None
    return VertexSample((A, B), EdgeColouredGraph(n, col, bip, check=False))


@dataclass
class CoverReport:
    ok: bool
    exhaustive: bool
    checked: int
    worst_cover: int
    threshold: float
    worst_colours: tuple[int, ...] = ()


COVER_EXHAUSTIVE_LIMIT = 20
COVER_SAMPLES = 10_000


def colour_cover_check(
    graph: EdgeColouredGraph,
    k: int,
    eps: float,
    rng: np.random.Generator | None = None,
    n: int | None = None,
    samples: int = COVER_SAMPLES,
) -> CoverReport:
    """Does every set of k colours cover at least (1 - eps) n vertices?

    Exhaustive when there are at most 20 colours, otherwise checked on random
    k-sets (``exhaustive`` is then False in the report).
    """
    if k < 1:
        raise GraphError("k must be at least 1")
    n = graph.n_vertices if n is None else n
    threshold = (1 - eps) * n
    colours = graph.colours()
    if not colours:
        return CoverReport(threshold <= 0, True, 0, 0, threshold)
    k = min(k, len(colours))
    classes = graph.colour_classes()
    inc = np.zeros((len(colours), graph.n_vertices), dtype=bool)
    for i, c in enumerate(colours):
        for u, v in classes[c]:
            inc[i, u] = True
            inc[i, v] = True
    worst, worst_set, checked = None, (), 0
    if len(colours) <= COVER_EXHAUSTIVE_LIMIT:
        exhaustive = True
        for combo in combinations(range(len(colours)), k):
            cov = int(inc[list(combo)].any(axis=0).sum())
            checked += 1
            if worst is None or cov < worst:
                worst, worst_set = cov, combo
    else:
        exhaustive = False
        rng = rng if rng is not None else np.random.default_rng(0)
        for start in range(0, samples, 500):
            m = min(500, samples - start)
            idx = np.argsort(rng.random((m, len(colours))), axis=1)[:, :k]
            cov = inc[idx].any(axis=1).sum(axis=1)
            j = int(np.argmin(cov))
            checked += m
            if worst is None or cov[j] < worst:
                worst, worst_set = int(cov[j]), tuple(int(x) for x in idx[j])
    return CoverReport(
        worst >= threshold - TOL, exhaustive, checked, worst, threshold, tuple(colours[i] for i in worst_set)
    )


@dataclass
class Orientation:
    arcs: list[tuple[int, int]]
    min_out_degree: int
    attempts: int
    n_vertices: int

    def out_neighbours(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {v: [] for v in range(self.n_vertices)}
        for a, b in self.arcs:
            out[a].append(b)
        return out


def random_orientation(graph: EdgeColouredGraph, rng: np.random.Generator, retry_cap: int = 20) -> Orientation:
    """Orient every edge uniformly at random until min out-degree >= floor(min degree / 3)."""
    edges = graph.edges()
    target = graph.min_degree() // 3 if graph.n_edges else 0
    for attempt in range(1, retry_cap + 1):
        flips = rng.random(len(edges)) < 0.5
        arcs = [(v, u) if f else (u, v) for (u, v), f in zip(edges, flips)]
        out = np.zeros(graph.n_vertices, dtype=np.int64)
        for a, _ in arcs:
            out[a] += 1
        active = [v for v in graph.vertices() if graph.degree(v) > 0]
        mn = int(out[active].min()) if active else 0
        if mn >= target - TOL:
            return Orientation(arcs, mn, attempt, graph.n_vertices)
    raise GraphError(f"no orientation with min out-degree >= {target} in {retry_cap} attempts")


@dataclass
class CoreResult:
    graph: EdgeColouredGraph
    vertices: list[int]
    removed: list[int]
    warning: bool


def high_min_degree_core(graph: EdgeColouredGraph, eps: float, n: int | None = None) -> CoreResult:
    """Repeatedly delete vertices of degree below (1 - eps/2) n.

    ``warning`` is set when the edge-count precondition fails, in which case
    the output is only a best effort.
    """
    n = graph.n_vertices if n is None else n
    warning = graph.n_edges < (1 - (eps / 2) ** 2) * n * n / 2 - TOL
    threshold = (1 - eps / 2) * n
    alive = set(graph.vertices())
    deg = {v: graph.degree(v) for v in alive}
    removed = []
    changed = True
    while changed:
        changed = False
        for v in sorted(alive):
            if deg[v] < threshold - TOL:
                alive.discard(v)
                removed.append(v)
                for u in graph.neighbours(v):
                    if u in alive:
                        deg[u] -= 1
                changed = True
    core = graph.restricted_to(alive)
    if core.min_degree(alive) < (1 - eps) * n - TOL:
        warning = True
    return CoreResult(core, sorted(alive), removed, warning)
