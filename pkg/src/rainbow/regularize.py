"""Exact regular subgraphs and supergraphs, thinning of large colours, reserves.

Regular bipartite subgraphs come from a max-flow formulation (source to X with
capacity d, unit X-Y edges, Y to sink with capacity d); when the flow is short,
the sink side of a minimum cut gives an Ore-Ryser witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching, maximum_flow

from .graph_core import EdgeColouredGraph, GraphError, norm
from .pseudorandom import boundedness

RETRY_CAP = 20


class RegularizationError(GraphError):
    """A regularization step could not be carried out; ``detail`` says why."""

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail


def _require_bipartite(graph: EdgeColouredGraph) -> tuple[list[int], list[int]]:
    if graph.bipartition is None:
        raise GraphError("operation needs a balanced bipartite graph")
    return sorted(graph.bipartition[0]), sorted(graph.bipartition[1])


# -- regular bipartite subgraph via max flow -----------------------------


@dataclass
class RegularSubgraphResult:
    graph: EdgeColouredGraph | None
    d: int
    witness: list[int] | None = None

    @property
    def feasible(self) -> bool:
        return self.graph is not None


def ore_ryser_slack(graph: EdgeColouredGraph, d: int, T) -> int:
    """sum_x min(|N(x) & T|, d) - d|T|; negative means T certifies infeasibility."""
    xs, _ = _require_bipartite(graph)
    T = set(T)
    total = 0
    for x in xs:
        total += min(sum(1 for y in graph.neighbours(x) if y in T), d)
    return total - d * len(T)


def regular_bipartite_subgraph(graph: EdgeColouredGraph, d: int) -> RegularSubgraphResult:
    """A spanning d-regular subgraph, or a witness set T in Y violating the Ore-Ryser condition."""
    xs, ys = _require_bipartite(graph)
    n = len(xs)
    if d < 0:
        raise GraphError("d must be non-negative")
    if d == 0:
        return RegularSubgraphResult(graph.edge_subgraph([]), 0)
    pos = {v: i for i, v in enumerate(xs)}
    pos.update({v: n + i for i, v in enumerate(ys)})
    src, sink = 2 * n, 2 * n + 1
    rows, cols, caps = [], [], []
    for i in range(n):
        rows.append(src)
        cols.append(i)
        caps.append(d)
        rows.append(n + i)
        cols.append(sink)
        caps.append(d)
    edges = graph.edges()
    for u, v in edges:
        a, b = (u, v) if pos[u] < n else (v, u)
        rows.append(pos[a])
        cols.append(pos[b])
        caps.append(1)
    size = 2 * n + 2
    cap = csr_matrix((np.array(caps, dtype=np.int32), (rows, cols)), shape=(size, size))
    res = maximum_flow(cap, src, sink, method="dinic")
    flow = res.flow.tocsr()
    if res.flow_value == d * n:
        chosen = []
        coo = flow.tocoo()
        for a, b, f in zip(coo.row, coo.col, coo.data):
            if f > 0 and a < n and n <= b < 2 * n:
                chosen.append((xs[a], ys[b - n]))
        return RegularSubgraphResult(graph.edge_subgraph(chosen), d)
    # residual reachability from the source
    capd = cap.toarray()
    flowd = flow.toarray()
    residual = (capd - flowd) > 0
    residual |= (flowd.T > 0)
    seen = np.zeros(size, dtype=bool)
    seen[src] = True
    stack = [src]
    while stack:
        a = stack.pop()
        for b in np.nonzero(residual[a] & ~seen)[0]:
            seen[b] = True
            stack.append(int(b))
    witness = [ys[i] for i in range(n) if not seen[n + i]]
    return RegularSubgraphResult(None, d, witness)


# -- general graphs: even-degree regular subgraphs via a b-factor gadget --


def _b_factor(graph: EdgeColouredGraph, b: dict[int, int]) -> list | None:
    """Spanning subgraph with degree b(v) at v, via Tutte's gadget and max matching."""
    gadget = nx.Graph()
    for u, v in graph.edges():
        gadget.add_edge(("o", u, v), ("o", v, u))
    for v in graph.vertices():
        nbrs = sorted(graph.neighbours(v))
        spare = len(nbrs) - b[v]
        if spare < 0:
            return None
        for i in range(spare):
            for u in nbrs:
                gadget.add_edge(("i", v, i), ("o", v, u))
    matching = nx.max_weight_matching(gadget, maxcardinality=True)
    if 2 * len(matching) != gadget.number_of_nodes():
        return None
    chosen = []
    for a, c in matching:
        if a[0] == "o" and c[0] == "o":
            chosen.append(norm(a[1], a[2]))
    return chosen


def regular_general_subgraph(graph: EdgeColouredGraph, r: int) -> EdgeColouredGraph:
    """A spanning r-regular subgraph of a dense graph (r even, within the degree bound)."""
    n = graph.n_vertices
    delta = graph.min_degree()
    if r % 2:
        raise GraphError("r must be even")
    if 2 * delta < n:
        raise GraphError(f"minimum degree {delta} is below n/2")
    limit = 0.5 * (delta + math.sqrt(n * (2 * delta - n)))
    if r > limit + 1e-9:
        raise GraphError(f"r = {r} exceeds the bound {limit:.2f}")
    chosen = _b_factor(graph, {v: r for v in graph.vertices()})
    if chosen is None:
        raise RegularizationError("b-factor gadget has no perfect matching", r=r)
    return graph.edge_subgraph(chosen)


# -- thinning large colours ----------------------------------------------


@dataclass
class ThinResult:
    graph: EdgeColouredGraph
    attempts: int
    success: bool
    large_colours: int
    bound: float
    degree_floor: float
    warning: str = ""


def thin_large_colours(
    graph: EdgeColouredGraph, eps: float, k: int, rng: np.random.Generator, n: int | None = None, retry_cap: int = RETRY_CAP
) -> ThinResult:
    """Delete each large-colour edge with probability eps + eps^2, retrying until

    the result is globally (1 - eps) n / k bounded with minimum degree at least
    (1 - eps + 18 eps^2) n.  After ``retry_cap`` failures the best attempt is
    returned with ``success`` False.
    """
    if n is None:
        n = len(graph.bipartition[0]) if graph.bipartition else graph.n_vertices
    large_size = (1 - 20 * eps) * n / k
    classes = graph.colour_classes()
    large = [c for c, es in classes.items() if len(es) >= large_size - 1e-9]
    bound = (1 - eps) * n / k
    floor = (1 - eps + 18 * eps * eps) * n
    if not large:
        ok = boundedness(graph).global_bound <= bound + 1e-9 and graph.min_degree() >= floor - 1e-9
        return ThinResult(graph, 0, ok, 0, bound, floor)
    large_edges = sorted(e for c in large for e in classes[c])
    best, best_score = None, None
    for attempt in range(1, retry_cap + 1):
        drop = rng.random(len(large_edges)) < eps + eps * eps
        out = graph.without_edges([e for e, f in zip(large_edges, drop) if f])
        gb = boundedness(out).global_bound
        md = out.min_degree()
        if gb <= bound + 1e-9 and md >= floor - 1e-9:
            return ThinResult(out, attempt, True, len(large), bound, floor)
        score = (max(0.0, gb - bound), max(0.0, floor - md))
        if best is None or score < best_score:
            best, best_score = out, score
    return ThinResult(best, retry_cap, False, len(large), bound, floor, "retry cap reached")


# -- regularization with a dense reserve ---------------------------------


def regularize_with_reserve(
    graph: EdgeColouredGraph, reserve: EdgeColouredGraph, d: int, rng: np.random.Generator | None = None
) -> tuple[EdgeColouredGraph, list]:
    """Delete edges of ``graph`` and add a reserve matching N so that H + N is d-regular.

    Edges between two surplus vertices are deleted outright.  Then repeats
    the switch: for surplus vertices x in X, y in Y find a reserve edge
    uv with u in N(x), v in N(y), both of degree d and outside N; delete xu and
    yv and put uv into N.  Raises RegularizationError naming the blocking pair.
    """
    xs, ys = _require_bipartite(graph)
    if graph.min_degree() < d:
        raise GraphError(f"minimum degree {graph.min_degree()} below target {d}")
    adj = {v: set(graph.neighbours(v)) for v in graph.vertices()}
    radj = {v: set(reserve.neighbours(v)) for v in reserve.vertices()} if reserve.n_edges else {}
    for u, v in reserve.edges():
        if norm(u, v) in graph:
            raise GraphError(f"reserve edge {(u, v)} also lies in the graph")
    deg = {v: len(adj[v]) for v in adj}
    in_n: set[int] = set()
    new_matching: list = []
    removed: list = []

    def surplus(side):
        return [v for v in side if deg[v] > d]

    # edges joining two surplus vertices can simply be deleted
    sx = surplus(xs)
    if rng is not None:
        rng.shuffle(sx)
    for x in sx:
        nbrs = sorted(adj[x])
        if rng is not None:
            rng.shuffle(nbrs)
        for y in nbrs:
            if deg[x] <= d:
                break
            if deg[y] > d:
                adj[x].discard(y)
                adj[y].discard(x)
                deg[x] -= 1
                deg[y] -= 1
                removed.append(norm(x, y))

    while True:
        sx, sy = surplus(xs), surplus(ys)
        if not sx and not sy:
            break
        if not sx or not sy:
            raise RegularizationError("unbalanced surplus", x=sx[:1], y=sy[:1])
        if rng is not None:
            rng.shuffle(sx)
            rng.shuffle(sy)
        x, y = sx[0], sy[0]
        found = None
        cand_u = sorted(u for u in adj[x] if deg[u] == d and u not in in_n)
        ny = adj[y]
        if rng is not None:
            rng.shuffle(cand_u)
        for u in cand_u:
            for v in sorted(radj.get(u, ())):
                if v in ny and deg[v] == d and v not in in_n:
                    found = (u, v)
                    break
            if found:
                break
        if found is None:
            raise RegularizationError(f"no reserve edge for surplus pair ({x}, {y})", x=x, y=y)
        u, v = found
        for a, b in ((x, u), (y, v)):
            adj[a].discard(b)
            adj[b].discard(a)
            deg[a] -= 1
            deg[b] -= 1
            removed.append(norm(a, b))
        # u and v drop to d - 1 in G but gain the matching edge
        in_n.update((u, v))
        new_matching.append(norm(u, v))
        deg[u] += 1
        deg[v] += 1
    return graph.without_edges(removed), new_matching


# -- Gale-Ryser ----------------------------------------------------------


@dataclass
class DegreeSequencePair:
    x_degrees: list[int]
    y_degrees: list[int]

    def __post_init__(self):
        self.x_degrees = [int(a) for a in self.x_degrees]
        self.y_degrees = [int(b) for b in self.y_degrees]
        if any(a < 0 for a in self.x_degrees + self.y_degrees):
            raise GraphError("degrees must be non-negative")


@dataclass
class GaleRyserResult:
    feasible: bool
    edges: list[tuple[int, int]] = field(default_factory=list)
    violated_t: int | None = None
    reason: str = ""


def gale_ryser_check(pair: DegreeSequencePair) -> tuple[bool, int | None, str]:
    """Gale-Ryser test; returns (feasible, first violated t (1-based) or None, reason)."""
    xs, ys = pair.x_degrees, pair.y_degrees
    if sum(xs) != sum(ys):
        return False, 0, f"degree sums differ ({sum(xs)} vs {sum(ys)})"
    ys_sorted = sorted(ys, reverse=True)
    lhs = 0
    for t in range(1, len(ys_sorted) + 1):
        lhs += ys_sorted[t - 1]
        rhs = sum(min(t, a) for a in xs)
        if lhs > rhs:
            return False, t, f"sum of {t} largest y-degrees {lhs} exceeds {rhs}"
    return True, None, ""


def gale_ryser_realize(pair: DegreeSequencePair) -> GaleRyserResult:
    """Realize the pair greedily (largest y-degree joins the largest x-degrees) or certify infeasibility.

    Edges are returned as (x index, y index).
    """
    ok, t, reason = gale_ryser_check(pair)
    if not ok:
        return GaleRyserResult(False, violated_t=t, reason=reason)
    rem = list(pair.x_degrees)
    edges = []
    order = sorted(range(len(pair.y_degrees)), key=lambda j: (-pair.y_degrees[j], j))
    for j in order:
        need = pair.y_degrees[j]
        if need == 0:
            continue
        best = sorted(range(len(rem)), key=lambda i: (-rem[i], i))[:need]
        if len(best) < need or rem[best[-1]] <= 0:
            raise RegularizationError("greedy realization stalled on a feasible pair", y=j)
        for i in best:
            rem[i] -= 1
            edges.append((i, j))
    return GaleRyserResult(True, sorted(edges))


# -- regularization by adding vertices -----------------------------------


@dataclass
class AddVerticesResult:
    graph: EdgeColouredGraph
    d: int
    added_per_side: int
    attempts: int
    new_x: list[int]
    new_y: list[int]


def _balanced_fill(a: int, edges: int) -> list[tuple[int, int]]:
    """``edges`` edges of K_{a,a} with all degrees differing by at most one."""
    q, r = divmod(edges, a)
    out = [(i, (i + s) % a) for s in range(q) for i in range(a)]
    out += [(i, (i + q) % a) for i in range(r)]
    return out


def regularize_add_vertices(graph: EdgeColouredGraph, gamma: float, delta: float, n: int | None = None, retry_cap: int = 5) -> AddVerticesResult:
    """Embed a nearly regular bipartite graph into a d-regular one, d = ceil((1 + 5 gamma) delta n).

    New vertices X', Y' (about m/d per side, m = dn - e(G)) get a
    near-balanced graph between them and Gale-Ryser graphs J1 (X' to Y) and
    J2 (X to Y') absorb the old vertices' deficits.  Each new edge gets its own
    fresh colour.  On Gale-Ryser failure one more vertex per side is added.
    """
    xs, ys = _require_bipartite(graph)
    n = len(xs) if n is None else n
    d = math.ceil((1 + 5 * gamma) * delta * n - 1e-9)
    if graph.max_degree() > d:
        raise GraphError(f"maximum degree {graph.max_degree()} exceeds d = {d}")
    m = d * len(xs) - graph.n_edges
    if m == 0:
        return AddVerticesResult(graph, d, 0, 1, [], [])
    a = math.ceil(m / d)
    base = graph.n_vertices
    next_colour = max(graph.colours(), default=-1) + 1
    for attempt in range(1, retry_cap + 1):
        if d * a - m > a * a:
            a += 1
            continue
        h = _balanced_fill(a, d * a - m)
        hdeg_x = [0] * a
        hdeg_y = [0] * a
        for i, j in h:
            hdeg_x[i] += 1
            hdeg_y[j] += 1
        kx = [d - hdeg_x[i] for i in range(a)]
        ky_new = [d - hdeg_y[j] for j in range(a)]
        k_old_y = [d - graph.degree(y) for y in ys]
        k_old_x = [d - graph.degree(x) for x in xs]
        j1 = gale_ryser_realize(DegreeSequencePair(kx, k_old_y))
        j2 = gale_ryser_realize(DegreeSequencePair(k_old_x, ky_new))
        if not (j1.feasible and j2.feasible):
            a += 1
            continue
        new_x = list(range(base, base + a))
        new_y = list(range(base + a, base + 2 * a))
        col = dict(graph.colour_map)
        for i, j in h:
            col[norm(new_x[i], new_y[j])] = next_colour
            next_colour += 1
        for i, j in j1.edges:
            col[norm(new_x[i], ys[j])] = next_colour
            next_colour += 1
        for i, j in j2.edges:
            col[norm(xs[i], new_y[j])] = next_colour
            next_colour += 1
        out = EdgeColouredGraph(base + 2 * a, col, (xs + new_x, ys + new_y))
        if any(out.degree(v) != d for v in out.vertices()):
            raise RegularizationError("added-vertex construction is not regular", d=d)
        return AddVerticesResult(out, d, a, attempt, new_x, new_y)
    raise RegularizationError("Gale-Ryser completion infeasible after padding retries", d=d, a=a)


# -- dense complement reserve --------------------------------------------


def one_factorization(graph: EdgeColouredGraph) -> list[list]:
    """Split a regular balanced bipartite graph into perfect matchings."""
    xs, ys = _require_bipartite(graph)
    n = len(xs)
    px = {v: i for i, v in enumerate(xs)}
    py = {v: i for i, v in enumerate(ys)}
    remaining = set(graph.edges())
    out = []
    while remaining:
        rows, cols = [], []
        for u, v in remaining:
            a, b = (u, v) if u in px else (v, u)
            rows.append(px[a])
            cols.append(py[b])
        mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
        match = maximum_bipartite_matching(mat, perm_type="column")
        if (match < 0).any():
            raise RegularizationError("graph is not regular: no perfect matching left")
        pm = [norm(xs[i], ys[int(match[i])]) for i in range(n)]
        out.append(sorted(pm))
        remaining.difference_update(pm)
    return out


@dataclass
class ReserveResult:
    graph: EdgeColouredGraph
    reserve: EdgeColouredGraph
    degree: int
    attempts: int


def reserve_dense_complement(graph: EdgeColouredGraph, p: float, rng: np.random.Generator, retry_cap: int = RETRY_CAP) -> ReserveResult:
    """A (d - floor(pn))-regular subgraph H plus a random reserve from K_{n,n} disjoint from H.

    K_{n,n} is 1-factorized so that each matching lies inside G or outside it;
    each matching joins the reserve with probability p/2.  The reserve keeps
    its 1-factorization colour ids (callers recolour reserve edges anyway).
    """
    xs, ys = _require_bipartite(graph)
    n = len(xs)
    degs = set(graph.degrees())
    if len(degs) != 1:
        raise GraphError("graph is not regular")
    d = degs.pop()
    drop = math.floor(p * n + 1e-9)
    if d < drop:
        raise GraphError(f"degree {d} is smaller than floor(pn) = {drop}")
    if p == 0:
        return ReserveResult(graph, EdgeColouredGraph(graph.n_vertices, {}, graph.bipartition), d, 1)
    inside = one_factorization(graph) if graph.n_edges else []
    comp = {norm(x, y): 0 for x in xs for y in ys if norm(x, y) not in graph}
    outside = one_factorization(EdgeColouredGraph(graph.n_vertices, comp, graph.bipartition)) if comp else []
    target = d - drop
    for attempt in range(1, retry_cap + 1):
        pick_in = rng.random(len(inside)) < p / 2
        pick_out = rng.random(len(outside)) < p / 2
        kept = [m for m, f in zip(inside, pick_in) if not f]
        if len(kept) < target:
            continue
        extra = len(kept) - target
        if extra:
            gone = set(int(i) for i in rng.choice(len(kept), size=extra, replace=False))
            kept = [m for i, m in enumerate(kept) if i not in gone]
        h_edges = [e for m in kept for e in m]
        res = {}
        classes = [m for m, f in zip(inside, pick_in) if f] + [m for m, f in zip(outside, pick_out) if f]
        for ci, m in enumerate(classes):
            for e in m:
                res[e] = ci
        H = graph.edge_subgraph(h_edges)
        reserve = EdgeColouredGraph(graph.n_vertices, res, graph.bipartition, check=False)
        return ReserveResult(H, reserve, target, attempt)
    raise RegularizationError("colour sample removed too many matchings", d=d, target=target)
