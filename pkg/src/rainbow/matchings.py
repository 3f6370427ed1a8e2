"""Near-decompositions into rainbow matchings, completion to perfect ones, transversal pipelines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .config import PipelineConfig
from .graph_core import (
    DUMMY_COLOUR_BASE,
    EdgeColouredGraph,
    GeneralizedLatinSquare,
    GraphError,
    RainbowMatching,
    is_dummy,
    norm,
    square_to_bipartite,
    verify,
    verify_pairwise_disjoint,
)
from .nibble import EdgeArrays, near_perfect_rainbow_matching
from .pseudorandom import boundedness, sample_colour_subgraph, split_colours
from .regularize import (
    RegularizationError,
    regular_bipartite_subgraph,
    regularize_with_reserve,
    reserve_dense_complement,
    thin_large_colours,
)


@dataclass
class MatchingFamily:
    matchings: list[RainbowMatching]
    host: EdgeColouredGraph | None = None
    dummy_colours_used: set[int] = field(default_factory=set)
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.matchings)

    def sizes(self) -> list[int]:
        return [len(m) for m in self.matchings]


def _sides(graph: EdgeColouredGraph) -> tuple[list[int], list[int]]:
    if graph.bipartition is None:
        raise GraphError("a balanced bipartite graph is required")
    return sorted(graph.bipartition[0]), sorted(graph.bipartition[1])


# -- near-decomposition with dummy colours -------------------------------


def _regular_start(graph: EdgeColouredGraph) -> EdgeColouredGraph:
    """The graph itself if regular, else a regular spanning subgraph of largest degree."""
    degs = graph.degrees()
    if len(set(degs)) <= 1:
        return graph
    for d in range(min(degs), -1, -1):
        res = regular_bipartite_subgraph(graph, d)
        if res.feasible:
            return res.graph
    return graph.edge_subgraph([])


def _greedy_extend(graph: EdgeColouredGraph, edges: list, rng: np.random.Generator) -> list:
    """Add edges of ``graph`` in random order while the matching stays rainbow."""
    covered = {v for e in edges for v in e}
    used = {graph.colour(*e) for e in edges}
    out = list(edges)
    cand = graph.edges()
    for i in rng.permutation(len(cand)):
        u, v = cand[i]
        c = graph.colour(u, v)
        if u in covered or v in covered or c in used:
            continue
        out.append((u, v))
        covered.update((u, v))
        used.add(c)
    return out


def _irregular_descent(graph: EdgeColouredGraph, config: PipelineConfig, rng: np.random.Generator, diag: dict) -> MatchingFamily:
    """Repeated nibble matchings of what is left, without regularization.

    Stops once a matching covers fewer than half of one side.
    """
    n = len(graph.bipartition[0])
    diag["irregular"] = True
    colour = dict(graph.colour_map)
    matchings: list[RainbowMatching] = []
    while colour:
        current = EdgeColouredGraph(graph.n_vertices, colour, graph.bipartition, check=False)
        result = near_perfect_rainbow_matching(EdgeArrays.from_graph(current), config.nibble(), rng)
        m_edges = _greedy_extend(current, result.matching.edge_list(), rng) if config.greedy_finish else result.matching.edge_list()
        if len(m_edges) < 0.5 * n:
            diag["stopped"] = f"matching of size {len(m_edges)} below n/2"
            break
        for e in m_edges:
            del colour[e]
        matchings.append(RainbowMatching(m_edges))
    diag["steps"] = len(matchings)
    return MatchingFamily(matchings, graph, set(), diag)


def near_matching_decomposition(graph: EdgeColouredGraph, config: PipelineConfig | None = None, rng: np.random.Generator | None = None) -> MatchingFamily:
    """Edge-disjoint rainbow matchings from the descending process.

    Start from a D-regular graph G_D with a dense reserve from its complement.
    For d = D, D-1, ... while d > nu D: M_d is a nibble matching of G_d and
    G_{d-1} = G_d - M_d; when k divides d the graph is made (d-1)-regular again
    with a reserve matching that receives a fresh dummy colour.  Dummy edges
    are stripped from the emitted matchings.
    """
    config = config or PipelineConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    diag: dict = {"stopped": None, "bound_violations": 0, "regularizations": 0, "patch_edges": 0}
    if graph.n_edges == 0:
        return MatchingFamily([], graph, set(), diag)
    xs, ys = _sides(graph)
    n = len(xs)
    start = _regular_start(graph)
    if start.n_edges < 0.5 * graph.n_edges:
        # too irregular for the regular start to keep most edges: peel matchings off directly
        return _irregular_descent(graph, config, rng, diag)
    res = reserve_dense_complement(start, config.reserve_p, rng, config.retry_cap)
    g = res.graph
    reserve = res.reserve
    D = res.degree
    diag["D"] = D
    diag["reserve_edges"] = reserve.n_edges
    colour = dict(g.colour_map)
    dummy: set[int] = set()
    matchings: list[RainbowMatching] = []
    d = D
    floor = config.nu * D
    while d > floor and d > 0:
        current = EdgeColouredGraph(graph.n_vertices, colour, graph.bipartition, check=False)
        real = [c for c in current.colour_classes() if not is_dummy(c)]
        gb = max((len(current.colour_classes()[c]) for c in real), default=0)
        if gb > d:
            diag["bound_violations"] += 1
            if config.stop_on_violation:
                diag["stopped"] = f"not globally {d}-bounded (largest colour {gb})"
                break
        result = near_perfect_rainbow_matching(EdgeArrays.from_graph(current), config.nibble(), rng)
        m_edges = _greedy_extend(current, result.matching.edge_list(), rng) if config.greedy_finish else result.matching.edge_list()
        for e in m_edges:
            del colour[e]
        matchings.append(RainbowMatching(e for e in m_edges if not is_dummy(current.colour(*e))))
        if d % config.k == 0 and d - 1 > 0:
            after = EdgeColouredGraph(graph.n_vertices, colour, graph.bipartition, check=False)
            try:
                h, patch = regularize_with_reserve(after, reserve, d - 1, rng)
            except RegularizationError as exc:
                # the reserve is exhausted: fall back to the largest flow-based regular subgraph
                # of degree at most d - 1 (dropping at most k further degrees)
                h = None
                for target in range(d - 1, max(d - 1 - config.k, 0), -1):
                    sub = regular_bipartite_subgraph(after, target)
                    if sub.feasible:
                        h = sub.graph
                        break
                if h is None:
                    diag["stopped"] = f"regularization failed at d={d - 1}: {exc}"
                    break
                patch = []
                d = target + 1
                diag["fallback_regularizations"] = diag.get("fallback_regularizations", 0) + 1
            c_d = DUMMY_COLOUR_BASE + len(dummy)
            if patch:
                dummy.add(c_d)
            colour = dict(h.colour_map)
            for e in patch:
                colour[e] = c_d
            reserve = reserve.without_edges(patch)
            diag["regularizations"] += 1
            diag["patch_edges"] += len(patch)
        d -= 1
    diag["steps"] = len(matchings)
    return MatchingFamily(matchings, graph, dummy, diag)


# -- spread out ------------------------------------------------------------


def _potential(deg: dict[int, int], edges: int, target: float) -> float:
    f = 0.5 * sum(max(target - d, 0.0) for d in deg.values())
    return edges - 4 * f


def spread_out(graph: EdgeColouredGraph, family: MatchingFamily | list, p: float, rng: np.random.Generator | None = None, iteration_cap: int | None = None) -> MatchingFamily:
    """Local search raising min degree of the union of the matchings, then drop the pt smallest.

    Maximizes e(H) - 4 f(H) where f(H) = 1/2 sum_v max((1 - 100p) t - d_H(v), 0)
    with the exchange move: for a deficient u and a matching N_i missing u, add
    an edge uy of G - H avoiding the edges of N_i at low-degree vertices U
    (and their colours), dropping the edges of N_i that clash with uy.
    """
    mats = list(family.matchings if isinstance(family, MatchingFamily) else family)
    t = len(mats)
    diag = {"moves": 0, "capped": False, "discarded": 0}
    if t == 0:
        return MatchingFamily([], graph, set(), diag)
    rng = rng if rng is not None else np.random.default_rng(0)
    target = (1 - 100 * p) * t
    low = (1 - 10 * p) * t
    sets = [set(m.edges) for m in mats]
    owner: dict = {}
    for i, s in enumerate(sets):
        for e in s:
            owner[e] = i
    deg = {v: 0 for v in graph.vertices()}
    for e in owner:
        deg[e[0]] += 1
        deg[e[1]] += 1
    # per matching: vertex -> edge, colour -> edge
    at = [{v: e for e in s for v in e} for s in sets]
    col = [{graph.colour(*e): e for e in s} for s in sets]
    cap = iteration_cap if iteration_cap is not None else 10 * t * max(graph.n_vertices // 2, 1)
    phi = _potential(deg, len(owner), target)
    iters = 0
    improved = True
    while improved and target > 0:
        improved = False
        deficient = sorted(v for v in graph.vertices() if deg[v] < target and graph.degree(v) > deg[v])
        rng.shuffle(deficient)
        U = {v for v in graph.vertices() if deg[v] <= low}
        for u in deficient:
            iters += 1
            if iters > cap:
                diag["capped"] = True
                break
            missing = [i for i in range(t) if u not in at[i]]
            rng.shuffle(missing)
            done = False
            for i in missing:
                touch_u = [e for e in sets[i] if e[0] in U or e[1] in U]
                bad_v = {v for e in touch_u for v in e}
                bad_c = {graph.colour(*e) for e in touch_u}
                cands = [y for y in sorted(graph.neighbours(u)) if norm(u, y) not in owner and y not in bad_v and graph.colour(u, y) not in bad_c]
                rng.shuffle(cands)
                for y in cands:
                    c = graph.colour(u, y)
                    F = {e for e in (at[i].get(y), col[i].get(c)) if e is not None}
                    new_deg = dict((v, deg[v]) for e in F for v in e)
                    for e in F:
                        for v in e:
                            new_deg[v] -= 1
                    new_deg[u] = new_deg.get(u, deg[u]) + 1
                    new_deg[y] = new_deg.get(y, deg[y]) + 1
                    trial = dict(deg)
                    trial.update(new_deg)
                    new_phi = _potential(trial, len(owner) + 1 - len(F), target)
                    if new_phi <= phi:
                        continue
                    for e in F:
                        sets[i].discard(e)
                        del owner[e]
                        for v in e:
                            del at[i][v]
                        del col[i][graph.colour(*e)]
                    e = norm(u, y)
                    sets[i].add(e)
                    owner[e] = i
                    at[i][u] = e
                    at[i][y] = e
                    col[i][c] = e
                    deg = trial
                    phi = new_phi
                    diag["moves"] += 1
                    done = improved = True
                    break
                if done:
                    break
        if diag["capped"]:
            break
    order = sorted(range(t), key=lambda i: (len(sets[i]), i))
    drop = set(order[: math.floor(p * t + 1e-9)])
    diag["discarded"] = len(drop)
    diag["potential"] = phi
    kept = [RainbowMatching(sets[i]) for i in range(t) if i not in drop]
    dummy = family.dummy_colours_used if isinstance(family, MatchingFamily) else set()
    return MatchingFamily(kept, graph, set(dummy), diag)


def union_min_degree(graph: EdgeColouredGraph, matchings) -> int:
    deg = {v: 0 for v in graph.vertices()}
    for m in matchings:
        for u, v in m.edges:
            deg[u] += 1
            deg[v] += 1
    return min(deg.values(), default=0)


# -- completion by rotation ----------------------------------------------


class ExtensionError(GraphError):
    def __init__(self, message: str, bottleneck: str):
        super().__init__(message)
        self.bottleneck = bottleneck


def _usable(reserve: EdgeColouredGraph, v: int, banned_colours, banned_edges) -> list[int]:
    out = []
    for w, c in reserve.neighbours(v).items():
        if c in banned_colours or (banned_edges and norm(v, w) in banned_edges):
            continue
        out.append(w)
    return sorted(out)


def extend_matching_once(
    matching: RainbowMatching,
    reserve_e: EdgeColouredGraph,
    reserve_dx: EdgeColouredGraph,
    reserve_dy: EdgeColouredGraph,
    x: int,
    y: int,
    rng: np.random.Generator | None = None,
    banned_colours=frozenset(),
    banned_edges=frozenset(),
) -> RainbowMatching:
    """Grow the matching by one edge with a rotation through the reserves.

    With sigma the partner map of M: look for u in sigma(N_DX(x)), v in
    sigma(N_DY(y)) with uv in E and return M + x m_u + uv + y m_v - u m_u - v m_v
    (m_u = sigma(u), m_v = sigma(v)).  Reserve edges with a banned colour or
    in ``banned_edges`` are ignored.
    """
    partner = {}
    for a, b in matching.edges:
        partner[a] = b
        partner[b] = a
    if x in partner or y in partner:
        raise GraphError("x and y must be uncovered")
    nx_ = [w for w in _usable(reserve_dx, x, banned_colours, banned_edges) if w in partner]
    ny_ = [w for w in _usable(reserve_dy, y, banned_colours, banned_edges) if w in partner]
    if not nx_:
        raise ExtensionError(f"no usable reserve edge from {x} into the matching", "empty DX neighbourhood")
    if not ny_:
        raise ExtensionError(f"no usable reserve edge from {y} into the matching", "empty DY neighbourhood")
    us = [partner[w] for w in nx_]
    vs = {partner[w] for w in ny_}
    if rng is not None:
        rng.shuffle(us)
    for u in us:
        for v in _usable(reserve_e, u, banned_colours, banned_edges):
            if v in vs:
                m_u, m_v = partner[u], partner[v]
                if m_u == v:
                    continue
                # with shared reserves the three new colours must also differ from each other
                cs = {reserve_dx.colour(x, m_u), reserve_e.colour(u, v), reserve_dy.colour(y, m_v)}
                if len(cs) < 3:
                    continue
                edges = set(matching.edges)
                edges -= {norm(u, m_u), norm(v, m_v)}
                edges |= {norm(x, m_u), norm(u, v), norm(y, m_v)}
                return RainbowMatching(edges)
    raise ExtensionError(f"no reserve edge joins the rotation sets of ({x}, {y})", "no E-edge")


@dataclass
class CompletionResult:
    matching: RainbowMatching
    success: bool
    rounds: int
    failed_round: int | None = None
    bottleneck: str = ""
    reserve_use: dict = field(default_factory=dict)


def _colour_lookup(*graphs: EdgeColouredGraph):
    def colour_of(u, v):
        for g in graphs:
            c = g.get_colour(u, v)
            if c is not None:
                return c
        raise GraphError(f"edge {(u, v)} is in none of the graphs")

    return colour_of


def complete_matching(
    matching: RainbowMatching,
    host: EdgeColouredGraph,
    reserve_e: EdgeColouredGraph,
    reserve_dx: EdgeColouredGraph,
    reserve_dy: EdgeColouredGraph,
    rng: np.random.Generator | None = None,
    banned_edges=frozenset(),
    check: bool = True,
) -> CompletionResult:
    """Extend a near-perfect rainbow matching to a perfect one, one rotation at a time.

    Before every rotation the reserves lose the colours already on the
    matching.  ``host`` supplies the colours of the matching's own edges and
    the bipartition.
    """
    xs, ys = _sides(host)
    colour_of = _colour_lookup(host, reserve_e, reserve_dx, reserve_dy)
    start_colours = {colour_of(*e) for e in matching.edges}
    if check:
        ce, cx, cy = set(reserve_e.colours()), set(reserve_dx.colours()), set(reserve_dy.colours())
        if (ce | cx | cy) & start_colours:
            raise GraphError("reserves share a colour with the matching")
        if ce & cx or ce & cy or cx & cy:
            raise GraphError("reserves are not colour-disjoint")
    current = matching
    rounds = 0
    use = {"E": 0, "DX": 0, "DY": 0}
    while True:
        covered = current.vertices()
        free_x = [v for v in xs if v not in covered]
        free_y = [v for v in ys if v not in covered]
        if not free_x:
            break
        if rng is not None:
            free_x = [free_x[i] for i in rng.permutation(len(free_x))]
            free_y = [free_y[i] for i in rng.permutation(len(free_y))]
        used = {colour_of(*e) for e in current.edges}
        # any uncovered pair may be used; try them in turn before giving up
        nxt, bottleneck = None, ""
        for x in free_x:
            for y in free_y:
                try:
                    nxt = extend_matching_once(current, reserve_e, reserve_dx, reserve_dy, x, y, rng, used, banned_edges)
                    break
                except ExtensionError as exc:
                    bottleneck = exc.bottleneck
            if nxt is not None:
                break
        if nxt is None:
            return CompletionResult(current, False, rounds, rounds, bottleneck, use)
        for e in nxt.edges - current.edges:
            if e in reserve_e:
                use["E"] += 1
            elif e in reserve_dx:
                use["DX"] += 1
            elif e in reserve_dy:
                use["DY"] += 1
        current = nxt
        rounds += 1
    return CompletionResult(current, True, rounds, None, "", use)


# -- perfect matching decomposition --------------------------------------


def perfect_matching_decomposition(
    G: EdgeColouredGraph, H: EdgeColouredGraph, config: PipelineConfig | None = None, rng: np.random.Generator | None = None
) -> MatchingFamily:
    """Edge-disjoint perfect rainbow matchings of G + H.

    Near-decompose G, spread the matchings out, split H's colours into the
    reserves E, DX, DY and complete each matching; reserve edges used by
    earlier completed matchings are unavailable to later ones.  Matchings
    whose completion fails are skipped and counted.
    """
    config = config or PipelineConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    if set(G.colours()) & set(H.colours()):
        raise GraphError("G and H must be colour-disjoint")
    near = near_matching_decomposition(G, config, rng)
    spread = spread_out(G, near, config.spread_p, rng)
    if config.reserve_mode == "shared":
        re = rdx = rdy = H
    else:
        re, rdx, rdy = split_colours(H, (config.reserve_e, config.reserve_dx, config.reserve_dy), rng)
    used_edges: set = set()
    out: list[RainbowMatching] = []
    failures = []
    for i, m in enumerate(spread.matchings):
        res = complete_matching(m, G, re, rdx, rdy, rng, used_edges, check=False)
        if not res.success:
            failures.append({"index": i, "round": res.failed_round, "bottleneck": res.bottleneck})
            continue
        new = res.matching
        used_edges |= {e for e in new.edges if e not in G}
        out.append(new)
    diag = {
        "near": near.diagnostics,
        "spread": spread.diagnostics,
        "near_count": len(near),
        "near_sizes": near.sizes(),
        "completed": len(out),
        "failures": failures,
    }
    return MatchingFamily(out, G.union(H) if H.n_edges else G, set(near.dummy_colours_used), diag)


# -- gates and the transversal pipeline ----------------------------------


@dataclass
class GateResult:
    passes: bool
    colours: int
    large_colours: int
    threshold: float
    detail: str = ""
    implication_holds: bool | None = None


def many_colours_gate(colouring: EdgeColouredGraph, eps: float) -> GateResult:
    """At least 2 eps n^2 colours; then at most (1 - eps) n colours have >= (1 - eps) n edges."""
    n = len(colouring.bipartition[0]) if colouring.bipartition else colouring.n_vertices
    classes = colouring.colour_classes()
    big = sum(1 for es in classes.values() if len(es) >= (1 - eps) * n - 1e-9)
    passes = len(classes) >= 2 * eps * n * n - 1e-9
    implication = None
    if passes:
        implication = big <= (1 - eps) * n + 1e-9
    return GateResult(passes, len(classes), big, 2 * eps * n * n, "", implication)


def few_large_colours_gate(colouring: EdgeColouredGraph, eps: float, k: int = 1) -> GateResult:
    """At most (1 - 20 eps) n colours have at least (1 - 20 eps) n / k edges."""
    n = len(colouring.bipartition[0]) if colouring.bipartition else colouring.n_vertices
    size = (1 - 20 * eps) * n / k
    classes = colouring.colour_classes()
    big = sum(1 for es in classes.values() if len(es) >= size - 1e-9)
    limit = (1 - 20 * eps) * n
    ok = big <= limit + 1e-9
    return GateResult(ok, len(classes), big, limit, "" if ok else f"{big} colours of size >= {size:.1f}, allowed {limit:.1f}")


class HypothesisError(GraphError):
    """The input violates a pipeline's colour-census hypothesis."""

    def __init__(self, message: str, gate: GateResult):
        super().__init__(message)
        self.gate = gate


def knn_transversal_pipeline(
    source: GeneralizedLatinSquare | EdgeColouredGraph, eps: float | None = None, config: PipelineConfig | None = None,
    rng: np.random.Generator | None = None, check_gate: bool = True,
) -> MatchingFamily:
    """Pairwise disjoint transversals (perfect rainbow matchings of the K_{n,n} colouring).

    Gate on the few-large-colours hypothesis, sample a colour-disjoint reserve
    J, thin large colours of the rest, take a regular spanning subgraph and run
    the perfect matching decomposition on it with J as the completion reserve.
    With ``check_gate`` off a failing census is recorded instead of raised.
    """
    config = config or PipelineConfig()
    eps = config.epsilon if eps is None else eps
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    graph = square_to_bipartite(source) if isinstance(source, GeneralizedLatinSquare) else source
    xs, _ = _sides(graph)
    n = len(xs)
    if graph.n_edges != n * n:
        raise GraphError("the transversal pipeline needs a colouring of the complete bipartite graph")
    gate = few_large_colours_gate(graph, eps)
    if check_gate and not gate.passes:
        raise HypothesisError(f"few-large-colours hypothesis fails: {gate.detail}", gate)
    J, G = sample_colour_subgraph(graph, config.j_fraction, rng)
    thin = thin_large_colours(G, eps, 1, rng, n=n, retry_cap=config.retry_cap)
    G1 = thin.graph
    d = G1.min_degree()
    reg = None
    while d > 0:
        reg = regular_bipartite_subgraph(G1, d)
        if reg.feasible:
            break
        d -= 1
    G2 = reg.graph if reg is not None and reg.feasible else G1.edge_subgraph([])
    fam = perfect_matching_decomposition(G2, J, config, rng)
    fam.host = graph
    fam.diagnostics.update({
        "gate": gate.__dict__,
        "thin": {"success": thin.success, "attempts": thin.attempts, "large": thin.large_colours},
        "regular_degree": d,
        "reserve_edges": J.n_edges,
        "target": (1 - eps) * n,
    })
    return fam


def verify_family(family: MatchingFamily, host: EdgeColouredGraph, kind: str = "perfect_matching") -> list[str]:
    """Every problem found with the family (empty when all matchings verify and are disjoint)."""
    problems = []
    for i, m in enumerate(family.matchings):
        rep = verify(m, host, kind)
        if not rep.valid:
            problems.append(f"matching {i}: {sorted(rep.codes())}")
        if any(is_dummy(host.colour(*e)) for e in m.edges if e in host):
            problems.append(f"matching {i}: dummy colour")
    disj = verify_pairwise_disjoint(family.matchings)
    if not disj.valid:
        problems.append(f"family: {len(disj.violations)} shared edges")
    return problems
