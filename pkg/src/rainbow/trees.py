"""Spanning rainbow trees: small forest packing, tree switching, vertex-by-vertex completion."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig
from .graph_core import EdgeColouredGraph, GraphError, RainbowForest, norm, verify, verify_pairwise_disjoint
from .hamilton import hamiltonian_decomposition, large_colour_gate
from .pseudorandom import colour_cover_check, high_min_degree_core, sample_edge_subgraph

Edge = tuple[int, int]


class TreeError(GraphError):
    pass


class ForestPackingError(TreeError):
    """The greedy packing stalled; ``forests`` is the partial family and ``blocking`` the short forest."""

    def __init__(self, message: str, forests: list[RainbowForest], blocking: int):
        super().__init__(message)
        self.forests = forests
        self.blocking = blocking


class ExtensionFailure(TreeError):
    pass


class InvariantError(TreeError):
    def __init__(self, message: str, violations: list[str]):
        super().__init__(message)
        self.violations = violations


# -- union-find and tree paths --------------------------------------------


class _DSU:
    def __init__(self):
        self.parent: dict[int, int] = {}

    def find(self, a: int) -> int:
        self.parent.setdefault(a, a)
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _adjacency(edges) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return adj


def tree_path(adj: dict[int, set[int]], a: int, b: int) -> list[Edge] | None:
    """Edges of the unique a-b path in a forest given by adjacency sets, in order from a, or None."""
    if a == b:
        return []
    prev = {a: a}
    queue = deque([a])
    while queue:
        x = queue.popleft()
        for y in adj.get(x, ()):
            if y not in prev:
                prev[y] = x
                if y == b:
                    path = []
                    while y != a:
                        path.append(norm(prev[y], y))
                        y = prev[y]
                    return path[::-1]
                queue.append(y)
    return None


def _edges_of(T) -> set[Edge]:
    if isinstance(T, RainbowForest):
        return set(T.edges)
    return {norm(*e) for e in T}


def is_tree(edges) -> bool:
    edges = list(edges)
    verts = {v for e in edges for v in e}
    if not edges:
        return len(verts) <= 1
    dsu = _DSU()
    for u, v in edges:
        if not dsu.union(u, v):
            return False
    return len(edges) == len(verts) - 1


# -- small rainbow forests -----------------------------------------------


def _deal(budgets: dict, sizes: list[int]) -> list[list]:
    """Deal items into sets of the given sizes so that item x lands in budgets[x] distinct sets.

    Items are listed with multiplicity and dealt cyclically across the sets,
    which keeps the copies of one item in distinct sets whenever every budget
    is at most the number of sets.
    """
    m = len(sizes)
    seq = [x for x, d in sorted(budgets.items(), key=lambda kv: (-kv[1], kv[0])) for _ in range(d)]
    sets: list[list] = [[] for _ in range(m)]
    slots = [i for r in range(max(sizes, default=0)) for i in range(m) if sizes[i] > r]
    for item, i in zip(seq, slots):
        sets[i].append(item)
    return sets


def _round_budgets(amounts: dict, target: int) -> dict:
    """Integers within one of each real amount, summing to ``target`` (when possible)."""
    out = {x: math.floor(a) for x, a in amounts.items()}
    rest = target - sum(out.values())
    order = sorted(amounts, key=lambda x: (-(amounts[x] - math.floor(amounts[x])), x))
    for x in order:
        if rest <= 0:
            break
        if amounts[x] > out[x]:
            out[x] += 1
            rest -= 1
    return out


class _Packing:
    """m edge-disjoint rainbow forests grown edge by edge."""

    def __init__(self, graph: EdgeColouredGraph, m: int, limited: set[int]):
        self.graph = graph
        self.m = m
        self.limited = limited  # vertices allowed degree <= 1 in each forest
        self.edges: list[set[Edge]] = [set() for _ in range(m)]
        self.colours: list[set[int]] = [set() for _ in range(m)]
        self.dsu = [_DSU() for _ in range(m)]
        self.deg: list[dict[int, int]] = [{} for _ in range(m)]
        self.used: set[Edge] = set()

    def admissible(self, i: int, e: Edge, limited: bool = True) -> bool:
        if e in self.used or self.graph.colour(*e) in self.colours[i]:
            return False
        u, v = e
        if limited and any(x in self.limited and self.deg[i].get(x, 0) >= 1 for x in e):
            return False
        return self.dsu[i].find(u) != self.dsu[i].find(v)

    def add(self, i: int, e: Edge) -> None:
        u, v = e
        self.edges[i].add(e)
        self.colours[i].add(self.graph.colour(u, v))
        self.dsu[i].union(u, v)
        for x in e:
            self.deg[i][x] = self.deg[i].get(x, 0) + 1
        self.used.add(e)


def small_forest_decomposition(G: EdgeColouredGraph, m: int, k: int, S, rng: np.random.Generator | None = None,
                               beta: float = 0.15) -> list[RainbowForest]:
    """m edge-disjoint rainbow forests with k edges each.

    S must be a vertex cover of G.  A vertex outside S ends up either in every
    forest or with degree at most 1 in every forest.  High-degree vertices
    outside S get a private edge pool and are put into every forest at the
    end; the rest of the graph is packed by assigning colour budgets (edges
    inside S) and vertex budgets (edges at low-degree vertices outside S),
    dealing them into the forests, and then greedily topping up any forest
    that is still short.  Raises ForestPackingError with the partial family if
    some forest cannot reach k edges.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    S = set(S)
    if m < 0 or k < 0:
        raise TreeError("m and k must be non-negative")
    for u, v in G.edges():
        if u not in S and v not in S:
            raise TreeError(f"S is not a vertex cover: edge {(u, v)} avoids it")
    if k == 0 or m == 0:
        return [RainbowForest() for _ in range(m)]
    outside = sorted(set(G.vertices()) - S)

    # high-degree vertices outside S get their own pool G1
    d_out = {v: max(0, (G.degree(v) - 2 * k) // m) for v in outside}
    k1 = min(sum(d_out.values()), k)
    pool: dict[int, list[Edge]] = {}
    g1: set[Edge] = set()
    for v in outside:
        if d_out[v] >= 1:
            nbrs = sorted(G.neighbours(v))
            chosen = [norm(v, u) for u in (nbrs[i] for i in rng.permutation(len(nbrs)))][: d_out[v] * m + 2 * k]
            pool[v] = chosen
            g1.update(chosen)
    G2 = G.without_edges(g1)
    A = set(outside)
    pack = _Packing(G, m, A)
    k2 = k - k1

    # edges inside S: colour budgets
    inside = [e for e in G2.edges() if e[0] in S and e[1] in S]
    e_in = len(inside)
    b2 = beta * beta
    total_in = min(int(e_in / (1 + b2)), k2 * m)
    k_in, ell = divmod(total_in, m)
    if total_in > 0:
        classes: dict[int, list[Edge]] = {}
        for e in inside:
            classes.setdefault(G.colour(*e), []).append(e)
        d_c = _round_budgets({c: len(es) / (1 + b2) for c, es in classes.items()}, total_in)
        d_c = {c: min(d, m) for c, d in d_c.items()}
        sizes = [k_in + (1 if i < ell else 0) for i in range(m)]
        C_sets = _deal(d_c, sizes)
        for i in range(m):
            for c in C_sets[i]:
                cand = [classes[c][j] for j in rng.permutation(len(classes[c]))]
                for e in cand:
                    if pack.admissible(i, e):
                        pack.add(i, e)
                        break

    # edges at low-degree vertices outside S: vertex budgets
    quota_out = [k2 - len(pack.edges[i]) for i in range(m)]
    at = {v: [norm(v, u) for u in sorted(G2.neighbours(v))] for v in outside}
    want = sum(max(q, 0) for q in quota_out)
    if want > 0 and outside:
        d_v = _round_budgets({v: len(at[v]) * min(1.0, want / max(1, sum(len(x) for x in at.values()))) for v in outside}, want)
        d_v = {v: min(d, m) for v, d in d_v.items()}
        A_sets = _deal(d_v, [max(q, 0) for q in quota_out])
        for i in range(m):
            for v in A_sets[i]:
                cand = [at[v][j] for j in rng.permutation(len(at[v]))]
                for e in cand:
                    if pack.admissible(i, e):
                        pack.add(i, e)
                        break

    # greedy top-up of deficient forests from the rest of G2
    rest = G2.edges()
    for i in range(m):
        if len(pack.edges[i]) >= k2:
            continue
        for j in rng.permutation(len(rest)):
            e = rest[int(j)]
            if pack.admissible(i, e):
                pack.add(i, e)
                if len(pack.edges[i]) >= k2:
                    break

    # high-degree vertices: the same number of pool edges in every forest
    give = {}
    left = k1
    for v in outside:
        if left == 0:
            break
        if d_out[v] >= 1:
            give[v] = min(d_out[v], left)
            left -= give[v]
    for i in range(m):
        for v, t in give.items():
            got = 0
            for e in pool[v]:
                if got == t:
                    break
                if pack.admissible(i, e, limited=False):
                    pack.add(i, e)
                    got += 1
    forests = [RainbowForest(sorted(es)) for es in pack.edges]
    for i, f in enumerate(forests):
        if len(f) != k:
            raise ForestPackingError(f"forest {i} has {len(f)} of {k} edges", forests, i)
    problems = forest_cover_violations(forests, S, set(G.vertices()))
    if problems:
        raise TreeError("cover condition violated: " + "; ".join(problems[:3]))
    return forests


def forest_cover_violations(forests: list[RainbowForest], S, vertices) -> list[str]:
    """Vertices outside S that are neither in every forest nor of degree <= 1 in every forest."""
    out = []
    S = set(S)
    for v in sorted(set(vertices) - S):
        degs = [sum(1 for e in f.edges if v in e) for f in forests]
        if not (all(d >= 1 for d in degs) or all(d <= 1 for d in degs)):
            out.append(f"vertex {v} has forest degrees {degs}")
    return out


# -- switching edges on trees --------------------------------------------


def tree_edge_swap(T, G_attach, v: int) -> tuple[Edge, Edge]:
    """An edge xv of T and an edge yv of G_attach with T - xv + yv a tree.

    If yv is already a tree edge the swap is the identity (xv = yv).
    """
    tedges = _edges_of(T)
    gedges = _edges_of(G_attach.edges() if isinstance(G_attach, EdgeColouredGraph) else G_attach)
    tverts = {x for e in tedges for x in e}
    at_v = sorted(e for e in gedges if v in e)
    if not at_v:
        raise TreeError(f"vertex {v} is isolated in the attaching graph")
    adj = _adjacency(tedges)
    for f in at_v:
        y = f[0] if f[1] == v else f[1]
        if y not in tverts or v not in tverts:
            raise TreeError("attaching graph must live on the tree's vertices")
        if f in tedges:
            return f, f
        path = tree_path(adj, v, y)
        if path is None:
            raise TreeError("T is not connected")
        return path[0], f
    raise TreeError("unreachable")


def removable_edges(T, G_attach) -> dict[Edge, Edge]:
    """Tree edges e with an edge f of G_attach making T - e + f a tree, as e -> f."""
    tedges = _edges_of(T)
    gedges = _edges_of(G_attach.edges() if isinstance(G_attach, EdgeColouredGraph) else G_attach)
    adj = _adjacency(tedges)
    out: dict[Edge, Edge] = {}
    for f in sorted(gedges - tedges):
        path = tree_path(adj, f[0], f[1])
        for e in path or ():
            out.setdefault(e, f)
    return out


def merge_forest_into_tree(T, F) -> RainbowForest:
    """A tree containing F and contained in T u F.

    F's edges are laid down first and T's edges are then added whenever they
    join two components, so every cycle of T u F loses a T-edge.
    """
    tedges = _edges_of(T)
    fedges = _edges_of(F)
    tverts = {x for e in tedges for x in e}
    if not tverts and tedges == set():
        tverts = set()
    for e in sorted(fedges):
        if tverts and e[0] not in tverts and e[1] not in tverts:
            raise TreeError(f"forest edge {e} does not touch the tree")
    dsu = _DSU()
    out = set()
    for e in sorted(fedges):
        if not dsu.union(*e):
            raise TreeError("F is not a forest")
        out.add(e)
    for e in sorted(tedges - fedges):
        if dsu.union(*e):
            out.add(e)
    return RainbowForest(sorted(out))


# -- extending a tree by one vertex ----------------------------------------


@dataclass
class Extension:
    tree: RainbowForest
    added: list[Edge]
    removed: list[Edge]
    stage: int
    freed_colour: int | None = None


def extend_tree_by_vertex(T, v: int, c: int | None, H_reserve: EdgeColouredGraph, G: EdgeColouredGraph,
                          rng: np.random.Generator | None = None, widen: bool = True) -> Extension:
    """Add vertex v to the rainbow tree T with at most three new edges.

    ``G`` is the working graph (it must contain T's edges, the colour-c edges
    and the usable edges at v).  Stage 0 attaches v directly by an edge whose
    colour is missing from T.  Stage 1 swaps a tree edge j for a colour-c edge
    (the set J of such j), freeing colour c(j).  Stage 2 then swaps a tree
    edge of T - j + e for a reserve edge of colour c(j), freeing a further
    colour.  Whenever the freed colour appears on an edge from v to the tree,
    that edge is attached.  With ``widen`` the stage-2 pool also includes the
    working graph's edges once the reserve alone has failed.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    tedges = _edges_of(T)
    tverts = {x for e in tedges for x in e}
    if v in tverts:
        raise TreeError(f"vertex {v} is already on the tree")
    colour = G.colour
    tcol = {colour(*e): e for e in tedges}
    at_v: dict[int, list[int]] = {}
    for u, col in G.neighbours(v).items():
        if u in tverts:
            at_v.setdefault(col, []).append(u)
    for col in at_v:
        at_v[col].sort()

    def done(new_tree: set, added: list, removed: list, freed: int, stage: int) -> Extension:
        u = at_v[freed][int(rng.integers(len(at_v[freed])))]
        e = norm(u, v)
        new_tree.add(e)
        return Extension(RainbowForest(sorted(new_tree)), added + [e], removed, stage, freed)

    direct = sorted(col for col in at_v if col not in tcol and (col == c or widen))
    if c in at_v and c not in tcol:
        return done(set(tedges), [], [], c, 0)
    if direct:
        return done(set(tedges), [], [], direct[int(rng.integers(len(direct)))], 0)
    if c is None or c in tcol:
        raise ExtensionFailure("no budget colour available")
    classes = G.colour_classes()
    adj = _adjacency(tedges)
    first = [e for e in classes.get(c, []) if e[0] in tverts and e[1] in tverts and e not in tedges]
    first = [first[i] for i in rng.permutation(len(first))]
    J: list[tuple[Edge, Edge]] = []
    seen_j = set()
    for e in first:
        for j in tree_path(adj, *e) or ():
            if j in seen_j:
                continue
            seen_j.add(j)
            J.append((j, e))
            if colour(*j) in at_v:
                return done((tedges - {j}) | {e}, [e], [j], colour(*j), 1)
    if not J:
        raise ExtensionFailure(f"colour {c} frees no tree edge")
    hclasses = H_reserve.colour_classes()
    pools = [("reserve", hclasses)]
    if widen:
        pools.append(("working", classes))
    for _, pool in pools:
        for j, e in J:
            tj = (tedges - {j}) | {e}
            adj_j = _adjacency(tj)
            cj = colour(*j)
            cand = [f for f in pool.get(cj, []) if f[0] in tverts and f[1] in tverts and f not in tj]
            for idx in rng.permutation(len(cand)):
                f = cand[int(idx)]
                for g in tree_path(adj_j, *f) or ():
                    if g == e:
                        continue
                    cg = colour(*g)
                    if cg in at_v:
                        return done((tj - {g}) | {f}, [e, f], [j, g], cg, 2)
    raise ExtensionFailure(f"no freed colour meets vertex {v}")


# -- completing many trees -------------------------------------------------


@dataclass
class TreeExtensionState:
    host: EdgeColouredGraph
    trees: list[RainbowForest]
    core_set: set[int]
    budgets: list[set[int]]
    reserve: EdgeColouredGraph
    large_threshold: float
    originals: list[RainbowForest] = field(default_factory=list)
    quarantined: dict[int, str] = field(default_factory=dict)
    log: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if not self.originals:
            self.originals = list(self.trees)

    def active(self) -> list[int]:
        return [i for i in range(len(self.trees)) if i not in self.quarantined]


def check_invariants(state: TreeExtensionState) -> list[str]:
    """Violations of the completion bookkeeping on the active trees.

    Checks: every tree is a rainbow tree containing S; its budget has
    n - |T_i| large colours, none on the tree; vertices outside S have tree
    degree at most 1; at most three new edges per added vertex; trees
    pairwise edge-disjoint.
    """
    host = state.host
    n = host.n_vertices
    S = state.core_set
    sizes = {c: len(es) for c, es in host.colour_classes().items()}
    out = []
    for i in state.active():
        T = state.trees[i]
        verts = T.vertices()
        cols = [host.get_colour(*e) for e in T.edges]
        if None in cols:
            out.append(f"tree {i}: edge outside the host")
            continue
        if len(set(cols)) != len(cols):
            out.append(f"tree {i}: not rainbow")
        if not is_tree(T.edges):
            out.append(f"tree {i}: not a tree")
        if not S <= verts:
            out.append(f"tree {i}: misses {len(S - verts)} vertices of S")
        B = state.budgets[i]
        if len(B) != n - len(verts):
            out.append(f"tree {i}: budget has {len(B)} colours, expected {n - len(verts)}")
        if B & set(cols):
            out.append(f"tree {i}: budget colour on the tree")
        if any(sizes.get(c, 0) < state.large_threshold for c in B):
            out.append(f"tree {i}: budget colour below the large threshold")
        deg: dict[int, int] = {}
        for e in T.edges:
            for x in e:
                deg[x] = deg.get(x, 0) + 1
        bad = [x for x, d in deg.items() if x not in S and d > 1]
        if bad:
            out.append(f"tree {i}: vertices outside S with degree > 1: {bad[:5]}")
        T0 = state.originals[i]
        grown = len(verts) - len(T0.vertices())
        if len(T.edges - T0.edges) > 3 * grown:
            out.append(f"tree {i}: {len(T.edges - T0.edges)} new edges for {grown} new vertices")
    if not verify_pairwise_disjoint([state.trees[i] for i in state.active()]).valid:
        out.append("trees share an edge")
    return out


def _assert_invariants(state: TreeExtensionState, when: str) -> None:
    problems = check_invariants(state)
    if problems:
        raise InvariantError(f"invariant violated {when}: " + "; ".join(problems[:3]), problems)


def _working_graph(state: TreeExtensionState, i: int, v: int, c: int, used: set[Edge]) -> EdgeColouredGraph:
    """Edges usable to grow tree i by v with budget colour c.

    Keeps tree i's edges plus unused host edges that lie inside S or join v
    to S, dropping the budget colours other than c.
    """
    host = state.host
    S = state.core_set
    drop = state.budgets[i] - {c}
    own = state.trees[i].edges
    col = {}
    for e, colour in host.colour_map.items():
        if e in own:
            col[e] = colour
            continue
        if e in used or colour in drop:
            continue
        a, b = e
        if (a in S and b in S) or (a == v and b in S) or (b == v and a in S):
            col[e] = colour
    return EdgeColouredGraph(host.n_vertices, col, check=False)


def complete_trees(state: TreeExtensionState, rng: np.random.Generator | None = None, widen: bool = True) -> TreeExtensionState:
    """Grow every active tree to a spanning tree, one vertex at a time.

    Work items (tree, missing vertex) are processed first-in first-out; each
    budget colour of the tree is tried in random order.  A tree whose
    extension fails is quarantined and kept as a non-spanning diagnostic.
    The bookkeeping invariants are asserted on input and after every
    extension.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    _assert_invariants(state, "on input")
    n = state.host.n_vertices
    used: set[Edge] = set()
    for T in state.trees:
        used |= T.edges
    queue = deque()
    for v in range(n):
        for i in state.active():
            if v not in state.trees[i].vertices():
                queue.append((i, v))
    checks = 1
    while queue:
        i, v = queue.popleft()
        if i in state.quarantined or v in state.trees[i].vertices():
            continue
        T = state.trees[i]
        budget = sorted(state.budgets[i])
        order = [budget[j] for j in rng.permutation(len(budget))] or [None]
        ext = None
        reason = "empty budget"
        for c in order:
            G = _working_graph(state, i, v, c, used)
            reserve = state.reserve.edge_subgraph(e for e in state.reserve.edges() if e in G and e not in used)
            try:
                ext = extend_tree_by_vertex(T, v, c, reserve, G, rng, widen=widen)
                break
            except ExtensionFailure as exc:
                reason = str(exc)
        if ext is None:
            state.quarantined[i] = f"vertex {v}: {reason}"
            state.log.append({"tree": i, "vertex": v, "ok": False, "reason": reason})
            continue
        used -= set(ext.removed)
        used |= set(ext.added)
        state.trees[i] = ext.tree
        tcols = {state.host.colour(*e) for e in ext.tree.edges}
        B = state.budgets[i] - tcols
        excess = len(B) - (n - len(ext.tree.vertices()))
        if excess > 0 and c in B:
            B.discard(c)
            excess -= 1
        for col in sorted(B)[:max(excess, 0)]:
            B.discard(col)
        state.budgets[i] = B
        state.log.append({"tree": i, "vertex": v, "ok": True, "stage": ext.stage, "added": len(ext.added)})
        _assert_invariants(state, f"after adding vertex {v} to tree {i}")
        checks += 1
    state.log.append({"invariant_checks": checks})
    return state


# -- top-level pipeline ----------------------------------------------------


def rainbow_spanning_forest(graph: EdgeColouredGraph, vertices, rng: np.random.Generator | None = None) -> list[Edge]:
    """A maximum rainbow forest of graph[vertices] by matroid intersection.

    Intersects the graphic matroid with the partition matroid of colour
    classes, augmenting along shortest paths of the exchange graph.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    vs = set(vertices)
    ground = [e for e in graph.edges() if e[0] in vs and e[1] in vs]
    ground = [ground[i] for i in rng.permutation(len(ground))]
    position = {e: i for i, e in enumerate(ground)}
    colour = graph.colour
    I: set[Edge] = set()
    dsu = _DSU()
    cols: set[int] = set()
    for e in ground:
        if colour(*e) not in cols and dsu.union(*e):
            I.add(e)
            cols.add(colour(*e))
    target = len(vs) - 1
    while len(I) < target:
        adj = _adjacency(I)
        comp: dict[int, int] = {}
        for s in vs:
            if s in comp:
                continue
            stack = [s]
            comp[s] = s
            while stack:
                x = stack.pop()
                for y in adj.get(x, ()):
                    if y not in comp:
                        comp[y] = s
                        stack.append(y)
        by_colour = {colour(*e): e for e in I}
        outside = [e for e in ground if e not in I]
        sources = {e for e in outside if comp[e[0]] != comp[e[1]]}
        sinks = {e for e in outside if colour(*e) not in by_colour}
        # arcs y -> x (y in I) when I - y + x is a forest
        swap_in: dict[Edge, list[Edge]] = {}
        for x in outside:
            if x in sources:
                continue
            for y in tree_path(adj, *x) or ():
                swap_in.setdefault(y, []).append(x)
        prev: dict[Edge, Edge | None] = {x: None for x in sources}
        queue = deque(sorted(sources, key=position.__getitem__))
        end = None
        while queue:
            x = queue.popleft()
            if x in sinks:
                end = x
                break
            y = by_colour.get(colour(*x))
            if y is None or y in prev:
                continue
            prev[y] = x
            for z in swap_in.get(y, []):
                if z not in prev:
                    prev[z] = y
                    queue.append(z)
        if end is None:
            break
        node = end
        while node is not None:
            if node in I:
                I.discard(node)
            else:
                I.add(node)
            node = prev[node]
    return sorted(I)


@dataclass
class SpanningTreeFamily:
    trees: list[RainbowForest]
    partial: list[RainbowForest]
    host: EdgeColouredGraph
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.trees)


def _core_paths(G1: EdgeColouredGraph, S: list[int], m: int, config: PipelineConfig, rng: np.random.Generator, diag: dict):
    """Rainbow spanning paths/trees of G1[S], edge-disjoint, at most m of them.

    Hamiltonian cycles from the Hamiltonian pipeline (minus one edge each)
    come first; the family is topped up with maximum rainbow forests found by
    matroid intersection on the edges still free, kept when they span S.
    """
    index = {v: i for i, v in enumerate(S)}
    local = G1.relabelled(index, len(S))
    out: list[set[Edge]] = []
    try:
        fam = hamiltonian_decomposition(local, config.tree_eps, config, rng, check_gate=False)
        for cyc in fam.cycles:
            order = cyc.cycles[0]
            cut = int(rng.integers(len(order)))
            path = order[cut + 1:] + order[:cut + 1]
            out.append({norm(S[path[t]], S[path[t + 1]]) for t in range(len(path) - 1)})
        diag["hamilton_paths"] = len(out)
    except GraphError as exc:
        diag["hamilton_paths"] = 0
        diag["hamilton_error"] = str(exc)
    out = out[:m]
    used = set().union(*out) if out else set()
    free = G1.without_edges(used)
    topped = 0
    while len(out) < m:
        forest = rainbow_spanning_forest(free, S, rng)
        if len(forest) != len(S) - 1:
            break
        out.append(set(forest))
        free = free.without_edges(forest)
        topped += 1
    diag["matroid_trees"] = topped
    return [RainbowForest(sorted(t)) for t in out]


def spanning_tree_decomposition(colouring: EdgeColouredGraph, eps: float | None = None,
                                config: PipelineConfig | None = None,
                                rng: np.random.Generator | None = None) -> SpanningTreeFamily:
    """Edge-disjoint spanning rainbow trees of a properly coloured complete graph.

    Colourings with few large colours go through the Hamiltonian pipeline
    (each cycle minus one edge is a spanning tree).  Otherwise: take the large
    colours and a high minimum degree core, sample S and a reserve H, cover
    S by rainbow paths/trees, pack the small colours into forests merged into
    those trees, and complete every tree vertex by vertex.  Every emitted tree
    is verified; trees that could not be completed are returned in
    ``partial``.
    """
    config = config or PipelineConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    eps = config.tree_eps if eps is None else eps
    n = colouring.n_vertices
    few, big, limit = large_colour_gate(colouring, eps)
    diag: dict = {"large_colours": big, "limit": limit, "branch": "few-large" if few else "many-large"}
    if n < 2:
        return SpanningTreeFamily([], [], colouring, diag)
    if few:
        fam = hamiltonian_decomposition(colouring, eps, config, rng, check_gate=False)
        trees = []
        for cyc in fam.cycles:
            order = cyc.cycles[0]
            cut = int(rng.integers(len(order)))
            drop = norm(order[cut], order[(cut + 1) % len(order)])
            trees.append(RainbowForest((e for e in cyc.edge_list() if e != drop), spanning=True))
        diag["hamilton"] = {k: v for k, v in fam.diagnostics.items() if k in ("completed", "failures")}
        return _finish(trees, [], colouring, diag)

    sizes = {c: len(es) for c, es in colouring.colour_classes().items()}
    threshold = (1 - eps) * n / 2
    C_L = {c for c, s in sizes.items() if s >= threshold - 1e-9}
    # vertices may miss up to eps*n large colours, so the core needs twice the slack
    core = high_min_degree_core(colouring.with_colours(C_L), 2 * eps)
    diag["core_size"] = len(core.vertices)
    diag["core_warning"] = core.warning
    n2 = min(math.ceil((1 - config.tree_nu) * n), len(core.vertices))
    S = sorted(int(x) for x in rng.choice(core.vertices, size=n2, replace=False))
    diag["S"] = len(S)
    inner = colouring.with_colours(C_L).restricted_to(S)
    H, G1 = sample_edge_subgraph(inner, config.eta, rng)
    if H.n_edges:
        cov = colour_cover_check(H, min(config.cover_k, len(H.colours())), eps, rng, n=n, samples=500)
        diag["reserve_cover"] = {"ok": cov.ok, "worst": cov.worst_cover, "threshold": cov.threshold}
    m = int((1 - eps) * n / 2)
    paths = _core_paths(G1, S, m, config, rng, diag)

    k = max(n - 1 - len(C_L), 0)
    diag["small_colour_edges_per_tree"] = k
    Sset = set(S)
    trees = list(paths)
    if k > 0 and trees:
        G2 = colouring.edge_subgraph(e for e, c in colouring.colour_map.items()
                                     if c not in C_L and (e[0] in Sset or e[1] in Sset))
        try:
            forests = small_forest_decomposition(G2, len(trees), k, Sset, rng, beta=config.eta)
            trees = [merge_forest_into_tree(T, F) for T, F in zip(trees, forests)]
            diag["forests"] = "ok"
        except TreeError as exc:
            diag["forests"] = f"failed: {exc}"
    S2 = set(Sset)
    for v in range(n):
        if v not in S2 and trees and all(v in T.vertices() for T in trees):
            S2.add(v)
    budgets = []
    for T in trees:
        tcols = {colouring.colour(*e) for e in T.edges}
        free_cols = sorted(C_L - tcols)
        need = n - len(T.vertices())
        pick = [free_cols[i] for i in sorted(rng.permutation(len(free_cols))[:need])] if need <= len(free_cols) else free_cols
        budgets.append(set(pick))
    state = TreeExtensionState(colouring, trees, S2, budgets, H, threshold)
    for i, T in enumerate(trees):
        if len(budgets[i]) != n - len(T.vertices()):
            state.quarantined[i] = "too few large colours off the tree"
        elif any(sum(1 for e in T.edges if x in e) > 1 for x in T.vertices() - S2):
            state.quarantined[i] = "vertex outside S with degree above 1"
    complete_trees(state, rng)
    diag["quarantined"] = dict(state.quarantined)
    diag["extensions"] = sum(1 for r in state.log if r.get("ok"))
    diag["invariant_checks"] = state.log[-1]["invariant_checks"]
    diag["invariant_violations"] = 0
    done = [RainbowForest(state.trees[i].edges, spanning=True) for i in state.active()]
    partial = [state.trees[i] for i in sorted(state.quarantined)]
    return _finish(done, partial, colouring, diag)


def _finish(trees: list[RainbowForest], partial: list[RainbowForest], host: EdgeColouredGraph, diag: dict) -> SpanningTreeFamily:
    good = []
    for T in trees:
        if verify(T, host, "spanning_tree").valid:
            good.append(T)
        else:
            partial.append(RainbowForest(T.edges))
    if not verify_pairwise_disjoint(good).valid:
        raise GraphError("internal error: spanning trees share an edge")
    diag["spanning"] = len(good)
    return SpanningTreeFamily(good, partial, host, diag)
