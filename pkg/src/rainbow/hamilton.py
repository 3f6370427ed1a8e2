"""Rainbow Hamiltonian cycles: circulant decompositions, 2-factor assembly and rotation-based completion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import PipelineConfig
from .generators import circulant_colouring
from .graph_core import CycleFactor, EdgeColouredGraph, GraphError, norm, verify, verify_pairwise_disjoint
from .matchings import perfect_matching_decomposition
from .pseudorandom import random_orientation, split_colours


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# -- the circulant construction --------------------------------------------


def circulant_decomposition(n: int) -> tuple[EdgeColouredGraph, list[CycleFactor]]:
    """K_n on Z_n coloured i + j, split into the (n - 1)/2 rainbow cycles C_i = {a(a+i)}."""
    if n < 3 or not is_prime(n):
        raise GraphError(f"n = {n} must be an odd prime")
    colouring = circulant_colouring(n)
    cycles = []
    for i in range(1, (n - 1) // 2 + 1):
        cycles.append(CycleFactor([[(a * i) % n for a in range(n)]]))
    return colouring, cycles


def circulant_template(k: int) -> list[list[int]]:
    """Vertex sequences of the rainbow Hamiltonian cycles of the circulant K_k."""
    _, cycles = circulant_decomposition(k)
    return [list(c.cycles[0]) for c in cycles]


# -- prime partition and near-design -------------------------------------


@dataclass
class PrimePartition:
    k1: int
    k2: int
    sizes: list[int]
    primes: list[int]  # the prime dividing each part

    @property
    def s(self) -> int:
        return len(self.sizes)


def _primes_between(lo: int, hi: float) -> list[int]:
    return [q for q in range(max(lo, 2), int(math.floor(hi + 1e-9)) + 1) if is_prime(q)]


def _deal(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def prime_partition(n: int, k: int, eps: float, s: int | None = None) -> PrimePartition:
    """Write n = n_1 + ... + n_s with every n_i divisible by one of two primes in [k, (1 + eps) k].

    Solves k1 z1 + k2 z2 = n with z1, z2 >= 0 as balanced as possible (the
    floor of the construction is one multiple of each prime that is used),
    then deals z1 and z2 into parts of size about n / s.
    """
    if n < k:
        raise GraphError(f"n = {n} is smaller than k = {k}")
    primes = _primes_between(k, (1 + eps) * k)
    if not primes:
        raise GraphError(f"no prime in [{k}, {(1 + eps) * k:.2f}]")
    s = s if s is not None else max(1, n // (4 * k * k))
    best = None
    for a in range(len(primes)):
        for b in range(a, len(primes)):
            k1, k2 = primes[a], primes[b]
            for z1 in range(n // k1 + 1):
                rest = n - k1 * z1
                if rest % k2:
                    continue
                z2 = rest // k2
                if k1 == k2:
                    z1, z2 = z1 + z2, 0
                # prefer representations close to an even split of n between the primes
                score = abs(k1 * z1 - k2 * z2) if k1 != k2 else 0
                key = (k1 == k2 and len(primes) > 1, score, a, b)
                if best is None or key < best[0]:
                    best = (key, k1, k2, z1, z2)
    if best is None:
        raise GraphError(f"{n} is not a non-negative combination of primes in [{k}, {(1 + eps) * k:.2f}]")
    _, k1, k2, z1, z2 = best
    target = n / s
    sizes, owners = [], []
    for prime, z in ((k1, z1), (k2, z2)):
        if z == 0:
            continue
        parts = max(1, min(z, round(prime * z / target)))
        for m in _deal(z, parts):
            sizes.append(prime * m)
            owners.append(prime)
    if sum(sizes) != n:
        raise GraphError("internal error: parts do not sum to n")
    return PrimePartition(k1, k2, sizes, owners)


@dataclass
class NearDesign:
    partitions: list[list[list[int]]]
    part_primes: list[list[int]]
    s: int
    expected_cooccurrence: float
    worst_relative_gap: float
    attempts: int

    def cooccurrence(self, x: int, y: int) -> int:
        return sum(1 for part in self.partitions for block in part if x in block and y in block)


def near_design(n: int, s_hat: int, k: int, eps: float, rng: np.random.Generator, tol: float | None = None,
                samples: int = 100, retry_cap: int = 5) -> NearDesign:
    """s^2 log^2 n random relabellings of one prime partition of [n].

    Every pair should lie together in about sum_j C(n_j, 2) / C(n, 2) of the
    partitions; this is checked on ``samples`` random pairs with relative
    tolerance ``tol`` (default 5 eps), resampling up to ``retry_cap`` times.
    """
    base = prime_partition(n, k, eps, s_hat)
    s = base.s
    count = max(1, math.ceil(s * s * math.log(n) ** 2)) if n > 1 else 1
    tol = 5 * eps if tol is None else tol
    pair_prob = sum(m * (m - 1) for m in base.sizes) / (n * (n - 1)) if n > 1 else 1.0
    expected = count * pair_prob
    bounds = np.cumsum([0] + base.sizes)
    worst = math.inf
    for attempt in range(1, retry_cap + 1):
        partitions = []
        block_of = np.empty((count, n), dtype=np.int64)
        for i in range(count):
            perm = rng.permutation(n)
            blocks = [sorted(int(v) for v in perm[bounds[j]:bounds[j + 1]]) for j in range(s)]
            partitions.append(blocks)
            for j, blk in enumerate(blocks):
                block_of[i, blk] = j
        worst = 0.0
        for _ in range(samples if n > 1 else 0):
            x, y = (int(v) for v in rng.choice(n, size=2, replace=False))
            co = int(np.sum(block_of[:, x] == block_of[:, y]))
            worst = max(worst, abs(co - expected) / expected)
        if worst <= tol:
            return NearDesign(partitions, [list(base.primes) for _ in range(count)], s, expected, worst, attempt)
    raise GraphError(f"co-occurrence deviates by {worst:.2f} > {tol:.2f} after {retry_cap} attempts")


# -- 2-factors from perfect matchings ------------------------------------


@dataclass
class FactorFamily:
    factors: list[CycleFactor]
    host: EdgeColouredGraph | None = None
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.factors)


def _piece(graph: EdgeColouredGraph, A: list[int], B: list[int], colours: set[int]):
    """G[A, B] restricted to ``colours``, relabelled onto 0..2m-1; returns (piece, back map)."""
    index = {v: i for i, v in enumerate(A)}
    index.update({v: len(A) + i for i, v in enumerate(B)})
    sa, sb = set(A), set(B)
    col = {}
    for (u, v), c in graph.colour_map.items():
        if c in colours and ((u in sa and v in sb) or (u in sb and v in sa)):
            col[norm(index[u], index[v])] = c
    m = len(A)
    piece = EdgeColouredGraph(2 * m, col, (range(m), range(m, 2 * m)), check=False)
    return piece, list(A) + list(B)


def _divisible_factors(G: EdgeColouredGraph, J: EdgeColouredGraph, vertices: list[int], colours: list[int], k: int,
                       config: PipelineConfig, rng: np.random.Generator, diag: dict) -> list[list[list[tuple]]]:
    """2-factors of G u J on ``vertices`` (k divides their number) using only ``colours``.

    Returns, for every (template cycle, shift) pair, a list of edge lists.
    """
    verts = [vertices[i] for i in rng.permutation(len(vertices))]
    m = len(verts) // k
    parts = [sorted(verts[a * m:(a + 1) * m]) for a in range(k)]
    groups = [set() for _ in range(k)]
    for c in colours:
        groups[int(rng.integers(k))].add(c)
    families: dict[tuple[int, int, int], list[list[tuple]]] = {}
    for a in range(k):
        for b in range(a + 1, k):
            for c in range(k):
                g_piece, back = _piece(G, parts[a], parts[b], groups[c])
                j_piece, _ = _piece(J, parts[a], parts[b], groups[c])
                fam = perfect_matching_decomposition(g_piece, j_piece, config, rng)
                diag["pieces"] += 1
                diag["piece_failures"] += len(fam.diagnostics.get("failures", []))
                families[(a, b, c)] = [[norm(back[u], back[v]) for u, v in mt.edge_list()] for mt in fam.matchings]
    out = []
    for cyc in circulant_template(k) if k >= 3 else []:
        steps = [(cyc[i], cyc[(i + 1) % k]) for i in range(k)]
        for t in range(k):
            keys = [(min(a, b), max(a, b), (a + b + t) % k) for a, b in steps]
            count = min(len(families[key]) for key in keys)
            for j in range(count):
                out.append([e for key in keys for e in families[key][j]])
    return out


def _cycles_of(edges: list[tuple], vertices) -> list[list[int]]:
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    for v, nb in adj.items():
        if len(nb) != 2:
            raise GraphError(f"vertex {v} has degree {len(nb)} in an assembled factor")
    seen: set[int] = set()
    cycles = []
    for start in sorted(adj):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        prev, cur = start, adj[start][0]
        while cur != start:
            cyc.append(cur)
            seen.add(cur)
            a, b = adj[cur]
            prev, cur = cur, (b if a == prev else a)
        cycles.append(cyc)
    return cycles


def two_factor_decomposition(G: EdgeColouredGraph, J: EdgeColouredGraph, config: PipelineConfig | None = None,
                             rng: np.random.Generator | None = None, k: int | None = None) -> FactorFamily:
    """Edge-disjoint rainbow 2-factors of G u J with every cycle of length >= k.

    Vertices are split into k equal parts and colours into k groups; each
    (part pair, colour group) piece is decomposed into perfect rainbow
    matchings, and matchings are stacked along the rainbow Hamiltonian cycles
    of the circulant K_k so that each vertex gets one edge to the next part and
    one to the previous.  When k does not divide n the vertex set is first cut
    by a prime partition into parts whose sizes are divisible by a prime near
    k, with disjoint colour groups per part, and the factors of the parts are
    combined side by side (a single partition rather than a full near-design).
    """
    config = config or PipelineConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    k = config.factor_k if k is None else k
    n = G.n_vertices
    diag = {"pieces": 0, "piece_failures": 0, "route": "divisible", "k": k}
    if G.n_edges == 0 or n < 3:
        return FactorFamily([], G, diag)
    if set(G.colours()) & set(J.colours()):
        raise GraphError("G and J must be colour-disjoint")
    colours = sorted(set(G.colours()) | set(J.colours()))
    verts = list(range(n))
    if n % k == 0 and is_prime(k):
        blocks = [(verts, k)]
        groups = [colours]
    else:
        pp = prime_partition(n, k, 0.5, None)
        diag["route"] = "single prime partition"
        diag["part_sizes"] = pp.sizes
        perm = [verts[i] for i in rng.permutation(n)]
        bounds = np.cumsum([0] + pp.sizes)
        blocks = [(sorted(perm[bounds[j]:bounds[j + 1]]), pp.primes[j]) for j in range(pp.s)]
        owner = rng.integers(pp.s, size=len(colours))
        groups = [[c for c, o in zip(colours, owner) if o == j] for j in range(pp.s)]
    per_block = [_divisible_factors(G, J, vs, cs, q, config, rng, diag) for (vs, q), cs in zip(blocks, groups)]
    count = min(len(f) for f in per_block)
    factors = []
    skipped = 0
    for j in range(count):
        edges = [e for f in per_block for e in f[j]]
        try:
            factors.append(CycleFactor(_cycles_of(edges, verts)))
        except GraphError:
            skipped += 1
    diag["assembly_skipped"] = skipped
    diag["min_cycle"] = min((len(c) for f in factors for c in f.cycles), default=0)
    return FactorFamily(factors, G.union(J), diag)


# -- rotations -----------------------------------------------------------


@dataclass
class DirectedReserve:
    """A reserve graph with an orientation; only out-arcs are used by the rotations."""

    graph: EdgeColouredGraph
    out: dict[int, list[int]]
    warning: str = ""

    @classmethod
    def orient(cls, graph: EdgeColouredGraph, rng: np.random.Generator, retry_cap: int = 20) -> "DirectedReserve":
        try:
            o = random_orientation(graph, rng, retry_cap)
            return cls(graph, o.out_neighbours())
        except GraphError as exc:
            # keep a plain random orientation and record that the out-degree floor was missed
            out: dict[int, list[int]] = {v: [] for v in graph.vertices()}
            for (u, v), f in zip(graph.edges(), rng.random(graph.n_edges) < 0.5):
                a, b = (v, u) if f else (u, v)
                out[a].append(b)
            return cls(graph, out, str(exc))


class RotationError(GraphError):
    def __init__(self, message: str, bottleneck: str):
        super().__init__(message)
        self.bottleneck = bottleneck


EdgeOk = Callable[[EdgeColouredGraph, int, int], bool]


def _always(graph: EdgeColouredGraph, u: int, v: int) -> bool:
    return True


def _succ(cycle: list[int]) -> tuple[dict[int, int], dict[int, int]]:
    m = len(cycle)
    nxt = {cycle[i]: cycle[(i + 1) % m] for i in range(m)}
    prv = {b: a for a, b in nxt.items()}
    return nxt, prv


def _walk(cycle: list[int], start: int, stop: int) -> list[int]:
    """Vertices of ``cycle`` from ``start`` forward to ``stop`` inclusive."""
    i = cycle.index(start)
    m = len(cycle)
    out = []
    while True:
        v = cycle[i % m]
        out.append(v)
        if v == stop:
            return out
        i += 1


def join_two_cycles(C1: list[int], C2: list[int], E: EdgeColouredGraph, F: EdgeColouredGraph, G: EdgeColouredGraph,
                    protected=(), rng: np.random.Generator | None = None, edge_ok: EdgeOk = _always) -> tuple[list[int], list]:
    """Merge two disjoint cycles with one edge from each of E, F, G.

    Orient both cycles by list order (sigma = successor).  Find x0 in C1 with
    y0 = sigma(x0) and zw in G with sigma(z) in N_E(x0), sigma(w) in N_F(y0),
    both in C2; return C1 + C2 - x0y0 - z sigma(z) - w sigma(w) + x0 sigma(z)
    + y0 sigma(w) + zw and the three new edges.  Vertices in ``protected``
    (anchor endpoints) are never x0, sigma(z) or sigma(w), so anchor edges
    survive.  ``edge_ok(reserve, u, v)`` filters reserve edges.
    """
    if len(C1) > len(C2):
        C1, C2 = C2, C1
    protected = set(protected)
    s1, _ = _succ(C1)
    s2, p2 = _succ(C2)
    in2 = set(C2)
    xs = [x for x in C1 if x not in protected]
    if rng is not None:
        xs = [xs[i] for i in rng.permutation(len(xs))]
    bottleneck = "no admissible x0"
    for x0 in xs:
        y0 = s1[x0]
        ne = [a for a in sorted(E.neighbours(x0)) if a in in2 and a not in protected and edge_ok(E, x0, a)]
        nf = [b for b in sorted(F.neighbours(y0)) if b in in2 and b not in protected and edge_ok(F, y0, b)]
        if not ne or not nf:
            bottleneck = "empty E/F neighbourhood"
            continue
        nf_pred = {p2[b]: b for b in nf}
        for a in ne:
            z = p2[a]
            for w, cg in sorted(G.neighbours(z).items()):
                b = nf_pred.get(w)
                if b is None or w == z or w == a or z == b or not edge_ok(G, z, w):
                    continue
                cols = {E.colour(x0, a), F.colour(y0, b), cg}
                if len(cols) < 3:
                    continue
                cycle = _walk(C1, y0, x0) + _walk(C2, a, w) + _walk(C2, b, z)[::-1]
                return cycle, [norm(x0, a), norm(y0, b), norm(z, w)]
        bottleneck = "no G-edge"
    raise RotationError(f"cannot join cycles of lengths {len(C1)} and {len(C2)}", bottleneck)


def absorb_small_cycle(cycles: list[list[int]], index: int, anchor: tuple[int, int], E: EdgeColouredGraph,
                       DX: DirectedReserve, DY: DirectedReserve, protected=(), rng: np.random.Generator | None = None,
                       edge_ok: EdgeOk = _always) -> tuple[list[list[int]], list]:
    """Absorb cycle ``index`` (with anchor x0y0) into one or two other cycles.

    With U the protected anchor endpoints, find zw in E with sigma(z) an
    out-neighbour of x0 in DX and sigma(w) an out-neighbour of y0 in DY, both
    outside U and C0; return the new cycle list and the three new edges.
    """
    x0, y0 = anchor
    C0 = cycles[index]
    if norm(x0, y0) not in {norm(C0[i], C0[(i + 1) % len(C0)]) for i in range(len(C0))}:
        raise GraphError("anchor is not an edge of the small cycle")
    U = set(protected)
    in0 = set(C0)
    owner, succ, pred = {}, {}, {}
    for ci, cyc in enumerate(cycles):
        if ci == index:
            continue
        s, p = _succ(cyc)
        succ.update(s)
        pred.update(p)
        for v in cyc:
            owner[v] = ci
    A = [a for a in DX.out.get(x0, []) if a not in U and a not in in0 and a in owner and edge_ok(DX.graph, x0, a)]
    B = [b for b in DY.out.get(y0, []) if b not in U and b not in in0 and b in owner and edge_ok(DY.graph, y0, b)]
    if not A:
        raise RotationError(f"no usable out-arc of {x0}", "empty DX out-neighbourhood")
    if not B:
        raise RotationError(f"no usable out-arc of {y0}", "empty DY out-neighbourhood")
    if rng is not None:
        A = [A[i] for i in rng.permutation(len(A))]
    b_of = {pred[b]: b for b in B}
    for a in A:
        z = pred[a]
        for w, ce in sorted(E.neighbours(z).items()):
            b = b_of.get(w)
            if b is None or w == z or w == a or z == b or not edge_ok(E, z, w):
                continue
            if len({DX.graph.colour(x0, a), DY.graph.colour(y0, b), ce}) < 3:
                continue
            # the path y0 -> ... -> x0 around C0 that avoids the anchor edge
            i0 = C0.index(x0)
            if C0[(i0 + 1) % len(C0)] == y0:
                path0 = _walk(C0, y0, x0)
            else:
                path0 = _walk(C0, x0, y0)[::-1]
            ca, cb = owner[z], owner[w]
            if ca == cb:
                merged = path0 + _walk(cycles[ca], a, w) + _walk(cycles[ca], b, z)[::-1]
                drop = {index, ca}
            else:
                merged = path0 + _walk(cycles[ca], a, z) + _walk(cycles[cb], b, w)[::-1]
                drop = {index, ca, cb}
            new = [c for i, c in enumerate(cycles) if i not in drop] + [merged]
            return new, [norm(x0, a), norm(y0, b), norm(z, w)]
    raise RotationError("no E-edge joins the out-neighbourhoods", "no E-edge")


# -- completion ----------------------------------------------------------


@dataclass
class HamiltonResult:
    cycle: CycleFactor
    success: bool
    steps: int
    failed_step: int | None = None
    bottleneck: str = ""
    reserve_use: dict = field(default_factory=dict)


def _cycle_edges(cyc: list[int]) -> set:
    return {norm(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))}


def choose_anchors(factor: CycleFactor, rng: np.random.Generator) -> list[tuple[int, int]]:
    """One random edge per cycle, randomly ordered as (x_i, y_i)."""
    out = []
    for cyc in factor.cycles:
        i = int(rng.integers(len(cyc)))
        x, y = cyc[i], cyc[(i + 1) % len(cyc)]
        out.append((x, y) if rng.random() < 0.5 else (y, x))
    return out


def choose_anchor_family(factors: list[CycleFactor], k: int, n: int, rng: np.random.Generator, retry_cap: int = 10):
    """Anchor matchings for all factors with max degree of their union <= 4n/k (resampled)."""
    best, best_delta = None, None
    for attempt in range(1, retry_cap + 1):
        anchors = [choose_anchors(f, rng) for f in factors]
        deg: dict[int, int] = {}
        for fam in anchors:
            for x, y in fam:
                deg[x] = deg.get(x, 0) + 1
                deg[y] = deg.get(y, 0) + 1
        delta = max(deg.values(), default=0)
        if best_delta is None or delta < best_delta:
            best, best_delta = anchors, delta
        if delta <= 4 * n / k:
            return anchors, delta, attempt
    return best, best_delta, retry_cap


def complete_hamiltonian(factor: CycleFactor, host: EdgeColouredGraph, E1: EdgeColouredGraph, E2: EdgeColouredGraph,
                         E3: EdgeColouredGraph, DX: DirectedReserve, DY: DirectedReserve,
                         rng: np.random.Generator | None = None, lam: float = 0.1, anchors=None,
                         banned_edges=frozenset(), check: bool = True) -> HamiltonResult:
    """Turn a rainbow 2-factor into a rainbow Hamiltonian cycle.

    While there are two cycles: if the two shortest are both longer than
    lam * n they are joined with one edge of each of E1, E2, E3; otherwise the
    shortest is absorbed using its anchor, one E1-edge and out-arcs of DX, DY
    at the anchor.  Reserve edges whose colour is already on the factor, or
    that lie in ``banned_edges``, are ignored.
    """
    n = len(factor.vertices())
    colour_of = {e: host.colour(*e) for e in factor.edge_list()}
    used = set(colour_of.values())
    if check:
        reserve_colours = set(E1.colours()) | set(E2.colours()) | set(E3.colours()) | set(DX.graph.colours()) | set(DY.graph.colours())
        if reserve_colours & used:
            raise GraphError("reserves share a colour with the factor")
    cycles = [list(c) for c in factor.cycles]
    rng = rng if rng is not None else np.random.default_rng(0)
    anchors = list(anchors) if anchors is not None else choose_anchors(factor, rng)
    use = {"E1": 0, "E2": 0, "E3": 0, "DX": 0, "DY": 0}

    def edge_ok(graph: EdgeColouredGraph, u: int, v: int) -> bool:
        return norm(u, v) not in banned_edges and graph.colour(u, v) not in used

    steps = 0
    while len(cycles) > 1:
        edge_sets = [_cycle_edges(c) for c in cycles]
        live = [a for a in anchors if any(norm(*a) in es for es in edge_sets)]
        protected = {v for a in live for v in a}
        order = sorted(range(len(cycles)), key=lambda i: (len(cycles[i]), i))
        i0, i1 = order[0], order[1]
        try:
            if len(cycles[i0]) > lam * n and len(cycles[i1]) > lam * n:
                merged, new = join_two_cycles(cycles[i0], cycles[i1], E1, E2, E3, protected, rng, edge_ok)
                cycles = [c for i, c in enumerate(cycles) if i not in (i0, i1)] + [merged]
                roles = ("E1", "E2", "E3")
                sources = (E1, E2, E3)
            else:
                own = [a for a in live if norm(*a) in edge_sets[i0]]
                if not own:
                    raise RotationError("small cycle without an anchor", "no anchor")
                anchor = own[0]
                others = protected - set(anchor) if len(own) == 1 else {v for a in live if a != anchor for v in a}
                cycles, new = absorb_small_cycle(cycles, i0, anchor, E1, DX, DY, others, rng, edge_ok)
                anchors.remove(anchor)
                roles = ("DX", "DY", "E1")
                sources = (DX.graph, DY.graph, E1)
        except RotationError as exc:
            return HamiltonResult(CycleFactor(cycles), False, steps, steps, exc.bottleneck, use)
        for e, role, src in zip(new, roles, sources):
            c = src.colour(*e)
            colour_of[e] = c
            used.add(c)
            use[role] += 1
        steps += 1
    out = CycleFactor(cycles)
    return HamiltonResult(out, True, steps, None, "", use)


# -- pipelines -----------------------------------------------------------


@dataclass
class HamiltonFamily:
    cycles: list[CycleFactor]
    factors: list[CycleFactor]
    host: EdgeColouredGraph
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.cycles)


def large_colour_gate(colouring: EdgeColouredGraph, eps: float) -> tuple[bool, int, float]:
    """At most (1 - eps) n colours have at least (1 - eps) n / 2 edges."""
    n = colouring.n_vertices
    big = sum(1 for es in colouring.colour_classes().values() if len(es) >= (1 - eps) * n / 2 - 1e-9)
    return big <= (1 - eps) * n + 1e-9, big, (1 - eps) * n


def _reserves(J2: EdgeColouredGraph, config: PipelineConfig, rng: np.random.Generator):
    if config.reserve_mode == "shared":
        return J2, J2, J2, DirectedReserve.orient(J2, rng), DirectedReserve.orient(J2, rng)
    e1, e2, e3, dx, dy = split_colours(J2, (0.1, 0.1, 0.1, 0.35, 0.35), rng)
    return e1, e2, e3, DirectedReserve.orient(dx, rng), DirectedReserve.orient(dy, rng)


def hamiltonian_decomposition(colouring: EdgeColouredGraph, eps: float | None = None, config: PipelineConfig | None = None,
                              rng: np.random.Generator | None = None, check_gate: bool = True) -> HamiltonFamily:
    """Edge-disjoint rainbow Hamiltonian cycles of a properly coloured graph.

    Two colour-sampled reserves J1 and J2 are split off; the rest is cut into
    rainbow 2-factors with J1 as completion reserve, and each factor is closed
    into a Hamiltonian cycle using reserves drawn from J2 (edges used by
    earlier cycles are excluded).
    """
    config = config or PipelineConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    eps = config.tree_eps if eps is None else eps
    n = colouring.n_vertices
    ok, big, limit = large_colour_gate(colouring, eps)
    diag: dict = {"gate": {"passes": ok, "large_colours": big, "limit": limit}}
    if check_gate and not ok:
        raise GraphError(f"{big} colours have >= (1 - eps) n / 2 edges, allowed {limit:.1f}")
    if n == 3 and colouring.n_edges == 3 and len(colouring.colours()) == 3:
        tri = CycleFactor([[0, 1, 2]])
        return HamiltonFamily([tri], [tri], colouring, diag)
    J1, J2, G = split_colours(colouring, (config.j1_fraction, config.j2_fraction, 1 - config.j1_fraction - config.j2_fraction), rng)
    fam = two_factor_decomposition(G, J1, config, rng)
    diag["factors"] = fam.diagnostics
    e1, e2, e3, dx, dy = _reserves(J2, config, rng)
    diag["orientation_warnings"] = [w for w in (dx.warning, dy.warning) if w]
    anchors, delta, attempts = choose_anchor_family(fam.factors, config.factor_k, n, rng, config.anchor_retries)
    diag["anchor_max_degree"] = delta
    diag["anchor_attempts"] = attempts
    used_edges: set = set()
    cycles, failures = [], []
    for i, (factor, anc) in enumerate(zip(fam.factors, anchors or [])):
        res = complete_hamiltonian(factor, colouring, e1, e2, e3, dx, dy, rng, config.lam, anc, used_edges, check=False)
        if not res.success:
            failures.append({"index": i, "step": res.failed_step, "bottleneck": res.bottleneck})
            continue
        cyc = res.cycle
        if not verify(cyc, colouring, "hamiltonian_cycle").valid:
            raise GraphError("internal error: completed cycle failed verification")
        used_edges |= set(cyc.edge_list()) - set(factor.edge_list())
        cycles.append(cyc)
    diag["completed"] = len(cycles)
    diag["failures"] = failures
    if not verify_pairwise_disjoint(cycles).valid:
        raise GraphError("internal error: cycles share an edge")
    return HamiltonFamily(cycles, fam.factors, colouring, diag)
