"""The random edge-assignment round and the iterated nibble for rainbow matchings.

One round on a balanced bipartite graph with parts X, Y:

* every x in X is activated with probability alpha and, if active, picks a
  uniformly random incident edge;
* M is the set of picked edges that share neither their Y endpoint nor their
  colour with another picked edge;
* each edge xy is killed with probability alpha (b - |E(c(xy))|) / d(x);
* the survivor H keeps the edges whose colour was not picked and which were
  not killed, restricted to the vertices outside V(M).

Edges are held as numpy arrays sorted by X endpoint so a round is a handful
of vectorised passes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph_core import EdgeColouredGraph, GraphError, RainbowMatching, norm


@dataclass
class NibbleConfig:
    alpha: float = 0.05
    p: float = 0.1
    gamma: float | None = None  # default max(2 alpha, 10 / sqrt(n))
    ell: int = 1
    b_mode: str = "mean-degree"  # "mean-degree", "max-class" or "schedule"
    T: int | None = None  # default ceil(ln(1/p) / alpha)
    seed: int | None = None
    stop_on_violation: bool = False

    def rounds(self) -> int:
        if self.T is not None:
            return self.T
        if self.alpha <= 0:
            return 1
        return max(1, math.ceil(math.log(1 / self.p) / self.alpha - 1e-9))

    def gamma_for(self, n: int) -> float:
        if self.gamma is not None:
            return self.gamma
        return max(2 * self.alpha, 10 / math.sqrt(max(n, 1)))


@dataclass
class EdgeArrays:
    """Compact view of a bipartite coloured graph (X-sorted edge arrays)."""

    x_ids: np.ndarray  # local x index -> global vertex id
    y_ids: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    ec: np.ndarray  # compressed colour index
    colour_ids: np.ndarray  # compressed index -> colour id

    @classmethod
    def from_graph(cls, graph: EdgeColouredGraph) -> "EdgeArrays":
        if graph.bipartition is None:
            raise GraphError("the nibble needs a bipartite graph")
        xs = np.array(sorted(graph.bipartition[0]), dtype=np.int64)
        ys = np.array(sorted(graph.bipartition[1]), dtype=np.int64)
        xpos = {int(v): i for i, v in enumerate(xs)}
        ypos = {int(v): i for i, v in enumerate(ys)}
        items = []
        for (u, v), c in graph.colour_map.items():
            if u in xpos:
                items.append((xpos[u], ypos[v], c))
            else:
                items.append((xpos[v], ypos[u], c))
        items.sort()
        if items:
            arr = np.array(items, dtype=np.int64)
            colour_ids, ec = np.unique(arr[:, 2], return_inverse=True)
            return cls(xs, ys, arr[:, 0].copy(), arr[:, 1].copy(), ec.astype(np.int64), colour_ids)
        empty = np.zeros(0, dtype=np.int64)
        return cls(xs, ys, empty, empty.copy(), empty.copy(), empty.copy())

    @property
    def n(self) -> int:
        return len(self.x_ids)

    def edge_pairs(self, idx) -> list[tuple[int, int]]:
        return [norm(int(self.x_ids[self.ex[i]]), int(self.y_ids[self.ey[i]])) for i in idx]


@dataclass
class RoundStats:
    n_x: int
    n_y: int
    edges: int
    min_degree: int
    max_degree: int
    global_bound: int
    matching_size: int
    gamma_observed: float
    delta_observed: float
    clamped: int
    violation: bool = False

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _round(
    ex: np.ndarray, ey: np.ndarray, ec: np.ndarray, alive_x: np.ndarray, alive_y: np.ndarray,
    n_colours: int, alpha: float, b: float | None, rng: np.random.Generator,
):
    """One round on index arrays.  Returns (matching edge positions, keep mask, b used, clamped count)."""
    nx_ = len(alive_x)
    degx = np.bincount(ex, minlength=nx_)
    active = (rng.random(nx_) < alpha) & (degx > 0)
    start = np.cumsum(degx) - degx
    act = np.nonzero(active)[0]
    picks = start[act] + np.floor(rng.random(len(act)) * degx[act]).astype(np.int64)
    ycount = np.bincount(ey[picks], minlength=len(alive_y))
    ccount = np.bincount(ec[picks], minlength=n_colours)
    good = (ycount[ey[picks]] == 1) & (ccount[ec[picks]] == 1)
    m_idx = picks[good]
    sizes = np.bincount(ec, minlength=n_colours)
    if b is None:
        b = float(sizes.max()) if len(sizes) else 0.0
    elif b < 0:
        # observed delta_t n_t: mean degree over X vertices that still have edges
        b = len(ex) / max(int((degx > 0).sum()), 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        kill_p = alpha * (b - sizes[ec]) / degx[ex]
    clamped = int(((kill_p < 0) | (kill_p > 1)).sum())
    kill_p = np.clip(kill_p, 0.0, 1.0)
    killed = rng.random(len(ex)) < kill_p
    survive = (ccount[ec] == 0) & ~killed
    mx = np.zeros(nx_, dtype=bool)
    my = np.zeros(len(alive_y), dtype=bool)
    mx[ex[m_idx]] = True
    my[ey[m_idx]] = True
    keep = survive & ~mx[ex] & ~my[ey]
    return m_idx, keep, mx, my, b, clamped


@dataclass
class RoundOutcome:
    matching: RainbowMatching
    survivor: EdgeColouredGraph
    gamma_observed: float
    delta_observed: float
    bound_observed: int
    clamped: int = 0


def edge_assignment_round(graph: EdgeColouredGraph, alpha: float, b: float, rng: np.random.Generator, strict: bool = True) -> RoundOutcome:
    """One (alpha, b)-random edge assignment on ``graph``.

    With ``strict`` a kill probability outside [0, 1] raises GraphError naming
    the edge; otherwise probabilities are clamped with a warning.
    """
    arr = EdgeArrays.from_graph(graph)
    if strict and len(arr.ex):
        degx = np.bincount(arr.ex, minlength=arr.n)
        sizes = np.bincount(arr.ec, minlength=len(arr.colour_ids))
        kp = alpha * (b - sizes[arr.ec]) / degx[arr.ex]
        bad = np.nonzero((kp < -1e-12) | (kp > 1 + 1e-12))[0]
        if len(bad):
            e = arr.edge_pairs(bad[:1])[0]
            raise GraphError(f"kill probability {kp[bad[0]]:.3f} outside [0, 1] for edge {e}")
    alive_x = np.ones(arr.n, dtype=bool)
    alive_y = np.ones(arr.n, dtype=bool)
    m_idx, keep, mx, my, b_used, clamped = _round(arr.ex, arr.ey, arr.ec, alive_x, alive_y, len(arr.colour_ids), alpha, b, rng)
    if clamped and not strict:
        warnings.warn(f"{clamped} kill probabilities clamped to [0, 1]")
    m_edges = arr.edge_pairs(m_idx)
    surv_idx = np.nonzero(keep)[0]
    col = {}
    for i in surv_idx:
        col[norm(int(arr.x_ids[arr.ex[i]]), int(arr.y_ids[arr.ey[i]]))] = int(arr.colour_ids[arr.ec[i]])
    rest_x = [int(v) for v, m in zip(arr.x_ids, mx) if not m]
    rest_y = [int(v) for v, m in zip(arr.y_ids, my) if not m]
    survivor = EdgeColouredGraph(graph.n_vertices, col, (rest_x, rest_y), check=False)
    stats = _survivor_stats(arr.ex[keep], arr.ec[keep], ~mx)
    return RoundOutcome(RainbowMatching(m_edges), survivor, stats[0], stats[1], stats[2], clamped)


def _survivor_stats(kx: np.ndarray, kc: np.ndarray, alive_x: np.ndarray):
    """(degree spread relative to the mean, mean degree / n_x, global bound, min degree, max degree)."""
    n_x = int(alive_x.sum())
    if n_x == 0:
        return 0.0, 0.0, 0, 0, 0
    degx = np.bincount(kx, minlength=len(alive_x))[alive_x]
    mean = float(degx.mean())
    spread = float(max(degx.max() - mean, mean - degx.min()) / mean) if mean > 0 else 0.0
    gb = int(np.bincount(kc).max()) if len(kc) else 0
    return spread, mean / n_x, gb, int(degx.min()), int(degx.max())


@dataclass
class NibbleResult:
    matching: RainbowMatching
    trajectory: list[RoundStats]
    leftover_x: list[int]
    leftover_y: list[int]
    rounds_run: int
    stopped_early: bool
    violations: int
    edge_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def conservation_holds(self, n_vertices: int) -> bool:
        return n_vertices == len(self.leftover_x) + len(self.leftover_y) + 2 * len(self.matching)

    def trajectory_json(self) -> list[dict]:
        return [r.to_json() for r in self.trajectory]


def near_perfect_rainbow_matching(
    graph: EdgeColouredGraph | EdgeArrays, config: NibbleConfig | None = None, rng: np.random.Generator | None = None
) -> NibbleResult:
    """Iterate the random edge assignment T times and return the union of the round matchings.

    The per-round bound b is the observed mean degree of H_t (the empirical
    delta_t n_t) under the default ``b_mode`` "mean-degree"; kill
    probabilities of colour classes larger than b are clamped to 0.  "max-class"
    uses the largest colour class (no clamping ever needed) and "schedule"
    uses (1 + gamma_t) delta_t n_t with gamma_t = exp(35 alpha t) gamma,
    delta_t = exp(-alpha t) delta and n_t = exp(-alpha t) n.  Rounds whose survivor leaves the
    envelope are flagged; with ``stop_on_violation`` the process halts there.

    ``edge_index`` in the result lists the matched edges as positions in the
    X-sorted edge arrays, which lets callers tally per-edge frequencies.
    """
    config = config or NibbleConfig()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    arr = graph if isinstance(graph, EdgeArrays) else EdgeArrays.from_graph(graph)
    n = arr.n
    n_colours = len(arr.colour_ids)
    T = config.rounds()
    gamma = config.gamma_for(n)
    alpha = config.alpha
    delta = (len(arr.ex) / (n * n)) if n else 0.0

    # live edges are tracked as positions into the original arrays
    pos = np.arange(len(arr.ex))
    alive_x = np.ones(n, dtype=bool)
    alive_y = np.ones(n, dtype=bool)
    matched: list[np.ndarray] = []
    trajectory: list[RoundStats] = []
    violations = 0
    stopped = False
    rounds_run = 0
    for t in range(T):
        ex, ey, ec = arr.ex[pos], arr.ey[pos], arr.ec[pos]
        if config.b_mode == "schedule":
            g_t = math.exp(35 * alpha * t) * gamma
            b = (1 + g_t) * math.exp(-2 * alpha * t) * delta * n
        elif config.b_mode == "max-class":
            b = None
        elif config.b_mode == "mean-degree":
            b = -1.0
        else:
            raise GraphError(f"unknown b_mode {config.b_mode!r}")
        m_idx, keep, mx, my, b_used, clamped = _round(ex, ey, ec, alive_x, alive_y, n_colours, alpha, b, rng)
        matched.append(pos[m_idx])
        alive_x &= ~mx
        alive_y &= ~my
        pos = pos[keep]
        rounds_run += 1

        n_x, n_y = int(alive_x.sum()), int(alive_y.sum())
        spread, delta_obs, gb, dmin, dmax = _survivor_stats(arr.ex[pos], arr.ec[pos], alive_x)
        g_next = math.exp(35 * alpha * (t + 1)) * gamma
        d_next = math.exp(-alpha * (t + 1)) * delta
        n_next = math.exp(-alpha * (t + 1)) * n
        target_deg = d_next * n_next
        violation = bool(
            n_x
            and (
                dmin < (1 - g_next) * target_deg - 1e-9
                or dmax > (1 + g_next) * target_deg + 1e-9
                or gb > (1 + g_next) * d_next * n_next + 1e-9
            )
        )
        violations += violation
        trajectory.append(
            RoundStats(
                n_x=n_x, n_y=n_y, edges=int(len(pos)),
                min_degree=dmin, max_degree=dmax,
                global_bound=gb, matching_size=int(len(m_idx)),
                gamma_observed=spread, delta_observed=delta_obs,
                clamped=clamped, violation=violation,
            )
        )
        if violation and config.stop_on_violation:
            stopped = True
            break
    idx = np.concatenate(matched) if matched else np.zeros(0, dtype=np.int64)
    m = RainbowMatching(arr.edge_pairs(idx))
    left_x = [int(v) for v, a in zip(arr.x_ids, alive_x) if a]
    left_y = [int(v) for v, a in zip(arr.y_ids, alive_y) if a]
    return NibbleResult(m, trajectory, left_x, left_y, rounds_run, stopped, violations, np.sort(idx))
