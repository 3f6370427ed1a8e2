"""Pipeline configuration: every free constant in one place, with desk-scale defaults.

The asymptotic arguments leave most constants unspecified; the defaults below
are desk-scale heuristics chosen so that runs with n in the tens to low
hundreds behave sensibly.  All of them can be overridden from a flat
``key=value`` config file or the command line.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .nibble import NibbleConfig


@dataclass
class PipelineConfig:
    # nibble
    alpha: float = 0.05
    p: float = 0.1
    gamma: float | None = None
    ell: int = 1
    b_mode: str = "mean-degree"
    rounds: int | None = None
    stop_on_violation: bool = False
    # near-decomposition into matchings
    k: int = 10  # re-regularize every k steps of the descending process
    nu: float = 0.02  # stop the descending process at degree nu * D
    reserve_p: float = 0.02  # density parameter of the dense complement reserve
    greedy_finish: bool = True  # extend each nibble matching greedily by leftover edges
    spread_p: float = 0.005  # the spread-out step targets (1 - 100 p) t
    # completion reserves (fractions of the reserve graph's colours)
    reserve_e: float = 0.5
    reserve_dx: float = 0.25
    reserve_dy: float = 0.25
    reserve_mode: str = "shared"  # "shared" lets all three roles draw on the whole reserve
    # transversal pipeline
    epsilon: float = 0.001
    sigma: float = 0.1
    j_fraction: float = 0.15  # colour share sampled off as the completion reserve
    # 2-factors and Hamiltonian cycles
    factor_k: int = 5
    lam: float = 0.1
    j1_fraction: float = 0.4
    j2_fraction: float = 0.15
    # trees
    tree_eps: float = 0.1
    eta: float = 0.15  # edge-sample rate of the completion reserve H
    tree_nu: float = 0.1  # share of vertices left outside the core set S
    cover_k: int = 8
    # retry caps
    retry_cap: int = 20
    anchor_retries: int = 10
    design_retries: int = 5
    # run control
    seed: int = 0
    trials: int = 1

    def nibble(self, seed: int | None = None) -> NibbleConfig:
        return NibbleConfig(
            alpha=self.alpha, p=self.p, gamma=self.gamma, ell=self.ell, b_mode=self.b_mode,
            T=self.rounds, seed=seed, stop_on_violation=self.stop_on_violation,
        )

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_pairs(cls, pairs: dict[str, str], base: "PipelineConfig | None" = None) -> "PipelineConfig":
        base = base or cls()
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        changes = {}
        for key, raw in pairs.items():
            key = key.strip().replace("-", "_")
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            changes[key] = _parse(raw.strip(), types[key])
        return dataclasses.replace(base, **changes)

    @classmethod
    def from_text(cls, text: str, base: "PipelineConfig | None" = None) -> "PipelineConfig":
        pairs = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            pairs[key] = value
        return cls.from_pairs(pairs, base)


def _parse(raw: str, typ: str):
    if raw.lower() in ("none", "null", ""):
        if "None" in typ:
            return None
        raise ValueError(f"value required for type {typ}")
    if typ.startswith("bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typ.startswith("int"):
        return int(raw)
    if typ.startswith("float"):
        return float(raw)
    return raw
