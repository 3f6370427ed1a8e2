"""Run reports: what was run, on what, with which settings, and what verified."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph_core import EdgeColouredGraph, Structure, dumps, verify, verify_pairwise_disjoint


def jsonable(obj):
    """Recursively turn sets, tuples, numpy scalars and odd dict keys into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return [jsonable(x) for x in sorted(obj, key=repr)]
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_json"):
        return jsonable(obj.to_json())
    if hasattr(obj, "__dataclass_fields__"):
        return jsonable(obj.__dict__)
    return obj


@dataclass
class DecompositionReport:
    pipeline: str
    instance: dict
    config: dict
    status: str = "ok"
    family_sizes: list[int] = field(default_factory=list)
    verification: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)
    timings: list[float] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status == "ok" and not self.failures

    def add_trial(self, structures: Sequence[Structure], host: EdgeColouredGraph, kind: str, diagnostics: dict,
                  seconds: float, **verify_kw) -> None:
        """Verify one trial's family; only passing structures enter the verification section."""
        passed = []
        for i, s in enumerate(structures):
            rep = verify(s, host, kind, **verify_kw)
            if rep.valid:
                passed.append({"index": i, "kind": kind, "size": len(s.edges)})
            else:
                self.failures.append(f"trial {len(self.family_sizes)} structure {i}: {sorted(rep.codes())}")
        disjoint = verify_pairwise_disjoint(list(structures))
        if not disjoint.valid:
            self.failures.append(f"trial {len(self.family_sizes)}: {len(disjoint.violations)} shared edges")
        if self.failures and self.status == "ok":
            self.status = "failed-verification"
        self.family_sizes.append(len(structures))
        self.verification.append({"trial": len(self.verification), "passed": passed, "pairwise_disjoint": disjoint.valid})
        self.diagnostics.append(jsonable(diagnostics))
        self.timings.append(round(seconds, 4))

    def to_json(self, timings: bool = True) -> dict:
        out = {
            "pipeline": self.pipeline,
            "instance": self.instance,
            "config": self.config,
            "status": self.status if not self.failures else "failed-verification",
            "family_sizes": self.family_sizes,
            "mean_family_size": float(np.mean(self.family_sizes)) if self.family_sizes else 0.0,
            "verification": self.verification if not self.failures else [],
            "failures": self.failures,
            "diagnostics": self.diagnostics,
        }
        if timings:
            out["timings"] = self.timings
        return jsonable(out)

    def dumps(self, timings: bool = True) -> str:
        return dumps(self.to_json(timings))


def structures_json(trials: Sequence[Sequence[Structure]]) -> str:
    """Structure file text: one list of structures per trial, in stable order."""
    return dumps({"trials": [[s.to_json() for s in fam] for fam in trials]})
