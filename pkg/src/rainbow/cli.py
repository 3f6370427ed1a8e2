"""Command-line harness: generate instances, run pipelines, verify, sweep parameters.

Seed streams: the instance is built from ``default_rng([seed, 0])`` and trial t
runs on ``default_rng([seed, t + 1])``, so any single trial can be replayed
from the master seed and its index.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import generators, oracle
from .config import PipelineConfig
from .graph_core import (
    EdgeColouredGraph,
    GeneralizedLatinSquare,
    GraphError,
    bipartite_to_square,
    dumps,
    graph_from_json,
    read_graph_text,
    read_square_csv,
    square_to_bipartite,
    structure_from_json,
    verify,
    verify_pairwise_disjoint,
    write_graph_text,
    write_square_csv,
)
from .hamilton import circulant_decomposition, hamiltonian_decomposition, is_prime, large_colour_gate
from .matchings import GateResult, HypothesisError, few_large_colours_gate, knn_transversal_pipeline, many_colours_gate
from .nibble import near_perfect_rainbow_matching
from .pseudorandom import boundedness
from .regularize import DegreeSequencePair, gale_ryser_realize, regular_bipartite_subgraph
from .report import DecompositionReport, jsonable, structures_json
from .trees import spanning_tree_decomposition

PIPELINES = ("transversals", "hamilton", "trees", "nibble")
KIND_ALIASES = {"round-robin": "onefactorization-kn", "square": "generalized-square"}


def instance_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, 0])


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial + 1])


# -- instances -------------------------------------------------------------


def generate(kind: str, n: int, rng: np.random.Generator, symbols: int | None = None):
    kind = KIND_ALIASES.get(kind, kind)
    if kind == "onefactorization-knn":
        return generators.onefactorization_knn(n)
    if kind == "onefactorization-kn":
        return generators.round_robin_kn(n)
    if kind == "circulant":
        return generators.circulant_colouring(n)
    if kind == "generalized-square":
        return generators.generalized_square(n, n if symbols is None else symbols, rng)
    raise GraphError(f"unknown instance kind {kind!r}; choose from {', '.join(generators.GENERATOR_KINDS)}")


def parse_generate(spec: str, rng: np.random.Generator):
    """``kind:n`` or ``kind:n:symbols``."""
    parts = spec.split(":")
    if len(parts) not in (2, 3):
        raise GraphError(f"bad --generate spec {spec!r}; expected kind:n[:symbols]")
    symbols = int(parts[2]) if len(parts) == 3 else None
    return generate(parts[0], int(parts[1]), rng, symbols), {"generated": spec}


def load_instance(path: str):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise GraphError(f"cannot read {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return graph_from_json(json.loads(text)), {"file": str(p)}
        except (ValueError, KeyError) as exc:
            raise GraphError(f"malformed JSON graph {path}: {exc}") from exc
    if stripped.startswith("n"):
        return read_graph_text(text), {"file": str(p)}
    return read_square_csv(text), {"file": str(p)}


def resolve_instance(args) -> tuple[GeneralizedLatinSquare | EdgeColouredGraph, dict]:
    if getattr(args, "input", None):
        return load_instance(args.input)
    if getattr(args, "generate", None):
        return parse_generate(args.generate, instance_rng(args.seed))
    raise GraphError("give an instance with --input FILE or --generate kind:n[:symbols]")


def as_graph(inst) -> EdgeColouredGraph:
    return square_to_bipartite(inst) if isinstance(inst, GeneralizedLatinSquare) else inst


def instance_text(inst) -> str:
    if isinstance(inst, GeneralizedLatinSquare):
        return write_square_csv(inst)
    return write_graph_text(inst)


# -- config ----------------------------------------------------------------


def load_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if getattr(args, "config", None):
        config = PipelineConfig.from_text(Path(args.config).read_text())
    sets = dict(s.split("=", 1) for s in (getattr(args, "set", None) or []))
    if sets:
        config = PipelineConfig.from_pairs(sets, config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    return config.replace(**changes) if changes else config


# -- pipelines -------------------------------------------------------------


def drive(pipeline: str, inst, config: PipelineConfig, rng: np.random.Generator, mode: str = "pipeline"):
    """Run one trial; returns (structures, verification kind, host graph, diagnostics, verify kwargs)."""
    if pipeline == "transversals":
        host = as_graph(inst)
        fam = knn_transversal_pipeline(host, config.epsilon, config, rng)
        return fam.matchings, "perfect_matching", host, fam.diagnostics, {}
    if pipeline == "nibble":
        host = as_graph(inst)
        res = near_perfect_rainbow_matching(host, config.nibble(), rng)
        diag = {"rounds": res.rounds_run, "violations": res.violations, "size": len(res.matching),
                "conservation": res.conservation_holds(host.n_vertices), "trajectory": res.trajectory_json()}
        return [res.matching], "matching", host, diag, {}
    if pipeline == "hamilton":
        if mode == "circulant":
            n = inst.n_vertices
            host, cycles = circulant_decomposition(n)
            return cycles, "hamiltonian_cycle", host, {"mode": "circulant", "n": n, "exact": len(cycles) == (n - 1) // 2}, {}
        host = as_graph(inst)
        ok, big, limit = large_colour_gate(host, config.tree_eps)
        if not ok:
            gate = GateResult(False, len(host.colours()), big, limit, f"{big} large colours, allowed {limit:.1f}")
            raise HypothesisError("few-large-colours hypothesis fails", gate)
        fam = hamiltonian_decomposition(host, config.tree_eps, config, rng)
        diag = dict(fam.diagnostics)
        diag["two_factors"] = len(fam.factors)
        return fam.cycles, "hamiltonian_cycle", host, diag, {}
    if pipeline == "trees":
        host = as_graph(inst)
        fam = spanning_tree_decomposition(host, config.tree_eps, config, rng)
        diag = dict(fam.diagnostics)
        diag["partial_trees"] = len(fam.partial)
        return fam.trees, "spanning_tree", host, diag, {}
    raise GraphError(f"unknown pipeline {pipeline!r}; choose from {', '.join(PIPELINES)}")


def execute(pipeline: str, inst, descriptor: dict, config: PipelineConfig, mode: str = "pipeline"):
    """All trials of one pipeline; returns (report, per-trial structure lists)."""
    report = DecompositionReport(pipeline, descriptor, jsonable(config.to_json()))
    families = []
    for t in range(max(1, config.trials)):
        rng = trial_rng(config.seed, t)
        start = time.perf_counter()
        try:
            structures, kind, host, diag, kw = drive(pipeline, inst, config, rng, mode)
        except HypothesisError as exc:
            report.status = "rejected-hypothesis"
            report.diagnostics.append({"error": str(exc), "gate": jsonable(exc.gate.__dict__)})
            families.append([])
            continue
        report.add_trial(structures, host, kind, diag, time.perf_counter() - start, **kw)
        families.append(list(structures))
    return report, families


def exit_code(report: DecompositionReport) -> int:
    if report.status == "rejected-hypothesis":
        return 2
    return 0 if report.success else 1


def emit(args, text: str) -> None:
    if args.json_out:
        Path(args.json_out).write_text(text)
    if not args.quiet:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _pipeline_command(args, pipeline: str, mode: str = "pipeline") -> int:
    config = load_config(args)
    if pipeline == "hamilton" and mode == "circulant":
        n = args.n
        if n is None:
            inst, _ = resolve_instance(args)
            n = as_graph(inst).n_vertices
        inst, descriptor = generators.circulant_colouring(n), {"circulant": n, "prime": is_prime(n)}
    else:
        inst, descriptor = resolve_instance(args)
    report, families = execute(pipeline, inst, descriptor, config, mode)
    if args.structures_out:
        Path(args.structures_out).write_text(structures_json(families))
    emit(args, report.dumps())
    return exit_code(report)


# -- subcommands -----------------------------------------------------------


def cmd_generate(args) -> int:
    inst = generate(args.kind, args.n, instance_rng(args.seed), args.symbols)
    text = instance_text(inst)
    if args.out:
        Path(args.out).write_text(text)
    if args.json_out:
        Path(args.json_out).write_text(dumps({"kind": args.kind, "n": args.n, "symbols": args.symbols,
                                              "colours": len(as_graph(inst).colours())}))
    if not args.quiet and not args.out:
        sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    return _pipeline_command(args, args.pipeline, args.mode)


def cmd_hamilton(args) -> int:
    return _pipeline_command(args, "hamilton", args.mode)


def cmd_trees(args) -> int:
    return _pipeline_command(args, "trees")


def cmd_transversals(args) -> int:
    return _pipeline_command(args, "transversals")


def cmd_bench(args) -> int:
    """Grid sweep: one CSV row per parameter point with its own seed stream."""
    base = load_config(args)
    inst, _ = resolve_instance(args)
    grid = []
    for item in args.sweep or []:
        key, values = item.split("=", 1)
        grid.append((key, [v for v in values.split(",") if v]))
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    keys = [k for k, _ in grid]
    writer.writerow(keys + ["trials", "success_rate", "mean_family_size", "mean_structure_size", "runtime_s"])
    if grid:
        for point, values in enumerate(itertools.product(*[vs for _, vs in grid])):
            config = PipelineConfig.from_pairs(dict(zip(keys, values)), base).replace(seed=base.seed + point)
            start = time.perf_counter()
            report, families = execute(args.pipeline, inst, {}, config, args.mode)
            elapsed = time.perf_counter() - start
            trials = len(report.family_sizes)
            ok = 1.0 if report.success else 0.0
            mean = float(np.mean(report.family_sizes)) if report.family_sizes else 0.0
            sizes = [len(s.edges) for fam in families for s in fam]
            size = float(np.mean(sizes)) if sizes else 0.0
            writer.writerow(list(values) + [trials, f"{ok:.3f}", f"{mean:.3f}", f"{size:.3f}", f"{elapsed:.3f}"])
    text = out.getvalue()
    if args.csv_out:
        Path(args.csv_out).write_text(text)
    emit(args, text)
    return 0


def census(graph: EdgeColouredGraph, eps: float) -> dict:
    sizes = sorted((len(es) for es in graph.colour_classes().values()), reverse=True)
    out = {
        "vertices": graph.n_vertices,
        "edges": graph.n_edges,
        "colours": len(sizes),
        "proper": graph.is_proper(),
        "bipartite": graph.bipartition is not None,
        "largest_colour_classes": sizes[:10],
        "boundedness": boundedness(graph).__dict__,
    }
    if graph.bipartition is not None:
        out["many_colours_gate"] = many_colours_gate(graph, eps).__dict__
        out["few_large_colours_gate"] = few_large_colours_gate(graph, eps).__dict__
    else:
        ok, big, limit = large_colour_gate(graph, eps)
        out["few_large_colours"] = {"passes": ok, "large_colours": big, "limit": limit}
    return jsonable(out)


def cmd_check(args) -> int:
    config = load_config(args)
    inst, descriptor = resolve_instance(args)
    eps = args.eps if args.eps is not None else config.epsilon
    info = census(as_graph(inst), eps)
    info["instance"] = descriptor
    emit(args, dumps(info))
    return 0 if info["proper"] else 1


def cmd_verify(args) -> int:
    inst, _ = resolve_instance(args)
    host = as_graph(inst)
    data = json.loads(Path(args.structures).read_text())
    trials = data["trials"] if "trials" in data else [data["structures"]]
    results = []
    ok = True
    for t, fam in enumerate(trials):
        structs = [structure_from_json(s) for s in fam]
        reps = [verify(s, host, args.kind) for s in structs]
        disjoint = verify_pairwise_disjoint(structs)
        ok = ok and disjoint.valid and all(r.valid for r in reps)
        results.append({"trial": t, "structures": [r.to_json() for r in reps], "pairwise_disjoint": disjoint.valid})
    emit(args, dumps({"valid": ok, "trials": results}))
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    inst, _ = resolve_instance(args)
    if args.op == "max-matching":
        res = oracle.max_rainbow_matching(as_graph(inst))
    elif args.op in ("transversals", "disjoint"):
        square = inst if isinstance(inst, GeneralizedLatinSquare) else bipartite_to_square(inst)
        res = oracle.enumerate_transversals(square) if args.op == "transversals" else oracle.max_disjoint_transversals(square)
    else:
        res = oracle.rainbow_hamiltonian_exists(as_graph(inst))
    emit(args, dumps(res.to_json()))
    return 0


def cmd_regularize(args) -> int:
    if args.degrees:
        xs, ys = args.degrees.split(";")
        pair = DegreeSequencePair([int(a) for a in xs.split(",") if a], [int(b) for b in ys.split(",") if b])
        res = gale_ryser_realize(pair)
        emit(args, dumps(jsonable(res.__dict__)))
        return 0 if res.feasible else 1
    inst, _ = resolve_instance(args)
    graph = as_graph(inst)
    d = args.degree if args.degree is not None else graph.min_degree()
    res = regular_bipartite_subgraph(graph, d)
    out = {"d": d, "feasible": res.feasible, "witness": res.witness,
           "edges": res.graph.n_edges if res.feasible else 0}
    if res.feasible and args.out:
        Path(args.out).write_text(write_graph_text(res.graph))
    emit(args, dumps(jsonable(out)))
    return 0 if res.feasible else 1


# -- parser ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with bad input; 2 is kept for rejected hypotheses
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default: config seed, 0)")
    common.add_argument("--trials", type=int, default=None, help="independent trials per run")
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config field")
    common.add_argument("--json-out", help="also write the JSON output here")
    common.add_argument("--quiet", action="store_true", help="print nothing on stdout")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--input", help="instance file (square CSV, graph text or graph JSON)")
    source.add_argument("--generate", help="build an instance: kind:n[:symbols]")

    parser = _Parser(prog="rainbow", description="Rainbow decompositions of edge-coloured graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write an instance")
    p.add_argument("kind", help="onefactorization-knn | onefactorization-kn | generalized-square | circulant")
    p.add_argument("n", type=int)
    p.add_argument("--symbols", type=int, help="target symbol count for generalized squares")
    p.add_argument("--out", help="instance file to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", parents=[common, source], help="run a pipeline and verify its output")
    p.add_argument("pipeline", choices=PIPELINES)
    p.add_argument("--mode", choices=("pipeline", "circulant"), default="pipeline")
    p.add_argument("--n", type=int, help="vertex count for the circulant mode")
    p.add_argument("--structures-out", help="write the emitted structures here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", parents=[common, source], help="parameter sweep to CSV")
    p.add_argument("pipeline", choices=PIPELINES)
    p.add_argument("--sweep", action="append", metavar="KEY=V1,V2,...", help="one grid axis")
    p.add_argument("--mode", choices=("pipeline", "circulant"), default="pipeline")
    p.add_argument("--csv-out", help="CSV file to write")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", parents=[common, source], help="colour census and hypothesis gates")
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", parents=[common, source], help="verify a structure file against an instance")
    p.add_argument("structures")
    p.add_argument("--kind", choices=("matching", "perfect_matching", "cycle_factor", "hamiltonian_cycle",
                                       "forest", "spanning_tree"))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", parents=[common, source], help="exhaustive baselines for small instances")
    p.add_argument("op", choices=("max-matching", "transversals", "disjoint", "hamiltonian"))
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("regularize", parents=[common, source], help="regular subgraphs and Gale-Ryser realization")
    p.add_argument("--degree", type=int)
    p.add_argument("--degrees", help="Gale-Ryser pair 'x1,x2,...;y1,y2,...'")
    p.add_argument("--out", help="write the regular subgraph here")
    p.set_defaults(func=cmd_regularize)

    p = sub.add_parser("hamilton", parents=[common, source], help="rainbow Hamiltonian cycles")
    p.add_argument("--mode", choices=("circulant", "pipeline"), default="pipeline")
    p.add_argument("--n", type=int, help="vertex count for the circulant mode")
    p.add_argument("--structures-out")
    p.set_defaults(func=cmd_hamilton)

    p = sub.add_parser("trees", parents=[common, source], help="spanning rainbow trees of a coloured K_n")
    p.add_argument("--structures-out")
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("transversals", parents=[common, source], help="disjoint transversals of a square")
    p.add_argument("--structures-out")
    p.set_defaults(func=cmd_transversals)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is None:
            args.seed = load_config(args).seed
        return args.func(args)
    except (GraphError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
