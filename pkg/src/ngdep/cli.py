"""Command-line interface.

Subcommands
-----------
gen       generate a model, a sample and the reference DEP
pc        run PC on a dataset (or with the d-separation oracle)
discover  DSEP to DEP with the ancestral-relationship method
baseline  DSEP to DEP with PC-LiNGAM
bench     timing and accuracy table over (p, n) cells
check     compare a DEP with a DSEP
repair    fix a DEP that disagrees with its DSEP

Files written for identical flags and seed are byte-identical; elapsed
times go to stderr only.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from ngdep import bench, serialize
from ngdep.depfind import Dep, PairTestError, check_consistency, find_dep, repair_exceptions
from ngdep.graph import GraphError, to_dot
from ngdep.pc import Dsep, run_pc
from ngdep.pclingam import DEFAULT_MAX_ENUM, EnumerationLimitError, oracle_dep, run_pc_lingam
from ngdep.providers import Providers, data_providers, oracle_providers
from ngdep.stats import Dataset, InputError, NumericalError, TestConfig
from ngdep.synth import random_complete_ngdag, random_ngdag, sample

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_ERROR = 2


@dataclass(frozen=True)
class RunConfig:
    """Everything one discovery run needs besides the DSEP."""

    method: str
    oracle: bool
    tests: TestConfig
    seed: int = 0
    repair: bool = False
    data: Path | None = None
    model: Path | None = None

    def __post_init__(self):
        if self.method not in bench.METHODS:
            raise InputError(f"unknown method {self.method!r}")
        if self.oracle and self.model is None:
            raise InputError("--oracle needs --model")
        if not self.oracle and self.data is None:
            raise InputError("data mode needs --data (or use --oracle --model)")


# ---------------------------------------------------------------------------
# helpers


def _tests(args) -> TestConfig:
    return TestConfig(args.alpha_gauss, args.alpha_indep, args.alpha_ci, args.hsic_subsample, args.seed)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _providers(cfg: RunConfig) -> tuple[Providers, tuple[str, ...]]:
    if cfg.oracle:
        model = serialize.read_model(cfg.model)
        return oracle_providers(model), model.dag.vertex_names()
    data = Dataset.from_csv(cfg.data)
    return data_providers(data, cfg.tests), data.names


def _dsep_for(args, prov: Providers, names) -> Dsep:
    if args.dsep:
        dsep = serialize.read_dsep(args.dsep)
        if dsep.graph.vertex_names() != tuple(names):
            raise GraphError(
                f"DSEP nodes {list(dsep.graph.vertex_names())} do not match the variables {list(names)}"
            )
        return dsep
    return run_pc(prov.ci, len(names), names=names)


def _write_graph_outputs(dep: Dep, args) -> None:
    _emit(serialize.dumps(serialize.dep_to_dict(dep)), args.out)
    if args.dot:
        Path(args.dot).write_text(to_dot(dep.graph))


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    if args.mode == "complete":
        model = random_complete_ngdag(args.p, seed=args.seed, signs=args.signs)
    else:
        model = random_ngdag(args.p, args.density, seed=args.seed, signs=args.signs)
    data = sample(model, args.n, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data.to_csv(out / "data.csv")
    serialize.write_model(model, out / "model.json")
    serialize.write_dep(oracle_dep(model), out / "oracle_dep.json")
    if args.dot:
        Path(args.dot).write_text(to_dot(model.dag))
    print(f"wrote {out / 'data.csv'}, {out / 'model.json'}, {out / 'oracle_dep.json'}", file=sys.stderr)
    return EXIT_OK


def cmd_pc(args) -> int:
    cfg = RunConfig("proposed", args.oracle, _tests(args), args.seed, data=args.data, model=args.model)
    prov, names = _providers(cfg)
    dsep = run_pc(prov.ci, len(names), max_cond=args.max_cond, stable=args.stable, names=names)
    _emit(serialize.dumps(serialize.dsep_to_dict(dsep)), args.out)
    if args.dot:
        Path(args.dot).write_text(to_dot(dsep.graph))
    print(f"pc: {prov.ci.calls} CI tests", file=sys.stderr)
    return EXIT_OK


def _discover(args, method: str) -> int:
    cfg = RunConfig(method, args.oracle, _tests(args), args.seed, getattr(args, "repair", False),
                    args.data, args.model)
    prov, names = _providers(cfg)
    dsep = _dsep_for(args, prov, names)
    t0 = time.perf_counter()
    if method == bench.PROPOSED:
        dep = find_dep(dsep, prov.gauss, prov.indep)
    else:
        dep = run_pc_lingam(dsep, prov.gauss, prov.indep if cfg.oracle else None, max_enum=args.max_enum)
    if cfg.repair:
        dep = repair_exceptions(dep, dsep, seed=cfg.seed)
    elapsed = time.perf_counter() - t0
    _write_graph_outputs(dep, args)
    print(f"{method}: {json.dumps(dep.log, sort_keys=True)} elapsed={elapsed:.3f}s", file=sys.stderr)
    return EXIT_OK


def cmd_discover(args) -> int:
    return _discover(args, bench.PROPOSED)


def cmd_baseline(args) -> int:
    return _discover(args, bench.PCLINGAM)


def cmd_bench(args) -> int:
    records, notes = bench.run_bench(
        args.p, args.n, args.iters, args.methods, args.seed, _tests(args),
        max_enum=args.max_enum, threads=args.threads,
    )
    bench.write_records(records, args.out)
    for note in notes:
        print(f"skipped: {note}", file=sys.stderr)
    print(bench.format_summary(bench.summarize(records)))
    return EXIT_OK


def cmd_check(args) -> int:
    dep = serialize.read_dep(args.dep)
    dsep = serialize.read_dsep(args.dsep)
    violations = check_consistency(dep, dsep)
    for v in violations:
        print(v.describe(dep.graph))
    print(f"{len(violations)} violation(s)")
    return EXIT_OK if not violations else EXIT_INCONSISTENT


def cmd_repair(args) -> int:
    dep = serialize.read_dep(args.dep)
    dsep = serialize.read_dsep(args.dsep)
    fixed = repair_exceptions(dep, dsep, seed=args.seed)
    _write_graph_outputs(fixed, args)
    left = check_consistency(fixed, dsep)
    print(f"repair: {len(left)} violation(s) remain", file=sys.stderr)
    return EXIT_OK if not left else EXIT_INCONSISTENT


# ---------------------------------------------------------------------------
# parser


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--alpha-gauss", type=float, default=0.05, help="Shapiro-Wilk level")
    common.add_argument("--alpha-indep", type=float, default=0.001, help="HSIC level")
    common.add_argument("--alpha-ci", type=float, default=0.01, help="Fisher-z level for PC")
    common.add_argument("--hsic-subsample", type=int, default=1500, help="HSIC sample cap")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--data", type=Path, help="dataset CSV")
    source.add_argument("--oracle", action="store_true", help="answer every test from --model")
    source.add_argument("--model", type=Path, help="model JSON written by gen")

    outputs = argparse.ArgumentParser(add_help=False)
    outputs.add_argument("--out", help="output JSON path (default stdout)")
    outputs.add_argument("--dot", help="also write Graphviz DOT here")

    parser = argparse.ArgumentParser(
        prog="ngdep",
        description="Distribution-equivalence patterns of linear models with mixed disturbances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate model, data and reference DEP")
    p.add_argument("--p", type=int, required=True, help="number of variables")
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--mode", choices=("complete", "random"), default="complete")
    p.add_argument("--density", type=float, default=0.5, help="edge probability in random mode")
    p.add_argument("--signs", action="store_true", help="random coefficient signs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dot", help="write the true DAG as DOT here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pc", parents=[common, source, outputs], help="estimate a DSEP")
    p.add_argument("--max-cond", type=int, help="largest conditioning set")
    p.add_argument("--stable", action="store_true", help="order-independent skeleton levels")
    p.set_defaults(func=cmd_pc)

    for name, func, text in (
        ("discover", cmd_discover, "DSEP to DEP, ancestral-relationship method"),
        ("baseline", cmd_baseline, "DSEP to DEP, PC-LiNGAM"),
    ):
        p = sub.add_parser(name, parents=[common, source, outputs], help=text)
        p.add_argument("--dsep", type=Path, help="use this DSEP instead of running PC")
        p.add_argument("--repair", action="store_true", help="repair disagreements with the DSEP")
        p.add_argument("--max-enum", type=int, default=DEFAULT_MAX_ENUM, help="PC-LiNGAM candidate cap")
        p.set_defaults(func=func)

    p = sub.add_parser("bench", parents=[common], help="timing and accuracy table")
    p.add_argument("--p", type=_int_list, default=[5, 6, 7], help="comma-separated p values")
    p.add_argument("--n", type=_int_list, default=[1500, 3000], help="comma-separated sample sizes")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--methods", nargs="+", choices=bench.METHODS, default=list(bench.METHODS))
    p.add_argument("--max-enum", type=int, default=DEFAULT_MAX_ENUM)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default ${bench.THREADS_ENV} or 1)")
    p.add_argument("--out", required=True, help="bench CSV, appended to")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", help="list disagreements between a DEP and a DSEP")
    p.add_argument("dep", type=Path)
    p.add_argument("dsep", type=Path)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("repair", parents=[outputs], help="repair a DEP against its DSEP")
    p.add_argument("dep", type=Path)
    p.add_argument("dsep", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_repair)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GraphError, InputError, NumericalError, EnumerationLimitError, PairTestError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
