"""
Command-line surface: solve, bench, ablation, similarity, check, oracle and gen.

Exit status: 0 success, 1 usage error, 2 validation failure, 3 size-guard rejection.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.errors import InstanceFormatError, InstanceValidationError, SizeGuardError
from src.harness import (
    ABLATION_COLUMNS,
    BENCH_COLUMNS,
    Aggregate,
    load_manifest,
    run_ablation,
    run_bench,
    similarity_report,
    solve_runs,
    thread_count,
    write_csv,
)
from src.instance import gen_instance, load_instance, save_instance
from src.oracle import exact_solve
from src.solution import (
    negative_revenues,
    objective_surrogate,
    objective_true,
    read_solution_document,
    save_solution,
    solution_from_document,
)
from src.solver_props import LOG_LEVELS, Evaluation, Improvement, Mode, SolverConfig
from src.utils import VALID_PROFILES, load_context_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_SIZE_GUARD = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors reported as exit status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(document: Any) -> None:
    print(json.dumps(document, indent=2))


def _write_json(path: Path, document: Any) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2)


def _context(args: argparse.Namespace) -> Dict[str, Any]:
    if args.profile is None:
        return {}
    return load_context_config(args.profile, args.config_dir)


def _solver_config(args: argparse.Namespace, context: Dict[str, Any]) -> SolverConfig:
    return SolverConfig.from_context(
        context,
        t_max=args.time_limit,
        seed=args.seed,
        runs=args.runs,
        limi=args.limi,
        st=args.st,
        nump=args.pop,
        q=args.q,
        mode=args.mode,
        eval=args.eval,
        improvement=args.improvement,
        max_generations=args.max_generations,
    )


def cmd_solve(args: argparse.Namespace, context: Dict[str, Any]) -> int:
    cfg = _solver_config(args, context)
    instance = load_instance(args.instance)
    reports = solve_runs(instance, cfg, threads=thread_count())
    summary = Aggregate.from_reports(reports).to_dict()
    summary["seeds"] = [r.seed for r in reports]

    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        for idx, report in enumerate(reports):
            _write_json(out / f"run_{idx:02d}.json", report.to_dict())
            save_solution(report.best, out / f"run_{idx:02d}.solution.json", report.seed, report.mode)
        _write_json(out / "summary.json", summary)
        logger.info("wrote %d run reports to %s", len(reports), out)
    # stdout always carries every run next to the aggregate
    _emit(dict(summary, reports=[r.to_dict() for r in reports]))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, context: Dict[str, Any]) -> int:
    cfg = _solver_config(args, context)
    manifest = load_manifest(args.manifest)
    output = args.output or manifest.output or "bench.csv"
    rows = run_bench(manifest, cfg, threads=thread_count())
    write_csv(rows, BENCH_COLUMNS, output)
    failed = sum(1 for row in rows if row["error"])
    if failed:
        logger.warning("%d of %d bench entries failed", failed, len(rows))
    print(output)
    return EXIT_OK


def cmd_ablation(args: argparse.Namespace, context: Dict[str, Any]) -> int:
    cfg = _solver_config(args, context)
    instances = [load_instance(path) for path in args.instance]
    rows = run_ablation(instances, cfg, threads=thread_count())
    write_csv(rows, ABLATION_COLUMNS, args.output)
    print(args.output)
    return EXIT_OK


def cmd_similarity(args: argparse.Namespace, context: Dict[str, Any]) -> int:
    instance = load_instance(args.instance)
    documents = [read_solution_document(path) for path in args.solutions]
    try:
        report = similarity_report(instance, documents)
    except ValueError as e:
        logger.error("%s", e)
        return EXIT_INVALID
    if args.output:
        _write_json(Path(args.output), report.to_dict())
    _emit(report.to_dict())
    return EXIT_OK


def cmd_check(args: argparse.Namespace, context: Dict[str, Any]) -> int:
    instance = load_instance(args.instance)
    document = read_solution_document(args.solution)
    sol, verdict = solution_from_document(instance, document)
    print(verdict)
    if not verdict.ok:
        return EXIT_INVALID
    print(f"objective_true {objective_true(sol):.6f}")
    print(f"objective_surrogate {objective_surrogate(sol):.6f}")
    for customer, revenue in negative_revenues(sol):
        logger.warning("customer %d has negative revenue %.6f", customer, revenue)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, context: Dict[str, Any]) -> int:
    instance = load_instance(args.instance)
    result = exact_solve(instance)
    document = result.to_dict()
    if args.output:
        _write_json(Path(args.output), document)
    _emit(document)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace, context: Dict[str, Any]) -> int:
    instance = gen_instance(
        args.n, args.k, coord_range=args.coord_range, seed=args.seed, name=args.name
    )
    save_instance(instance, args.output)
    logger.info("wrote %s (n=%d, K=%d) to %s", instance.name, instance.n, instance.servers, args.output)
    print(args.output)
    return EXIT_OK


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver")
    group.add_argument("--time-limit", type=float, help="seconds per run (default 2 * n)")
    group.add_argument("--seed", type=int)
    group.add_argument("--runs", type=int)
    group.add_argument("--limi", type=int)
    group.add_argument("--st", type=int)
    group.add_argument("--pop", type=int)
    group.add_argument("--q", type=int)
    group.add_argument("--mode", choices=[m.value for m in Mode])
    group.add_argument("--eval", choices=[e.value for e in Evaluation])
    group.add_argument("--improvement", choices=[i.value for i in Improvement])
    group.add_argument("--max-generations", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog="mtrpp", description="Multiple traveling repairman problem with profits")
    parser.add_argument("--profile", choices=sorted(VALID_PROFILES))
    parser.add_argument("--config-dir", default="config")
    parser.add_argument("--log-level", choices=LOG_LEVELS)
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    solve = commands.add_parser("solve", help="run the memetic search")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--output", help="also write run reports, solutions and the aggregate to this directory")
    _add_solver_flags(solve)
    solve.set_defaults(handler=cmd_solve)

    bench = commands.add_parser("bench", help="run a benchmark manifest")
    bench.add_argument("--manifest", required=True)
    bench.add_argument("--output", help="CSV path, overrides the manifest")
    _add_solver_flags(bench)
    bench.set_defaults(handler=cmd_bench)

    ablation = commands.add_parser("ablation", help="compare solver variants")
    ablation.add_argument("--instance", required=True, nargs="+")
    ablation.add_argument("--output", default="ablation.csv")
    _add_solver_flags(ablation)
    ablation.set_defaults(handler=cmd_ablation)

    similarity = commands.add_parser("similarity", help="pairwise arc similarity of solutions")
    similarity.add_argument("--instance", required=True)
    similarity.add_argument("solutions", nargs="+")
    similarity.add_argument("--output")
    similarity.set_defaults(handler=cmd_similarity)

    check = commands.add_parser("check", help="validate a solution file")
    check.add_argument("--instance", required=True)
    check.add_argument("--solution", required=True)
    check.set_defaults(handler=cmd_check)

    oracle = commands.add_parser("oracle", help="exact optimum of a small instance")
    oracle.add_argument("--instance", required=True)
    oracle.add_argument("--output")
    oracle.set_defaults(handler=cmd_oracle)

    gen = commands.add_parser("gen", help="generate a random Euclidean instance")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--coord-range", type=float, default=100.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--name")
    gen.add_argument("--output", required=True)
    gen.set_defaults(handler=cmd_gen)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    try:
        context = _context(args)
        level = SolverConfig.from_context(context, log_level=args.log_level).log_level
    except (OSError, ValueError) as e:
        print(f"mtrpp: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        return args.handler(args, context)
    except SizeGuardError as e:
        logger.error("%s", e)
        return EXIT_SIZE_GUARD
    except (InstanceFormatError, InstanceValidationError) as e:
        logger.error("%s", e)
        return EXIT_INVALID
    except (OSError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
