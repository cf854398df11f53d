#!/usr/bin/env python3
"""Command line front end: build solver templates, generate instances, solve and benchmark."""

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import List, Optional

import mpmath
from dotenv import load_dotenv
from pydantic import ValidationError

from algebra import DivisionByZeroCoefficient, ZeroInverse
from data_model import BenchmarkReport, GenerationConfig, MonomialOrder, RunRecord
from datagen import GenerationExhausted, add_noise, gen_float_instance, gen_template_instance
from groebner import STRATEGIES
from render_report import render_csv, render_report, render_success_grid
from solver import (
    OUTCOME_DEGENERATE,
    OUTCOME_INACCURATE,
    OUTCOME_SHAPE,
    OUTCOME_SUCCESS,
    DegenerateTemplate,
    NoRealSolution,
    ShapeMismatch,
    SolverTemplate,
    SupportMismatch,
    build_template,
    classify_failure,
    default_precision_bits,
    is_accurate,
    minimal_precision,
    solve,
)
from upgrade import DegenerateFrame, load_instance, save_instance

load_dotenv()

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE_TEMPLATE = 3
EXIT_UNREADABLE = 4
EXIT_NO_REAL = 10
EXIT_ZERO_DIVISION = 11
EXIT_SHAPE = 12
EXIT_INACCURATE = 13

SOLVE_FAILURES = (NoRealSolution, DivisionByZeroCoefficient, ZeroInverse, ShapeMismatch, SupportMismatch)
TEMPLATE_ATTEMPTS = 5
TEMPLATE_SEED_STRIDE = 10007


def output_dir() -> Path:
    return Path(os.getenv("UPGRADE_OUTPUT_DIR", "out"))


def _exit_code(error: Exception) -> int:
    if isinstance(error, NoRealSolution):
        return EXIT_NO_REAL
    if isinstance(error, (DivisionByZeroCoefficient, ZeroInverse)):
        return EXIT_ZERO_DIVISION
    return EXIT_SHAPE


def _order_from_args(args) -> MonomialOrder:
    if args.variables:
        names = [name.strip() for name in args.variables.split(",")]
        variables = tuple(int(name.lstrip("h")) - 1 for name in names)
        return MonomialOrder(kind=args.order, variables=variables)
    return MonomialOrder(kind=args.order)


def _generation_config(args, **values) -> GenerationConfig:
    if getattr(args, "config", None):
        return GenerationConfig.from_file(args.config, **values)
    return GenerationConfig(**{k: v for k, v in values.items() if v is not None})


def cmd_gen_solver(args) -> int:
    order = _order_from_args(args)
    config = _generation_config(args, n_segments=args.n, seed=args.seed)
    instance = gen_template_instance(config)
    start = time.perf_counter()
    try:
        template = build_template(instance, order=order, strategy=args.strategy)
    except DegenerateTemplate as e:
        logger.error(f"Template for N={args.n}, seed={args.seed} is degenerate: {e}")
        return EXIT_DEGENERATE_TEMPLATE
    elapsed = time.perf_counter() - start
    out = args.out or output_dir() / f"solver_n{args.n}_s{args.seed}.json"
    template.save(str(out))
    stats = template.statistics
    print(f"basis size        {stats.basis_size}")
    print(f"multi-reductions  {stats.multi_reductions}")
    print(f"pairs processed   {stats.pairs_processed}")
    print(f"reduced basis     {len(template.reduced_basis)}")
    print(f"wall time         {elapsed:.2f}s")
    print(f"written to        {out}")
    return EXIT_OK


def cmd_gen_instance(args) -> int:
    config = _generation_config(args, n_segments=args.n, seed=args.seed)
    if args.kind == "template":
        instance = gen_template_instance(config)
    else:
        instance = gen_float_instance(config)
        if args.sigma:
            instance = add_noise(instance, args.sigma, args.seed)
    out = args.out or output_dir() / f"instance_{args.kind}_n{args.n}_s{args.seed}.json"
    save_instance(instance, str(out))
    print(f"written to {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    template = SolverTemplate.load(args.template)
    instance = load_instance(args.instance)
    if instance.n_segments != template.n_segments:
        logger.error(f"template is for N={template.n_segments}, instance has N={instance.n_segments}")
        return EXIT_USAGE
    bits = args.precision_bits or default_precision_bits(instance.n_segments)
    try:
        solution = solve(template, instance, bits)
    except DegenerateFrame as e:
        logger.error(f"Instance frame points are degenerate: {e}")
        return EXIT_SHAPE
    except SOLVE_FAILURES as e:
        logger.error(f"Solving failed ({classify_failure(e)}): {e}")
        return _exit_code(e)
    print(f"precision {bits} bits")
    for signs, params, diag in zip(solution.signs, solution.params, solution.diagnostics):
        print(f"solution h5{'+' if signs[0] > 0 else '-'} h6{'+' if signs[1] > 0 else '-'}")
        for k, value in enumerate(params.h + (params.h10,), start=1):
            print(f"  h{k:<2} = {mpmath.nstr(value, 20)}")
        print(f"  max |d - d'| = {mpmath.nstr(diag.max_length_residual, 5)}")
        print(f"  length error = {mpmath.nstr(diag.length_error, 5)}")
    if instance.noise_sigma == 0 and not is_accurate(solution):
        logger.error(f"length residual {mpmath.nstr(solution.max_length_residual, 5)} above tolerance")
        return EXIT_INACCURATE
    return EXIT_OK


def _template_for(n: int, seed: int, order: MonomialOrder) -> Optional[SolverTemplate]:
    """First non-degenerate template among a few seeds derived from `seed`."""
    for attempt in range(TEMPLATE_ATTEMPTS):
        derived = seed + attempt * TEMPLATE_SEED_STRIDE
        try:
            return build_template(gen_template_instance(GenerationConfig(n_segments=n, seed=derived)), order=order)
        except (DegenerateTemplate, GenerationExhausted) as e:
            logger.warning(f"template seed {derived} for N={n} rejected: {e}")
    return None


def run_cell(task: dict) -> RunRecord:
    """One (template, instance) run; module level so worker processes can import it."""
    template = SolverTemplate.from_json(task["template"])
    n = template.n_segments
    config = GenerationConfig(n_segments=n, seed=task["instance_seed"])
    record = {
        "mode": task["mode"],
        "n_segments": n,
        "solver_seed": task["solver_seed"],
        "instance_seed": task["instance_seed"],
        "basis_size": template.statistics.basis_size,
        "multi_reductions": template.statistics.multi_reductions,
    }
    start = time.perf_counter()
    instance = gen_float_instance(config)
    if task["mode"] == "noise":
        instance = add_noise(instance, task["sigma"], task["instance_seed"])
    if task["mode"] == "precision":
        bits = minimal_precision(template, instance)
        record.update(outcome=OUTCOME_SUCCESS if bits is not None else OUTCOME_INACCURATE, precision_bits=bits)
    else:
        bits = task["precision_bits"] or default_precision_bits(n)
        try:
            solution = solve(template, instance, bits)
        except SOLVE_FAILURES as e:
            record.update(outcome=classify_failure(e), precision_bits=bits)
        except DegenerateFrame as e:
            logger.warning(f"instance {task['instance_seed']} has a degenerate frame: {e}")
            record.update(outcome=OUTCOME_SHAPE, precision_bits=bits)
        else:
            accurate = task["mode"] == "noise" or is_accurate(solution)
            record.update(
                outcome=OUTCOME_SUCCESS if accurate else OUTCOME_INACCURATE,
                error=float(solution.length_error),
                max_residual=float(solution.max_length_residual),
                precision_bits=bits,
            )
    if task["timings"]:
        record["wall_seconds"] = time.perf_counter() - start
    return RunRecord(**record)


def _run_tasks(tasks: List[dict], jobs: int) -> List[RunRecord]:
    records = []
    if jobs <= 1:
        for task in tasks:
            records.append(run_cell(task))
            _log_cell(records[-1], len(records), len(tasks))
        return records
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        futures = {executor.submit(run_cell, task): task for task in tasks}
        for future in as_completed(futures):
            records.append(future.result())
            _log_cell(records[-1], len(records), len(tasks))
    return records


def _log_cell(record: RunRecord, done: int, total: int) -> None:
    logger.info(
        f"[{done}/{total}] N={record.n_segments} solver {record.solver_seed} "
        f"instance {record.instance_seed}: {record.outcome}"
    )


def cmd_bench(args) -> int:
    order = _order_from_args(args)
    jobs = args.jobs if args.jobs is not None else int(os.getenv("UPGRADE_JOBS", "1"))
    report = BenchmarkReport(mode=args.mode, sigma=args.sigma if args.mode == "noise" else 0.0)
    tasks = []
    for n in args.n:
        for solver_seed in range(args.seed, args.seed + args.solvers):
            start = time.perf_counter()
            template = _template_for(n, solver_seed, order)
            elapsed = time.perf_counter() - start
            if args.mode == "construct" or template is None:
                report.runs.append(RunRecord(
                    mode=args.mode,
                    n_segments=n,
                    solver_seed=solver_seed,
                    outcome=OUTCOME_SUCCESS if template is not None else OUTCOME_DEGENERATE,
                    basis_size=template.statistics.basis_size if template else None,
                    multi_reductions=template.statistics.multi_reductions if template else None,
                    wall_seconds=elapsed if args.timings else None,
                ))
                continue
            text = template.to_record().model_dump_json()
            for instance_seed in range(args.instances):
                tasks.append({
                    "template": text,
                    "mode": args.mode,
                    "solver_seed": solver_seed,
                    "instance_seed": instance_seed,
                    "sigma": args.sigma,
                    "precision_bits": args.precision_bits,
                    "timings": args.timings,
                })
    logger.info(f"Running {len(tasks)} benchmark cells on {jobs} worker(s)")
    report.runs.extend(_run_tasks(tasks, jobs))

    out = Path(args.out) if args.out else output_dir()
    out.mkdir(parents=True, exist_ok=True)
    csv_text = render_csv(report, timings=args.timings)
    markdown = render_report(report, timings=args.timings)
    if args.mode == "noise":
        markdown += "\n" + "\n".join(render_success_grid(report, n) for n in args.n)
    (out / f"bench_{args.mode}.csv").write_text(csv_text, encoding="utf-8")
    (out / f"bench_{args.mode}.md").write_text(markdown, encoding="utf-8")
    print(csv_text if args.format == "csv" else markdown)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="upgrade", description=__doc__)
    parser.add_argument("--log-level", default=os.getenv("UPGRADE_LOG_LEVEL", "INFO"))
    sub = parser.add_subparsers(dest="command", required=True)

    def add_order_flags(p):
        p.add_argument("--order", choices=("lex", "grevlex"), default="grevlex")
        p.add_argument("--variables", help="comma separated variable order, e.g. h1,h2,h3,h7,h8,h9,h4,h5,h6,h10")

    gen_solver = sub.add_parser("gen-solver", help="build and save a solver template")
    gen_solver.add_argument("--n", type=int, required=True)
    gen_solver.add_argument("--seed", type=int, default=0)
    gen_solver.add_argument("--strategy", choices=STRATEGIES, default="normal")
    gen_solver.add_argument("--config", help="KEY=value file with generation settings")
    gen_solver.add_argument("--out")
    add_order_flags(gen_solver)
    gen_solver.set_defaults(handler=cmd_gen_solver)

    gen_instance = sub.add_parser("gen-instance", help="generate and save an instance")
    gen_instance.add_argument("--kind", choices=("template", "real"), default="real")
    gen_instance.add_argument("--n", type=int, required=True)
    gen_instance.add_argument("--seed", type=int, default=0)
    gen_instance.add_argument("--sigma", type=float, default=0.0)
    gen_instance.add_argument("--config")
    gen_instance.add_argument("--out")
    gen_instance.set_defaults(handler=cmd_gen_instance)

    solve_cmd = sub.add_parser("solve", help="solve an instance with a saved template")
    solve_cmd.add_argument("template")
    solve_cmd.add_argument("instance")
    solve_cmd.add_argument("--precision-bits", type=int)
    solve_cmd.set_defaults(handler=cmd_solve)

    bench = sub.add_parser("bench", help="run a benchmark and write CSV and markdown reports")
    bench.add_argument("--mode", choices=("construct", "exact", "noise", "precision"), default="exact")
    bench.add_argument("--n", type=int, nargs="+", default=[9])
    bench.add_argument("--seed", type=int, default=0, help="first solver seed")
    bench.add_argument("--solvers", type=int, default=3, help="number of solver templates per N")
    bench.add_argument("--instances", type=int, default=3, help="number of instances per template")
    bench.add_argument("--sigma", type=float, default=0.0)
    bench.add_argument("--precision-bits", type=int)
    bench.add_argument("--format", choices=("csv", "md"), default="md")
    bench.add_argument("--jobs", type=int)
    bench.add_argument("--timings", action="store_true", help="add wall time columns")
    bench.add_argument("--out")
    add_order_flags(bench)
    bench.set_defaults(handler=cmd_bench)
    return parser


def _validate(args) -> Optional[str]:
    if getattr(args, "n", None) is not None:
        sizes = args.n if isinstance(args.n, list) else [args.n]
        if any(n < 9 for n in sizes):
            return "at least 9 segments are needed"
    if getattr(args, "precision_bits", None) is not None and args.precision_bits < 64:
        return "--precision-bits must be at least 64"
    if getattr(args, "sigma", 0.0) < 0:
        return "--sigma must be non-negative"
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        return "--jobs must be positive"
    return None


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=args.log_level.upper(), format=LOG_FORMAT)
    problem = _validate(args)
    if problem:
        print(f"error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except FileNotFoundError as e:
        logger.error(str(e))
        return EXIT_UNREADABLE
    except (ValueError, ValidationError) as e:
        logger.error(f"Unreadable input: {e}")
        return EXIT_UNREADABLE


if __name__ == "__main__":
    sys.exit(main())
