"""Benchmark command line: ``isqp-bench {run,sweep,check,list}``."""

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import CONVERGED, NUMERICAL_FAILURE, SolverConfig, convergence_rate_estimate, solve
from .exceptions import InsufficientData, ISQPError
from .hessian import HessianStrategy
from .model import check_derivatives, evaluate, kkt_residual
from .problems import REGISTRY

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

TRACE_COLUMNS = ("iter", "f1", "constraint_norm", "kkt_residual", "step_norm", "cbar")
SWEEP_COLUMNS = ("alpha", "status", "iterations", "time_ms")

# method -> (Hessian kind, alpha fixed at 1, default alpha)
METHODS = {
    "sqp-eh": ("exact", True, 1.0),
    "sqp-ggn": ("ggn", True, 1.0),
    "isqp-ggn": ("ggn", False, 0.35),
    "isqp-i": ("identity", False, 0.30),
}


class UsageError(Exception):
    pass


@dataclass
class RunSpec:
    problem: str
    method: str
    alpha: Optional[float] = None
    tol: float = 1e-7
    max_iter: int = 500
    direction_path: str = "explicit"
    trace: Optional[str] = None
    summary: Optional[str] = None


def parse_alpha_range(text):
    """Parse ``"a"`` or ``"start:step:end"`` (end inclusive) into a list of floats."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"invalid alpha {text!r}") from None
    if len(values) == 1:
        return values
    if len(values) != 3:
        raise UsageError(f"alpha range must be start:step:end, got {text!r}")
    start, step, end = values
    if step <= 0 or end < start:
        raise UsageError(f"empty alpha range {text!r}")
    count = int(np.floor((end - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _resolve(spec, registry):
    if spec.problem not in registry:
        raise UsageError(f"unknown problem {spec.problem!r}; available: {', '.join(sorted(registry))}")
    if spec.method not in METHODS:
        raise UsageError(f"unknown method {spec.method!r}; available: {', '.join(METHODS)}")
    kind, pure, default_alpha = METHODS[spec.method]
    alpha = default_alpha if spec.alpha is None else float(spec.alpha)
    if pure and alpha != 1.0:
        raise UsageError(f"method {spec.method} runs with alpha = 1")
    if not pure and not 0.0 < alpha < 1.0:
        raise UsageError(f"method {spec.method} needs 0 < alpha < 1, got {alpha}")
    try:
        config = SolverConfig(
            alpha=alpha, tol=spec.tol, max_iter=spec.max_iter, direction_path=spec.direction_path
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    problem, _ = registry[spec.problem]()
    return problem, HessianStrategy(kind), config


def _rate_dict(report):
    if not report.converged:
        return None
    try:
        rate = convergence_rate_estimate(report)
    except InsufficientData:
        return None
    return {"order": rate.order, "constant": rate.constant, "classification": rate.classification}


def summary_dict(report):
    return {
        "status": report.status,
        "iterations": report.iterations,
        "final_x": [float(v) for v in report.final.x],
        "final_lambda": [float(v) for v in report.final.lam],
        "wall_time_ms": report.wall_time * 1e3,
        "rate_estimate": _rate_dict(report),
    }


def write_trace(report, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in report.trace:
            writer.writerow(
                [rec.k]
                + [
                    f"{v:.17g}"
                    for v in (rec.f1, rec.constraint_norm, rec.kkt_residual, rec.step_norm, rec.cbar)
                ]
            )


def _streams(out, err):
    return out or sys.stdout, err or sys.stderr


def _exit_code(report):
    if report.status == CONVERGED:
        return EXIT_OK
    if report.status == NUMERICAL_FAILURE:
        return EXIT_ERROR
    return EXIT_NOT_CONVERGED


def cmd_run(spec, registry=REGISTRY, out=None, err=None):
    """Solve one problem/method pair and write the trace and summary files."""
    out, err = _streams(out, err)
    try:
        problem, strategy, config = _resolve(spec, registry)
        report = solve(problem, strategy, config)
    except (UsageError, ISQPError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR
    summary = summary_dict(report)
    if spec.trace:
        write_trace(report, spec.trace)
    if spec.summary:
        with open(spec.summary, "w") as fh:
            json.dump(summary, fh, indent=2)
    print(
        f"{spec.problem} {spec.method} alpha={config.alpha:g}: {report.status} "
        f"after {report.iterations} iterations, KKT residual {report.final_kkt_residual:.3e}, "
        f"{summary['wall_time_ms']:.1f} ms",
        file=out,
    )
    print("x = " + np.array2string(report.final.x, precision=6), file=out)
    if report.message:
        print(report.message, file=err)
    return _exit_code(report)


def cmd_sweep(spec, alphas, registry=REGISTRY, out=None, err=None, table=None, jobs=1):
    """One solve per alpha; prints a comparison table, optionally writes it as CSV."""
    out, err = _streams(out, err)
    try:
        resolved = [_resolve(RunSpec(**{**spec.__dict__, "alpha": a}), registry) for a in alphas]
    except (UsageError, ISQPError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR

    def run_one(args):
        problem, strategy, config = args
        return solve(problem, strategy, config)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        reports = list(pool.map(run_one, resolved))

    rows = [
        (cfg.alpha, rep.status, rep.iterations, rep.wall_time * 1e3)
        for (_, _, cfg), rep in zip(resolved, reports)
    ]
    print(f"{'alpha':>8s}  {'status':<16s} {'iterations':>10s} {'time_ms':>10s}", file=out)
    for alpha, status, iters, ms in rows:
        print(f"{alpha:8.4g}  {status:<16s} {iters:10d} {ms:10.2f}", file=out)
    if table:
        with open(table, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_COLUMNS)
            for alpha, status, iters, ms in rows:
                writer.writerow([f"{alpha:.17g}", status, iters, f"{ms:.17g}"])
    if len(reports) == 1:
        rep = reports[0]
        if spec.trace:
            write_trace(rep, spec.trace)
        if spec.summary:
            with open(spec.summary, "w") as fh:
                json.dump(summary_dict(rep), fh, indent=2)
        return _exit_code(rep)
    return EXIT_OK if any(r.converged for r in reports) else EXIT_NOT_CONVERGED


def _reference_residual(problem, ref):
    bundle = evaluate(problem, ref.x_star)
    lam = ref.lambda_star
    if lam is None:
        lam = np.linalg.lstsq(bundle.j2.T, -bundle.j1, rcond=None)[0]
    return kkt_residual(bundle, lam)


def cmd_check(name, registry=REGISTRY, out=None, err=None, tol=1e-5, points=20, seed=0):
    """Finite-difference derivative check at ``x0`` and random nearby points,
    plus the KKT residual of the reference solution."""
    out, err = _streams(out, err)
    if name not in registry:
        print(f"error: unknown problem {name!r}", file=err)
        return EXIT_ERROR
    problem, ref = registry[name]()
    rng = np.random.default_rng(seed)
    xs = [problem.initial_point]
    for _ in range(points):
        d = rng.standard_normal(problem.n)
        d *= rng.uniform() ** (1.0 / problem.n) / np.linalg.norm(d)
        xs.append(problem.initial_point + d)
    worst = {}
    try:
        for x in xs:
            report = check_derivatives(problem, x, tol=tol)
            for block, e in report.errors.items():
                worst[block] = max(worst.get(block, 0.0), e)
        ref_res = _reference_residual(problem, ref)
    except ISQPError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_ERROR
    ok = True
    print(f"{name}: derivative check at x0 and {points} random points (tol {tol:g})", file=out)
    for block, e in worst.items():
        good = e <= tol
        ok &= good
        print(f"  {block:<22s} {e:.3e}  {'ok' if good else 'FAIL'}", file=out)
    good = ref_res <= 1e-5
    ok &= good
    print(f"  {'reference_kkt':<22s} {ref_res:.3e}  {'ok' if good else 'FAIL'}", file=out)
    return EXIT_OK if ok else EXIT_ERROR


def cmd_list(registry=REGISTRY, out=None):
    out, _ = _streams(out, None)
    for name, ctor in sorted(registry.items()):
        problem, _ = ctor()
        print(f"{name:<10s} n={problem.n} m={problem.m}  {problem.description}", file=out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isqp-bench", description="Interpolated SQP benchmark harness."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_args(p, alpha_help):
        p.add_argument("--problem", required=True)
        p.add_argument("--method", required=True, choices=sorted(METHODS))
        p.add_argument("--alpha", default=None, help=alpha_help)
        p.add_argument("--tol", type=float, default=1e-7)
        p.add_argument("--max-iter", type=int, default=500)
        p.add_argument("--direction-path", choices=("explicit", "saddle"), default="explicit")
        p.add_argument("--trace", default=None, help="trace CSV path")
        p.add_argument("--summary", default=None, help="summary JSON path")

    solver_args(sub.add_parser("run", help="solve one problem"), "interpolation weight")
    sweep = sub.add_parser("sweep", help="solve over a grid of alpha values")
    solver_args(sweep, "value or start:step:end")
    sweep.add_argument("--table", default=None, help="comparison table CSV path")
    sweep.add_argument("--jobs", type=int, default=1)

    check = sub.add_parser("check", help="finite-difference derivative check")
    check.add_argument("--problem", required=True)
    check.add_argument("--tol", type=float, default=1e-5)
    check.add_argument("--points", type=int, default=20)

    sub.add_parser("list", help="list registered problems")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return cmd_list()
    if args.command == "check":
        return cmd_check(args.problem, tol=args.tol, points=args.points)
    spec = RunSpec(
        problem=args.problem,
        method=args.method,
        tol=args.tol,
        max_iter=args.max_iter,
        direction_path=args.direction_path,
        trace=args.trace,
        summary=args.summary,
    )
    try:
        alphas = parse_alpha_range(args.alpha) if args.alpha is not None else [None]
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command == "run":
        if len(alphas) != 1:
            print("error: run takes a single alpha; use sweep for ranges", file=sys.stderr)
            return EXIT_ERROR
        spec.alpha = alphas[0]
        return cmd_run(spec)
    return cmd_sweep(spec, alphas, table=args.table, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
