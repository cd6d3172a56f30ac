"""Command-line front-end: decide / find-point / minimize / bench.

Reports are JSON documents with a stable key set across commands; bench
emits CSV.  All numbers are printed through Python's float repr, which
round-trips exactly.  No environment variables are consulted and the
solver path is deterministic, so identical invocations produce identical
reports (wall time is reported only when --timing is passed).
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import math
import os
import sys
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    EmptySystem,
    SolverBudgetExceeded,
    StrictFeasibilityViolated,
)
from .lp import (
    FeasibilityVerdict,
    LinearSystem,
    PointSearchOutcome,
    RadiusBound,
    decide_feasibility,
    find_feasible_point,
    global_radius,
    normalize,
)
from .oracles import MaxAffineFunction
from .solver import CutMode, MetastepConfig, MetastepResult, run_metasteps

# Exit codes.  Argparse's default of 2 would collide with a verdict
# code, so usage failures are remapped.
EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_STRICT_ONLY = 2
EXIT_UNDECIDED = 3
EXIT_USAGE = 64

_DECIDE_EXIT = {
    FeasibilityVerdict.FEASIBLE: EXIT_OK,
    FeasibilityVerdict.INFEASIBLE_NON_STRICT: EXIT_INFEASIBLE,
    FeasibilityVerdict.INFEASIBLE_STRICT_ONLY: EXIT_STRICT_ONLY,
}

_POINT_EXIT = {
    PointSearchOutcome.FEASIBLE_POINT_FOUND: EXIT_OK,
    PointSearchOutcome.INFEASIBLE_PROVEN: EXIT_INFEASIBLE,
    PointSearchOutcome.UNDECIDED: EXIT_UNDECIDED,
}


class UsageError(ValueError):
    """Problem-file or flag validation failure; maps to exit 64."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _reject_constant(token: str) -> float:
    raise UsageError(f"non-finite number {token!r} in problem file")


def _as_number(value: object, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"{where} must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise UsageError(f"{where} must be finite, got {value!r}")
    return out


def load_problem(path: str) -> Tuple[Optional[str], LinearSystem]:
    """Parse a problem file: {"A": [[...]], "b": [...], "name"?: str}."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle, parse_constant=_reject_constant)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: top level must be an object")
    if "A" not in doc or "b" not in doc:
        raise UsageError(f"{path}: required fields 'A' and 'b'")
    raw_rows = doc["A"]
    raw_offsets = doc["b"]
    if not isinstance(raw_rows, list) or not raw_rows:
        raise UsageError(f"{path}: 'A' must be a non-empty array of rows")
    if not isinstance(raw_offsets, list) or len(raw_offsets) != len(raw_rows):
        raise UsageError(f"{path}: 'b' must list one number per row of 'A'")
    rows: List[List[float]] = []
    width: Optional[int] = None
    for i, row in enumerate(raw_rows):
        if not isinstance(row, list) or not row:
            raise UsageError(f"{path}: row {i} of 'A' must be a non-empty array")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise UsageError(f"{path}: 'A' is not rectangular at row {i}")
        rows.append([_as_number(v, f"A[{i}][{j}]") for j, v in enumerate(row)])
    offsets = [_as_number(v, f"b[{i}]") for i, v in enumerate(raw_offsets)]
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise UsageError(f"{path}: 'name' must be a string")
    return name, LinearSystem(np.array(rows), np.array(offsets))


def _num(value) -> Optional[float]:
    if value is None:
        return None
    out = float(value)
    return out if math.isfinite(out) else None


def _vec(arr) -> Optional[List[Optional[float]]]:
    if arr is None:
        return None
    return [_num(v) for v in np.asarray(arr, dtype=float).ravel()]


def _parse_x0(text: Optional[str], dim: int) -> np.ndarray:
    if text is None:
        return np.zeros(dim)
    try:
        values = [float(token) for token in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"--x0 must be comma-separated numbers: {exc}") from exc
    if len(values) != dim:
        raise UsageError(f"--x0 has {len(values)} entries, problem needs {dim}")
    if not all(math.isfinite(v) for v in values):
        raise UsageError("--x0 entries must be finite")
    return np.asarray(values)


def _check_radius(radius: Optional[float]) -> None:
    if radius is not None and not radius > 0.0:
        raise UsageError("--radius must be positive")


def _cut_mode(flag: str) -> CutMode:
    return CutMode(flag)


def _config_echo(args: argparse.Namespace) -> dict:
    return {
        "eps": args.eps,
        "tol": args.tol,
        "radius": args.radius,
        "metasteps": args.metasteps,
        "cut": args.cut,
        "radius_growth": args.radius_growth,
        "x0": args.x0,
        "trace": args.trace,
    }


def _gather_counts(parts: Sequence[Optional[MetastepResult]]) -> Tuple[int, int]:
    queries = sum(p.level_queries for p in parts if p is not None)
    iters = sum(p.iterations for p in parts if p is not None)
    return queries, iters


def _write_trace(path: str, parts: Sequence[Optional[MetastepResult]]) -> None:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            for part in parts:
                if part is None:
                    continue
                for rec in part.trace:
                    handle.write(
                        json.dumps(
                            {
                                "query": rec.query,
                                "iteration": rec.iteration,
                                "center": _vec(rec.center),
                                "value": _num(rec.value),
                                "cut": rec.cut,
                                "depth": _num(rec.depth),
                                "log_volume": _num(rec.log_volume),
                            },
                            allow_nan=False,
                        )
                        + "\n"
                    )
    except OSError as exc:
        raise UsageError(f"cannot write trace {path}: {exc.strerror or exc}") from exc


def _emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2, allow_nan=False) + "\n")


def _report_skeleton(command: str, name: Optional[str], n: int, m: int,
                     args: argparse.Namespace) -> dict:
    return {
        "command": command,
        "name": name,
        "n": n,
        "m": m,
        "verdict": None,
        "point": None,
        "value": None,
        "certificate": None,
        "d_star": None,
        "d_lower": None,
        "radius": None,
        "radius_method": None,
        "level_queries": 0,
        "ellipsoid_iters": 0,
        "wall_ms": None,
        "config": _config_echo(args),
        "trace_file": args.trace,
    }


def cmd_decide(args: argparse.Namespace) -> int:
    name, system = load_problem(args.path)
    report = _report_skeleton("decide", name, system.n, system.m, args)
    started = time.perf_counter()
    try:
        norm_sys = normalize(system)
    except EmptySystem:
        report["verdict"] = FeasibilityVerdict.FEASIBLE.value
        report["d_star"] = None
        _finish_timing(report, args, started)
        _emit(report)
        return EXIT_OK
    try:
        decision = decide_feasibility(norm_sys, tol=args.tol, cut_mode=_cut_mode(args.cut))
    except SolverBudgetExceeded as exc:
        report["verdict"] = "Undecided"
        _finish_timing(report, args, started)
        _emit(report)
        print(f"epicut: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    queries, iters = _gather_counts([decision.phase_one, decision.report])
    report["verdict"] = decision.verdict.value
    report["certificate"] = _vec(decision.certificate)
    report["d_star"] = _num(decision.d_star)
    report["level_queries"] = queries
    report["ellipsoid_iters"] = iters
    _finish_timing(report, args, started)
    if args.trace:
        _write_trace(args.trace, [decision.phase_one, decision.report])
    _emit(report)
    return _DECIDE_EXIT[decision.verdict]


def cmd_find_point(args: argparse.Namespace) -> int:
    name, system = load_problem(args.path)
    _check_radius(args.radius)
    report = _report_skeleton("find-point", name, system.n, system.m, args)
    started = time.perf_counter()
    try:
        norm_sys = normalize(system)
    except EmptySystem:
        report["verdict"] = PointSearchOutcome.FEASIBLE_POINT_FOUND.value
        report["point"] = _vec(np.zeros(system.n))
        report["value"] = 0.0
        _finish_timing(report, args, started)
        _emit(report)
        return EXIT_OK

    bound = None
    if args.radius is not None:
        bound = args.radius
        report["radius"] = args.radius
    elif not args.eps_halving:
        try:
            rb = global_radius(norm_sys, tol=args.tol)
            bound = rb
            report["d_lower"] = _num(rb.d_lower)
            report["radius"] = _num(rb.radius)
            report["radius_method"] = rb.method.value
        except (StrictFeasibilityViolated, SolverBudgetExceeded) as exc:
            print(f"epicut: radius derivation failed ({exc}); halving instead",
                  file=sys.stderr)

    result = find_feasible_point(
        norm_sys,
        bound=bound,
        feas_tol=args.tol,
        level_tolerance=args.eps,
        cut_mode=_cut_mode(args.cut),
        max_metasteps=args.metasteps,
    )
    if report["radius"] is None and result.radius_used is not None:
        report["radius"] = _num(result.radius_used)
        report["radius_method"] = "Halving"
    queries, iters = _gather_counts([result.metastep_report])
    report["verdict"] = result.outcome.value
    report["point"] = _vec(result.point)
    report["value"] = _num(result.f_value)
    report["level_queries"] = queries
    report["ellipsoid_iters"] = iters
    _finish_timing(report, args, started)
    if args.trace:
        _write_trace(args.trace, [result.metastep_report])
    _emit(report)
    return _POINT_EXIT[result.outcome]


def cmd_minimize(args: argparse.Namespace) -> int:
    name, system = load_problem(args.path)
    if args.radius is None:
        raise UsageError("minimize requires --radius")
    _check_radius(args.radius)
    objective = MaxAffineFunction(system.rows, system.offsets)
    x0 = _parse_x0(args.x0, system.n)
    cfg = MetastepConfig(
        radius=args.radius,
        level_tolerance=args.eps,
        cut_mode=_cut_mode(args.cut),
        max_metasteps=args.metasteps,
        radius_growth=args.radius_growth,
    )
    report = _report_skeleton("minimize", name, system.n, system.m, args)
    report["radius"] = args.radius
    started = time.perf_counter()
    result = run_metasteps(objective, x0, cfg)
    report["verdict"] = result.status.value
    report["point"] = _vec(result.best_point)
    report["value"] = _num(result.best_value)
    report["level_queries"] = result.level_queries
    report["ellipsoid_iters"] = result.iterations
    _finish_timing(report, args, started)
    if args.trace:
        _write_trace(args.trace, [result])
    _emit(report)
    return EXIT_OK if result.best_point is not None else EXIT_UNDECIDED


def cmd_bench(args: argparse.Namespace) -> int:
    if not os.path.isdir(args.dir):
        raise UsageError(f"{args.dir} is not a directory")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(
        ["name", "n", "m", "mode", "verdict", "level_queries", "ellipsoid_iters", "wall_ms"]
    )
    for path in sorted(glob.glob(os.path.join(args.dir, "*.json"))):
        try:
            name, system = load_problem(path)
        except UsageError as exc:
            print(f"epicut: skipping {path}: {exc}", file=sys.stderr)
            continue
        label = name or os.path.splitext(os.path.basename(path))[0]
        for mode in (CutMode.CENTRAL, CutMode.DEEP, CutMode.DEEP_PATTERN):
            started = time.perf_counter()
            queries = iters = 0
            try:
                norm_sys = normalize(system)
                decision = decide_feasibility(norm_sys, tol=args.tol, cut_mode=mode)
                verdict = decision.verdict.value
                queries, iters = _gather_counts([decision.phase_one, decision.report])
            except EmptySystem:
                verdict = FeasibilityVerdict.FEASIBLE.value
            except (SolverBudgetExceeded, StrictFeasibilityViolated):
                verdict = "Undecided"
            wall_ms = (time.perf_counter() - started) * 1000.0
            writer.writerow(
                [label, system.n, system.m, mode.value, verdict, queries, iters,
                 f"{wall_ms:.3f}"]
            )
    return EXIT_OK


def _finish_timing(report: dict, args: argparse.Namespace, started: float) -> None:
    if args.timing:
        report["wall_ms"] = (time.perf_counter() - started) * 1000.0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="epicut",
        description="Convex feasibility and minimization via ellipsoid level cuts.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--eps", type=float, default=1e-6,
                        help="level tolerance (default 1e-6)")
    common.add_argument("--tol", type=float, default=1e-7,
                        help="certificate / feasibility tolerance (default 1e-7)")
    common.add_argument("--radius", type=float, default=None,
                        help="search radius override")
    common.add_argument("--metasteps", type=int, default=16,
                        help="metastep budget (default 16)")
    common.add_argument("--cut", choices=[m.value for m in CutMode],
                        default=CutMode.DEEP_PATTERN.value,
                        help="cut strategy (default deep+ps)")
    common.add_argument("--trace", metavar="FILE", default=None,
                        help="write per-iteration trace records to FILE as JSON lines")
    common.add_argument("--x0", metavar="CSV", default=None,
                        help="start point as comma-separated numbers (default origin)")
    common.add_argument("--radius-growth", type=float, default=1.0,
                        help="radius multiplier between metasteps (default 1.0)")
    common.add_argument("--timing", action="store_true",
                        help="include wall time in the report (breaks byte determinism)")

    p_decide = sub.add_parser("decide", parents=[common],
                              help="decide feasibility of A x + b <= 0")
    p_decide.add_argument("path", help="problem file (JSON)")
    p_decide.set_defaults(handler=cmd_decide)

    p_point = sub.add_parser("find-point", parents=[common],
                             help="search for a feasible point")
    p_point.add_argument("path", help="problem file (JSON)")
    p_point.add_argument("--eps-halving", action="store_true",
                         help="skip radius derivation; grow the radius by halving the floor guess")
    p_point.set_defaults(handler=cmd_find_point)

    p_min = sub.add_parser("minimize", parents=[common],
                           help="minimize the max-affine function in the file")
    p_min.add_argument("path", help="max-affine function file (JSON)")
    p_min.set_defaults(handler=cmd_minimize)

    p_bench = sub.add_parser("bench", parents=[common],
                             help="run every problem in a directory under each cut mode")
    p_bench.add_argument("dir", help="directory of problem files")
    p_bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"epicut: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
