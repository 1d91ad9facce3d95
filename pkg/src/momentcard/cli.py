"""Command-line front end: parse a problem file, run a relaxation, oracle or fit, emit JSON.

Exit codes: 0 success, 2 unreadable input or bad flags, 3 solver failure (the
partial report is still written), 4 infeasible problem.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .certify import TRUSTED_STATUS, certificate_report, extract_point, stabilization_check
from .errors import ExtractionUnavailable, InfeasibleError, MomentCardError
from .oracle import brute_force_card, l1_heuristic, nuclear_heuristic
from .relaxation import (
    SemialgebraicProgram,
    build_moment_relaxation,
    envelope_validation,
    fit_envelope,
    min_card_program,
    min_rank_program,
    sample_feasible_points,
    solve_relaxation,
)
from .sdp import INFEASIBLE_SUSPECTED, SolverConfig, export_sdpa, split_free_variables

COMMANDS = ("relax", "certify", "bruteforce", "heuristic", "envelope", "export-sdpa")
EXIT_OK, EXIT_PARSE, EXIT_SOLVER, EXIT_INFEASIBLE = 0, 2, 3, 4
VALIDATION_SAMPLES = 1000


class InputError(MomentCardError):
    """The problem file or a flag does not describe a valid run."""


@dataclass
class ProblemInput:
    kind: str
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    A_list: list[np.ndarray] = field(default_factory=list)
    alpha: float | None = None
    degree: int | None = None
    box_upper: float | None = 1.0
    t_bound: float | None = None


@dataclass
class RunSpec:
    command: str
    input: Path
    orders: tuple[int, ...] = ()
    config: SolverConfig = field(default_factory=SolverConfig)
    out: Path | None = None
    alpha: float | None = None
    degree: int | None = None
    drop: tuple[int, ...] = ()

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.command in ("relax", "certify", "export-sdpa") and not self.orders:
            raise InputError(f"{self.command} needs a nonempty --order")


def _matrix(obj, name: str) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} is not a numeric array: {exc}") from None
    return arr


def parse_problem(obj) -> ProblemInput:
    """Validate a decoded problem file."""
    if not isinstance(obj, dict) or "type" not in obj:
        raise InputError('problem must be a JSON object with a "type" field')
    kind = obj["type"]
    alpha = obj.get("alpha")
    if alpha is not None and not (isinstance(alpha, (int, float)) and alpha > 1):
        raise InputError("alpha must be a number greater than 1")
    if kind in ("mincard", "envelope"):
        for key in ("A", "b"):
            if key not in obj:
                raise InputError(f'{kind} problem needs "{key}"')
        A = _matrix(obj["A"], "A")
        b = _matrix(obj["b"], "b").ravel()
        if A.ndim != 2 or A.shape[0] != b.size:
            raise InputError(f"A must be an m x n matrix with m = len(b) = {b.size}")
        degree = obj.get("degree")
        if kind == "envelope" and not (isinstance(degree, int) and degree >= 1):
            raise InputError('envelope problem needs an integer "degree" >= 1')
        return ProblemInput(kind, A, b, alpha=alpha, degree=degree,
                            box_upper=obj.get("box_upper", 1.0), t_bound=obj.get("t_bound"))
    if kind == "minrank":
        for key in ("A_list", "b"):
            if key not in obj:
                raise InputError(f'minrank problem needs "{key}"')
        mats = [_matrix(Am, "A_list entry") for Am in obj["A_list"]]
        b = _matrix(obj["b"], "b").ravel()
        if not mats or any(Am.ndim != 2 or Am.shape[0] != Am.shape[1] or Am.shape != mats[0].shape for Am in mats):
            raise InputError("A_list must hold square matrices of one size")
        if len(mats) != b.size:
            raise InputError("A_list and b must have the same length")
        return ProblemInput(kind, b=b, A_list=mats, alpha=alpha)
    raise InputError(f"unknown problem type {kind!r}; expected mincard, minrank or envelope")


def load_problem(path: Path) -> ProblemInput:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None
    return parse_problem(obj)


def parse_orders(text: str) -> tuple[int, ...]:
    """``"3"`` or an inclusive range ``"2..4"``."""
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise InputError(f"order {text!r} is not an integer or a range a..b") from None
    if lo < 1 or hi < lo:
        raise InputError(f"order range {text!r} is empty or starts below 1")
    return tuple(range(lo, hi + 1))


def _program(prob: ProblemInput, alpha: float | None) -> SemialgebraicProgram:
    alpha = alpha if alpha is not None else prob.alpha
    if prob.kind == "minrank":
        return min_rank_program(prob.A_list, prob.b, alpha)
    return min_card_program(prob.A, prob.b, alpha)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def result_report(result) -> dict:
    rep = certificate_report(result)
    sol = result.solution
    if sol is not None:
        rep["solver"] = {
            "status": sol.status,
            "message": sol.message,
            "iterations": sol.iterations,
            "primal_residual": sol.primal_residual,
            "dual_residual": sol.dual_residual,
            "relative_gap": sol.relative_gap,
        }
    return rep


def _exit_for(statuses) -> int:
    statuses = list(statuses)
    if any(s == INFEASIBLE_SUSPECTED for s in statuses):
        return EXIT_INFEASIBLE
    if any(s not in TRUSTED_STATUS for s in statuses):
        return EXIT_SOLVER
    return EXIT_OK


def _relax(spec: RunSpec, prob: ProblemInput) -> tuple[dict, int]:
    sap = _program(prob, spec.alpha)
    results = [solve_relaxation(sap, N, spec.config, drop=spec.drop) for N in spec.orders]
    report = {"results": [result_report(r) for r in results]}
    return report, _exit_for(r.status for r in results)


def _certify(spec: RunSpec, prob: ProblemInput) -> tuple[dict, int]:
    sap = _program(prob, spec.alpha)
    orders = spec.orders if len(spec.orders) > 1 else (spec.orders[0], spec.orders[0] + 1)
    prev = solve_relaxation(sap, orders[0], spec.config, drop=spec.drop)
    cur = prev
    for N in orders[1:]:
        cur = solve_relaxation(sap, N, spec.config, drop=spec.drop)
        if stabilization_check(prev, cur):
            break
        prev = cur
    if cur.certified:
        try:
            extract_point(cur)
        except ExtractionUnavailable:
            pass
    report = {"certificate": result_report(cur), "previous": result_report(prev) if prev is not cur else None}
    return report, _exit_for([prev.status, cur.status])


def _bruteforce(spec: RunSpec, prob: ProblemInput) -> tuple[dict, int]:
    if prob.kind == "minrank":
        raise InputError("no brute-force oracle for minrank problems")
    rep = brute_force_card(prob.A, prob.b).to_dict()
    rep.pop("wall_time")  # keeps reports reproducible
    return rep, EXIT_OK


def _heuristic(spec: RunSpec, prob: ProblemInput) -> tuple[dict, int]:
    if prob.kind == "minrank":
        value, X = nuclear_heuristic(prob.A_list, prob.b, spec.config)
        eig = np.linalg.eigvalsh(X)
        rank = int(np.sum(eig > 1e-6 * max(1.0, float(eig.max(initial=0.0)))))
        return {"method": "nuclear", "value": value, "X": X, "rank": rank}, EXIT_OK
    value, x = l1_heuristic(prob.A, prob.b, spec.config)
    return {"method": "l1", "value": value, "x": x, "card": int(np.sum(np.abs(x) > 1e-8))}, EXIT_OK


def _envelope(spec: RunSpec, prob: ProblemInput) -> tuple[dict, int]:
    if prob.kind == "minrank":
        raise InputError("envelope fits need a mincard or envelope problem")
    d = spec.degree if spec.degree is not None else prob.degree
    if d is None:
        raise InputError("envelope needs --degree or a degree field")
    N = spec.orders[0] if spec.orders else None
    fit = fit_envelope(prob.A, prob.b, d, N, prob.box_upper, spec.alpha or prob.alpha, prob.t_bound, spec.config)
    n = prob.A.shape[1]
    names = [f"x{i + 1}" for i in range(n)]
    pts = sample_feasible_points(prob.A, prob.b, VALIDATION_SAMPLES,
                                 prob.box_upper if prob.box_upper is not None else 1.0, np.random.default_rng(0))
    report = {
        "degree": d,
        "order": fit.program.order,
        "status": fit.status,
        "value": fit.value,
        "p": fit.p.to_json(names),
        "validation": envelope_validation(fit.p, pts),
    }
    return report, _exit_for([fit.status])


def run(spec: RunSpec) -> int:
    """Execute ``spec`` and write its report; returns the process exit code."""
    prob = load_problem(spec.input)
    if spec.command == "export-sdpa":
        if len(spec.orders) != 1:
            raise InputError("export-sdpa needs a single --order")
        rel = build_moment_relaxation(_program(prob, spec.alpha), spec.orders[0], spec.drop)
        _emit(export_sdpa(split_free_variables(rel.sdp)), spec.out)
        return EXIT_OK
    handler = {"relax": _relax, "certify": _certify, "bruteforce": _bruteforce,
               "heuristic": _heuristic, "envelope": _envelope}[spec.command]
    try:
        body, code = handler(spec, prob)
    except InfeasibleError as exc:
        body, code = {"error": str(exc)}, EXIT_INFEASIBLE
    report = {"command": spec.command, "problem": prob.kind, "created": datetime.now(timezone.utc).isoformat()}
    report.update(body)
    _emit(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n", spec.out)
    return code


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="momentcard", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("input", type=Path, help="problem file (JSON)")
    parser.add_argument("--order", help="relaxation order N or inclusive range a..b")
    parser.add_argument("--alpha", type=float, help="ball radius squared for the compactness constraint")
    parser.add_argument("--tol", type=float, help="gap and feasibility tolerance of the SDP solver")
    parser.add_argument("--max-iter", type=int, help="SDP solver iteration limit")
    parser.add_argument("--degree", type=int, help="envelope polynomial degree")
    parser.add_argument("--drop-constraint", type=int, action="append", default=[], metavar="K",
                        help="leave out the K-th localizing block (repeatable)")
    parser.add_argument("--out", type=Path, help="report path (default: stdout)")
    return parser


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    cfg = {}
    if args.tol is not None:
        if args.tol <= 0:
            raise InputError("--tol must be positive")
        cfg.update(gap_tol=args.tol, feas_tol=args.tol, near_tol=max(args.tol, SolverConfig.near_tol))
    if args.max_iter is not None:
        if args.max_iter < 1:
            raise InputError("--max-iter must be at least 1")
        cfg["max_iter"] = args.max_iter
    if args.alpha is not None and args.alpha <= 1:
        raise InputError("--alpha must be greater than 1")
    return RunSpec(
        command=args.command,
        input=args.input,
        orders=parse_orders(args.order) if args.order else (),
        config=SolverConfig(**cfg),
        out=args.out,
        alpha=args.alpha,
        degree=args.degree,
        drop=tuple(args.drop_constraint),
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(spec_from_args(args))
    except (InputError, MomentCardError, ValueError, IndexError) as exc:
        print(f"momentcard: error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
