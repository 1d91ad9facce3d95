"""Ground truth and baselines: support enumeration, l1 and trace heuristics, integer rounding."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionError, InfeasibleError
from .sdp import PSD, SdpBuilder, SolverConfig, solve, solve_lp

MAX_BRUTE_FORCE_N = 14
ROUNDING_SLACK = 1e-4


@dataclass
class OracleReport:
    optimum: int
    witness: np.ndarray
    lps_solved: int
    wall_time: float
    support: tuple[int, ...] = ()
    backend: str = "highs"

    def to_dict(self) -> dict:
        return {
            "optimum": self.optimum,
            "witness": self.witness.tolist(),
            "support": list(self.support),
            "lps_solved": self.lps_solved,
            "wall_time": self.wall_time,
        }


def _as_system(A, b) -> tuple[np.ndarray, np.ndarray]:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != b.size:
        raise DimensionError(f"A has {A.shape[0]} rows but b has {b.size} entries")
    return A, b


def _feasible_on_support(A, b, support, backend, config):
    """A point of ``{Ax >= b, x_i = 0 off support}`` or None."""
    n = A.shape[1]
    x = np.zeros(n)
    cols = list(support)
    if not cols:
        return x if np.all(b <= 1e-12) else None
    As = A[:, cols]
    if backend == "highs":
        res = linprog(
            np.zeros(len(cols)),
            A_ub=-As,
            b_ub=-b,
            bounds=[(None, None)] * len(cols),
            method="highs",
            options={"primal_feasibility_tolerance": 1e-10},
        )
        if res.status != 0:
            return None
        x[cols] = res.x
    else:
        res = solve_lp(np.zeros(len(cols)), A_ub=-As, b_ub=-b, bounds=[(None, None)] * len(cols), config=config)
        if res.status != "optimal":
            return None
        x[cols] = res.x
    return x


def brute_force_card(A, b, backend: str = "highs", config: SolverConfig | None = None) -> OracleReport:
    """Smallest ``|S|`` such that ``{Ax >= b}`` has a point supported in ``S``.

    Supports are tried by increasing size and, within a size, in
    lexicographic order, so the witness support is the lexicographically
    smallest optimal one. ``backend`` is ``"highs"`` or ``"ipm"`` (this
    package's own solver).
    """
    A, b = _as_system(A, b)
    n = A.shape[1]
    if n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"brute force refuses n = {n} > {MAX_BRUTE_FORCE_N}")
    if backend not in ("highs", "ipm"):
        raise ValueError(f"unknown LP backend {backend!r}")
    start = time.perf_counter()
    lps = 1
    if _feasible_on_support(A, b, range(n), backend, config) is None:
        raise InfeasibleError("constraints Ax >= b have no solution")
    for size in range(n + 1):
        for support in combinations(range(n), size):
            x = _feasible_on_support(A, b, support, backend, config)
            lps += 1
            if x is not None:
                return OracleReport(size, x, lps, time.perf_counter() - start, support, backend)
    raise InfeasibleError("no support admits a feasible point")  # unreachable after the full-support probe


def l1_heuristic(A, b, config: SolverConfig | None = None) -> tuple[float, np.ndarray]:
    """``min |x|_1 s.t. Ax >= b`` with ``x = p - q``, ``p, q >= 0``."""
    A, b = _as_system(A, b)
    n = A.shape[1]
    res = solve_lp(np.ones(2 * n), A_ub=-np.hstack([A, -A]), b_ub=-b, config=config)
    if res.status != "optimal":
        raise InfeasibleError(f"l1 program ended with status {res.status}")
    x = res.x[:n] - res.x[n:]
    return float(np.abs(x).sum()), x


def _trace_sdp(mats, b):
    n = mats[0].shape[0]
    bd = SdpBuilder()
    k = bd.add_block(n, PSD, "X")
    rows = bd.add_rows(b)
    iu, ju = np.triu_indices(n)
    for row, Am in zip(rows, mats):
        sym = (Am + Am.T) / 2
        vals = sym[iu, ju]
        nz = vals != 0
        bd.add_entries(k, row, iu[nz], ju[nz], vals[nz])
    for i in range(n):
        bd.set_objective(k, i, i, 1.0)
    return bd.build()


def reduce_rank(X: np.ndarray, mats, tol: float = 1e-7, max_rounds: int = 50) -> np.ndarray:
    """Move along the optimal face of ``min Tr X`` until the rank cannot drop.

    With ``X = V V'`` of rank ``r``, any symmetric ``D`` with
    ``<V'A_jV, D> = 0`` and ``<V'V, D> = 0`` keeps constraints and objective;
    stepping to ``V (I - D / lambda_max(D)) V'`` zeroes one eigenvalue.
    """
    n = X.shape[0]
    for _ in range(max_rounds):
        lam, U = np.linalg.eigh((X + X.T) / 2)
        keep = lam > tol * max(1.0, float(lam.max(initial=0.0)))
        r = int(keep.sum())
        if r <= 1:
            break
        V = U[:, keep] * np.sqrt(lam[keep])
        iu, ju = np.triu_indices(r)
        weight = np.where(iu == ju, 1.0, 2.0)
        rows = [(V.T @ Am @ V)[iu, ju] * weight for Am in [*mats, np.eye(n)]]
        _, sv, Wt = np.linalg.svd(np.array(rows))
        null_dim = len(iu) - int(np.sum(sv > 1e-10 * max(1.0, sv[0])))
        if null_dim == 0:
            break
        d = Wt[-1]
        D = np.zeros((r, r))
        D[iu, ju] = d
        D[ju, iu] = d
        mu = np.linalg.eigvalsh(D)
        if abs(mu[-1]) < abs(mu[0]):
            D = -D
            mu = -mu[::-1]
        X = V @ (np.eye(r) - D / mu[-1]) @ V.T
    return (X + X.T) / 2


def nuclear_heuristic(A_list, b, config: SolverConfig | None = None, purify: bool = True) -> tuple[float, np.ndarray]:
    """``min Tr X s.t. Tr(A_j X) = b_j, X PSD``; on the PSD cone the trace is the nuclear norm.

    With ``purify`` the interior-point optimum, which sits in the relative
    interior of the optimal face, is moved to a low-rank point of that face.
    """
    mats = [np.asarray(Am, dtype=float) for Am in A_list]
    b = np.asarray(b, dtype=float).ravel()
    if not mats or any(Am.shape != mats[0].shape for Am in mats) or len(mats) != b.size:
        raise DimensionError("one square constraint matrix per entry of b is required")
    sol = solve(_trace_sdp(mats, b), config)
    if sol.status != "optimal":
        raise InfeasibleError(f"trace minimization ended with status {sol.status}")
    X = sol.X[0]
    if purify:
        X = reduce_rank(X, mats)
    return float(np.trace(X)), X


def rounded_bound(l: float, eps: float = ROUNDING_SLACK) -> int:
    """Integer bound ``ceil(l - eps)``: an integer objective at least ``l`` is at least this."""
    if not math.isfinite(l):
        raise ValueError(f"bound {l} is not finite")
    return int(math.ceil(l - eps))
