"""Optimality certificates: rank stabilization, rank-1 extraction, SOS decompositions, duality checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DecompositionError, ExtractionUnavailable
from .moment import MomentVector, assemble, moment_layout
from .poly import MonomialBasis, Polynomial, basis, newton_pruned_basis
from .sdp import NEAR_OPTIMAL, OPTIMAL, PSD, SdpBuilder, SdpSolution, SolverConfig, solve

# solver outcomes whose moments are trusted for rank and bound comparisons
TRUSTED_STATUS = (OPTIMAL, NEAR_OPTIMAL)


def numerical_rank(M: np.ndarray, tol: float = 1e-6) -> int:
    """Number of singular values above ``tol * max(1, largest singular value)``."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, float(sv[0]))))


@dataclass
class RelaxationResult:
    order: int
    lower_bound: float
    moments: MomentVector
    ranks: dict[str, int]
    truncated_rank: int
    status: str = "optimal"
    certified: bool = False
    extracted_point: dict[str, float] | None = None
    point_verified: bool | None = None
    program: Any = field(default=None, repr=False)
    solution: SdpSolution | None = field(default=None, repr=False)
    rank_tol: float = 1e-6

    @property
    def moment_rank(self) -> int:
        return self.ranks["moment"]

    @property
    def flat(self) -> bool:
        return self.truncated_rank == self.moment_rank

    def moment_matrix(self, degree: int | None = None) -> np.ndarray:
        d = self.order if degree is None else degree
        return assemble(self.moments, moment_layout(self.moments.n, d))


def stabilization_check(prev: RelaxationResult, cur: RelaxationResult, tol: float = 1e-6) -> bool:
    """Flatness of ``M_N(y)`` over its degree ``N-1`` truncation plus a bound change below ``tol``.

    Both solves must have ended optimal or near optimal; ranks read off a
    stalled iterate mean nothing. The outcome is stored in ``cur.certified``.
    Localizing ranks are diagnostic only.
    """
    if cur.order != prev.order + 1:
        raise ValueError(f"orders {prev.order} and {cur.order} are not consecutive")
    trusted = prev.status in TRUSTED_STATUS and cur.status in TRUSTED_STATUS
    ok = trusted and cur.flat and abs(cur.lower_bound - prev.lower_bound) < tol
    cur.certified = bool(ok)
    return cur.certified


def extract_point(result: RelaxationResult, tol: float = 1e-5) -> dict[str, float]:
    """Read a minimizer off the degree-1 moments of a rank-one moment matrix.

    The point is re-substituted into the program; if it violates a constraint
    or misses the bound by more than ``tol`` the result loses its certificate.
    """
    rank = numerical_rank(result.moment_matrix(), result.rank_tol)
    if rank != 1:
        raise ExtractionUnavailable(f"moment matrix has numerical rank {rank}; only rank-one extraction is supported")
    y = result.moments
    x = y.first_moments() / y.values[0]
    names = result.program.variables if result.program is not None else [f"x{i + 1}" for i in range(y.n)]
    point = {name: float(v) for name, v in zip(names, x)}
    result.extracted_point = point
    if result.program is not None:
        sap = result.program
        ok = sap.is_feasible(x, tol) and abs(sap.objective.evaluate(x) - result.lower_bound) <= tol
        result.point_verified = bool(ok)
        if not ok:
            result.certified = False
    return point


def sos_decompose(gram: np.ndarray, mb: MonomialBasis, tol: float = 1e-8) -> list[Polynomial]:
    """Squares ``h_i = sqrt(lambda_i) q_i' y_x`` from the eigendecomposition of a Gram matrix."""
    gram = np.asarray(gram, dtype=float)
    if gram.shape != (len(mb), len(mb)):
        raise DecompositionError(f"gram is {gram.shape}, basis has {len(mb)} monomials")
    gram = (gram + gram.T) / 2
    lam, Q = np.linalg.eigh(gram)
    scale = max(1.0, float(np.abs(lam).max(initial=0.0)))
    if lam.size and lam[0] < -tol * scale:
        raise DecompositionError(f"gram has eigenvalue {lam[0]:.3e}, not PSD")
    out = []
    for lk, qk in zip(lam, Q.T):
        if lk <= 0:
            continue
        h = Polynomial.from_coefficients(mb, np.sqrt(lk) * qk)
        if not h.is_zero():
            out.append(h)
    return out


def gram_polynomial(gram: np.ndarray, mb: MonomialBasis) -> Polynomial:
    """``y_x' G y_x`` expanded in monomials."""
    terms: dict[tuple[int, ...], float] = {}
    for i, a in enumerate(mb):
        for j, b in enumerate(mb):
            if gram[i, j] != 0.0:
                key = tuple(p + q for p, q in zip(a, b))
                terms[key] = terms.get(key, 0.0) + float(gram[i, j])
    return Polynomial(mb.n, terms)


def reconstruction_error(squares: list[Polynomial], target: Polynomial) -> float:
    """Largest coefficient of ``sum h^2 - target`` relative to ``max(1, max |coef of target|)``."""
    total = Polynomial(target.n)
    for h in squares:
        total = total + h * h
    diff = (total - target).to_float()
    worst = max((abs(c) for c in diff.terms.values()), default=0.0)
    return worst / max(1.0, target.to_float().max_abs_coefficient())


@dataclass
class SosCertificate:
    polynomial: Polynomial
    basis: MonomialBasis
    gram: np.ndarray
    squares: list[Polynomial]
    error: float
    solution: SdpSolution = field(repr=False)


def _project_gram(gram: np.ndarray, terms: dict, p: Polynomial) -> np.ndarray:
    """Nearest matrix (Frobenius on the upper triangle) that matches ``p`` exactly.

    The solver meets the coefficient equations only to its feasibility
    tolerance. Every entry belongs to exactly one coefficient, so the
    correction splits per monomial: ``r w / |w|^2`` with ``w`` the entry
    weights (1 on the diagonal, 2 off it) and ``r`` the residual.
    """
    G = (gram + gram.T) / 2
    for key, entries in terms.items():
        rows = np.array([i for i, _ in entries])
        cols = np.array([j for _, j in entries])
        w = np.where(rows == cols, 1.0, 2.0)
        r = float(p.coefficient(key)) - float(w @ G[rows, cols])
        G[rows, cols] += r * w / (w @ w)
        G[cols, rows] = G[rows, cols]
    return G


def find_sos(p: Polynomial, config: SolverConfig | None = None, prune: bool = True) -> SosCertificate:
    """Gram-matrix feasibility: find ``G >= 0`` with ``p = y_x' G y_x``.

    The basis is all monomials of degree ``deg p / 2``, pruned to the half
    Newton polytope when ``prune`` is set. The solver minimizes ``Tr G`` so the
    result is deterministic and tends to low rank. The solver's Gram matrix is
    projected onto the coefficient equations before it is decomposed.
    """
    if p.degree % 2:
        raise DecompositionError(f"odd degree {p.degree} polynomial cannot be SOS")
    mb = newton_pruned_basis(p) if prune else basis(p.n, p.degree // 2)
    terms: dict[tuple[int, ...], list[tuple[int, int]]] = {}
    for i, a in enumerate(mb):
        for j in range(i, len(mb)):
            key = tuple(s + t for s, t in zip(a, mb[j]))
            terms.setdefault(key, []).append((i, j))
    pf = p.to_float()
    missing = [a for a in pf.terms if a not in terms]
    if missing:
        raise DecompositionError(f"monomials {missing} are outside the Gram support")
    bd = SdpBuilder()
    k = bd.add_block(len(mb), PSD, "gram")
    keys = sorted(terms)
    rows = bd.add_rows([pf.coefficient(key) for key in keys])
    for row, key in zip(rows, keys):
        for i, j in terms[key]:
            # (i, j) and (j, i) both contribute to the coefficient; the packed
            # inner product already counts off-diagonal entries twice
            bd.add_entries(k, row, i, j, 1.0)
    for i in range(len(mb)):
        bd.set_objective(k, i, i, 1.0)
    sol = solve(bd.build(), config)
    if not sol.optimal:
        raise DecompositionError(f"SOS feasibility solve ended with status {sol.status}")
    gram = _project_gram(sol.X[0], terms, pf)
    squares = sos_decompose(gram, mb, tol=1e-6)
    return SosCertificate(p, mb, gram, squares, reconstruction_error(squares, pf), sol)


def duality_check(moment_value: float, sos_value: float, tol: float = 1e-6) -> bool:
    """Weak duality: a certified SOS lower bound never exceeds the moment bound."""
    return sos_value <= moment_value + tol


def certificate_report(result: RelaxationResult) -> dict:
    from .oracle import rounded_bound

    out = {
        "order": result.order,
        "bound": result.lower_bound,
        "rounded_bound": rounded_bound(result.lower_bound) if math.isfinite(result.lower_bound) else None,
        "ranks": dict(result.ranks),
        "truncated_rank": result.truncated_rank,
        "certified": result.certified,
        "status": result.status,
    }
    if result.extracted_point is not None:
        out["point"] = result.extracted_point
        out["point_verified"] = result.point_verified
    return out
