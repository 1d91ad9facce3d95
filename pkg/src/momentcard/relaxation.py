"""Semialgebraic reformulations of MinCard / MinRank and their moment and SOS relaxations.

A relaxation of order ``N`` works with moments of degree up to ``2N``. An
inequality ``g >= 0`` of degree ``delta`` contributes the localizing block
``M_{N - ceil(delta/2)}(g y) >= 0``; an equality ``h = 0`` contributes one
linear constraint ``L_y(h x^gamma) = 0`` per monomial ``gamma`` of degree at
most ``2 (N - ceil(deg h / 2))``.

The moment relaxation is assembled so that the moments are the dual
multipliers of an :class:`~momentcard.sdp.SdpProblem` (one equality row per
monomial). The SOS side is assembled separately from polynomial products and
is the primal of the same pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .certify import RelaxationResult, numerical_rank
from .errors import DegreeOverflowError, DimensionError
from .moment import MatrixLayout, MomentVector, assemble, localizing_layout, moment_layout
from .poly import MonomialBasis, Polynomial, basis, basis_size, sigma_k, sym_entries, sym_index
from .sdp import DIAGONAL, PSD, SdpBuilder, SdpProblem, SdpSolution, SolverConfig, solve

MAX_RANK_DIM = 4


@dataclass
class SemialgebraicProgram:
    """minimize ``objective`` over ``{g >= 0 for g in inequalities, h = 0 for h in equalities}``.

    ``ball`` is the compactness constraint ``ball >= 0``; it defaults to
    ``ball_radius - |x|^2`` and is always appended to the inequalities.
    """

    variables: list[str]
    objective: Polynomial
    inequalities: list[Polynomial] = field(default_factory=list)
    equalities: list[Polynomial] = field(default_factory=list)
    ball_radius: float = 2.0
    ball: Polynomial | None = None
    inequality_names: list[str] = field(default_factory=list)
    equality_names: list[str] = field(default_factory=list)
    min_order: int = 1
    kind: str = "generic"

    def __post_init__(self):
        n = len(self.variables)
        if self.ball_radius <= 1:
            raise ValueError(f"ball radius must exceed 1, got {self.ball_radius}")
        for p in [self.objective, *self.inequalities, *self.equalities]:
            if p.n != n:
                raise DimensionError(f"polynomial in {p.n} variables, program has {n}")
        if self.ball is None:
            self.ball = Polynomial.constant(n, self.ball_radius) - sum(
                (Polynomial.variable(n, i) ** 2 for i in range(n)), Polynomial(n)
            )
        if not self.inequality_names:
            self.inequality_names = [f"g{k}" for k in range(len(self.inequalities))]
        if not self.equality_names:
            self.equality_names = [f"h{k}" for k in range(len(self.equalities))]

    @property
    def n(self) -> int:
        return len(self.variables)

    def all_inequalities(self) -> list[tuple[str, Polynomial]]:
        return list(zip(self.inequality_names, self.inequalities)) + [("ball", self.ball)]

    def required_order(self) -> int:
        degs = [self.objective.degree] + [g.degree for g in self.inequalities + self.equalities]
        degs.append(self.ball.degree)
        return max(self.min_order, max(math.ceil(d / 2) for d in degs), 1)

    def is_feasible(self, point: Sequence[float], tol: float = 1e-5) -> bool:
        return (
            all(g.evaluate(point) >= -tol for _, g in self.all_inequalities())
            and all(abs(h.evaluate(point)) <= tol for h in self.equalities)
        )


# ---------------------------------------------------------------------------
# program builders


def min_card_program(A, b, alpha: float | None = None) -> SemialgebraicProgram:
    """MinCard ``{Ax >= b}`` over variables ``(x_1..x_n, v_1..v_n)``.

    ``Card(x) = min sum v_i`` subject to ``(v_i - 1) x_i = 0`` and ``v_i >= 0``.
    Without ``alpha`` the ball radius is ``2 (1 + |x|^2 + |v|^2)`` at the
    l1-heuristic point with ``v`` its support indicator.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if b.size != m:
        raise DimensionError(f"A has {m} rows but b has {b.size} entries")
    if alpha is None:
        alpha = default_card_alpha(A, b)
    nv = 2 * n
    xs = [Polynomial.variable(nv, i) for i in range(n)]
    vs = [Polynomial.variable(nv, n + i) for i in range(n)]
    objective = sum(vs, Polynomial(nv))
    equalities = [(vs[i] - 1) * xs[i] for i in range(n)]
    inequalities = list(vs)
    names = [f"v{i + 1}>=0" for i in range(n)]
    for j in range(m):
        inequalities.append(sum((float(A[j, i]) * xs[i] for i in range(n)), Polynomial(nv)) - float(b[j]))
        names.append(f"row{j + 1}")
    return SemialgebraicProgram(
        [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)],
        objective,
        inequalities,
        equalities,
        float(alpha),
        inequality_names=names,
        equality_names=[f"(v{i + 1}-1)x{i + 1}" for i in range(n)],
        kind="mincard",
    )


def default_card_alpha(A, b) -> float:
    from .oracle import l1_heuristic

    _, x = l1_heuristic(A, b)
    support = np.abs(x) > 1e-6
    return 2.0 * (1.0 + float(x @ x) + float(support.sum()))


def frobenius_sq(n: int, nv: int, offset: int) -> Polynomial:
    """``Tr(X'X)`` for the symmetric matrix whose upper triangle starts at variable ``offset``."""
    out = Polynomial(nv)
    for i, j in sym_entries(n):
        xij = Polynomial.variable(nv, offset + sym_index(n, i, j))
        out = out + (1 if i == j else 2) * xij**2
    return out


def trace_product(Amat: np.ndarray, nv: int, offset: int) -> Polynomial:
    """``Tr(A X)`` as a linear polynomial in the upper-triangle variables of ``X``."""
    n = Amat.shape[0]
    out = Polynomial(nv)
    for i, j in sym_entries(n):
        coef = Amat[i, i] if i == j else Amat[i, j] + Amat[j, i]
        if coef:
            out = out + float(coef) * Polynomial.variable(nv, offset + sym_index(n, i, j))
    return out


def min_rank_program(A_list, b, alpha: float | None = None, principal_minors: bool = False) -> SemialgebraicProgram:
    """MinRank over ``{Tr(A_j X) = b_j, X PSD}`` with variables ``(u, X upper triangle, v)``.

    Uses ``(v_i - 1) sigma_i(X) = 0``, ``v_i >= 0`` and ``u'Xu >= 0``. With
    ``principal_minors`` every principal minor ``d_I(X) >= 0`` is added as well.
    """
    mats = [np.asarray(Am, dtype=float) for Am in A_list]
    b = np.asarray(b, dtype=float).ravel()
    if not mats:
        raise DimensionError("at least one constraint matrix is required")
    n = mats[0].shape[0]
    if any(Am.shape != (n, n) for Am in mats) or len(mats) != b.size:
        raise DimensionError("constraint matrices must be n x n, one per entry of b")
    if n > MAX_RANK_DIM:
        raise ValueError(f"matrix dimension {n} exceeds the supported maximum {MAX_RANK_DIM}")
    if alpha is None:
        alpha = default_rank_alpha(mats, b)
    nx = n * (n + 1) // 2
    nv = n + nx + n
    us = [Polynomial.variable(nv, i) for i in range(n)]
    vs = [Polynomial.variable(nv, n + nx + i) for i in range(n)]
    xpos = list(range(n, n + nx))
    names = [f"u{i + 1}" for i in range(n)]
    names += [f"X{i + 1}{j + 1}" for i, j in sym_entries(n)]
    names += [f"v{i + 1}" for i in range(n)]
    equalities, eq_names = [], []
    for k in range(1, n + 1):
        equalities.append((vs[k - 1] - 1) * sigma_k(n, k).embed(nv, xpos))
        eq_names.append(f"(v{k}-1)sigma{k}")
    for j, (Am, bj) in enumerate(zip(mats, b)):
        equalities.append(trace_product(Am, nv, n) - float(bj))
        eq_names.append(f"trace{j + 1}")
    inequalities = list(vs)
    ineq_names = [f"v{i + 1}>=0" for i in range(n)]
    uxu = Polynomial(nv)
    for i, j in sym_entries(n):
        xij = Polynomial.variable(nv, n + sym_index(n, i, j))
        uxu = uxu + (1 if i == j else 2) * xij * us[i] * us[j]
    inequalities.append(uxu)
    ineq_names.append("u'Xu>=0")
    if principal_minors:
        from itertools import combinations

        from .poly import principal_minor

        for size in range(1, n + 1):
            for subset in combinations(range(n), size):
                inequalities.append(principal_minor(n, subset).embed(nv, xpos))
                ineq_names.append("minor" + "".join(str(i + 1) for i in subset))
    ball = (
        Polynomial.constant(nv, float(alpha))
        - frobenius_sq(n, nv, n)
        - sum((v**2 for v in vs), Polynomial(nv))
        - sum((u**2 for u in us), Polynomial(nv))
    )
    return SemialgebraicProgram(
        names,
        sum(vs, Polynomial(nv)),
        inequalities,
        equalities,
        float(alpha),
        ball=ball,
        inequality_names=ineq_names,
        equality_names=eq_names,
        min_order=math.ceil((n + 1) / 2),
        kind="minrank",
    )


def default_rank_alpha(mats, b) -> float:
    from .oracle import nuclear_heuristic

    _, X = nuclear_heuristic(mats, b)
    eig = np.linalg.eigvalsh(X)
    rank = int(np.sum(eig > 1e-6 * max(1.0, eig.max(initial=0.0))))
    return 2.0 * (1.0 + float(np.sum(X * X)) + rank)


# ---------------------------------------------------------------------------
# moment side


@dataclass
class RelaxationSdp:
    order: int
    sdp: SdpProblem
    block_tags: list[str]
    layouts: list[MatrixLayout]
    y_dim: int
    objective: np.ndarray
    program: SemialgebraicProgram
    equality_entries: int
    faces: list[np.ndarray | None] = field(default_factory=list)
    objective_sense: str = "minimize"

    def lower_bound(self, sol: SdpSolution) -> float:
        return -sol.dual_obj

    def moments(self, sol: SdpSolution) -> MomentVector:
        return MomentVector(self.program.n, 2 * self.order, sol.y)


def _normalized(p: Polynomial) -> Polynomial:
    """``p`` divided by its largest coefficient; the constraint set is unchanged."""
    top = p.max_abs_coefficient()
    return p.to_float() * (1.0 / top) if top else p


def _local_degree(N: int, g: Polynomial, name: str) -> int:
    d = N - math.ceil(g.degree / 2)
    if d < 0:
        raise DegreeOverflowError(
            f"constraint {name!r} has degree {g.degree}, too high for relaxation order {N}"
        )
    return d


def _check_order(sap: SemialgebraicProgram, N: int) -> None:
    if N < sap.min_order:
        raise DegreeOverflowError(f"relaxation order {N} is below the minimum {sap.min_order} for this program")
    if sap.objective.degree > 2 * N:
        raise DegreeOverflowError(f"objective of degree {sap.objective.degree} exceeds 2N = {2 * N}")


def forced_kernel(
    sap: SemialgebraicProgram, N: int, mb: MonomialBasis, g_degree: int
) -> list[dict[int, float]]:
    """Coefficient vectors of ``h x^beta`` that every feasible ``y`` puts in the kernel of a block.

    The block is ``M_d(g y)`` over ``mb = basis(n, d)``. A vector ``p = h x^beta``
    qualifies when it fits in ``mb`` and every entry of ``M_d(g y) p`` is one
    of the equality functionals ``L(h x^gamma)``, ``|gamma| <= 2 d_h``, so that
    ``M_d(g y) p = 0`` holds linearly and restricting the block to the
    orthogonal complement of ``p`` loses nothing.
    """
    d = mb.m
    vectors = []
    for name, h in zip(sap.equality_names, sap.equalities):
        dh = _local_degree(N, h, name)
        top = min(d - h.degree, 2 * dh - g_degree - d)
        if top < 0:
            continue
        hn = _normalized(h)
        for beta in basis(sap.n, top):
            vectors.append(
                {mb.index_of[tuple(a + b for a, b in zip(alpha, beta))]: float(c) for alpha, c in hn.terms.items()}
            )
    return vectors


def face_basis(size: int, vectors: list[dict[int, float]]) -> np.ndarray | None:
    """Orthonormal basis of the complement of ``vectors`` (``None`` when there is nothing to remove).

    When every vector is ``c (e_a - e_b)`` the complement is spanned by the
    normalized indicators of the classes they link, which keeps the reduced
    block as sparse as the original.
    """
    if not vectors:
        return None
    if all(len(v) == 2 and sum(v.values()) == 0.0 for v in vectors):
        parent = list(range(size))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for v in vectors:
            a, b = (find(i) for i in v)
            if a != b:
                parent[max(a, b)] = min(a, b)
        roots = np.array([find(i) for i in range(size)])
        _, cls = np.unique(roots, return_inverse=True)
        V = np.zeros((size, cls.max() + 1))
        V[np.arange(size), cls] = 1.0
        return V / np.sqrt(V.sum(axis=0))
    P = np.zeros((size, len(vectors)))
    for j, v in enumerate(vectors):
        for i, c in v.items():
            P[i, j] = c
    return la.null_space(P.T, rcond=1e-10)


def _reduced_entries(layout: MatrixLayout, V: np.ndarray, y_dim: int):
    """``(y index, i, j, value)`` triplets of the upper triangle of ``V' M(y) V``."""
    side = layout.side
    off = layout.rows != layout.cols
    rows = np.concatenate([layout.rows * side + layout.cols, (layout.cols * side + layout.rows)[off]])
    vals = np.concatenate([layout.coefs, layout.coefs[off]])
    idx = np.concatenate([layout.index, layout.index[off]])
    full = sp.csr_matrix((vals, (rows, idx)), shape=(side * side, y_dim))
    Vs = sp.csr_matrix(np.where(np.abs(V) > 1e-15, V, 0.0))
    red = (sp.kron(Vs, Vs).T @ full).tocoo()
    r = V.shape[1]
    i, j = np.divmod(red.row, r)
    keep = (i <= j) & (np.abs(red.data) > 1e-14)
    return red.col[keep], i[keep], j[keep], red.data[keep]


def build_moment_relaxation(
    sap: SemialgebraicProgram, N: int, drop: Sequence[int] = (), reduce: bool = True
) -> RelaxationSdp:
    """Order-``N`` moment relaxation ``l_N = inf <objective, y>``.

    ``drop`` lists positions in :meth:`SemialgebraicProgram.all_inequalities`
    whose localizing blocks are left out; the bound can only go down. With
    ``reduce`` each block is restricted to the complement of its forced
    kernel (see :func:`forced_kernel`), which leaves the feasible set
    unchanged but restores strict feasibility of the SDP.
    """
    _check_order(sap, N)
    n = sap.n
    order = 2 * N
    s = basis_size(n, order)
    big = basis(n, order)
    c = sap.objective.coefficient_vector(big)
    bd = SdpBuilder()
    bd.add_rows(-c)
    layouts, tags, faces = [], [], []

    def add_layout(layout: MatrixLayout, tag: str, g_degree: int) -> None:
        V = face_basis(layout.side, forced_kernel(sap, N, basis(n, layout.degree), g_degree)) if reduce else None
        if V is None:
            k = bd.add_block(layout.side, PSD, tag)
            bd.add_entries(k, layout.index, layout.rows, layout.cols, -layout.coefs)
        elif V.shape[1] == 0:
            return  # the whole block is forced to zero by the equalities
        else:
            k = bd.add_block(V.shape[1], PSD, tag)
            gam, i, j, val = _reduced_entries(layout, V, s)
            bd.add_entries(k, gam, i, j, -val)
        layouts.append(layout)
        tags.append(tag)
        faces.append(V)

    add_layout(moment_layout(n, N), "moment", 0)
    ineqs = sap.all_inequalities()
    for k in drop:
        if not 0 <= k < len(ineqs):
            raise IndexError(f"no inequality number {k}; the program has {len(ineqs)}")
    for k, (name, g) in enumerate(ineqs):
        d = _local_degree(N, g, name)
        if k in drop:
            continue
        add_layout(localizing_layout(_normalized(g), n, d, order=order), f"localizing:{name}", g.degree)

    # y_0 = 1
    col = bd.add_free(1)
    bd.add_free_entries(0, col, 1.0)
    bd.set_free_objective(col, 1.0)
    eq_entries = 0
    for name, h in zip(sap.equality_names, sap.equalities):
        d = _local_degree(N, h, name)
        side = basis_size(n, d)
        eq_entries += side * (side + 1) // 2
        # entries (i, j) of M_d(h y) only depend on beta(i) + beta(j)
        h = _normalized(h)
        for gamma in basis(n, 2 * d):
            col = bd.add_free(1)
            idx, vals = [], []
            for alpha, coef in h.terms.items():
                idx.append(big.index_of[tuple(a + g for a, g in zip(alpha, gamma))])
                vals.append(float(coef))
            bd.add_free_entries(idx, col, vals)
    sdp = bd.build()
    return RelaxationSdp(N, sdp, tags, layouts, s, c, sap, eq_entries, faces)


# ---------------------------------------------------------------------------
# SOS side


@dataclass
class SosDual:
    """``max t`` s.t. ``objective - t = q_0 + sum g_k q_k + sum h_j lambda_j``."""

    order: int
    sdp: SdpProblem
    gram_bases: list[MonomialBasis]
    gram_tags: list[str]
    multiplier_bases: list[MonomialBasis]
    t_column: int
    program: SemialgebraicProgram
    faces: list[np.ndarray | None] = field(default_factory=list)

    def value(self, sol: SdpSolution) -> float:
        return -sol.primal_obj


def _gram_rows(
    bd: SdpBuilder, k: int, mb: MonomialBasis, g: Polynomial, row_of: dict, V: np.ndarray | None = None
) -> None:
    """Coefficients of ``g * (b' Q b)`` for Gram block ``k``.

    ``b`` is the monomial vector of ``mb``, or the polynomials ``V' y_x`` when a
    face basis ``V`` is given.
    """
    if V is None:
        polys = [Polynomial.monomial(a) for a in mb]
    else:
        polys = [Polynomial.from_coefficients(mb, np.where(np.abs(col) > 1e-15, col, 0.0)) for col in V.T]
    rows, ii, jj, vals = [], [], [], []
    for i in range(len(polys)):
        gi = polys[i] * g
        for j in range(i, len(polys)):
            prod = gi * polys[j]
            for gamma, coef in prod.terms.items():
                if abs(coef) <= 1e-14:
                    continue
                rows.append(row_of[gamma])
                ii.append(i)
                jj.append(j)
                vals.append(float(coef))
    if rows:
        bd.add_entries(k, np.array(rows), np.array(ii), np.array(jj), np.array(vals))


def _sos_terms(bd, sap, N, row_of, n_vars, tag_prefix="", reduce=True):
    """Gram blocks and equality multipliers of a Putinar certificate at order ``N``."""
    gram_bases, gram_tags, mult_bases, faces = [], [], [], []

    def gram(mb: MonomialBasis, g: Polynomial, g_degree: int, tag: str) -> None:
        V = face_basis(len(mb), forced_kernel(sap, N, mb, g_degree)) if reduce else None
        if V is not None and V.shape[1] == 0:
            return
        k = bd.add_block(len(mb) if V is None else V.shape[1], PSD, tag)
        _gram_rows(bd, k, mb, g, row_of, V)
        gram_bases.append(mb)
        gram_tags.append(tag)
        faces.append(V)

    gram(basis(n_vars, N), Polynomial.constant(n_vars, 1), 0, f"{tag_prefix}sos0")
    for name, g in sap.all_inequalities():
        d = _local_degree(N, g, name)
        gram(basis(n_vars, d), _normalized(g), g.degree, f"{tag_prefix}sos:{name}")
    for name, h in zip(sap.equality_names, sap.equalities):
        d = _local_degree(N, h, name)
        mb = basis(n_vars, 2 * d)
        mult_bases.append(mb)
        for beta in mb:
            col = bd.add_free(1)
            prod = Polynomial.monomial(beta) * _normalized(h)
            rows = [row_of[gamma] for gamma in prod.terms]
            bd.add_free_entries(rows, col, [float(c) for c in prod.terms.values()])
    return gram_bases, gram_tags, mult_bases, faces


def build_sos_dual(sap: SemialgebraicProgram, N: int, reduce: bool = True) -> SosDual:
    """Putinar-certificate SDP whose optimum is the largest certified lower bound ``t``."""
    _check_order(sap, N)
    n = sap.n
    big = basis(n, 2 * N)
    row_of = dict(big.index_of)
    bd = SdpBuilder()
    bd.add_rows(sap.objective.coefficient_vector(big))
    grams, tags, mults, faces = _sos_terms(bd, sap, N, row_of, n, reduce=reduce)
    t = bd.add_free(1)
    bd.add_free_entries(0, t, 1.0)
    bd.set_free_objective(t, -1.0)
    return SosDual(N, bd.build(), grams, tags, mults, t, sap, faces)


# ---------------------------------------------------------------------------
# solving


def solve_relaxation(
    sap: SemialgebraicProgram,
    N: int,
    config: SolverConfig | None = None,
    rank_tol: float = 1e-6,
    drop: Sequence[int] = (),
    reduce: bool = True,
) -> RelaxationResult:
    """Solve the order-``N`` moment relaxation and record block ranks."""
    rel = build_moment_relaxation(sap, N, drop, reduce)
    sol = solve(rel.sdp, config)
    y = rel.moments(sol)
    ranks = {}
    for tag, layout in zip(rel.block_tags, rel.layouts):
        ranks[tag] = numerical_rank(assemble(y, layout), rank_tol)
    truncated = numerical_rank(assemble(y, moment_layout(sap.n, N - 1)), rank_tol) if N >= 1 else 0
    return RelaxationResult(
        order=N,
        lower_bound=rel.lower_bound(sol),
        moments=y,
        ranks=ranks,
        truncated_rank=truncated,
        status=sol.status,
        program=sap,
        solution=sol,
        rank_tol=rank_tol,
    )


def solve_sos_dual(sap: SemialgebraicProgram, N: int, config: SolverConfig | None = None, reduce: bool = True):
    """Largest ``t`` with ``objective - t`` in the order-``N`` quadratic module; returns ``(t, solution, program)``."""
    dual = build_sos_dual(sap, N, reduce)
    sol = solve(dual.sdp, config)
    return dual.value(sol), sol, dual


# ---------------------------------------------------------------------------
# convex envelope


def box_moment(alpha: Sequence[int]) -> float:
    """``integral over [0,1]^n of x^alpha``."""
    return float(np.prod([1.0 / (a + 1) for a in alpha]))


def hessian_form(p_term: Sequence[int], n: int) -> Polynomial:
    """``z' (Hessian of x^alpha) z`` as a polynomial in ``(x, z)``."""
    mono = Polynomial.monomial(p_term)
    out = Polynomial(2 * n)
    xpos = list(range(n))
    for i in range(n):
        for j in range(n):
            dij = mono.diff(i).diff(j)
            if dij.is_zero():
                continue
            zz = Polynomial.variable(2 * n, n + i) * Polynomial.variable(2 * n, n + j)
            out = out + dij.embed(2 * n, xpos) * zz
    return out


@dataclass
class EnvelopeProgram:
    degree: int
    order: int
    n: int
    p_basis: MonomialBasis
    p_columns: list[int]
    sdp: SdpProblem
    support_set: SemialgebraicProgram
    convexity_set: SemialgebraicProgram | None
    t_bound: float | None = None

    def polynomial(self, sol: SdpSolution) -> Polynomial:
        coeffs = sol.z[self.p_columns]
        return Polynomial(self.n, {a: float(c) for a, c in zip(self.p_basis, coeffs) if c != 0.0})


@dataclass
class EnvelopeFit:
    p: Polynomial
    value: float
    status: str
    program: EnvelopeProgram = field(repr=False)
    solution: SdpSolution = field(repr=False)


def envelope_support_set(A, b, box_upper: float | None, alpha: float | None) -> SemialgebraicProgram:
    """``K = {(x, v): (v_i - 1) x_i = 0, Ax >= b, x >= 0, v >= 0, [x <= box_upper]}`` with a ball."""
    if A is None:
        raise DimensionError("envelope needs the variable count; pass A with n columns (zero rows allowed)")
    A = np.asarray(A, dtype=float)
    A = A.reshape(0, A.shape[-1]) if A.size == 0 else np.atleast_2d(A)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if n == 0 or b.size != m:
        raise DimensionError(f"A is {m} x {n} but b has {b.size} entries")
    nv = 2 * n
    xs = [Polynomial.variable(nv, i) for i in range(n)]
    vs = [Polynomial.variable(nv, n + i) for i in range(n)]
    ineqs, names = [], []
    for j in range(m):
        ineqs.append(sum((float(A[j, i]) * xs[i] for i in range(n)), Polynomial(nv)) - float(b[j]))
        names.append(f"row{j + 1}")
    for i in range(n):
        ineqs.append(xs[i])
        names.append(f"x{i + 1}>=0")
        ineqs.append(vs[i])
        names.append(f"v{i + 1}>=0")
        if box_upper is not None:
            ineqs.append(float(box_upper) - xs[i])
            names.append(f"x{i + 1}<=ub")
    if alpha is None:
        xb = box_upper if box_upper is not None else 1.0
        alpha = 2.0 * (1.0 + n * xb * xb + n)
    return SemialgebraicProgram(
        [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)],
        sum(vs, Polynomial(nv)),
        ineqs,
        [(vs[i] - 1) * xs[i] for i in range(n)],
        float(alpha),
        inequality_names=names,
        equality_names=[f"(v{i + 1}-1)x{i + 1}" for i in range(n)],
        kind="envelope",
    )


def convexity_set(n: int, box_upper: float) -> SemialgebraicProgram:
    """``{(x, z): 0 <= x <= box_upper, |z|^2 = 1}`` with the sphere as two inequalities."""
    nv = 2 * n
    xs = [Polynomial.variable(nv, i) for i in range(n)]
    zs = [Polynomial.variable(nv, n + i) for i in range(n)]
    sphere = 1 - sum((z**2 for z in zs), Polynomial(nv))
    ineqs = [*xs, *(float(box_upper) - x for x in xs), sphere, -sphere]
    names = [f"x{i + 1}>=0" for i in range(n)] + [f"x{i + 1}<=ub" for i in range(n)] + ["|z|<=1", "|z|>=1"]
    return SemialgebraicProgram(
        [f"x{i + 1}" for i in range(n)] + [f"z{i + 1}" for i in range(n)],
        Polynomial(nv),
        ineqs,
        [],
        2.0 * (1.0 + n * box_upper**2 + 1.0),
        inequality_names=names,
        kind="convexity",
    )


def envelope_program(
    A,
    b,
    d: int,
    N: int,
    box_upper: float | None = 1.0,
    alpha: float | None = None,
    t_bound: float | None = None,
) -> EnvelopeProgram:
    """Best polynomial lower bound of degree ``d`` on ``Card`` over ``K``, by box integral.

    Constraints, each through a Putinar certificate at order ``N``:
    ``sum v - p(x) >= 0`` on ``K``; ``z' Hess p(x) z >= 0`` on the convexity
    set (only when ``d >= 2``); and, when ``t_bound`` is given,
    ``t_bound - p(x) >= 0`` on ``K``.
    """
    if d < 1:
        raise ValueError("envelope degree must be at least 1")
    if 2 * N < d:
        raise DegreeOverflowError(f"order {N} cannot certify a degree-{d} polynomial")
    K = envelope_support_set(A, b, box_upper, alpha)
    n = K.n // 2
    pb = basis(n, d)
    bd = SdpBuilder()
    p_cols = [bd.add_free(1) for _ in pb]
    for col, alpha_ in zip(p_cols, pb):
        bd.set_free_objective(col, -box_moment(alpha_))

    def certificate(target: Polynomial, p_sign: float, sap: SemialgebraicProgram, n_vars: int, embed, prefix: str):
        big = basis(n_vars, 2 * N)
        start = len(bd.rhs)
        rows = bd.add_rows(target.coefficient_vector(big))
        row_of = {gamma: start + i for gamma, i in big.index_of.items()}
        _sos_terms(bd, sap, N, row_of, n_vars, prefix)  # face-reduced Gram blocks
        for col, alpha_ in zip(p_cols, pb):
            image = embed(alpha_)
            for gamma, coef in image.terms.items():
                bd.add_free_entries(row_of[gamma], col, p_sign * float(coef))
        return rows

    xpos = list(range(n))
    embed_x = lambda a: Polynomial.monomial(a).embed(2 * n, xpos)  # noqa: E731
    # sum v - p(x) = certificate  ->  certificate + p = sum v
    certificate(K.objective, 1.0, K, 2 * n, embed_x, "card:")
    conv = None
    if d >= 2:
        conv = convexity_set(n, box_upper if box_upper is not None else 1.0)
        # z'H(p)z = certificate  ->  certificate - sum_a p_a z'H(x^a)z = 0
        certificate(Polynomial(2 * n), -1.0, conv, 2 * n, lambda a: hessian_form(a, n), "convex:")
    if t_bound is not None:
        certificate(Polynomial.constant(2 * n, float(t_bound)), 1.0, K, 2 * n, embed_x, "upper:")
    return EnvelopeProgram(d, N, n, pb, p_cols, bd.build(), K, conv, t_bound)


def fit_envelope(
    A,
    b,
    d: int,
    N: int | None = None,
    box_upper: float | None = 1.0,
    alpha: float | None = None,
    t_bound: float | None = None,
    config: SolverConfig | None = None,
) -> EnvelopeFit:
    if N is None:
        N = max(2, math.ceil((d + 1) / 2))
    prog = envelope_program(A, b, d, N, box_upper, alpha, t_bound)
    sol = solve(prog.sdp, config)
    return EnvelopeFit(prog.polynomial(sol), -sol.primal_obj, sol.status, prog, sol)


def sample_feasible_points(
    A, b, count: int, box_upper: float = 1.0, rng: np.random.Generator | None = None, max_tries: int = 200
) -> np.ndarray:
    """Rejection samples of ``{Ax >= b, 0 <= x <= box_upper}`` with random supports.

    Each coordinate is switched on with probability one half, so sparse points
    where ``Card`` jumps are sampled as often as dense ones. Returns at most
    ``count`` rows; fewer when the set is thin.
    """
    rng = rng or np.random.default_rng(0)
    A = np.asarray(A, dtype=float)
    A = A.reshape(0, A.shape[-1]) if A.size == 0 else np.atleast_2d(A)
    b = np.asarray(b, dtype=float).ravel()
    n = A.shape[1]
    out = []
    for _ in range(max_tries * count):
        x = np.where(rng.random(n) < 0.5, rng.uniform(0.0, box_upper, n), 0.0)
        if np.all(A @ x >= b - 1e-12):
            out.append(x)
            if len(out) == count:
                break
    return np.array(out).reshape(-1, n)


def envelope_validation(p: Polynomial, points: np.ndarray) -> dict:
    """Worst ``p(x) - Card(x)`` and smallest Hessian eigenvalue over ``points``."""
    n = p.n
    hess = [[p.diff(i).diff(j) for j in range(n)] for i in range(n)]
    worst_gap, worst_eig = -math.inf, math.inf
    for x in points:
        card = int(np.count_nonzero(x))
        worst_gap = max(worst_gap, float(p.evaluate(x)) - card)
        H = np.array([[float(h.evaluate(x)) for h in row] for row in hess])
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(H)[0]))
    return {"samples": int(len(points)), "max_excess": worst_gap, "min_hessian_eigenvalue": worst_eig}
