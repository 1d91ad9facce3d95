"""Dense primal-dual interior-point solver for small block-diagonal SDPs.

Path following on the homogeneous self-dual embedding with the HKM search
direction and Mehrotra predictor-corrector steps. The Schur complement is
formed explicitly and the (possibly augmented) Newton system is factored once
per iteration with a symmetric indefinite factorization.

Free variables whose column has exactly two entries of opposite sign only tie
two dual multipliers together (``y_a = y_b``). They are presolved away by
merging the two equality rows, which is how moment identities such as
``y_{v x} = y_{x}`` stay out of the Newton system.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.linalg import lapack

from .problem import DIAGONAL, PSD, Block, SdpProblem, pack_inner

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"
# stopped early, but the best iterate meets the looser ``near_tol`` on residuals and gap
NEAR_OPTIMAL = "near_optimal"
INFEASIBLE_SUSPECTED = "infeasible_suspected"

# PSD blocks up to this size form their Schur contribution through kron(X, Z)
KRON_MAX = 12
SCHUR_CHUNK = 256
# stop once the best combined residual has not dropped by 20% for this many iterations
STALL_ITERATIONS = 8
# extra solves per search direction against the residual of the exact Newton equations
REFINE_STEPS = 3


@dataclass
class SolverConfig:
    gap_tol: float = 1e-7
    feas_tol: float = 1e-7
    max_iter: int = 200
    step_fraction: float = 0.98
    presolve: bool = True
    near_tol: float = 1e-5

    def __post_init__(self):
        if self.gap_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.near_tol < max(self.gap_tol, self.feas_tol):
            raise ValueError("near_tol must not be tighter than the convergence tolerances")


@dataclass
class SdpSolution:
    status: str
    X: list[np.ndarray]
    z: np.ndarray
    y: np.ndarray
    S: list[np.ndarray]
    primal_obj: float
    dual_obj: float
    iterations: int
    primal_residual: float
    dual_residual: float
    relative_gap: float
    history: list[dict] = field(default_factory=list, repr=False)
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# ---------------------------------------------------------------------------
# presolve of identification columns


@dataclass
class _Presolve:
    P: sp.csr_matrix  # (m_reduced, m) row aggregation
    keep_cols: np.ndarray  # free columns passed to the reduced problem
    pair_cols: np.ndarray
    pair_rows: np.ndarray  # (n_pairs, 2)
    pair_coef: np.ndarray
    row_class: np.ndarray


def _find(parent: list[int], a: int) -> int:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def _presolve(problem: SdpProblem) -> tuple[SdpProblem, _Presolve]:
    m = problem.m
    Bc = problem.B.tocsc()
    pair_cols, pair_rows, pair_coef = [], [], []
    for j in range(problem.n_free):
        lo, hi = Bc.indptr[j], Bc.indptr[j + 1]
        if hi - lo != 2 or problem.f[j] != 0.0:
            continue
        (r1, r2), (c1, c2) = Bc.indices[lo:hi], Bc.data[lo:hi]
        if c1 == -c2 and r1 != r2:
            pair_cols.append(j)
            pair_rows.append((r1, r2))
            pair_coef.append(c1)
    parent = list(range(m))
    for r1, r2 in pair_rows:
        a, b = _find(parent, r1), _find(parent, r2)
        if a != b:
            parent[max(a, b)] = min(a, b)
    roots = np.array([_find(parent, i) for i in range(m)], dtype=np.int64)
    uniq, row_class = np.unique(roots, return_inverse=True)
    P = sp.csr_matrix((np.ones(m), (row_class, np.arange(m))), shape=(uniq.size, m))
    pair_cols = np.array(pair_cols, dtype=np.int64)
    keep = np.setdiff1d(np.arange(problem.n_free), pair_cols)
    reduced = SdpProblem(
        problem.blocks,
        [P @ a for a in problem.A],
        problem.C,
        P @ problem.b,
        keep.size,
        P @ problem.B[:, keep] if keep.size else None,
        problem.f[keep],
        problem.tags,
    )
    info = _Presolve(
        P,
        keep,
        pair_cols,
        np.array(pair_rows, dtype=np.int64).reshape(-1, 2),
        np.array(pair_coef, dtype=float),
        row_class,
    )
    return reduced, info


def _recover_pairs(problem: SdpProblem, info: _Presolve, X, z: np.ndarray) -> np.ndarray:
    """Fill in the presolved free variables so each original row balances.

    Pair edges form a forest over the rows of one class; cycle edges get zero
    and tree edges are solved leaves first. The class residual ends up on the
    root row.
    """
    z = z.copy()
    if info.pair_cols.size == 0:
        return z
    res = problem.b - problem.apply(X, z)
    m = problem.m
    adj: list[list[tuple[int, int]]] = [[] for _ in range(m)]
    parent = list(range(m))
    for e, (r1, r2) in enumerate(info.pair_rows):
        a, b = _find(parent, r1), _find(parent, r2)
        if a == b:
            continue
        parent[max(a, b)] = min(a, b)
        adj[r1].append((r2, e))
        adj[r2].append((r1, e))
    seen = np.zeros(m, dtype=bool)
    for root in range(m):
        if seen[root] or not adj[root]:
            continue
        order, up_edge = [], {}
        stack = [root]
        seen[root] = True
        while stack:
            u = stack.pop()
            order.append(u)
            for v, e in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    up_edge[v] = e
                    stack.append(v)
        for u in reversed(order[1:]):
            e = up_edge[u]
            r1, _ = info.pair_rows[e]
            sign = 1.0 if u == r1 else -1.0
            col = info.pair_cols[e]
            val = res[u] / (sign * info.pair_coef[e])
            z[col] = val
            res[u] = 0.0
            other = info.pair_rows[e][1] if u == r1 else r1
            res[other] -= -sign * info.pair_coef[e] * val
    return z


# ---------------------------------------------------------------------------
# per-block operators


class _PsdBlock:
    def __init__(self, blk: Block, A: sp.csr_matrix, C: np.ndarray):
        n = blk.size
        self.n = n
        self.A = A
        self.AT = A.T.tocsr()
        self.iu, self.ju = np.triu_indices(n)
        self.w_inner = np.where(self.iu == self.ju, 1.0, 2.0)
        self.w_half = np.where(self.iu == self.ju, 0.5, 1.0)
        self.Cmat = self.unpack(C)
        self.active = np.flatnonzero(np.diff(A.indptr))
        coo = A[self.active].tocoo()
        i, j = self.iu[coo.col], self.ju[coo.col]
        off = i != j
        rows = np.concatenate([coo.row, coo.row[off]])
        cols = np.concatenate([i * n + j, (j * n + i)[off]])
        vals = np.concatenate([coo.data, coo.data[off]])
        # constraint matrices of the active rows, one flattened n x n matrix per row
        self.A_full = sp.csr_matrix((vals, (rows, cols)), shape=(self.active.size, n * n))

    def unpack(self, packed: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[self.iu, self.ju] = packed
        out[self.ju, self.iu] = packed
        return out

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self.A @ (self.w_inner * X[self.iu, self.ju])

    def apply_t(self, y: np.ndarray) -> np.ndarray:
        return self.unpack(self.AT @ y)

    def inner(self, X: np.ndarray, Y: np.ndarray) -> float:
        return float(np.sum(X * Y))

    def add_schur(self, M: np.ndarray, X: np.ndarray, Z: np.ndarray) -> None:
        """``M_ij += <A_i, X A_j Z>`` over the rows this block touches."""
        act = self.active
        if act.size == 0:
            return
        n = self.n
        full = act.size == M.shape[0]
        if n <= KRON_MAX:
            contrib = np.asarray(self.A_full @ (self.A_full @ np.kron(X, Z)).T)
            if full:
                M += contrib
            else:
                M[np.ix_(act, act)] += contrib
            return
        for start in range(0, act.size, SCHUR_CHUNK):
            stop = min(start + SCHUR_CHUNK, act.size)
            Aj = self.A_full[start:stop].toarray().reshape(-1, n, n)
            T = (X @ Aj @ Z).reshape(stop - start, n * n)
            contrib = np.asarray(self.A_full @ T.T)
            if full:
                M[:, act[start:stop]] += contrib
            else:
                M[np.ix_(act, act[start:stop])] += contrib


class _DiagBlock:
    def __init__(self, blk: Block, A: sp.csr_matrix, C: np.ndarray):
        self.n = blk.size
        self.A = A
        self.AT = A.T.tocsr()
        self.Cmat = C.copy()

    def apply(self, x):
        return self.A @ x

    def apply_t(self, y):
        return self.AT @ y

    def inner(self, x, s) -> float:
        return float(x @ s)

    def add_schur(self, M, x, zinv) -> None:
        D = sp.diags(x * zinv)
        M += (self.A @ D @ self.AT).toarray()


# ---------------------------------------------------------------------------
# cone helpers


def _chol(X: np.ndarray) -> np.ndarray | None:
    try:
        return la.cholesky(X, lower=True, check_finite=False)
    except la.LinAlgError:
        return None


def _inv_psd(S: np.ndarray) -> np.ndarray:
    L = _chol(S)
    if L is None:
        w, V = la.eigh(S)
        w = np.maximum(w, 1e-300)
        return (V / w) @ V.T
    Li = la.solve_triangular(L, np.eye(S.shape[0]), lower=True, check_finite=False)
    return Li.T @ Li


def _max_step_psd(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest ``a`` with ``X + a dX`` PSD (``inf`` if unbounded)."""
    L = _chol(X)
    if L is None:
        w, V = la.eigh(X)
        w = np.maximum(w, 1e-16 * max(1.0, float(w.max())))
        Wh = V / np.sqrt(w)
        W = Wh.T @ dX @ Wh
    else:
        T = la.solve_triangular(L, dX, lower=True, check_finite=False)
        W = la.solve_triangular(L, T.T, lower=True, check_finite=False)
    W = 0.5 * (W + W.T)
    if not np.all(np.isfinite(W)):
        return 0.0
    lam = la.eigvalsh(W, subset_by_index=[0, 0], check_finite=False)[0] if W.shape[0] > 1 else W[0, 0]
    return math.inf if lam >= 0 else -1.0 / lam


def _max_step_diag(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-x[neg] / dx[neg]))


# ---------------------------------------------------------------------------
# Newton system


class _Kkt:
    """Factorization of ``[[M, B], [B', 0]]`` (or of ``M`` alone) reused by predictor and corrector."""

    def __init__(self, M: np.ndarray, B: np.ndarray):
        m, nf = B.shape
        self.m, self.nf = m, nf
        if nf:
            K = np.zeros((m + nf, m + nf))
            K[:m, :m] = M
            K[:m, m:] = B
            K[m:, :m] = B.T
        else:
            K = M
        self.K = K
        scale = max(1.0, float(np.max(np.abs(np.diag(M))))) if m else 1.0
        self.ok = False
        for reg in (0.0, 1e-14, 1e-12, 1e-10):
            Kr = K
            if reg:
                Kr = K.copy()
                Kr[np.diag_indices(m)] += reg * scale
                if nf:
                    Kr[m + np.arange(nf), m + np.arange(nf)] -= reg * scale
            lu, piv, info = lapack.dsytrf(Kr, lower=1)
            if info == 0:
                self.lu, self.piv, self.ok = lu, piv, True
                break

    def solve(self, r1: np.ndarray, rf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rhs = np.concatenate([r1, rf]) if self.nf else r1.copy()
        sol, info = lapack.dsytrs(self.lu, self.piv, rhs, lower=1)
        # one step of iterative refinement against the unregularized system
        resid = rhs - self.K @ sol
        corr, _ = lapack.dsytrs(self.lu, self.piv, resid, lower=1)
        sol = sol + corr
        return sol[: self.m], sol[self.m :]


# ---------------------------------------------------------------------------
# main loop


def _norm_blocks(mats) -> float:
    return math.sqrt(sum(float(np.sum(np.asarray(M) ** 2)) for M in mats))


def _independent_columns(B: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if B.shape[1] == 0:
        return np.zeros(0, dtype=np.int64)
    _, R, piv = la.qr(B, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return np.zeros(0, dtype=np.int64)
    rank = int(np.sum(diag > tol * diag[0]))
    return np.sort(piv[:rank])


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _solve_hsd(problem: SdpProblem, cfg: SolverConfig):
    """Homogeneous self-dual embedding with the same HKM predictor-corrector steps.

    The embedding adds a scaling ``tau`` and a gap slack ``kappa``. It has a
    strictly feasible central path even when the original pair has none,
    which is the usual situation for moment relaxations of programs with
    equality constraints, and ``tau -> 0`` with ``kappa > 0`` flags
    infeasibility.
    """
    m = problem.m
    blocks = []
    for blk, A, C in zip(problem.blocks, problem.A, problem.C):
        blocks.append(_PsdBlock(blk, A, C) if blk.kind == PSD else _DiagBlock(blk, A, C))
    Bfull = problem.B.toarray()
    cols = _independent_columns(Bfull)
    B = Bfull[:, cols]
    f = problem.f[cols]
    b = problem.b
    psd = [isinstance(ob, _PsdBlock) for ob in blocks]

    X = [np.eye(ob.n) if q else np.ones(ob.n) for ob, q in zip(blocks, psd)]
    S = [np.eye(ob.n) if q else np.ones(ob.n) for ob, q in zip(blocks, psd)]
    y = np.zeros(m)
    z = np.zeros(B.shape[1])
    tau, kappa = 1.0, 1.0
    nu = sum(ob.n for ob in blocks) + 1
    normb = float(np.linalg.norm(b))
    normC = _norm_blocks(ob.Cmat for ob in blocks) + float(np.linalg.norm(f))
    gamma = cfg.step_fraction

    def mul(q, Xk, Mk, Zk):
        return _sym(Xk @ Mk @ Zk) if q else Xk * Mk * Zk

    history: list[dict] = []
    best = None
    status, message = MAX_ITER, "iteration limit reached"
    best_score, last_gain, stall = math.inf, 0, 0
    it = 0
    for it in range(cfg.max_iter + 1):
        P = sum((ob.apply(Xk) for ob, Xk in zip(blocks, X)), np.zeros(m)) + B @ z - b * tau
        D = [ob.apply_t(y) + Sk - ob.Cmat * tau for ob, Sk in zip(blocks, S)]
        F = B.T @ y - f * tau
        cx = sum(ob.inner(ob.Cmat, Xk) for ob, Xk in zip(blocks, X)) + float(f @ z)
        by = float(b @ y)
        G = cx - by + kappa
        xs = sum(ob.inner(Xk, Sk) for ob, Xk, Sk in zip(blocks, X, S))
        pobj, dobj = cx / tau, by / tau
        pinf = float(np.linalg.norm(P)) / tau / (1 + normb)
        dinf = math.sqrt(_norm_blocks(D) ** 2 + float(F @ F)) / tau / (1 + normC)
        relgap = max(abs(pobj - dobj), xs / tau**2) / (1 + abs(pobj) + abs(dobj))
        history.append(dict(iteration=it, primal_obj=pobj, dual_obj=dobj, gap=xs / tau**2,
                            primal_residual=pinf, dual_residual=dinf, relative_gap=relgap, tau=tau, kappa=kappa))
        score = max(pinf, dinf, relgap)
        if best is None or score < best[0]:
            best = (score, [Xk / tau for Xk in X], z / tau, y / tau, [Sk / tau for Sk in S], it)
        if pinf <= cfg.feas_tol and dinf <= cfg.feas_tol and relgap <= cfg.gap_tol:
            status, message = OPTIMAL, "converged"
            break
        if score < 0.8 * best_score:
            best_score, last_gain = score, it
        if it == cfg.max_iter:
            break
        if tau < 1e-8 * max(1.0, kappa):
            if by > 0 and math.sqrt(_norm_blocks([ob.apply_t(y) + Sk for ob, Sk in zip(blocks, S)]) ** 2
                                    + float((B.T @ y) @ (B.T @ y))) < 1e-6 * by:
                status, message = INFEASIBLE_SUSPECTED, "dual ray found: primal infeasible"
            elif cx < 0 and float(np.linalg.norm(P + b * tau)) < -1e-6 * cx:
                status, message = INFEASIBLE_SUSPECTED, "primal ray found: dual infeasible"
            else:
                status, message = NUMERICAL_FAILURE, "embedding scale collapsed"
            break
        if it - last_gain >= STALL_ITERATIONS:
            status, message = NUMERICAL_FAILURE, "lack of progress"
            break

        mu = (xs + tau * kappa) / nu
        Z = [(_inv_psd(Sk) if q else 1.0 / Sk) for q, Sk in zip(psd, S)]
        M = np.zeros((m, m))
        for ob, Xk, Zk in zip(blocks, X, Z):
            ob.add_schur(M, Xk, Zk)
        kkt = _Kkt(_sym(M), B)
        if not kkt.ok:
            status, message = NUMERICAL_FAILURE, "singular Newton system"
            break
        XCZ = [mul(q, Xk, ob.Cmat, Zk) for q, ob, Xk, Zk in zip(psd, blocks, X, Z)]
        u = sum((ob.apply(W) for ob, W in zip(blocks, XCZ)), np.zeros(m))
        cc = sum(ob.inner(ob.Cmat, W) for ob, W in zip(blocks, XCZ))
        g1, g2 = kkt.solve(b + u, f)
        XDZ = [mul(q, Xk, Dk, Zk) for q, Xk, Dk, Zk in zip(psd, X, D, Z)]

        den = float((u - b) @ g1 + f @ g2) - cc - kappa / tau

        def reduced_solve(r1, rf, r4):
            """``(dy, dz, dtau)`` from the bordered system, eliminating ``dtau`` last."""
            pp, qq = kkt.solve(r1, rf)
            dtau = (r4 - float((u - b) @ pp) - float(f @ qq)) / den
            return pp + g1 * dtau, qq + g2 * dtau, dtau

        def direction(sigma, corr):
            eta = 1.0 - sigma
            T = []
            for k, (q, Xk, Zk) in enumerate(zip(psd, X, Z)):
                Tk = sigma * mu * Zk - Xk + eta * XDZ[k]
                if corr is not None:
                    Tk = Tk - mul(q, corr[0][k], corr[1][k], Zk)
                T.append(Tk)
            comp = sigma * mu - tau * kappa - (corr[2] * corr[3] if corr is not None else 0.0)
            rp = -eta * P
            rf = -eta * F
            rg = -eta * G - comp / tau
            r1 = rp - sum((ob.apply(Tk) for ob, Tk in zip(blocks, T)), np.zeros(m))
            r4 = rg - sum(ob.inner(ob.Cmat, Tk) for ob, Tk in zip(blocks, T))
            dy, dz, dtau = reduced_solve(r1, rf, r4)
            target = np.linalg.norm(rp) + np.linalg.norm(rf) + abs(rg)

            def expand(dy, dz, dtau):
                dS, dX = [], []
                for k, (q, ob, Xk, Zk) in enumerate(zip(psd, blocks, X, Z)):
                    ATdy = ob.apply_t(dy)
                    dS.append(-eta * D[k] - ATdy + ob.Cmat * dtau)
                    dX.append(T[k] + mul(q, Xk, ATdy - ob.Cmat * dtau, Zk))
                dkappa = (comp - kappa * dtau) / tau
                # residuals of the linearized equations against the exact operators,
                # not the assembled Schur complement
                ep = rp - (sum((ob.apply(dXk) for ob, dXk in zip(blocks, dX)), np.zeros(m)) + B @ dz - b * dtau)
                ef = rf - (B.T @ dy - f * dtau)
                eg = rg + comp / tau - (sum(ob.inner(ob.Cmat, dXk) for ob, dXk in zip(blocks, dX))
                                        + float(f @ dz) - float(b @ dy) + dkappa)
                err = float(np.linalg.norm(ep) + np.linalg.norm(ef) + abs(eg))
                return (dX, dz, dtau, dy, dS, dkappa), (ep, ef, eg), err

            out, res, err = expand(dy, dz, dtau)
            for _ in range(REFINE_STEPS):
                if err <= 1e-3 * target:
                    break
                ddy, ddz, ddtau = reduced_solve(*res)
                trial = expand(dy + ddy, dz + ddz, dtau + ddtau)
                if not trial[2] < 0.5 * err:
                    break
                dy, dz, dtau = dy + ddy, dz + ddz, dtau + ddtau
                out, res, err = trial
            log.debug("  direction error %.2e (rhs %.2e)", err, target)
            return out

        def step(dX, dtau, dS, dkappa):
            a = math.inf
            for q, Xk, Sk, dXk, dSk in zip(psd, X, S, dX, dS):
                if q:
                    a = min(a, _max_step_psd(Xk, dXk), _max_step_psd(Sk, dSk))
                else:
                    a = min(a, _max_step_diag(Xk, dXk), _max_step_diag(Sk, dSk))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return min(1.0, gamma * a)

        pred = direction(0.0, None)
        if not all(np.all(np.isfinite(d)) for d in pred[0]) or not np.all(np.isfinite(pred[3])):
            status, message = NUMERICAL_FAILURE, "non-finite search direction"
            break
        a = step(pred[0], pred[2], pred[4], pred[5])
        new_mu = (sum(ob.inner(Xk + a * dXk, Sk + a * dSk)
                      for ob, Xk, Sk, dXk, dSk in zip(blocks, X, S, pred[0], pred[4]))
                  + (tau + a * pred[2]) * (kappa + a * pred[5])) / nu
        sigma = min(1.0, max(0.0, new_mu / mu) ** 3)
        dX, dz, dtau, dy, dS, dkappa = direction(sigma, (pred[0], pred[4], pred[2], pred[5]))
        if not all(np.all(np.isfinite(d)) for d in dX) or not np.all(np.isfinite(dy)) or not math.isfinite(dtau):
            status, message = NUMERICAL_FAILURE, "non-finite search direction"
            break
        a = step(dX, dtau, dS, dkappa)
        log.debug("iter %d: sigma %.3g step %.3g tau %.3g kappa %.3g", it, sigma, a, tau, kappa)
        X = [Xk + a * dXk for Xk, dXk in zip(X, dX)]
        S = [Sk + a * dSk for Sk, dSk in zip(S, dS)]
        y = y + a * dy
        z = z + a * dz
        tau += a * dtau
        kappa += a * dkappa
        stall = stall + 1 if a < 1e-8 else 0
        if stall >= 3:
            status, message = NUMERICAL_FAILURE, "step lengths collapsed"
            break

    if status == OPTIMAL:
        X, z, y, S = [Xk / tau for Xk in X], z / tau, y / tau, [Sk / tau for Sk in S]
    else:
        score, X, z, y, S, _ = best
        if status in (MAX_ITER, NUMERICAL_FAILURE) and score <= cfg.near_tol:
            status, message = NEAR_OPTIMAL, f"{message}; best iterate within {cfg.near_tol:g}"
    z_full = np.zeros(problem.n_free)
    z_full[cols] = z
    return status, message, X, z_full, y, S, it, history


def solve(problem: SdpProblem, config: SolverConfig | None = None) -> SdpSolution:
    """Solve ``problem``; non-optimal runs return the best iterate seen."""
    cfg = config or SolverConfig()
    if cfg.presolve and problem.n_free:
        reduced, info = _presolve(problem)
    else:
        reduced, info = problem, None
    if reduced.m == 0:
        X = [np.zeros((blk.size, blk.size)) if blk.kind == PSD else np.zeros(blk.size) for blk in problem.blocks]
        neg = [blk for blk, c in zip(problem.blocks, problem.C) if np.any(c)]
        status = OPTIMAL if not neg and not np.any(problem.f) else INFEASIBLE_SUSPECTED
        S = [problem.objective_matrix(k) for k in range(len(problem.blocks))]
        return SdpSolution(status, X, np.zeros(problem.n_free), np.zeros(0), S, 0.0, 0.0, 0,
                           0.0, 0.0, 0.0, [], "no constraints")
    status, message, X, z, y, S, iters, history = _solve_hsd(reduced, cfg)
    if info is not None:
        z_full = np.zeros(problem.n_free)
        z_full[info.keep_cols] = z
        z = _recover_pairs(problem, info, X, z_full)
        y = info.P.T @ y
    pobj = problem.objective(X, z)
    dobj = float(problem.b @ y)
    rp = problem.b - problem.apply(X, z)
    dres = []
    for k, blk in enumerate(problem.blocks):
        ATy = problem.packed_to_matrix(k, problem.A[k].T @ y)
        dres.append(problem.objective_matrix(k) - ATy - S[k])
    rf = problem.f - problem.B.T @ y
    normC = _norm_blocks(problem.objective_matrix(k) for k in range(len(problem.blocks))) + float(np.linalg.norm(problem.f))
    pinf = float(np.linalg.norm(rp)) / (1 + float(np.linalg.norm(problem.b)))
    dinf = math.sqrt(_norm_blocks(dres) ** 2 + float(rf @ rf)) / (1 + normC)
    gap = sum(float(np.sum(Xk * Sk)) for Xk, Sk in zip(X, S))
    relgap = max(abs(pobj - dobj), gap) / (1 + abs(pobj) + abs(dobj))
    log.debug("sdp solve: %s after %d iterations (%s)", status, iters, message)
    return SdpSolution(status, X, z, y, S, pobj, dobj, iters, pinf, dinf, relgap, history, message)


# ---------------------------------------------------------------------------
# linear programs


@dataclass
class LpResult:
    status: str
    x: np.ndarray
    fun: float
    solution: SdpSolution = field(repr=False)


def solve_lp(c, A_eq=None, b_eq=None, bounds=None, A_ub=None, b_ub=None,
             config: SolverConfig | None = None) -> LpResult:
    """Minimize ``c'x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub`` and box ``bounds``.

    ``bounds`` is a list of ``(lo, hi)`` pairs (``None`` for unbounded); the
    default is ``x >= 0``. The LP goes to :func:`solve` as one diagonal block
    plus free variables.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    if bounds is None:
        bounds = [(0.0, None)] * n
    elif len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        bounds = [tuple(bounds)] * n
    if A_eq.shape[1] != n or A_ub.shape[1] != n or len(bounds) != n:
        raise ValueError("LP data dimensions disagree")

    # x = shift + T_nn @ w + T_free @ z with w >= 0 and z free
    shift = np.zeros(n)
    nn_cols, nn_sign, free_cols = [], [], []
    upper_rows = []
    for j, (lo, hi) in enumerate(bounds):
        lo = -math.inf if lo is None else float(lo)
        hi = math.inf if hi is None else float(hi)
        if math.isfinite(lo):
            shift[j] = lo
            nn_cols.append(j)
            nn_sign.append(1.0)
            if math.isfinite(hi):
                upper_rows.append((len(nn_cols) - 1, hi - lo))
        elif math.isfinite(hi):
            shift[j] = hi
            nn_cols.append(j)
            nn_sign.append(-1.0)
        else:
            free_cols.append(j)
    n_w = len(nn_cols)
    n_ub = A_ub.shape[0]
    n_up = len(upper_rows)
    n_diag = n_w + n_ub + n_up
    rows_eq = A_eq.shape[0]
    m = rows_eq + n_ub + n_up
    T_nn = np.zeros((n, n_w))
    T_nn[nn_cols, np.arange(n_w)] = nn_sign
    T_free = np.zeros((n, len(free_cols)))
    T_free[free_cols, np.arange(len(free_cols))] = 1.0

    Ad = np.zeros((m, n_diag))
    Bf = np.zeros((m, len(free_cols)))
    rhs = np.zeros(m)
    Ad[:rows_eq, :n_w] = A_eq @ T_nn
    Bf[:rows_eq] = A_eq @ T_free
    rhs[:rows_eq] = b_eq - A_eq @ shift
    Ad[rows_eq:rows_eq + n_ub, :n_w] = A_ub @ T_nn
    Ad[rows_eq:rows_eq + n_ub, n_w:n_w + n_ub] = np.eye(n_ub)
    Bf[rows_eq:rows_eq + n_ub] = A_ub @ T_free
    rhs[rows_eq:rows_eq + n_ub] = b_ub - A_ub @ shift
    for t, (col, width) in enumerate(upper_rows):
        r = rows_eq + n_ub + t
        Ad[r, col] = 1.0
        Ad[r, n_w + n_ub + t] = 1.0
        rhs[r] = width
    cost = np.zeros(n_diag)
    cost[:n_w] = c @ T_nn
    blocks = [Block(n_diag, DIAGONAL)] if n_diag else []
    problem = SdpProblem(
        blocks,
        [sp.csr_matrix(Ad)] if n_diag else [],
        [cost] if n_diag else [],
        rhs,
        len(free_cols),
        sp.csr_matrix(Bf),
        c @ T_free,
        ["lp"] if n_diag else [],
    )
    sol = solve(problem, config)
    w = sol.X[0][:n_w] if n_diag else np.zeros(0)
    x = shift + T_nn @ w + T_free @ sol.z
    return LpResult(sol.status, x, float(c @ x), sol)
