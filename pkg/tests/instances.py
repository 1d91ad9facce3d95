"""Constructed MinCard instances for the acceptance suite.

Every instance is box-bounded (the rows of ``[-1, 1]^n`` are part of ``A``,
so ``m`` counts them) and feasible by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ROWS = 8


@dataclass(frozen=True)
class CardInstance:
    name: str
    A: np.ndarray
    b: np.ndarray
    alpha: float
    kind: str


def _with_box(G: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = G.shape[1]
    A = np.vstack([G, -np.eye(n), np.eye(n)])
    b = np.concatenate([h, -np.ones(n), -np.ones(n)])
    return A, b


def _alpha(n: int) -> float:
    # |x|^2 <= n on the box and v in {0, 1} at every minimizer, plus a margin
    return 2.0 * n + 1.0


def random_instance(rng: np.random.Generator, n: int, name: str) -> CardInstance:
    """General rows around a strictly feasible sparse point."""
    k = int(rng.integers(1, n + 1))
    x0 = np.zeros(n)
    idx = rng.choice(n, k, replace=False)
    x0[idx] = rng.uniform(0.3, 0.9, k) * rng.choice([-1.0, 1.0], k)
    G = rng.integers(-2, 3, size=(MAX_ROWS - 2 * n, n)).astype(float)
    h = G @ x0 - rng.uniform(0.05, 0.5, G.shape[0])
    A, b = _with_box(G, h)
    return CardInstance(name, A, b, _alpha(n), "random")


def pinned_instance(rng: np.random.Generator, n: int, name: str) -> CardInstance:
    """``x_i >= 1`` on a random support pins the unique minimizer to its indicator."""
    k = int(rng.integers(1, n))
    support = np.sort(rng.choice(n, k, replace=False))
    x0 = np.zeros(n)
    x0[support] = 1.0
    rows = [np.eye(n)[i] for i in support]
    extra = MAX_ROWS - 2 * n - k
    if extra > 0:
        G = rng.integers(-2, 3, size=(extra, n)).astype(float)
        rows.extend(G)
    G = np.array(rows)
    h = G @ x0
    h[k:] -= rng.uniform(0.05, 0.5, G.shape[0] - k)
    A, b = _with_box(G, h)
    return CardInstance(name, A, b, _alpha(n), "pinned")


def origin_instance(rng: np.random.Generator, n: int, name: str) -> CardInstance:
    """Rows with ``b < 0``, so ``x = 0`` is feasible and the optimum is zero."""
    G = rng.integers(-2, 3, size=(MAX_ROWS - 2 * n, n)).astype(float)
    h = -rng.uniform(0.1, 1.0, G.shape[0])
    A, b = _with_box(G, h)
    return CardInstance(name, A, b, _alpha(n), "origin")


def mincard_suite(seed: int = 20260) -> list[CardInstance]:
    """30 instances: 14 with ``n = 2`` and 16 with ``n = 3``."""
    rng = np.random.default_rng(seed)
    plan = [(2, random_instance, 8), (2, pinned_instance, 4), (2, origin_instance, 2),
            (3, random_instance, 9), (3, pinned_instance, 5), (3, origin_instance, 2)]
    out = []
    for n, make, count in plan:
        for t in range(count):
            out.append(make(rng, n, f"{make.__name__.split('_')[0]}-n{n}-{t}"))
    return out


def random_sdp(rng: np.random.Generator, with_free: bool = False):
    """Primal-dual feasible SDP built around a known complementary optimal pair.

    Returns ``(problem, X_star, y_star, optimum)``. ``X*`` and ``S*`` have
    orthogonal ranges in every PSD block, so both are optimal.
    """
    from momentcard.sdp import DIAGONAL, PSD, SdpBuilder

    bd = SdpBuilder()
    blocks = []
    for _ in range(int(rng.integers(1, 4))):
        size = int(rng.integers(1, 6))
        kind = DIAGONAL if rng.random() < 0.25 else PSD
        blocks.append((bd.add_block(size, kind), size, kind))
    total = sum(s * (s + 1) // 2 if kind == PSD else s for _, s, kind in blocks)
    m = int(rng.integers(1, max(2, total)))
    n_free = int(rng.integers(1, 3)) if with_free else 0
    free0 = bd.add_free(n_free) if n_free else 0
    y_star = rng.standard_normal(m)
    X_star, S_star = [], []
    for _, s, kind in blocks:
        Q, _ = np.linalg.qr(rng.standard_normal((s, s)))
        r = int(rng.integers(0, s + 1))
        lam = np.concatenate([rng.uniform(0.5, 2, r), np.zeros(s - r)])
        mu = np.concatenate([np.zeros(r), rng.uniform(0.5, 2, s - r)])
        if kind == PSD:
            X_star.append(Q @ np.diag(lam) @ Q.T)
            S_star.append(Q @ np.diag(mu) @ Q.T)
        else:
            X_star.append(lam)
            S_star.append(mu)
    z_star = rng.standard_normal(n_free)
    Bz = rng.standard_normal((m, n_free))
    rhs = np.zeros(m)
    C = [Sk.copy() for Sk in S_star]
    for i in range(m):
        for k, ((blk, s, kind), Xk) in enumerate(zip(blocks, X_star)):
            if kind == PSD:
                G = rng.standard_normal((s, s))
                Ai = (G + G.T) / 2
                iu, ju = np.triu_indices(s)
                bd.add_entries(blk, i, iu, ju, Ai[iu, ju])
                rhs[i] += np.sum(Ai * Xk)
            else:
                Ai = rng.standard_normal(s)
                bd.add_entries(blk, i, np.arange(s), np.arange(s), Ai)
                rhs[i] += Ai @ Xk
            C[k] = C[k] + y_star[i] * Ai
        if n_free:
            bd.add_free_entries(i, free0 + np.arange(n_free), Bz[i])
    rhs += Bz @ z_star
    bd.add_rows(rhs)
    for k, (blk, s, kind) in enumerate(blocks):
        if kind == PSD:
            iu, ju = np.triu_indices(s)
            for i, j in zip(iu, ju):
                bd.set_objective(blk, int(i), int(j), float(C[k][i, j]))
        else:
            for i in range(s):
                bd.set_objective(blk, i, i, float(C[k][i]))
    f = Bz.T @ y_star
    for j in range(n_free):
        bd.set_free_objective(free0 + j, float(f[j]))
    return bd.build(), X_star, y_star, float(rhs @ y_star)
