"""Block-diagonal SDP data in primal standard form.

The problem is::

    minimize    sum_k <C_k, X_k> + f'z
    subject to  sum_k <A_ik, X_k> + (B z)_i = b_i,   i = 1..m
                X_k PSD (or X_k >= 0 elementwise for diagonal blocks), z free

and its dual is ``maximize b'y`` subject to ``C_k - sum_i y_i A_ik = S_k`` in the
cone and ``B'y = f``.

Coefficients of a PSD block are stored packed: one column per upper-triangle
entry ``(i, j), i <= j`` in row-major order, holding the entry of a symmetric
coefficient matrix. The inner product therefore counts off-diagonal entries
twice, which is the SDPA convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

PSD = "psd"
DIAGONAL = "diagonal"


@dataclass(frozen=True)
class Block:
    size: int
    kind: str = PSD

    def __post_init__(self):
        if self.kind not in (PSD, DIAGONAL):
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("block size must be positive")

    @property
    def n_entries(self) -> int:
        return self.size * (self.size + 1) // 2 if self.kind == PSD else self.size

    def entry_position(self, i: int, j: int) -> int:
        if self.kind == DIAGONAL:
            if i != j:
                raise ValueError("diagonal blocks only have (i, i) entries")
            return i
        if i > j:
            i, j = j, i
        return i * self.size - i * (i - 1) // 2 + (j - i)

    def upper_indices(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == DIAGONAL:
            r = np.arange(self.size)
            return r, r
        return np.triu_indices(self.size)


@dataclass
class SdpProblem:
    blocks: list[Block]
    A: list[sp.csr_matrix]
    C: list[np.ndarray]
    b: np.ndarray
    n_free: int = 0
    B: sp.csr_matrix | None = None
    f: np.ndarray | None = None
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float).ravel()
        m = self.b.size
        if len(self.A) != len(self.blocks) or len(self.C) != len(self.blocks):
            raise ValueError("one coefficient matrix and one objective per block")
        self.A = [sp.csr_matrix(a, shape=(m, blk.n_entries)) for a, blk in zip(self.A, self.blocks)]
        self.C = [np.asarray(c, dtype=float).ravel() for c in self.C]
        for c, blk in zip(self.C, self.blocks):
            if c.size != blk.n_entries:
                raise ValueError("objective block has the wrong number of entries")
        self.B = sp.csr_matrix((m, self.n_free)) if self.B is None else sp.csr_matrix(self.B, shape=(m, self.n_free))
        self.f = np.zeros(self.n_free) if self.f is None else np.asarray(self.f, dtype=float).ravel()
        if self.f.size != self.n_free:
            raise ValueError("free-variable objective has the wrong length")
        if not self.tags:
            self.tags = [f"block{k}" for k in range(len(self.blocks))]

    @property
    def m(self) -> int:
        return self.b.size

    def packed_to_matrix(self, k: int, packed: np.ndarray) -> np.ndarray:
        """Symmetric matrix (PSD block) or vector (diagonal block) from packed entries."""
        blk = self.blocks[k]
        if blk.kind == DIAGONAL:
            return np.asarray(packed, dtype=float).copy()
        out = np.zeros((blk.size, blk.size))
        iu, ju = np.triu_indices(blk.size)
        out[iu, ju] = packed
        out[ju, iu] = packed
        return out

    def objective_matrix(self, k: int) -> np.ndarray:
        return self.packed_to_matrix(k, self.C[k])

    def constraint_matrix(self, i: int, k: int) -> np.ndarray:
        return self.packed_to_matrix(k, self.A[k].getrow(i).toarray().ravel())

    def apply(self, X: list[np.ndarray], z: np.ndarray | None = None) -> np.ndarray:
        """Left-hand sides ``sum_k <A_ik, X_k> + B z`` for block values ``X``."""
        out = np.zeros(self.m)
        for k, blk in enumerate(self.blocks):
            out += self.A[k] @ pack_inner(blk, X[k])
        if self.n_free and z is not None:
            out += self.B @ z
        return out

    def objective(self, X: list[np.ndarray], z: np.ndarray | None = None) -> float:
        val = sum(float(self.C[k] @ pack_inner(blk, X[k])) for k, blk in enumerate(self.blocks))
        if self.n_free and z is not None:
            val += float(self.f @ z)
        return val


def pack_inner(blk: Block, X: np.ndarray) -> np.ndarray:
    """Packed vector ``v`` with ``<A, X> = A_packed . v`` for every symmetric ``A``."""
    if blk.kind == DIAGONAL:
        return np.asarray(X, dtype=float)
    iu, ju = np.triu_indices(blk.size)
    return np.where(iu == ju, 1.0, 2.0) * X[iu, ju]


class SdpBuilder:
    """Accumulates constraint triplets and produces an :class:`SdpProblem`."""

    def __init__(self):
        self.blocks: list[Block] = []
        self.tags: list[str] = []
        self.rhs: list[float] = []
        self.n_free = 0
        self._a: list[tuple[list, list, list]] = []
        self._c: list[dict[int, float]] = []
        self._b_rows: list = []
        self._b_cols: list = []
        self._b_vals: list = []
        self._f: dict[int, float] = {}

    def add_block(self, size: int, kind: str = PSD, tag: str | None = None) -> int:
        self.blocks.append(Block(size, kind))
        self.tags.append(tag or f"block{len(self.blocks) - 1}")
        self._a.append(([], [], []))
        self._c.append({})
        return len(self.blocks) - 1

    def add_free(self, count: int = 1) -> int:
        start = self.n_free
        self.n_free += count
        return start

    def add_rows(self, rhs) -> np.ndarray:
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        start = len(self.rhs)
        self.rhs.extend(rhs.tolist())
        return np.arange(start, start + rhs.size)

    def add_entries(self, block: int, rows, i, j, values) -> None:
        """Add ``values`` at symmetric entry ``(i, j)`` of block ``block`` in ``rows``."""
        blk = self.blocks[block]
        rows, i, j, values = np.broadcast_arrays(
            np.asarray(rows), np.asarray(i), np.asarray(j), np.asarray(values, dtype=float)
        )
        i, j = np.minimum(i, j), np.maximum(i, j)
        if blk.kind == DIAGONAL:
            if np.any(i != j):
                raise ValueError("diagonal blocks only have (i, i) entries")
            pos = i
        else:
            pos = i * blk.size - i * (i - 1) // 2 + (j - i)
        store = self._a[block]
        store[0].append(rows.ravel())
        store[1].append(pos.ravel())
        store[2].append(values.ravel())

    def add_free_entries(self, rows, cols, values) -> None:
        rows, cols, values = np.broadcast_arrays(
            np.asarray(rows), np.asarray(cols), np.asarray(values, dtype=float)
        )
        self._b_rows.append(rows.ravel())
        self._b_cols.append(cols.ravel())
        self._b_vals.append(values.ravel())

    def set_objective(self, block: int, i: int, j: int, value: float) -> None:
        pos = self.blocks[block].entry_position(i, j)
        self._c[block][pos] = self._c[block].get(pos, 0.0) + float(value)

    def set_free_objective(self, col: int, value: float) -> None:
        self._f[col] = self._f.get(col, 0.0) + float(value)

    def build(self) -> SdpProblem:
        m = len(self.rhs)
        A, C = [], []
        for blk, (rows, cols, vals), cdict in zip(self.blocks, self._a, self._c):
            if rows:
                mat = sp.coo_matrix(
                    (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                    shape=(m, blk.n_entries),
                ).tocsr()
                mat.sum_duplicates()
                mat.eliminate_zeros()
            else:
                mat = sp.csr_matrix((m, blk.n_entries))
            A.append(mat)
            c = np.zeros(blk.n_entries)
            for pos, val in cdict.items():
                c[pos] = val
            C.append(c)
        if self._b_rows:
            B = sp.coo_matrix(
                (np.concatenate(self._b_vals), (np.concatenate(self._b_rows), np.concatenate(self._b_cols))),
                shape=(m, self.n_free),
            ).tocsr()
            B.sum_duplicates()
            B.eliminate_zeros()
        else:
            B = None
        f = np.zeros(self.n_free)
        for col, val in self._f.items():
            f[col] = val
        return SdpProblem(list(self.blocks), A, C, np.array(self.rhs), self.n_free, B, f, list(self.tags))


def split_free_variables(problem: SdpProblem) -> SdpProblem:
    """Replace free variables ``z = z+ - z-`` by a trailing diagonal block of size ``2 * n_free``."""
    if problem.n_free == 0:
        return problem
    nf = problem.n_free
    block = Block(2 * nf, DIAGONAL)
    A_split = sp.hstack([problem.B, -problem.B]).tocsr()
    c_split = np.concatenate([problem.f, -problem.f])
    return SdpProblem(
        problem.blocks + [block],
        problem.A + [A_split],
        problem.C + [c_split],
        problem.b.copy(),
        tags=problem.tags + ["free_split"],
    )
