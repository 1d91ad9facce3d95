"""Moment and localizing matrices as precomputed index layouts over a moment vector."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DegreeOverflowError, DimensionError
from .poly import MonomialBasis, Polynomial, basis, basis_size


@dataclass(frozen=True)
class MomentVector:
    """Moments ``y_alpha`` for ``|alpha| <= order`` laid out along ``basis(n, order)``."""

    n: int
    order: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (basis_size(self.n, self.order),):
            raise DimensionError(
                f"moment vector of length {values.size}, expected {basis_size(self.n, self.order)}"
            )
        object.__setattr__(self, "values", values)

    @property
    def basis(self) -> MonomialBasis:
        return basis(self.n, self.order)

    def __getitem__(self, alpha) -> float:
        return float(self.values[self.basis.index_of[tuple(alpha)]])

    def first_moments(self) -> np.ndarray:
        """``(y_{e_1}, ..., y_{e_n})``, the mean of the measure."""
        return self.values[1 : self.n + 1].copy()

    def truncate(self, order: int) -> "MomentVector":
        if order > self.order:
            raise DegreeOverflowError(f"cannot truncate order {self.order} up to {order}")
        return MomentVector(self.n, order, self.values[: basis_size(self.n, order)])

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "order": self.order, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "MomentVector":
        obj = json.loads(text)
        return cls(obj["n"], obj["order"], np.array(obj["values"], dtype=float))


@dataclass(frozen=True)
class MatrixLayout:
    """Where each upper-triangle entry of a moment-type matrix reads from a moment vector.

    Entry ``(rows[t], cols[t])`` receives ``coefs[t] * y[index[t]]``; one entry may
    collect several terms. ``required_order`` is the smallest moment order the
    layout can be assembled from.
    """

    n: int
    degree: int
    side: int
    rows: np.ndarray
    cols: np.ndarray
    index: np.ndarray
    coefs: np.ndarray
    required_order: int

    @property
    def entry_index(self) -> np.ndarray:
        """Side x side array of moment indices; only defined for plain moment layouts."""
        out = np.full((self.side, self.side), -1, dtype=np.int64)
        if np.any(self.coefs != 1.0) or len(self.rows) != self.side * (self.side + 1) // 2:
            raise ValueError("entry_index exists only for unweighted moment layouts")
        out[self.rows, self.cols] = self.index
        out[self.cols, self.rows] = self.index
        return out

    def entry_terms(self, i: int, j: int) -> list[tuple[float, int]]:
        """``(coefficient, moment index)`` pairs making up entry (i, j)."""
        if i > j:
            i, j = j, i
        mask = (self.rows == i) & (self.cols == j)
        return [(float(c), int(k)) for c, k in zip(self.coefs[mask], self.index[mask])]

    def linear_functionals(self, length: int) -> np.ndarray:
        """Dense ``(n_entries, length)`` array; row ``t`` is upper-triangle entry ``t`` as a functional of y."""
        n_entries = self.side * (self.side + 1) // 2
        pos = _upper_position(self.side, self.rows, self.cols)
        out = np.zeros((n_entries, length))
        np.add.at(out, (pos, self.index), self.coefs)
        return out


def _upper_position(side: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return rows * side - rows * (rows - 1) // 2 + (cols - rows)


@lru_cache(maxsize=128)
def _pair_index(n: int, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Upper-triangle (i, j) pairs of basis(n, d) and the index of beta(i)+beta(j)."""
    mb = basis(n, d)
    big = basis(n, 2 * d)
    exps = mb.exponent_array()
    iu, ju = np.triu_indices(len(mb))
    sums = exps[iu] + exps[ju]
    idx = np.fromiter((big.index_of[tuple(s)] for s in sums.tolist()), dtype=np.int64, count=len(iu))
    return iu.astype(np.int64), ju.astype(np.int64), idx


def moment_layout(n: int, d: int) -> MatrixLayout:
    """Layout of ``M_d(y)``: entry (i, j) reads the moment of ``beta(i) + beta(j)``."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    iu, ju, idx = _pair_index(n, d)
    return MatrixLayout(n, d, basis_size(n, d), iu, ju, idx, np.ones(len(iu)), 2 * d)


def localizing_layout(g: Polynomial, n: int, d: int, order: int | None = None) -> MatrixLayout:
    """Layout of ``M_d(g y)``: entry (i, j) is ``sum_a g_a y_{beta(i)+beta(j)+a}``.

    ``order`` is the order of the moment vector the layout will read from; a
    layout that needs higher moments raises :class:`DegreeOverflowError`.
    """
    if g.n != n:
        raise DimensionError(f"g has {g.n} variables, layout has {n}")
    if d < 0:
        raise DegreeOverflowError(f"localizing degree {d} is negative")
    need = 2 * d + g.degree
    if order is not None and need > order:
        raise DegreeOverflowError(
            f"localizing matrix of degree {d} for a degree-{g.degree} polynomial needs "
            f"moments up to order {need}, only {order} available"
        )
    if g.is_zero():
        empty = np.zeros(0, dtype=np.int64)
        return MatrixLayout(n, d, basis_size(n, d), empty, empty, empty, np.zeros(0), need)
    mb = basis(n, d)
    big = basis(n, need)
    exps = mb.exponent_array()
    iu, ju = np.triu_indices(len(mb))
    pair_sums = exps[iu] + exps[ju]
    rows, cols, index, coefs = [], [], [], []
    for alpha, c in g.sorted_terms():
        shifted = pair_sums + np.asarray(alpha, dtype=np.int64)
        idx = np.fromiter(
            (big.index_of[tuple(s)] for s in shifted.tolist()), dtype=np.int64, count=len(iu)
        )
        rows.append(iu)
        cols.append(ju)
        index.append(idx)
        coefs.append(np.full(len(iu), float(c)))
    return MatrixLayout(
        n,
        d,
        len(mb),
        np.concatenate(rows).astype(np.int64),
        np.concatenate(cols).astype(np.int64),
        np.concatenate(index),
        np.concatenate(coefs),
        need,
    )


def assemble(y: MomentVector | np.ndarray, layout: MatrixLayout) -> np.ndarray:
    """Numeric symmetric matrix of ``layout`` evaluated at moment vector ``y``."""
    values = y.values if isinstance(y, MomentVector) else np.asarray(y, dtype=float)
    if layout.index.size and layout.index.max() >= values.size:
        raise IndexError(
            f"layout reads moment {layout.index.max()} but the vector has {values.size}"
        )
    upper = np.zeros((layout.side, layout.side))
    np.add.at(upper, (layout.rows, layout.cols), layout.coefs * values[layout.index])
    return upper + np.triu(upper, 1).T


def moments_of_atoms(
    points: Sequence[Sequence[float]],
    weights: Sequence[float],
    order: int,
    probability: bool = True,
) -> MomentVector:
    """Moments ``y_a = sum_k w_k x_k^a`` of an atomic measure, up to ``order``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float)
    if pts.shape[0] != w.size:
        raise DimensionError(f"{pts.shape[0]} points but {w.size} weights")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if probability and w.size and not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
        raise ValueError(f"probability weights sum to {w.sum()}")
    n = pts.shape[1]
    exps = basis(n, order).exponent_array()
    values = np.zeros(exps.shape[0])
    for x, wk in zip(pts, w):
        values += wk * np.prod(x[None, :] ** exps, axis=1)
    return MomentVector(n, order, values)
