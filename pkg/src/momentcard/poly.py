"""Sparse multivariate polynomials, graded-lex monomial bases and matrix invariants.

Monomials are plain tuples of nonnegative exponents. Coefficients are any
Python numbers; arithmetic stays exact when the inputs are ``int`` or
``Fraction`` and falls back to floats otherwise.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionError, SolverError

Monomial = tuple[int, ...]


def monomial_degree(alpha: Sequence[int]) -> int:
    return int(sum(alpha))


def grlex_key(alpha: Sequence[int]) -> tuple:
    """Sort key placing lower total degree first, then x1 before x2 before ..."""
    return (sum(alpha), tuple(-e for e in alpha))


def graded_lex_compare(a: Sequence[int], b: Sequence[int]) -> int:
    """Three-way comparison in graded-lex order: -1 if ``a`` comes first.

    Total degree decides first; ties go to the monomial with the larger
    exponent on the earliest variable, so ``x1`` precedes ``x2`` and
    ``x1**2`` precedes ``x1*x2``.
    """
    if len(a) != len(b):
        raise DimensionError(f"monomials of length {len(a)} and {len(b)}")
    ka, kb = grlex_key(a), grlex_key(b)
    return (ka > kb) - (ka < kb)


def _monomials_of_degree(n: int, d: int) -> Iterable[Monomial]:
    if n == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _monomials_of_degree(n - 1, d - first):
            yield (first,) + rest


@dataclass(frozen=True)
class MonomialBasis:
    """All monomials in ``n`` variables of degree at most ``m``, graded-lex ordered."""

    n: int
    m: int
    entries: tuple[Monomial, ...]
    index_of: Mapping[Monomial, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> Monomial:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, alpha) -> bool:
        return tuple(alpha) in self.index_of

    def exponent_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(len(self.entries), self.n)


def basis_size(n: int, m: int) -> int:
    return math.comb(n + m, m)


@lru_cache(maxsize=256)
def basis(n: int, m: int) -> MonomialBasis:
    """Graded-lex basis of size ``C(n+m, m)``; ``entries[0]`` is the constant."""
    if n < 1:
        raise ValueError(f"need at least one variable, got n={n}")
    if m < 0:
        raise ValueError(f"degree must be nonnegative, got m={m}")
    entries = tuple(
        alpha for d in range(m + 1) for alpha in _monomials_of_degree(n, d)
    )
    return MonomialBasis(n, m, entries, {a: i for i, a in enumerate(entries)})


def _is_zero(c) -> bool:
    return c == 0


class Polynomial:
    """Sparse polynomial in ``n`` variables stored as ``{exponent tuple: coefficient}``.

    Zero coefficients are never stored, so the zero polynomial has an empty
    term map.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Sequence[int], Number] | None = None):
        if n < 0:
            raise ValueError("variable count must be nonnegative")
        self.n = n
        clean: dict[Monomial, Number] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(e) for e in alpha)
            if len(alpha) != n:
                raise DimensionError(f"exponent {alpha} has length {len(alpha)}, expected {n}")
            if any(e < 0 for e in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            c = clean.get(alpha, 0) + c
            if _is_zero(c):
                clean.pop(alpha, None)
            else:
                clean[alpha] = c
        self.terms = clean

    # constructors -------------------------------------------------------

    @classmethod
    def constant(cls, n: int, c: Number = 1) -> "Polynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, i: int) -> "Polynomial":
        if not 0 <= i < n:
            raise DimensionError(f"variable index {i} out of range for n={n}")
        alpha = [0] * n
        alpha[i] = 1
        return cls(n, {tuple(alpha): 1})

    @classmethod
    def variables(cls, n: int) -> list["Polynomial"]:
        return [cls.variable(n, i) for i in range(n)]

    @classmethod
    def monomial(cls, alpha: Sequence[int], c: Number = 1) -> "Polynomial":
        return cls(len(alpha), {tuple(alpha): c})

    @classmethod
    def linear(cls, coeffs: Sequence[Number], const: Number = 0) -> "Polynomial":
        """``sum_i coeffs[i] * x_i + const``."""
        n = len(coeffs)
        terms = {(0,) * n: const}
        for i, a in enumerate(coeffs):
            alpha = [0] * n
            alpha[i] = 1
            terms[tuple(alpha)] = a
        return cls(n, terms)

    # basic queries --------------------------------------------------------

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial reports 0."""
        return max((sum(a) for a in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, alpha: Sequence[int]) -> Number:
        return self.terms.get(tuple(alpha), 0)

    def sorted_terms(self) -> list[tuple[Monomial, Number]]:
        return sorted(self.terms.items(), key=lambda t: grlex_key(t[0]))

    def support(self) -> list[Monomial]:
        return [a for a, _ in self.sorted_terms()]

    def _check(self, other: "Polynomial") -> None:
        if self.n != other.n:
            raise DimensionError(f"polynomials in {self.n} and {other.n} variables")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, Number):
            return Polynomial.constant(self.n, other)
        return NotImplemented

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0) + c
        return Polynomial(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, Number):
            return Polynomial(self.n, {a: c * other for a, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Monomial, Number] = {}
        for a, c in self.terms.items():
            for b, d in other.terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0) + c * d
        return Polynomial(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers")
        out = Polynomial.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, Number):
            other = Polynomial.constant(self.n, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __call__(self, x) -> float:
        return self.evaluate(x)

    def evaluate(self, x: Sequence[Number]):
        if len(x) != self.n:
            raise DimensionError(f"point of length {len(x)} for {self.n} variables")
        total = 0
        for a, c in self.terms.items():
            term = c
            for xi, e in zip(x, a):
                if e:
                    term = term * xi**e
            total = total + term
        return total

    def gradient(self) -> list["Polynomial"]:
        return [self.diff(i) for i in range(self.n)]

    def diff(self, i: int) -> "Polynomial":
        out = {}
        for a, c in self.terms.items():
            if a[i]:
                b = list(a)
                b[i] -= 1
                out[tuple(b)] = c * a[i]
        return Polynomial(self.n, out)

    def to_float(self) -> "Polynomial":
        return Polynomial(self.n, {a: float(c) for a, c in self.terms.items()})

    def max_abs_coefficient(self) -> float:
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)

    def embed(self, n_total: int, positions: Sequence[int]) -> "Polynomial":
        """Rename variable ``i`` to ``positions[i]`` inside ``n_total`` variables."""
        if len(positions) != self.n:
            raise DimensionError("one position per variable is required")
        out = {}
        for a, c in self.terms.items():
            b = [0] * n_total
            for e, pos in zip(a, positions):
                b[pos] += e
            out[tuple(b)] = c
        return Polynomial(n_total, out)

    def substitute(self, values: Mapping[int, Number]) -> "Polynomial":
        """Fix some variables to numbers; the variable count is unchanged."""
        out: dict[Monomial, Number] = {}
        for a, c in self.terms.items():
            b = list(a)
            for i, val in values.items():
                if b[i]:
                    c = c * val ** b[i]
                    b[i] = 0
            key = tuple(b)
            out[key] = out.get(key, 0) + c
        return Polynomial(self.n, out)

    def coefficient_vector(self, mb: MonomialBasis) -> np.ndarray:
        """Coefficients laid out along ``mb``; raises if a term falls outside it."""
        vec = np.zeros(len(mb))
        for a, c in self.terms.items():
            try:
                vec[mb.index_of[a]] = float(c)
            except KeyError:
                raise DimensionError(f"term {a} is outside basis(n={mb.n}, m={mb.m})") from None
        return vec

    @classmethod
    def from_coefficients(cls, mb: MonomialBasis, coeffs: Sequence[Number]) -> "Polynomial":
        return cls(mb.n, {a: c for a, c in zip(mb.entries, coeffs)})

    # display / serialization ---------------------------------------------

    def __repr__(self) -> str:
        return f"Polynomial({self.n}, {self.to_string()!r})"

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if not self.terms:
            return "0"
        names = names or [f"x{i + 1}" for i in range(self.n)]
        parts = []
        for a, c in self.sorted_terms():
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(a) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self, names: Sequence[str] | None = None) -> dict:
        names = list(names) if names is not None else [f"x{i + 1}" for i in range(self.n)]
        if len(names) != self.n:
            raise DimensionError("one name per variable is required")
        terms = []
        for a, c in self.sorted_terms():
            if isinstance(c, Fraction) and c.denominator != 1:
                coef = f"{c.numerator}/{c.denominator}"
            elif isinstance(c, (int, Fraction)):
                coef = int(c)
            else:
                coef = float(c)
            terms.append({"exp": list(a), "coef": coef})
        return {"vars": names, "terms": terms}

    @classmethod
    def from_json(cls, obj: Mapping | str) -> "Polynomial":
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = len(obj["vars"])
        terms: dict[Monomial, Number] = {}
        for t in obj["terms"]:
            coef = t["coef"]
            if isinstance(coef, str):
                coef = Fraction(coef)
            alpha = tuple(t["exp"])
            terms[alpha] = terms.get(alpha, 0) + coef
        return cls(n, terms)


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def poly_eval(p: Polynomial, x: Sequence[Number]):
    return p.evaluate(x)


# symmetric-matrix invariants -------------------------------------------------

def sym_index(n: int, i: int, j: int) -> int:
    """Position of entry (i, j) of a symmetric n x n matrix in row-major upper-triangle order."""
    if i > j:
        i, j = j, i
    if not (0 <= i < n and 0 <= j < n):
        raise DimensionError(f"entry ({i}, {j}) out of range for n={n}")
    return i * n - i * (i - 1) // 2 + (j - i)


def sym_entries(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i, n)]


def _perm_sign(perm: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length, k = 0, start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def principal_minor(n: int, index_set: Iterable[int]) -> Polynomial:
    """Determinant of the ``index_set`` principal submatrix of a symbolic symmetric matrix.

    Indices are 0-based. The result lives in the ``n(n+1)/2`` upper-triangle
    entries ordered as by :func:`sym_index`.
    """
    idx = sorted(set(index_set))
    if not idx:
        raise ValueError("index set must be nonempty")
    if idx[0] < 0 or idx[-1] >= n:
        raise ValueError(f"index set {idx} out of range for n={n}")
    nv = n * (n + 1) // 2
    terms: dict[Monomial, int] = {}
    for perm in itertools.permutations(range(len(idx))):
        alpha = [0] * nv
        for r, c in enumerate(perm):
            alpha[sym_index(n, idx[r], idx[c])] += 1
        key = tuple(alpha)
        terms[key] = terms.get(key, 0) + _perm_sign(perm)
    return Polynomial(nv, terms)


def sigma_k(n: int, k: int) -> Polynomial:
    """k-th elementary symmetric function of the eigenvalues, as the sum of k x k principal minors."""
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    out = Polynomial(n * (n + 1) // 2)
    for subset in itertools.combinations(range(n), k):
        out = out + principal_minor(n, subset)
    return out


# Newton polytope --------------------------------------------------------------

@dataclass(frozen=True)
class NewtonPolytope:
    """Convex hull of a polynomial's exponent vectors, kept as its generator set."""

    generators: np.ndarray

    @classmethod
    def of(cls, p: Polynomial) -> "NewtonPolytope":
        if p.is_zero():
            raise ValueError("the zero polynomial has no Newton polytope")
        return cls(np.array(p.support(), dtype=float))

    def contains(self, point: Sequence[float], scale: float = 1.0) -> bool:
        """Is ``point`` in ``scale * conv(generators)``? Decided by LP feasibility."""
        gens = self.generators * scale
        k, n = gens.shape
        point = np.asarray(point, dtype=float)
        if point.shape != (n,):
            raise DimensionError(f"point of length {point.size}, polytope in dimension {n}")
        a_eq = np.vstack([gens.T, np.ones((1, k))])
        b_eq = np.concatenate([point, [1.0]])
        res = linprog(np.zeros(k), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
        if res.status == 0:
            return True
        if res.status == 2:
            return False
        raise SolverError(f"Newton polytope membership LP failed: {res.message}")


def half_newton_membership(p: Polynomial, beta: Sequence[int]) -> bool:
    """True iff ``beta`` lies in half the Newton polytope of ``p``."""
    return NewtonPolytope.of(p).contains(beta, scale=0.5)


def newton_pruned_basis(p: Polynomial) -> MonomialBasis:
    """Monomials of degree <= deg(p)/2 that may appear in an SOS decomposition of ``p``.

    The result keeps graded-lex order; it is a subset of ``basis(n, deg(p) // 2)``.
    """
    cands = basis(p.n, p.degree // 2)
    poly = NewtonPolytope.of(p)
    kept = tuple(b for b in cands if poly.contains(b, scale=0.5))
    return MonomialBasis(p.n, p.degree // 2, kept, {a: i for i, a in enumerate(kept)})
