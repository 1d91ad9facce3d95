import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentcard.certify import (
    RelaxationResult,
    certificate_report,
    duality_check,
    extract_point,
    find_sos,
    gram_polynomial,
    numerical_rank,
    reconstruction_error,
    sos_decompose,
    stabilization_check,
)
from momentcard.errors import DecompositionError, ExtractionUnavailable
from momentcard.moment import assemble, moment_layout, moments_of_atoms
from momentcard.poly import Polynomial, basis
from momentcard.relaxation import min_card_program, solve_relaxation

BOX2_A = np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
BOX2_b = np.array([1.0, -1.0, -1.0, 0.0, 0.0])


def atomic_result(points, weights, N, bound):
    y = moments_of_atoms(points, weights, 2 * N)
    n = y.n
    M = assemble(y, moment_layout(n, N))
    T = assemble(y, moment_layout(n, N - 1))
    return RelaxationResult(N, bound, y, {"moment": numerical_rank(M)}, numerical_rank(T))


# ranks ---------------------------------------------------------------------------

def test_numerical_rank_examples():
    assert numerical_rank(np.eye(3), 1e-8) == 3
    yx = np.array([1.0, 0.3, -2.0, 0.09])
    assert numerical_rank(np.outer(yx, yx)) == 1
    assert numerical_rank(np.zeros((4, 4))) == 0
    assert numerical_rank(np.zeros((0, 0))) == 0


# stabilization -------------------------------------------------------------------

def test_stabilization_dirac():
    prev = atomic_result([[0.5, 0.0]], [1.0], 1, 1.0)
    cur = atomic_result([[0.5, 0.0]], [1.0], 2, 1.0)
    assert cur.moment_rank == 1
    assert stabilization_check(prev, cur)
    assert cur.certified


def test_stabilization_bound_jump():
    prev = atomic_result([[0.5, 0.0]], [1.0], 1, 0.7)
    cur = atomic_result([[0.5, 0.0]], [1.0], 2, 1.0)
    assert not stabilization_check(prev, cur)
    assert not cur.certified


def test_stabilization_order_mismatch():
    a = atomic_result([[0.0]], [1.0], 1, 0.0)
    with pytest.raises(ValueError):
        stabilization_check(a, a)


def test_stabilization_loose_then_flat():
    # derived once: ranks 5 -> 2 -> 2 and bounds 0 -> 1 -> 1
    sap = min_card_program(BOX2_A, BOX2_b)
    r1, r2, r3 = (solve_relaxation(sap, N) for N in (1, 2, 3))
    assert r1.moment_rank > r2.moment_rank
    assert not stabilization_check(r1, r2)
    assert stabilization_check(r2, r3)


def test_untrusted_status_never_certifies():
    prev = atomic_result([[0.5]], [1.0], 1, 1.0)
    cur = atomic_result([[0.5]], [1.0], 2, 1.0)
    cur.status = "max_iter"
    assert not stabilization_check(prev, cur)


# extraction ----------------------------------------------------------------------

def test_extract_dirac():
    res = atomic_result([[0.5, 0.0]], [1.0], 2, 0.0)
    assert extract_point(res) == pytest.approx({"x1": 0.5, "x2": 0.0})


def test_extract_two_atoms_unavailable():
    res = atomic_result([[0.0], [1.0]], [0.5, 0.5], 2, 0.0)
    with pytest.raises(ExtractionUnavailable):
        extract_point(res)


def test_extract_mincard_n1():
    # alpha = 2 leaves x = 1, v = 1 as the only minimizer
    sap = min_card_program([[1.0]], [1.0], alpha=2.0)
    r2, r3 = solve_relaxation(sap, 2), solve_relaxation(sap, 3)
    assert stabilization_check(r2, r3)
    point = extract_point(r3)
    assert point == pytest.approx({"x1": 1.0, "v1": 1.0}, abs=1e-5)
    assert r3.point_verified and r3.certified
    rep = certificate_report(r3)
    assert rep["rounded_bound"] == 1 and rep["point"] == point
    assert set(rep) >= {"order", "bound", "rounded_bound", "ranks", "certified", "point"}


def test_failed_verification_drops_certificate():
    sap = min_card_program([[1.0]], [1.0], alpha=2.0)
    res = atomic_result([[0.5, 0.0]], [1.0], 2, 1.0)  # violates x >= 1
    res.program = sap
    res.certified = True
    extract_point(res)
    assert res.point_verified is False
    assert not res.certified


# SOS decomposition ----------------------------------------------------------------

def test_sos_decompose_identity():
    mb = basis(1, 1)
    squares = sos_decompose(np.eye(2), mb)
    total = sum((h * h for h in squares), Polynomial(1))
    assert total == Polynomial(1, {(0,): 1.0, (2,): 1.0})


def test_sos_decompose_zero_and_indefinite():
    assert sos_decompose(np.zeros((2, 2)), basis(1, 1)) == []
    with pytest.raises(DecompositionError):
        sos_decompose(np.diag([1.0, -1.0]), basis(1, 1))
    with pytest.raises(DecompositionError):
        sos_decompose(np.eye(3), basis(1, 1))


def test_find_sos_quartic():
    x = Polynomial.variable(1, 0)
    p = x**4 - 2 * x**2 + 1
    cert = find_sos(p)
    assert cert.error <= 1e-7
    # the Gram matrix is unique with eigenvalues (2, 0, 0); other squares are solver noise
    h = max(cert.squares, key=lambda q: q.max_abs_coefficient())
    assert sum(q.max_abs_coefficient() for q in cert.squares if q is not h) <= 1e-3
    # h = +-(x^2 - 1)
    assert abs(h.coefficient((2,))) == pytest.approx(1.0, abs=1e-4)
    assert h.coefficient((0,)) == pytest.approx(-h.coefficient((2,)), abs=1e-4)


def test_find_sos_rejects_odd_degree():
    with pytest.raises(DecompositionError):
        find_sos(Polynomial.variable(1, 0) ** 3)


def test_find_sos_rejects_non_sos():
    x = Polynomial.variable(1, 0)
    with pytest.raises(DecompositionError):
        find_sos(x**2 - 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.integers(0, 2**31 - 1))
def test_random_gram_reconstruction(n, d, seed):
    rng = np.random.default_rng(seed)
    mb = basis(n, d)
    B = rng.standard_normal((len(mb), int(rng.integers(1, len(mb) + 1))))
    G = B @ B.T
    squares = sos_decompose(G, mb)
    assert reconstruction_error(squares, gram_polynomial(G, mb)) <= 1e-8


# duality -----------------------------------------------------------------------------

def test_duality_check_examples():
    assert duality_check(1.0, 1.0)
    assert duality_check(1.0, 0.9, 1e-6)
    assert not duality_check(1.0, 1.1, 1e-6)
