import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentcard.certify import TRUSTED_STATUS
from momentcard.errors import DegreeOverflowError, DimensionError
from momentcard.moment import moments_of_atoms
from momentcard.poly import Polynomial, basis, basis_size
from momentcard.relaxation import (
    SemialgebraicProgram,
    box_moment,
    build_moment_relaxation,
    build_sos_dual,
    envelope_program,
    envelope_support_set,
    envelope_validation,
    face_basis,
    fit_envelope,
    min_card_program,
    min_rank_program,
    sample_feasible_points,
    solve_relaxation,
    solve_sos_dual,
)
from momentcard.sdp import DIAGONAL, OPTIMAL

BOX2_A = np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
BOX2_b = np.array([1.0, -1.0, -1.0, 0.0, 0.0])


def dual_slacks(rel, y):
    """``C - A'y`` per block and the free-column residual ``B'y - f``."""
    sdp = rel.sdp
    slacks = []
    for k, blk in enumerate(sdp.blocks):
        packed = sdp.C[k] - sdp.A[k].T @ y
        slacks.append(sdp.packed_to_matrix(k, packed))
    return slacks, sdp.B.T @ y - sdp.f


def assert_moment_feasible(rel, y, tol=1e-9):
    slacks, free = dual_slacks(rel, y)
    for S, blk in zip(slacks, rel.sdp.blocks):
        vals = S if blk.kind == DIAGONAL else np.linalg.eigvalsh(S)
        assert vals.min() >= -tol * max(1.0, np.abs(vals).max())
    assert np.abs(free).max() <= tol


# program builders --------------------------------------------------------------

def test_min_card_program_n1():
    sap = min_card_program([[1.0]], [1.0], alpha=4.0)
    assert sap.variables == ["x1", "v1"]
    x, v = Polynomial.variables(2)
    assert sap.objective == v
    assert sap.equalities == [(v - 1) * x]
    assert v in sap.inequalities and x - 1 in sap.inequalities
    assert sap.ball == 4.0 - x**2 - v**2
    assert sap.is_feasible([1.0, 1.0]) and not sap.is_feasible([1.0, 0.0])


def test_program_validation():
    with pytest.raises(DimensionError):
        min_card_program([[1.0, 2.0]], [1.0, 2.0], alpha=4.0)
    with pytest.raises(ValueError):
        min_card_program([[1.0]], [1.0], alpha=1.0)
    with pytest.raises(DimensionError):
        min_rank_program([np.eye(2), np.eye(3)], [1.0, 1.0], alpha=4.0)
    with pytest.raises(ValueError):
        min_rank_program([np.eye(5)], [1.0], alpha=10.0)


def test_min_rank_program_layout():
    sap = min_rank_program([np.eye(2)], [1.0], alpha=6.0)
    assert sap.variables == ["u1", "u2", "X11", "X12", "X22", "v1", "v2"]
    assert sap.min_order == math.ceil(3 / 2)
    assert sap.objective == Polynomial.variable(7, 5) + Polynomial.variable(7, 6)
    # trace constraint is an equality, PSD-ness enters through u'Xu >= 0
    X11, X22 = Polynomial.variable(7, 2), Polynomial.variable(7, 4)
    assert X11 + X22 - 1 in sap.equalities
    assert any(g.degree == 3 for g in sap.inequalities)
    with pytest.raises(DegreeOverflowError):
        build_moment_relaxation(sap, 1)


def test_order_too_small():
    x = Polynomial.variable(1, 0)
    sap = SemialgebraicProgram(["x"], x, [x**4 - 1], ball_radius=4.0)
    with pytest.raises(DegreeOverflowError, match="degree 4"):
        build_moment_relaxation(sap, 1)


def test_ball_only_minimum():
    x = Polynomial.variable(1, 0)
    sap = SemialgebraicProgram(["x"], x, ball_radius=3.0)
    res = solve_relaxation(sap, 1)
    assert res.status == OPTIMAL
    assert res.lower_bound == pytest.approx(-math.sqrt(3.0), abs=1e-6)


def test_mincard_n1_bound():
    sap = min_card_program([[1.0]], [1.0])
    res = solve_relaxation(sap, 2)
    assert -1e-6 <= res.lower_bound <= 1 + 1e-6
    assert math.ceil(res.lower_bound - 1e-4) == 1


def test_equality_entry_count():
    sap = min_card_program([[1.0]], [1.0], alpha=4.0)
    rel = build_moment_relaxation(sap, 2)
    side = basis_size(2, 1)
    assert rel.equality_entries == len(sap.equalities) * side * (side + 1) // 2
    assert rel.block_tags[0] == "moment"
    assert rel.y_dim == basis_size(2, 4)


def test_drop_constraint_lowers_bound():
    sap = min_card_program(BOX2_A, BOX2_b)
    full = solve_relaxation(sap, 2)
    dropped = solve_relaxation(sap, 2, drop=[2])
    assert "localizing:row1" not in dropped.ranks
    assert dropped.lower_bound <= full.lower_bound + 1e-6
    with pytest.raises(IndexError):
        build_moment_relaxation(sap, 2, drop=[99])


def test_face_reduction_keeps_bound():
    sap = min_card_program([[1.0]], [1.0], alpha=4.0)
    reduced = solve_relaxation(sap, 2)
    plain = solve_relaxation(sap, 2, reduce=False)
    assert reduced.status in TRUSTED_STATUS
    assert reduced.lower_bound == pytest.approx(1.0, abs=1e-5)
    # without the reduction the SDP has no strictly feasible point; the bound is
    # still valid but only as accurate as the solver manages
    assert plain.lower_bound <= 1 + 1e-4


def test_face_basis_shapes():
    assert face_basis(3, []) is None
    V = face_basis(3, [{0: 1.0, 1: -1.0}])
    assert V.shape == (3, 2)
    assert np.allclose(V.T @ V, np.eye(2))
    assert np.allclose(np.array([1.0, -1.0, 0.0]) @ V, 0)
    assert face_basis(1, [{0: 1.0}]).shape == (1, 0)


# feasibility transfer ------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=2), st.lists(st.booleans(), min_size=2, max_size=2))
def test_feasibility_transfer(coords, keep):
    x = np.array([c if k else 0.0 for c, k in zip(coords, keep)])
    A, b = BOX2_A[1:], BOX2_b[1:]  # box only, so every such x is feasible
    sap = min_card_program(A, b, alpha=6.0)
    v = (x != 0).astype(float)
    point = np.concatenate([x, v])
    for N in (1, 2):
        rel = build_moment_relaxation(sap, N)
        y = moments_of_atoms([point], [1.0], 2 * N).values
        assert_moment_feasible(rel, y)
        assert rel.objective @ y == pytest.approx(v.sum())


# SOS side ------------------------------------------------------------------------

def test_sos_perfect_square():
    x = Polynomial.variable(1, 0)
    sap = SemialgebraicProgram(["x"], x**2, ball_radius=100.0)
    t, sol, _ = solve_sos_dual(sap, 1)
    assert sol.status == OPTIMAL
    assert t == pytest.approx(0.0, abs=1e-6)


def test_sos_constraint_itself():
    x = Polynomial.variable(1, 0)
    sap = SemialgebraicProgram(["x"], 1 - x**2, [1 - x**2], ball_radius=2.0)
    t, sol, _ = solve_sos_dual(sap, 1)
    assert sol.status == OPTIMAL
    assert t == pytest.approx(0.0, abs=1e-6)


def test_weak_duality_mincard_n1():
    sap = min_card_program([[1.0]], [1.0])
    for N in (1, 2):
        t, sol, dual = solve_sos_dual(sap, N)
        res = solve_relaxation(sap, N)
        assert t <= res.lower_bound + 1e-6
        if sol.status == OPTIMAL and res.status == OPTIMAL:
            assert t == pytest.approx(res.lower_bound, abs=1e-4)
        assert dual.gram_tags[0] == "sos0"


def test_sos_dual_order_check():
    x = Polynomial.variable(1, 0)
    sap = SemialgebraicProgram(["x"], x**6, ball_radius=2.0)
    with pytest.raises(DegreeOverflowError):
        build_sos_dual(sap, 2)


# envelope -----------------------------------------------------------------------

def test_box_moment():
    assert box_moment((1, 1)) == pytest.approx(0.25)
    assert box_moment((0, 0, 0)) == 1.0
    assert box_moment((2, 0)) == pytest.approx(1 / 3)


def test_envelope_l1_special_case():
    fit = fit_envelope(np.zeros((0, 2)), np.zeros(0), 1)
    assert fit.status == OPTIMAL
    expect = Polynomial.linear([1.0, 1.0])
    diff = (fit.p - expect).to_float()
    assert max((abs(c) for c in diff.terms.values()), default=0.0) <= 1e-3


def test_envelope_origin_feasible():
    # b = 0: the origin is feasible with Card 0, so p(0) <= 0
    fit = fit_envelope(np.eye(2), np.zeros(2), 1)
    assert fit.status == OPTIMAL
    assert fit.p.evaluate([0.0, 0.0]) <= 1e-6


def test_envelope_program_structure():
    prog = envelope_program(np.array([[1.0, 1.0]]), np.array([0.5]), 2, 2)
    assert len(prog.p_basis) == basis_size(2, 2)
    assert prog.convexity_set is not None
    assert prog.support_set.kind == "envelope"
    assert envelope_program(np.zeros((0, 2)), np.zeros(0), 1, 1).convexity_set is None
    with pytest.raises(DegreeOverflowError):
        envelope_program(np.zeros((0, 2)), np.zeros(0), 3, 1)
    with pytest.raises(ValueError):
        envelope_program(np.zeros((0, 2)), np.zeros(0), 0, 1)


def test_envelope_support_set_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        envelope_support_set(np.zeros((1, 2)), np.zeros(2), 1.0, None)
    with pytest.raises(DimensionError):
        envelope_support_set(None, None, 1.0, None)


def test_sampled_points_are_feasible():
    A, b = np.array([[1.0, 1.0]]), np.array([0.5])
    pts = sample_feasible_points(A, b, 200, rng=np.random.default_rng(0))
    assert pts.shape == (200, 2)
    assert np.all(pts @ A.T >= b - 1e-12)
    assert np.all((pts >= 0) & (pts <= 1))
    assert np.any(np.any(pts == 0, axis=1))


def test_envelope_validation_counts():
    x1, x2 = Polynomial.variables(2)
    rep = envelope_validation(x1 + x2, np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 1.0]]))
    assert rep["samples"] == 3
    assert rep["max_excess"] == pytest.approx(0.0)
    assert rep["min_hessian_eigenvalue"] == pytest.approx(0.0)
    rep2 = envelope_validation(x1**2 - x2**2 + 5, np.array([[0.0, 0.0]]))
    assert rep2["max_excess"] == pytest.approx(5.0)
    assert rep2["min_hessian_eigenvalue"] == pytest.approx(-2.0)


def test_feasible_point_of_sap_satisfies_card_bound():
    fit = fit_envelope(np.array([[1.0, 1.0]]), np.array([0.5]), 1)
    pts = sample_feasible_points([[1.0, 1.0]], [0.5], 100)
    card = (pts != 0).sum(axis=1)
    assert np.all([fit.p.evaluate(x) <= c + 1e-6 for x, c in zip(pts, card)])


def test_basis_of_moment_vector_matches():
    sap = min_card_program([[1.0]], [1.0], alpha=4.0)
    res = solve_relaxation(sap, 1)
    assert len(res.moments.values) == len(basis(2, 2))
