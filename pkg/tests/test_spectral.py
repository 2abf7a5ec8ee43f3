"""Tests for the Perron eigenvalue machinery.

Numeric pins were frozen from runs cross-checked two ways (power iteration
on the block companion vs bisection on the diagonal-scaling
characterization), which agreed to ~1e-12 everywhere.
"""

import math

import numpy as np
import pytest

from bootperc import counting as ct
from bootperc import spectral as sp


# ---------------------------------------------------------------------------
# matrix construction


def test_build_A_1x1():
    A = sp.build_A(2, 1)
    assert A.shape == (1, 1)
    assert A[0, 0] == pytest.approx(math.exp(-1), rel=1e-15)


def test_build_A_2x2_entries():
    A = sp.build_A(2, 2)
    assert A[0, 0] == pytest.approx(math.exp(-1), rel=1e-14)
    assert A[0, 1] == pytest.approx(2 * math.exp(-1), rel=1e-14)
    assert A[1, 0] == pytest.approx(math.exp(-2) / 2, rel=1e-14)
    assert A[1, 1] == pytest.approx(2 * math.exp(-2), rel=1e-14)


def test_build_A_log_consistent():
    for r, ell in [(2, 5), (3, 8), (4, 12)]:
        assert np.allclose(np.exp(sp.build_A_log(r, ell)), sp.build_A(r, ell))


def test_build_A_positive():
    assert np.all(sp.build_A(3, 30) > 0)


def test_build_A_validation():
    with pytest.raises(ValueError):
        sp.build_A(1, 5)
    with pytest.raises(ValueError):
        sp.build_A(2, 0)


def test_companion_layout_ell2():
    A = sp.build_A(2, 2)
    P = sp.companion_psi(A)
    expected = np.array(
        [
            [A[0, 0], A[0, 1], 0.0, 0.0],
            [0.0, 0.0, A[1, 0], A[1, 1]],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
        ]
    )
    assert np.array_equal(P, expected)


def test_companion_ell1_is_input():
    P = sp.companion_psi(np.array([[0.5]]))
    assert P.shape == (1, 1) and P[0, 0] == 0.5


def test_companion_budget():
    with pytest.raises(sp.CompanionBudgetError):
        sp.companion_psi(np.ones((65, 65)))
    sp.companion_psi(np.ones((65, 65)), ell_budget=65)


def test_companion_non_square():
    with pytest.raises(ValueError):
        sp.companion_psi(np.ones((2, 3)))


# ---------------------------------------------------------------------------
# primitivity


def test_is_primitive_cases():
    assert sp.is_primitive(np.ones((3, 3)))
    assert not sp.is_primitive(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert not sp.is_primitive(np.eye(3))
    assert sp.is_primitive(np.array([[1.0, 1.0], [1.0, 0.0]]))
    assert sp.is_primitive(sp.companion_psi(sp.build_A(2, 3)))


# ---------------------------------------------------------------------------
# power iteration


def test_perron_symmetric_2x2():
    res = sp.perron(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert res.value == pytest.approx(3.0, rel=1e-12)
    assert np.allclose(res.vector, [0.5, 0.5], atol=1e-10)
    assert res.iterations >= 1


def test_perron_scaled_identity():
    res = sp.perron(3.0 * np.eye(4))
    assert res.value == pytest.approx(3.0, rel=1e-14)
    assert np.allclose(res.vector, 0.25)


def test_perron_rejects_periodic():
    with pytest.raises(sp.NotPrimitiveError):
        sp.perron(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_perron_rejects_negative():
    with pytest.raises(ValueError):
        sp.perron(np.array([[1.0, -0.1], [0.5, 1.0]]))


def test_perron_scalar_companion():
    res = sp.perron(sp.companion_psi(sp.build_A(2, 1)))
    assert res.value == pytest.approx(math.exp(-1), rel=1e-12)


def test_perron_eigen_residual():
    M = sp.companion_psi(sp.build_A(2, 5))
    res = sp.perron(M)
    resid = np.max(np.abs(M @ res.vector - res.value * res.vector))
    assert resid < 1e-10 * np.max(res.vector)


# ---------------------------------------------------------------------------
# diagonal-scaling characterization


def test_dlambda_scalar_case():
    assert sp.lambda_via_dlambda(2, 1) == pytest.approx(math.exp(-1), abs=1e-9)


def test_dlambda_matches_companion_perron():
    for r, ell in [(2, 5), (2, 10), (3, 5)]:
        d = sp.lambda_via_dlambda(r, ell, tol=1e-12)
        p = sp.perron(sp.companion_psi(sp.build_A(r, ell))).value
        assert abs(d - p) < 1e-10


def test_lambda_pins():
    # frozen from the two-solver cross-check
    assert sp.lambda_via_dlambda(2, 2, tol=1e-12) == pytest.approx(
        0.6628958472738304, abs=1e-9
    )
    assert sp.lambda_via_dlambda(3, 10, tol=1e-12) == pytest.approx(
        0.3563265691288985, abs=1e-9
    )


def test_lambda_increasing_in_ell():
    vals = [sp.lambda_via_dlambda(2, ell, tol=1e-11) for ell in (2, 4, 8, 16)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_lambda_growth_rate_bound():
    for r in (2, 3, 4):
        bound = math.exp(-(r - 2)) + 1e-9
        for ell in (1, 5, 20):
            assert sp.lambda_via_dlambda(r, ell, tol=1e-11) <= bound


def test_lambda_2_40_band():
    lam = sp.lambda_via_dlambda(2, 40, tol=1e-11)
    assert 0.9 <= lam <= 1.0


def test_dlambda_report_shape():
    rep = sp.dlambda_report(3, 4, tol=1e-10)
    assert set(rep) == {"r", "ell", "lambda", "outer_iterations", "inner_iterations"}
    assert rep["outer_iterations"] >= 1
    assert rep["inner_iterations"] > rep["outer_iterations"]


# ---------------------------------------------------------------------------
# eigenvector lift


def test_lift_vector_layout():
    v = np.array([1.0, 2.0])
    lam = 0.5
    assert np.allclose(sp.lift_vector(v, lam), [0.5, 1.0, 1.0, 2.0])


def test_eigenvector_lift_residual():
    for r, ell in [(2, 10), (3, 8)]:
        lam = sp.lambda_via_dlambda(r, ell, tol=1e-12)
        v = sp.dlambda_eigenvector(r, ell, lam)
        vl = sp.lift_vector(v, lam)
        P = sp.companion_psi(sp.build_A(r, ell))
        resid = float(np.max(np.abs(P @ vl - lam * vl)) / np.max(np.abs(vl)))
        assert resid < 1e-8


# ---------------------------------------------------------------------------
# proof-side inequality checks


def test_row_sums_exceed_one_at_proof_lambda():
    # lambda = e^{-(r-2)}(1 - delta/e) with delta = 0.5
    for r in (2, 3, 4):
        lam = math.exp(-(r - 2)) * (1 - 0.5 / math.e)
        logs = sp.dlambda_row_sums_log(r, 40, lam)
        assert logs.shape == (40,)
        assert np.all(logs > 0)


def test_row_sums_log_matches_direct_small():
    lam = 0.7
    logs = sp.dlambda_row_sums_log(2, 4, lam)
    A = sp.build_A(2, 4)
    D = np.diag([lam ** (-i) for i in range(1, 5)])
    direct = np.log((D @ A).sum(axis=1))
    assert np.allclose(logs, direct, atol=1e-12)


def test_table_growth_band():
    # level-bounded lower-bound tables grow no faster than lambda(r, ell)
    ell = 6
    tab = ct.build_count_table(
        2, 200, variant="triangle_free_lower_level_bounded", level_bound=ell
    )
    lam = sp.lambda_via_dlambda(2, ell, tol=1e-11)
    ratios = sp.table_growth_ratios(tab, k_min=50)
    assert set(range(50, 201)) <= set(ratios)
    assert all(ratios[k] <= lam * 1.05 for k in range(50, 201))
