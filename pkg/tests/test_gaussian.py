import math

import numpy as np
import pytest

from wehrl_witness.errors import InvalidInputError
from wehrl_witness.gaussian import (
    CovarianceSpec, GaussianQ, gaussian_sm, gaussian_twisted_grid, golden_section_squeezing,
    local_rotation, local_squeezing, mgvt, optimize_squeezing, principal_sigmas, rotate_pm,
    second_order_criterion, tmsv_covariance, twist,
)
from wehrl_witness.husimi import marginalize_pm
from wehrl_witness.entropy import entropy_2d

from conftest import random_covariance

VAC = CovarianceSpec(0.5 * np.eye(4))


def test_twist_vacuum():
    for sign in "+-":
        np.testing.assert_allclose(twist(VAC, sign).v, 2 * np.eye(2), atol=1e-15)


def test_twist_tmsv_minus():
    lam = 0.7
    v = twist(tmsv_covariance(lam), "-").v
    np.testing.assert_allclose(v, (1 + math.exp(-2 * lam)) * np.eye(2), atol=1e-14)


def test_twist_symmetric_traces_equal():
    g = np.diag([0.8, 0.6, 0.8, 0.6])
    assert np.trace(twist(g, "+").v) == pytest.approx(np.trace(twist(g, "-").v))


def test_covariance_validity():
    with pytest.raises(InvalidInputError, match="quantum"):
        CovarianceSpec(0.2 * np.eye(4))
    with pytest.raises(InvalidInputError):
        CovarianceSpec(np.eye(3))
    bad = 0.5 * np.eye(4)
    bad[0, 1] = 0.1
    with pytest.raises(InvalidInputError, match="symmetric"):
        CovarianceSpec(bad)


def test_gaussian_sm_examples():
    assert gaussian_sm(2 * np.eye(2)) == pytest.approx(1 + math.log(2))
    assert gaussian_sm(twist(tmsv_covariance(0.5), "-")) == pytest.approx(1 + math.log(1 + math.exp(-1)))
    assert gaussian_sm(np.diag([4.0, 1.0])) == pytest.approx(1 + math.log(2))
    with pytest.raises(InvalidInputError):
        gaussian_sm(np.diag([1.0, -1.0]))


def test_second_order_examples():
    r = second_order_criterion(1, 1, 0, 1)
    assert (r.lhs, r.rhs, r.witnessed) == (4, 4, False)
    e = math.exp(-1)
    r = second_order_criterion(e, e, 0, 1)
    assert r.lhs == pytest.approx((e + 1) ** 2) and r.witnessed
    r = second_order_criterion(1, 1, 0.3, 1)
    assert r.rhs == pytest.approx(4.09) and r.witnessed
    with pytest.raises(InvalidInputError):
        second_order_criterion(1, 1, 0, 0)


@pytest.mark.parametrize("s2r,s2s,cov", [(1, 1, 0), (4, 0.25, 0), (math.exp(-1), math.exp(-1), 0),
                                         (2.0, 0.3, 0.4), (0.1, 5.0, -0.2)])
def test_optimize_matches_golden_section(s2r, s2s, cov):
    opt = optimize_squeezing(s2r, s2s, cov)
    gold = golden_section_squeezing(s2r, s2s, cov)
    assert abs(opt.lhs - gold.lhs) < 1e-8
    assert opt.lhs == pytest.approx((math.sqrt(s2r * s2s) + 1) ** 2)
    assert opt.lhs <= second_order_criterion(s2r, s2s, cov, 1.0).lhs + 1e-15


def test_optimize_boundary_cases():
    assert optimize_squeezing(1, 1).a == pytest.approx(1.0)
    assert optimize_squeezing(4, 0.25).lhs == pytest.approx(4.0)
    assert not optimize_squeezing(4, 0.25).witnessed
    assert optimize_squeezing(math.exp(-1), math.exp(-1)).witnessed
    assert optimize_squeezing(0.0, 1.0).lhs == pytest.approx(1.0)


def test_mgvt_examples():
    assert not mgvt(1, 1)
    assert mgvt(math.exp(-0.5), math.exp(-0.5))
    assert not mgvt(2, 0.5)
    with pytest.raises(InvalidInputError):
        mgvt(-1, 1)


def test_tmsv_covariance():
    np.testing.assert_allclose(tmsv_covariance(0).gamma, 0.5 * np.eye(4))
    tm = twist(tmsv_covariance(0.5), "-")
    assert abs(tm.sigma2_r - math.exp(-1)) < 1e-14
    assert abs(tm.sigma2_s - math.exp(-1)) < 1e-14
    big = twist(tmsv_covariance(6.0), "-")
    assert big.sigma2_r < 1e-5 and big.sigma2_s < 1e-5
    assert tmsv_covariance(1.3).purity() == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        tmsv_covariance(-0.1)


def test_rotate_pm_rotation_keeps_det():
    g = tmsv_covariance(0.5)
    S = local_rotation(0.8, -0.8)
    for sign in "+-":
        assert twist(rotate_pm(g, S), sign).det_v == pytest.approx(twist(g, sign).det_v, abs=1e-12)


def test_rotate_pm_squeezing_changes_det():
    g = tmsv_covariance(0.5)
    S = np.diag([2.0, 0.5, 1.0, 1.0])
    assert abs(twist(rotate_pm(g, S), "-").det_v - twist(g, "-").det_v) > 1e-3


def test_rotate_pm_rejects_non_symplectic():
    with pytest.raises(InvalidInputError):
        rotate_pm(VAC, np.diag([2.0, 2.0, 1.0, 1.0]))


def test_equivalence_chain_random(rng):
    for _ in range(20):
        g = random_covariance(rng)
        for sign in "+-":
            tc = twist(g, sign)
            opt = optimize_squeezing(tc.sigma2_r, tc.sigma2_s, tc.cov)
            # det V = lhs(a=1) - cov^2 so the second-order test at a = 1 is det V < 4
            assert (gaussian_sm(tc) < 1 + math.log(2)) == (tc.det_v < 4)
            so = second_order_criterion(tc.sigma2_r, tc.sigma2_s, tc.cov, 1.0)
            assert so.lhs - so.rhs == pytest.approx(tc.det_v - 4)
            assert opt.lhs <= so.lhs + 1e-12


def test_principal_sigmas_product_is_sqrt_det():
    tc = twist(tmsv_covariance(0.4), "+")
    sr, ss = principal_sigmas(tc)
    assert sr * ss == pytest.approx(math.sqrt(np.linalg.det(tc.wigner)))


def test_local_squeezing_keeps_mgvt():
    for lam in (0.0, 0.3, 1.0):
        base = principal_sigmas(twist(tmsv_covariance(lam), "-"))
        for a in (0.5, 2.0):
            sq = principal_sigmas(twist(rotate_pm(tmsv_covariance(lam), local_squeezing(a)), "-"))
            assert mgvt(*sq) == mgvt(*base)


@pytest.mark.parametrize("lam", [0.0, 0.6])
def test_numeric_marginal_matches_closed_form(lam):
    g = tmsv_covariance(lam)
    q4 = GaussianQ(g)
    grid = gaussian_twisted_grid(g, 129)
    for sign in "+-":
        e = entropy_2d(marginalize_pm(q4, sign, grid, q4.inner_quadrature(sign, 24)))
        assert abs(e.value - gaussian_sm(twist(g, sign))) < 2e-3
