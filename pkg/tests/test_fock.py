import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wehrl_witness.entropy import wehrl_single
from wehrl_witness.errors import InvalidInputError, TruncationError
from wehrl_witness.fock import (
    Angles, SingleModeState, TwoModeState, coherent_overlaps, product_state, reduce, rotate_local,
)
from wehrl_witness.husimi import FockQ, q_global
from wehrl_witness.states import cat_state, coherent_product, noon_state


def test_coherent_overlaps_vacuum():
    np.testing.assert_allclose(coherent_overlaps(0, 3), [1, 0, 0])


def test_coherent_overlaps_formula():
    np.testing.assert_allclose(coherent_overlaps(1, 2), [math.exp(-0.5)] * 2, rtol=1e-15)


def test_coherent_overlaps_norm():
    assert abs(np.sum(np.abs(coherent_overlaps(1, 30)) ** 2) - 1) < 1e-12


def test_coherent_overlaps_phase():
    c = coherent_overlaps(1j, 4)
    np.testing.assert_allclose(c[1] / c[0], 1j)


@pytest.mark.parametrize("alpha", [complex("nan"), complex(1, math.inf)])
def test_coherent_overlaps_rejects_nonfinite(alpha):
    with pytest.raises(InvalidInputError):
        coherent_overlaps(alpha, 4)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 3), st.floats(0, 2 * math.pi))
def test_coherent_overlaps_norm_monotone(mod, phase):
    alpha = mod * complex(math.cos(phase), math.sin(phase))
    dmin = max(1, math.ceil(4 * mod * mod))
    norms = [np.sum(np.abs(coherent_overlaps(alpha, d)) ** 2) for d in range(dmin, dmin + 12)]
    assert np.all(np.diff(norms) >= -1e-15)
    assert norms[-1] <= 1 + 1e-12


def test_angles_reduced_mod_two_pi():
    a = Angles(2 * math.pi + 0.5, -0.5)
    assert a.theta1 == pytest.approx(0.5)
    assert a.theta2 == pytest.approx(2 * math.pi - 0.5)
    with pytest.raises(InvalidInputError):
        Angles(math.inf, 0)


def test_rotate_identity():
    s = noon_state(2)
    assert rotate_local(s, (0, 0)) is s
    r = rotate_local(s, (2 * math.pi, 2 * math.pi))
    np.testing.assert_allclose(r.rho, s.rho, atol=1e-12)


def test_rotate_convention_matches_substitution():
    """Q of the rotated state at alpha equals Q of the original at exp(i theta) alpha."""
    s = noon_state(1)
    th1, th2 = 0.4, -1.1
    rot = rotate_local(s, (th1, th2))
    rng = np.random.default_rng(1)
    r1, s1, r2, s2 = rng.uniform(-2, 2, (4, 20))
    a1 = np.exp(1j * th1) * (r1 + 1j * s1)
    a2 = np.exp(1j * th2) * (r2 + 1j * s2)
    lhs = q_global(rot, r1, s1, r2, s2)
    rhs = q_global(s, a1.real, a1.imag, a2.real, a2.imag)
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)
    np.testing.assert_allclose(FockQ(s, (th1, th2))(r1, s1, r2, s2), lhs, atol=1e-14)


def test_rotation_is_local():
    s = cat_state(0.8 + 0.3j, 0.4)
    th = (0.9, 2.2)
    rot = rotate_local(s, th)
    for mode, t in ((1, th[0]), (2, th[1])):
        np.testing.assert_allclose(reduce(rot, mode).rho, reduce(s, mode).rotate(t).rho, atol=1e-12)


def test_rotation_keeps_single_mode_wehrl():
    s = noon_state(2)
    rot = rotate_local(s, (math.pi / 7, math.pi / 5))
    for mode in (1, 2):
        a = wehrl_single(reduce(s, mode)).value
        b = wehrl_single(reduce(rot, mode)).value
        assert abs(a - b) < 1e-6


def test_reduce_product_coherent_is_pure():
    s = coherent_product(0.7, 0.7)
    for mode in (1, 2):
        assert abs(reduce(s, mode).purity() - 1) < 1e-10


@pytest.mark.parametrize("N", [1, 4, 9])
def test_reduce_noon(N):
    r = reduce(noon_state(N), 1)
    expected = np.zeros(r.dim)
    expected[[0, N]] = 0.5
    np.testing.assert_allclose(np.diag(r.rho).real, expected, atol=1e-14)
    np.testing.assert_allclose(np.linalg.eigvalsh(r.rho)[-2:], [0.5, 0.5], atol=1e-14)


def test_reduce_trace_preserved():
    r = reduce(cat_state(1.0, 1.0), 2)
    assert abs(np.trace(r.rho).real - 1) < 1e-12
    with pytest.raises(InvalidInputError):
        reduce(noon_state(1), 3)


def test_state_validation():
    d = 3
    bad = np.zeros((d * d, d * d), dtype=complex)
    bad[0, 0] = 0.5
    with pytest.raises(InvalidInputError, match="trace"):
        TwoModeState(d, bad)
    nonherm = np.eye(d * d, dtype=complex) / (d * d)
    nonherm[0, 1] = 0.01
    with pytest.raises(InvalidInputError, match="Hermitian"):
        TwoModeState(d, nonherm)
    neg = np.diag([1.5, -0.5] + [0] * (d * d - 2)).astype(complex)
    with pytest.raises(InvalidInputError, match="negative"):
        TwoModeState(d, neg)
    with pytest.raises(InvalidInputError):
        TwoModeState(d, np.eye(4))


def test_leakage_rejected():
    with pytest.raises(TruncationError):
        noon_state(3, dim=4)
    psi = np.zeros((3, 3))
    psi[2, 0] = 1.0
    with pytest.raises(TruncationError, match="top Fock level"):
        TwoModeState.from_ket(psi)


def test_dim_one_vacuum_allowed():
    s = TwoModeState(1, np.ones((1, 1)))
    assert s.purity() == pytest.approx(1.0)
    assert q_global(s, 0, 0, 0, 0) == pytest.approx(1.0)


def test_product_state_and_mean_number():
    a = SingleModeState(np.diag([0.5, 0.5, 0, 0]))
    b = SingleModeState(np.diag([1.0, 0, 0, 0]))
    s = product_state(a, b)
    assert s.mean_number() == pytest.approx(0.5)
    np.testing.assert_allclose(reduce(s, 1).rho, a.rho, atol=1e-15)
