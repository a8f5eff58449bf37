import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wehrl_witness import _backend
from wehrl_witness.entropy import entropy_2d
from wehrl_witness.errors import ConfigurationError, InvalidInputError
from wehrl_witness.fock import SingleModeState, product_state
from wehrl_witness.husimi import (
    MEASURE, FockQ, Grid2D, InnerQuadrature, QField2D, integrate, marginalize_pm,
    q_cat_closed, q_global, q_noon_closed, q_single,
)
from wehrl_witness.states import cat_state, coherent_product, noon_state

VAC = coherent_product(0, 0, dim=4)
BOUNDED = [FockQ(noon_state(3)), FockQ(cat_state(1.2, 0.3))]
coords = st.floats(-6, 6)


def test_q_global_examples():
    assert q_global(VAC, 0, 0, 0, 0) == pytest.approx(1.0)
    assert q_global(noon_state(1), 1, 0, 1, 0) == pytest.approx(math.exp(-1), rel=1e-12)
    beta = coherent_product(1 / math.sqrt(2), 0)
    assert q_global(beta, 1, 0, 0, 0) == pytest.approx(1.0, abs=1e-12)


def test_q_single_examples():
    mix = SingleModeState(np.diag([0.5, 0.5, 0, 0]))
    r, s = 0.7, -1.3
    rho2 = r * r + s * s
    assert q_single(mix, r, s) == pytest.approx(math.exp(-rho2 / 2) * (1 + rho2 / 2) / 2)
    assert q_single(mix, 0, 0) == pytest.approx(0.5)
    vac = SingleModeState(np.diag([1.0, 0]))
    assert q_single(vac, 0, 0) == pytest.approx(1.0)


def test_q_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        q_global(VAC, math.nan, 0, 0, 0)
    with pytest.raises(InvalidInputError):
        q_noon_closed(-1, 0, 0, 0, 0)
    with pytest.raises(InvalidInputError):
        q_cat_closed(1.0, 1.5, 0, 0, 0, 0)


def test_q_noon_closed_examples():
    assert q_noon_closed(0, 0, 0, 0, 0) == pytest.approx(1.0)
    assert q_noon_closed(1, 1, 0, 1, 0) == pytest.approx(math.exp(-1))
    # (1 - i)^2 and (-1 + i)^2 are equal, so this point does not cancel
    assert q_noon_closed(2, 1, 1, -1, -1) == pytest.approx(math.exp(-2))
    # z2 = i z1 makes z1^2 + z2^2 vanish
    assert q_noon_closed(2, 1, 1, 1, -1) == pytest.approx(0.0, abs=1e-300)
    assert q_global(noon_state(2), 1, 1, 1, -1) == pytest.approx(0.0, abs=1e-15)


def test_q_cat_closed_vacuum_limit():
    assert q_cat_closed(0.0, 1.0, 0, 0, 0, 0) == pytest.approx(1.0)
    assert q_cat_closed(0.0, 0.0, 0, 0, 0, 0) == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 1), coords, coords, coords, coords)
def test_q_cat_closed_non_negative(ar, ai, z, r1, s1, r2, s2):
    assert q_cat_closed(complex(ar, ai), z, r1, s1, r2, s2) >= 0.0


@settings(max_examples=100, deadline=None)
@given(coords, coords, coords, coords)
def test_q_global_bounded(r1, s1, r2, s2):
    for q4 in BOUNDED:
        q = q4(r1, s1, r2, s2)
        assert -1e-15 <= q <= 1 + 1e-12


def test_separable_factorisation(rng):
    a = SingleModeState.from_ket([0.6, 0.8j, 0, 0, 0, 0])
    b = SingleModeState(np.diag([0.3, 0.5, 0.2, 0, 0, 0]))
    s = product_state(a, b)
    r1, s1, r2, s2 = rng.uniform(-4, 4, (4, 100))
    np.testing.assert_allclose(q_global(s, r1, s1, r2, s2),
                               q_single(a, r1, s1) * q_single(b, r2, s2), atol=1e-10)


@pytest.mark.parametrize("state", [noon_state(3), cat_state(1.0, 0.5), coherent_product(0.5, -0.5j)],
                         ids=["noon3", "cat", "coherent"])
def test_four_d_grid_normalisation(state):
    x = np.linspace(-7, 7, 41)
    h = x[1] - x[0]
    r1, s1, r2, s2 = np.meshgrid(x, x, x, x, indexing="ij", sparse=True)
    mass = q_global(state, r1, s1, r2, s2).sum() * h ** 4 * MEASURE ** 2
    assert abs(mass - 1) < 5e-3


def test_grid_validation():
    with pytest.raises(InvalidInputError):
        Grid2D(-1, 1, -1, 1, 4, 20)
    with pytest.raises(InvalidInputError):
        Grid2D(1, -1, -1, 1, 20, 20)
    g = Grid2D.symmetric(5, 33)
    assert g.refined().nx == 65 and g.refined().dx == pytest.approx(g.dx / 2)
    big = g.scaled(1.5)
    assert big.dx == pytest.approx(g.dx) and big.nx % 2 == 1 and big.x_max >= 7.5


def test_qfield_rejects_negative():
    g = Grid2D.symmetric(3, 9)
    v = np.zeros((9, 9))
    v[4, 4] = -1e-6
    with pytest.raises(InvalidInputError):
        QField2D(g, v)
    v[4, 4] = -1e-13
    f = QField2D(g, v)
    assert f.pre_clamp_min == -1e-13 and f.values.min() == 0.0


def test_inner_quadrature_rules():
    gh = InnerQuadrature.gauss_hermite(12)
    # plain rule for int f dx: exact for exp(-x^2) x^4
    assert np.sum(gh.weights * np.exp(-gh.nodes ** 2) * gh.nodes ** 4) == pytest.approx(
        0.75 * math.sqrt(math.pi), rel=1e-13)
    sc = InnerQuadrature.gauss_hermite(20, scale=3.0)
    assert np.sum(sc.weights * np.exp(-sc.nodes ** 2 / 9)) == pytest.approx(3 * math.sqrt(math.pi))
    un = InnerQuadrature.uniform(201, 10.0)
    assert np.sum(un.weights * np.exp(-un.nodes ** 2)) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    with pytest.raises(ConfigurationError):
        InnerQuadrature.make("simpson", 10)


def _vacuum_field(sign):
    g = Grid2D.symmetric(12, 129)
    return marginalize_pm(FockQ(VAC), sign, g, InnerQuadrature.gauss_hermite(6))


@pytest.mark.parametrize("sign", ["+", "-"])
def test_marginal_of_vacuum(sign):
    f = _vacuum_field(sign)
    assert f.values[64, 64] == pytest.approx(0.5, abs=1e-14)
    assert abs(f.mass - 1) < 1e-6
    r, s = f.grid.mesh()
    np.testing.assert_allclose(f.values, 0.5 * np.exp(-(r * r + s * s) / 4), atol=1e-15)


def test_marginal_translation_invariance():
    g = Grid2D.symmetric(14, 129)
    inner = InnerQuadrature.gauss_hermite(16)
    ref = entropy_2d(_vacuum_field("+")).value
    beta = coherent_product(0.8, 0.8j)
    assert abs(entropy_2d(marginalize_pm(FockQ(beta), "+", g, inner)).value - ref) < 1e-6


def test_noon_marginal_mass():
    s = noon_state(1)
    f = marginalize_pm(FockQ(s), "+", Grid2D.symmetric(12, 129), InnerQuadrature.gauss_hermite(s.dim + 2))
    assert abs(f.mass - 1) < 1e-4
    assert abs(integrate(f.values, f.grid) - f.mass) < 1e-15


def test_marginal_refuses_too_few_nodes():
    s = noon_state(6)
    with pytest.raises(ConfigurationError):
        marginalize_pm(FockQ(s), "+", Grid2D.symmetric(10, 33), InnerQuadrature.gauss_hermite(5))


def test_marginal_substitution_matches_direct_quadrature():
    """Generic path integrates q4 with the documented substitution for each sign."""
    s = noon_state(2)
    q4 = FockQ(s)
    g = Grid2D.symmetric(4, 9)
    inner = InnerQuadrature.gauss_hermite(s.dim + 2)
    for sign in (1, -1):
        got = marginalize_pm(lambda *x: q4(*x), sign, g, inner).values
        a, b = 1.0, -2.0
        i, j = list(g.xs).index(a), list(g.ys).index(b)
        r = np.linspace(-9, 9, 401)[:, None]
        t = np.linspace(-9, 9, 401)[None, :]
        vals = q4(r, t, a - r, t - b) if sign > 0 else q4(r, t, r - a, b - t)
        h = 18 / 400
        assert got[i, j] == pytest.approx(vals.sum() * h * h * MEASURE, rel=1e-9)


@pytest.mark.parametrize("state", [noon_state(4), cat_state(0.9, 0.3)], ids=["noon", "cat"])
def test_backends_and_generic_agree(state):
    q4 = FockQ(state)
    g = Grid2D.symmetric(9, 17)
    inner = InnerQuadrature.gauss_hermite(state.dim + 2)
    ref = marginalize_pm(lambda *x: q4(*x), "-", g, inner).values
    py = marginalize_pm(q4, "-", g, inner, backend="python").values
    np.testing.assert_allclose(py, ref, atol=1e-14)
    if _backend.BACKEND == "compiled":
        c = marginalize_pm(q4, "-", g, inner, backend="compiled").values
        np.testing.assert_allclose(c, ref, atol=1e-14)


def test_threads_bit_identical():
    q4 = FockQ(noon_state(3))
    g = Grid2D.symmetric(10, 33)
    inner = InnerQuadrature.gauss_hermite(26)
    one = marginalize_pm(q4, "+", g, inner, threads=1).values
    four = marginalize_pm(q4, "+", g, inner, threads=4).values
    assert np.array_equal(one, four)
