"""Covariance-matrix machinery for two-mode Gaussian states.

Covariances are over ``(r1, s1, r2, s2)`` in the Wigner convention with
vacuum ``gamma = I/2``, so the twisted variables ``r+- = r1 +- r2`` have
vacuum variance 1 and the Husimi covariance of a twisted pair is
``V = gamma_pm + I``. Means are taken to vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidInputError
from .husimi import Grid2D, InnerQuadrature, QField2D, parse_sign

SYMMETRY_TOL = 1e-12
VALIDITY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-10

OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))

# rows pick (r+, s-) and (r-, s+) out of (r1, s1, r2, s2)
_TWIST = {
    1: np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, -1.0]]),
    -1: np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, 1.0]]),
}
# inner-variable embedding: Q(r, s, r2, s2) with r = a/2 + x, s = b/2 + y
_INNER = {
    1: np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, 1.0]]),
    -1: np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, -1.0]]),
}


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Validated 4x4 Wigner covariance matrix."""

    gamma: np.ndarray
    label: str = ""

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.shape != (4, 4):
            raise InvalidInputError(f"covariance must be 4x4, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise InvalidInputError("covariance has non-finite entries")
        if np.max(np.abs(g - g.T)) > SYMMETRY_TOL:
            raise InvalidInputError("covariance is not symmetric")
        lam = np.linalg.eigvalsh(g + 0.5j * OMEGA)
        if lam[0] < -VALIDITY_TOL:
            raise InvalidInputError(
                f"gamma + i Omega/2 has eigenvalue {lam[0]:.3e}; not a quantum covariance"
            )
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    def mode_block(self, mode):
        i = 2 * (int(mode) - 1)
        return self.gamma[i:i + 2, i:i + 2]

    def purity(self):
        return 1.0 / math.sqrt(np.linalg.det(2.0 * self.gamma))

    def mean_number(self):
        return float(np.trace(self.gamma)) / 2.0 - 1.0

    def husimi_cov(self):
        """Covariance of the global Q-distribution, ``gamma + I/2``."""
        return self.gamma + 0.5 * np.eye(4)


@dataclass(frozen=True, eq=False)
class TwistedCov:
    """Second moments of a twisted pair ``(r+, s-)`` or ``(r-, s+)``.

    ``wigner`` holds the Wigner-covariance block; ``v`` is the Husimi
    covariance ``wigner + I``.
    """

    sign: int
    wigner: np.ndarray
    v: np.ndarray = field(init=False)

    def __post_init__(self):
        w = np.array(self.wigner, dtype=float)
        w.setflags(write=False)
        v = w + np.eye(2)
        v.setflags(write=False)
        object.__setattr__(self, "wigner", w)
        object.__setattr__(self, "v", v)

    @property
    def sigma2_r(self):
        return float(self.wigner[0, 0])

    @property
    def sigma2_s(self):
        return float(self.wigner[1, 1])

    @property
    def cov(self):
        return float(self.wigner[0, 1])

    @property
    def det_v(self):
        return float(np.linalg.det(self.v))


def twist(gamma, sign) -> TwistedCov:
    """Twisted-pair covariance for ``sign`` = ``+`` (r+, s-) or ``-`` (r-, s+)."""
    if not isinstance(gamma, CovarianceSpec):
        gamma = CovarianceSpec(gamma)
    sign = parse_sign(sign)
    L = _TWIST[sign]
    return TwistedCov(sign, L @ gamma.gamma @ L.T)


def gaussian_sm(v) -> float:
    """``1 + 0.5 ln det V``, the entropy of a Gaussian ``Q+-`` with covariance ``V``."""
    if isinstance(v, TwistedCov):
        v = v.v
    det = float(np.linalg.det(np.asarray(v, dtype=float)))
    if not det > 0.0:
        raise InvalidInputError(f"det V must be positive, got {det!r}")
    return 1.0 + 0.5 * math.log(det)


@dataclass(frozen=True)
class SecondOrder:
    lhs: float
    rhs: float
    witnessed: bool
    a: float = 1.0


def second_order_criterion(sigma2_r, sigma2_s, cov, a=1.0) -> SecondOrder:
    """``(s_r^2 + a^2)(s_s^2 + 1/a^2) >= 4 + cov^2``; witnessed when violated.

    Inputs are Wigner second moments of the twisted pair. ``cov`` enters
    squared.
    """
    if not a > 0:
        raise InvalidInputError(f"squeezing parameter a must be positive, got {a!r}")
    lhs = (sigma2_r + a * a) * (sigma2_s + 1.0 / (a * a))
    rhs = 4.0 + cov * cov
    return SecondOrder(lhs, rhs, lhs < rhs, float(a))


def optimize_squeezing(sigma2_r, sigma2_s, cov=0.0) -> SecondOrder:
    """Minimise the second-order left-hand side over the local squeezing ``a``.

    ``d lhs / da = 0`` gives ``a^2 = sigma_r / sigma_s`` and
    ``lhs_min = (sigma_r sigma_s + 1)^2``; ``cov`` does not depend on ``a``.
    When either variance vanishes the infimum is approached as ``a -> 0``
    or ``a -> inf`` and is reported with that limiting ``a``.
    """
    if sigma2_r < 0 or sigma2_s < 0:
        raise InvalidInputError("variances must be non-negative")
    sr = math.sqrt(sigma2_r)
    ss = math.sqrt(sigma2_s)
    if sr > 0 and ss > 0:
        return second_order_criterion(sigma2_r, sigma2_s, cov, math.sqrt(sr / ss))
    lhs = (sr * ss + 1.0) ** 2
    rhs = 4.0 + cov * cov
    a = 0.0 if sr == 0 and ss > 0 else math.inf
    return SecondOrder(lhs, rhs, lhs < rhs, a)


def golden_section_squeezing(sigma2_r, sigma2_s, cov=0.0, bracket=(-20.0, 20.0)):
    """Golden-section search for the optimal ``a``, over ``ln a``."""
    def f(t):
        return second_order_criterion(sigma2_r, sigma2_s, cov, math.exp(t)).lhs

    res = minimize_scalar(f, bracket=bracket, method="golden", tol=1e-12)
    return second_order_criterion(sigma2_r, sigma2_s, cov, math.exp(res.x))


def mgvt(sigma_r, sigma_s) -> bool:
    """Product criterion on standard deviations; witnessed when ``sigma_r sigma_s < 1``."""
    if sigma_r < 0 or sigma_s < 0:
        raise InvalidInputError("standard deviations must be non-negative")
    return sigma_r * sigma_s < 1.0


def principal_sigmas(tc: TwistedCov):
    """Principal-axis standard deviations of the Wigner twisted block."""
    lam = np.clip(np.linalg.eigvalsh(tc.wigner), 0.0, None)
    return float(math.sqrt(lam[0])), float(math.sqrt(lam[1]))


def is_symplectic(S, tol=SYMPLECTIC_TOL):
    S = np.asarray(S, dtype=float)
    return S.shape == (4, 4) and np.max(np.abs(S.T @ OMEGA @ S - OMEGA)) <= tol


def rotate_pm(gamma, S) -> CovarianceSpec:
    """Apply a two-mode symplectic map, ``gamma -> S gamma S^T``."""
    if not isinstance(gamma, CovarianceSpec):
        gamma = CovarianceSpec(gamma)
    S = np.asarray(S, dtype=float)
    if not is_symplectic(S):
        raise InvalidInputError("S is not symplectic")
    return CovarianceSpec(S @ gamma.gamma @ S.T, gamma.label)


def local_rotation(theta1, theta2=None):
    """Symplectic matrix of local phase-space rotations ``R = cos t r + sin t s``."""
    if theta2 is None:
        theta2 = theta1

    def rot(t):
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, s], [-s, c]])

    out = np.zeros((4, 4))
    out[:2, :2] = rot(theta1)
    out[2:, 2:] = rot(theta2)
    return out


def local_squeezing(a1, a2=None):
    """``diag(a, 1/a)`` on each mode."""
    if a2 is None:
        a2 = a1
    if not (a1 > 0 and a2 > 0):
        raise InvalidInputError("squeezing factors must be positive")
    return np.diag([a1, 1.0 / a1, a2, 1.0 / a2])


def tmsv_covariance(lam) -> CovarianceSpec:
    """Two-mode squeezed vacuum: ``var(r1 - r2) = var(s1 + s2) = exp(-2 lam)``."""
    lam = float(lam)
    if not math.isfinite(lam):
        raise InvalidInputError("lambda must be finite")
    if lam < 0:
        raise InvalidInputError(f"lambda must be non-negative, got {lam!r}")
    c = 0.5 * math.cosh(2.0 * lam)
    s = 0.5 * math.sinh(2.0 * lam)
    g = np.array([
        [c, 0.0, s, 0.0],
        [0.0, c, 0.0, -s],
        [s, 0.0, c, 0.0],
        [0.0, -s, 0.0, c],
    ])
    return CovarianceSpec(g, label=f"tmsv lambda={lam:g}")


class GaussianQ:
    """Global Husimi distribution of a zero-mean Gaussian state.

    ``Q(x) = exp(-x^T C^-1 x / 2) / sqrt(det C)`` with ``C = gamma + I/2``,
    normalised on ``prod dr ds/(2 pi)``.
    """

    def __init__(self, spec: CovarianceSpec):
        self.spec = spec
        self.cov = spec.husimi_cov()
        self.prec = np.linalg.inv(self.cov)
        self.norm = 1.0 / math.sqrt(np.linalg.det(self.cov))

    def __call__(self, r1, s1, r2, s2):
        x = np.stack(np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r1, s1, r2, s2))))
        quad = np.einsum("i...,ij,j...->...", x, self.prec, x)
        return self.norm * np.exp(-0.5 * quad)

    def inner_width(self, sign):
        """Largest standard deviation of the twisted-marginal integrand in ``(x, y)``."""
        T = _INNER[parse_sign(sign)]
        k = np.linalg.inv(T.T @ self.prec @ T)
        return float(math.sqrt(max(k[0, 0], k[1, 1])))

    def inner_quadrature(self, sign, node_count=48):
        """Gauss-Hermite rule scaled to the integrand width, ``c = sqrt(2) sigma``."""
        return InnerQuadrature.gauss_hermite(node_count, math.sqrt(2.0) * self.inner_width(sign))


def gaussian_twisted_grid(spec: CovarianceSpec, n=257, extent=None, width=10.0):
    """Square grid covering ``width`` standard deviations of the wider ``Q+-``."""
    if extent is None:
        lam = max(np.linalg.eigvalsh(twist(spec, s).v)[-1] for s in (1, -1))
        extent = max(12.0, width * math.sqrt(lam))
    return Grid2D.symmetric(extent, n)


def sample_gaussian_single(cov, grid):
    """Single-mode Gaussian Q with Husimi covariance ``cov`` sampled on ``grid``."""
    cov = np.asarray(cov, dtype=float)
    prec = np.linalg.inv(cov)
    r, s = grid.mesh()
    quad = prec[0, 0] * r * r + 2.0 * prec[0, 1] * r * s + prec[1, 1] * s * s
    return QField2D(grid, np.exp(-0.5 * quad) / math.sqrt(np.linalg.det(cov)))
