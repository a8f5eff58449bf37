"""Husimi Q-distributions and their twisted EPR marginals.

Phase-space points use ``alpha = (r + i s) / sqrt(2)`` per mode and the
measure ``dr ds / (2 pi)``. The twisted marginals are

    Q+(r+, s-) = int dr ds/(2 pi) Q(r, s, r+ - r, s - s-)
    Q-(r-, s+) = int dr ds/(2 pi) Q(r, s, r - r-, s+ - s)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.integrate import simpson
from scipy.special import gammaln

from . import _backend
from .errors import ConfigurationError, InvalidInputError
from .fock import Angles, SingleModeState, TwoModeState

MEASURE = 1.0 / (2.0 * math.pi)
SUPPORT_TOL = 1e-14
EXCITATION_TOL = 1e-14
COEF_TRIM = 1e-16

DEFAULT_GRID_N = 257


def _finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("phase-space coordinates must be finite")


def parse_sign(sign):
    """Normalise ``+``/``-``/``plus``/``minus``/``+1``/``-1`` to ``+1`` or ``-1``."""
    if sign in (1, "+", "plus", "p"):
        return 1
    if sign in (-1, "-", "minus", "m"):
        return -1
    raise InvalidInputError(f"sign must be plus or minus, got {sign!r}")


@dataclass(frozen=True)
class Grid2D:
    """Uniform tensor grid over ``[x_min, x_max] x [y_min, y_max]``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        ext = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in ext):
            raise InvalidInputError("grid extents must be finite")
        if self.nx < 8 or self.ny < 8:
            raise InvalidInputError(f"grid needs at least 8 nodes per axis, got {self.nx}x{self.ny}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise InvalidInputError("grid extents must be increasing")

    @classmethod
    def symmetric(cls, extent, n=DEFAULT_GRID_N):
        extent = float(extent)
        return cls(-extent, extent, -extent, extent, int(n), int(n))

    @property
    def xs(self):
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self):
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self):
        return (self.y_max - self.y_min) / (self.ny - 1)

    def mesh(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def refined(self):
        """Same extent, half the spacing."""
        return Grid2D(self.x_min, self.x_max, self.y_min, self.y_max,
                      2 * self.nx - 1, 2 * self.ny - 1)

    def scaled(self, factor):
        """Extent multiplied by ``factor`` at constant spacing (node counts kept odd)."""
        nx = 2 * int(math.ceil((self.nx - 1) * factor / 2)) + 1
        ny = 2 * int(math.ceil((self.ny - 1) * factor / 2)) + 1
        cx = 0.5 * (self.x_min + self.x_max)
        cy = 0.5 * (self.y_min + self.y_max)
        hx = 0.5 * (nx - 1) * self.dx
        hy = 0.5 * (ny - 1) * self.dy
        return Grid2D(cx - hx, cx + hx, cy - hy, cy + hy, nx, ny)

    def as_dict(self):
        return {"x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min,
                "y_max": self.y_max, "nx": self.nx, "ny": self.ny}


def integrate(values, grid):
    """Composite Simpson integral of sampled values with the ``dx dy/(2 pi)`` measure."""
    return float(simpson(simpson(values, x=grid.ys, axis=1), x=grid.xs)) * MEASURE


@dataclass(frozen=True, eq=False)
class QField2D:
    """A sampled distribution on a :class:`Grid2D`.

    ``values[i, j]`` is the density at ``(grid.xs[i], grid.ys[j])`` with
    respect to ``dx dy/(2 pi)``. ``pre_clamp_min`` keeps the smallest raw
    sample before negative round-off was clamped away.
    """

    grid: Grid2D
    values: np.ndarray
    measure_factor: float = MEASURE
    pre_clamp_min: float = field(init=False)
    mass: float = field(init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.nx, self.grid.ny):
            raise InvalidInputError(
                f"values shape {v.shape} does not match grid {(self.grid.nx, self.grid.ny)}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("field contains non-finite values")
        object.__setattr__(self, "pre_clamp_min", float(v.min()))
        if v.min() < -1e-12:
            raise InvalidInputError(f"field value {v.min():.3e} below -1e-12")
        v = np.clip(v, 0.0, None)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mass", integrate(v, self.grid))


@dataclass(frozen=True, eq=False)
class InnerQuadrature:
    """1D rule ``int f(x) dx ~ sum_i weights[i] f(nodes[i])``.

    Applied on both inner axes, centred per output node on the middle of
    the two-mode Gaussian envelope. With ``scale == 1`` the Gauss-Hermite
    variant integrates ``exp(-x**2) * polynomial`` of degree
    ``2 * node_count - 1`` exactly, which is the form every truncated-Fock
    integrand takes after completing the square.
    """

    scheme: str
    node_count: int
    nodes: np.ndarray
    weights: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        if self.node_count < 1 or len(self.nodes) != self.node_count:
            raise InvalidInputError("node_count must match the node vector")
        if np.any(np.asarray(self.weights) <= 0):
            raise InvalidInputError("quadrature weights must be positive")

    @classmethod
    def gauss_hermite(cls, node_count, scale=1.0):
        """Gauss-Hermite nodes ``scale * u_i`` with weights ``scale * w_i * exp(u_i**2)``."""
        node_count = int(node_count)
        if node_count < 1:
            raise InvalidInputError("node_count must be positive")
        if not scale > 0:
            raise InvalidInputError("scale must be positive")
        u, w = hermgauss(node_count)
        return cls("gauss-hermite", node_count, scale * u,
                   scale * np.exp(np.log(w) + u * u), float(scale))

    @classmethod
    def uniform(cls, node_count, half_width=None):
        """Trapezoid rule on ``[-half_width, half_width]``.

        Not exact for polynomials; relies on the integrand being negligible
        at the window edge and smooth on the node spacing.
        """
        node_count = int(node_count)
        if node_count < 2:
            raise InvalidInputError("uniform scheme needs at least 2 nodes")
        if half_width is None:
            half_width = math.sqrt(2.0 * node_count) + 4.0
        x = np.linspace(-half_width, half_width, node_count)
        w = np.full(node_count, x[1] - x[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return cls("uniform", node_count, x, w, float(half_width))

    @classmethod
    def make(cls, scheme, node_count):
        if scheme == "gauss-hermite":
            return cls.gauss_hermite(node_count)
        if scheme == "uniform":
            return cls.uniform(node_count)
        raise ConfigurationError(f"unknown inner quadrature scheme {scheme!r}")

    def as_dict(self):
        return {"scheme": self.scheme, "node_count": self.node_count, "scale": self.scale}


def _support(rho, tol):
    lam, vec = np.linalg.eigh(rho)
    keep = lam > tol * max(1.0, lam[-1])
    if not np.any(keep):
        keep[-1] = True
    return vec[:, keep]


def _poly_coefficients(basis, theta):
    """Coefficients of ``conj(alpha)**n`` for ``<alpha|e>`` up to the Gaussian factor."""
    d = basis.shape[0]
    n = np.arange(d)
    coef = basis.T * np.exp(-0.5 * gammaln(n + 1))[None, :]
    if theta:
        coef = coef * np.exp(-1j * theta * n)[None, :]
    scale = np.max(np.abs(basis))
    coef[np.abs(basis.T) < COEF_TRIM * scale] = 0.0
    deg = np.array([np.flatnonzero(row)[-1] if np.any(row) else 0 for row in coef], dtype=np.intp)
    return np.ascontiguousarray(coef), deg


def _horner(coef, deg, z):
    acc = np.full(np.shape(z), coef[deg], dtype=complex)
    for n in range(deg - 1, -1, -1):
        acc = acc * z + coef[n]
    return acc


class FockQ:
    """Husimi evaluator for a truncated-Fock two-mode state.

    The density matrix is compressed onto the supports of its two reduced
    states, ``rho = (E x F) C (E x F)^dag``, and ``C`` is diagonalised, so
    that ``Q = sum_t p_t |sum_kl c_t[k, l] <alpha1|e_k> <alpha2|f_l>|^2``.
    For N00N and cat states both supports are two-dimensional.

    Instances are callable as ``q4(r1, s1, r2, s2)`` and are recognised by
    :func:`marginalize_pm`, which then dispatches to the compiled kernel.
    """

    def __init__(self, state, angles=None, support_tol=SUPPORT_TOL):
        if angles is None:
            angles = Angles()
        elif not isinstance(angles, Angles):
            angles = Angles(*angles)
        self.state = state
        self.angles = angles
        d = state.dim
        t = state.tensor
        e = _support(np.einsum("ajbj->ab", t), support_tol)
        f = _support(np.einsum("jajb->ab", t), support_tol)
        core = np.einsum("ma,nb,mnpq,pc,qd->abcd", e.conj(), f.conj(), t, e, f, optimize=True)
        r1, r2 = e.shape[1], f.shape[1]
        lam, vec = np.linalg.eigh(core.reshape(r1 * r2, r1 * r2))
        keep = lam > support_tol * lam[-1]
        self.pops = np.ascontiguousarray(lam[keep])
        self.core = np.ascontiguousarray(vec[:, keep].T.reshape(-1, r1, r2))
        self.coef1, self.deg1 = _poly_coefficients(e, angles.theta1)
        self.coef2, self.deg2 = _poly_coefficients(f, angles.theta2)

        pop = np.real(np.diag(state.rho)).reshape(d, d)
        tot = np.add.outer(np.arange(d), np.arange(d))
        self.max_excitation = int(tot[pop > EXCITATION_TOL].max(initial=0))
        self.mean_excitation = state.mean_number()

    @property
    def required_nodes(self):
        """Gauss-Hermite nodes per axis needed for an exact inner integral.

        ``|amplitude|^2`` is a polynomial of degree ``2 * max_excitation`` in
        each inner variable, so ``max_excitation + 1`` nodes suffice; the
        truncation ``dim`` caps the requirement for states whose excitation
        spectrum fills the whole truncated space.
        """
        return min(self.max_excitation + 1, self.state.dim)

    @property
    def parity_coef2(self):
        n = np.arange(self.coef2.shape[1])
        return np.ascontiguousarray(self.coef2 * ((-1.0) ** n)[None, :])

    def _amplitudes(self, coef, deg, r, s):
        z = (r - 1j * s) / math.sqrt(2.0)
        g = np.exp(-(r * r + s * s) / 4.0)
        return [_horner(coef[k], deg[k], z) * g for k in range(len(deg))]

    def __call__(self, r1, s1, r2, s2):
        r1, s1, r2, s2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r1, s1, r2, s2)))
        _finite(r1, s1, r2, s2)
        p1 = self._amplitudes(self.coef1, self.deg1, r1, s1)
        p2 = self._amplitudes(self.coef2, self.deg2, r2, s2)
        q = np.zeros(r1.shape)
        for t in range(len(self.pops)):
            amp = np.zeros(r1.shape, dtype=complex)
            for k, pk in enumerate(p1):
                for l, pl in enumerate(p2):
                    amp += self.core[t, k, l] * pk * pl
            q += self.pops[t] * np.abs(amp) ** 2
        return q


def q_global(state, r1, s1, r2, s2, angles=None):
    """Global Husimi distribution ``<alpha1, alpha2| rho |alpha1, alpha2>``.

    Accepts scalars or broadcastable arrays; returns a float for scalar input.
    """
    val = FockQ(state, angles)(r1, s1, r2, s2)
    return float(val) if np.ndim(val) == 0 else val


def q_single(state, r, s):
    """Single-mode Husimi distribution ``<alpha| rho |alpha>``."""
    r, s = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(s, dtype=float))
    _finite(r, s)
    d = state.dim
    n = np.arange(d)
    lam, vec = np.linalg.eigh(state.rho)
    keep = lam > SUPPORT_TOL * lam[-1]
    coef = vec[:, keep].T * np.exp(-0.5 * gammaln(n + 1))[None, :]
    z = (r - 1j * s) / math.sqrt(2.0)
    g = np.exp(-(r * r + s * s) / 4.0)
    q = np.zeros(r.shape)
    for p, c in zip(lam[keep], coef):
        q += p * np.abs(_horner(c, d - 1, z) * g) ** 2
    return float(q) if q.ndim == 0 else q


def q_noon_closed(N, r1, s1, r2, s2):
    """Closed-form Husimi distribution of the N00N state at zero rotation angles."""
    if int(N) != N or N < 0:
        raise InvalidInputError(f"N must be a non-negative integer, got {N!r}")
    N = int(N)
    if N > 40:
        raise InvalidInputError("closed form is only stabilised up to N = 40")
    r1, s1, r2, s2 = (np.asarray(v, dtype=float) for v in (r1, s1, r2, s2))
    _finite(r1, s1, r2, s2)
    log_pref = (-0.5 * (r1**2 + s1**2 + r2**2 + s2**2)
                - (N + 1) * math.log(2.0) - gammaln(N + 1) - math.log(2.0 if N == 0 else 1.0))
    poly = np.abs((r1 - 1j * s1) ** N + (r2 - 1j * s2) ** N) ** 2
    val = np.exp(log_pref) * poly
    return float(val) if np.ndim(val) == 0 else val


def cat_normalization(alpha, z):
    """``1 / (2 (1 + (1 - z) exp(-4 |alpha|^2)))`` for the dephased even cat."""
    return 0.5 / (1.0 + (1.0 - z) * math.exp(-4.0 * abs(alpha) ** 2))


def q_cat_closed(alpha, z, r1, s1, r2, s2):
    """Closed-form Husimi distribution of the dephased two-mode cat state."""
    alpha = complex(alpha)
    z = float(z)
    if not 0.0 <= z <= 1.0:
        raise InvalidInputError(f"z must lie in [0, 1], got {z!r}")
    r1, s1, r2, s2 = (np.asarray(v, dtype=float) for v in (r1, s1, r2, s2))
    _finite(r1, s1, r2, s2)
    r = math.sqrt(2.0) * alpha.real
    s = math.sqrt(2.0) * alpha.imag
    plus = np.exp(-0.5 * ((r - r1) ** 2 + (s - s1) ** 2 + (r - r2) ** 2 + (s - s2) ** 2))
    minus = np.exp(-0.5 * ((r + r1) ** 2 + (s + s1) ** 2 + (r + r2) ** 2 + (s + s2) ** 2))
    cross = (2.0 * (1.0 - z) * np.exp(-r * r - s * s - 0.5 * (r1**2 + s1**2 + r2**2 + s2**2))
             * np.cos(r * (s1 + s2) - s * (r1 + r2)))
    val = cat_normalization(alpha, z) * (plus + minus + cross)
    val = np.maximum(val, 0.0)
    return float(val) if np.ndim(val) == 0 else val


def default_twisted_grid(mean_excitation, n=DEFAULT_GRID_N, extent=None):
    """Output grid for ``Q+-``: extent ``12 + 2 sqrt(E)``."""
    if extent is None:
        extent = 12.0 + 2.0 * math.sqrt(max(mean_excitation, 0.0))
    return Grid2D.symmetric(extent, n)


def default_single_grid(mean_number, n=DEFAULT_GRID_N, extent=None):
    """Grid for a single-mode Q: extent ``8 + 2 sqrt(2 <n>)``."""
    if extent is None:
        extent = 8.0 + 2.0 * math.sqrt(2.0 * max(mean_number, 0.0))
    return Grid2D.symmetric(extent, n)


def default_inner(state, scheme="gauss-hermite", node_count=None):
    if node_count is None:
        node_count = state.dim + 2
    return InnerQuadrature.make(scheme, node_count)


def sample_single(state, grid):
    """Sample ``q_single`` on ``grid`` as a :class:`QField2D`."""
    r, s = grid.mesh()
    return QField2D(grid, q_single(state, r, s))


def marginalize_pm(q4, sign, out_grid, inner, backend=None, threads=None):
    """Twisted marginal ``Q+(r+, s-)`` or ``Q-(r-, s+)`` on ``out_grid``.

    ``q4`` is either a :class:`FockQ` (fast path through the compiled
    kernel) or any vectorised callable ``q4(r1, s1, r2, s2)``. Evaluators
    exposing ``required_nodes`` are refused when ``inner`` has fewer nodes.
    """
    sign = parse_sign(sign)
    need = getattr(q4, "required_nodes", None)
    if need is not None and inner.node_count < need:
        raise ConfigurationError(
            f"inner quadrature has {inner.node_count} nodes, state needs at least {need}"
        )
    a = out_grid.xs
    b = out_grid.ys
    if isinstance(q4, FockQ):
        coef2 = q4.coef2 if sign > 0 else q4.parity_coef2
        values = _backend.twisted_marginal(
            a, b, inner.nodes, inner.weights, q4.coef1, q4.deg1, coef2, q4.deg2,
            q4.core, q4.pops, backend=backend, threads=threads,
        )
    else:
        values = _generic_marginal(q4, sign, a, b, inner)
    return QField2D(out_grid, values)


def _generic_marginal(q4, sign, a, b, inner):
    x = inner.nodes
    wx = inner.weights
    A = a[:, None]
    B = b[None, :]
    out = np.zeros((a.size, b.size))
    for i in range(x.size):
        r = A / 2 + x[i]
        for j in range(x.size):
            s = B / 2 + x[j]
            if sign > 0:
                vals = q4(r, s, A - r, s - B)
            else:
                vals = q4(r, s, r - A, B - s)
            out += wx[i] * wx[j] * vals
    return out * MEASURE
