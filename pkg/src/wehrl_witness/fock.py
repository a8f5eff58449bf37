"""Two-mode states in a truncated Fock basis.

Basis pairs ``(n1, n2)`` are flattened row-major, ``index = n1 * dim + n2``.
Every module in the package relies on this pairing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import InvalidInputError, TruncationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
DEFAULT_LEAK_TOL = 1e-8

TWO_PI = 2.0 * math.pi


def _check_density_matrix(rho, what):
    dev = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if dev > HERMITIAN_TOL:
        raise InvalidInputError(f"{what}: not Hermitian (max deviation {dev:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidInputError(f"{what}: trace {tr!r} differs from 1")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam_min < -PSD_TOL:
        raise InvalidInputError(f"{what}: negative eigenvalue {lam_min:.3e}")


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Angles:
    """Local phase-space rotation angles, reduced to ``[0, 2*pi)``."""

    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        for name in ("theta1", "theta2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidInputError(f"{name} must be finite, got {v!r}")
            v = math.fmod(v, TWO_PI)
            if v < 0.0:
                v += TWO_PI
            if v >= TWO_PI:
                v = 0.0
            object.__setattr__(self, name, v)

    @property
    def is_zero(self):
        return self.theta1 == 0.0 and self.theta2 == 0.0


@dataclass(frozen=True, eq=False)
class SingleModeState:
    """Density matrix of one bosonic mode on ``|0>..|dim-1>``."""

    rho: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        rho = _frozen(self.rho)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
            raise InvalidInputError(f"single-mode rho must be square, got shape {rho.shape}")
        _check_density_matrix(rho, "single-mode state")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "dim", rho.shape[0])

    @classmethod
    def from_ket(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def purity(self):
        return float(np.real(np.vdot(self.rho, self.rho)))

    def rotate(self, theta):
        """Phase rotation ``exp(-i theta n) rho exp(i theta n)``."""
        ph = np.exp(1j * theta * np.arange(self.dim))
        return SingleModeState(ph.conj()[:, None] * self.rho * ph[None, :])

    def mean_number(self):
        return float(np.real(np.sum(np.diag(self.rho) * np.arange(self.dim))))


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Two-mode density matrix of shape ``(dim**2, dim**2)``.

    Construction validates Hermiticity, unit trace, positivity and that the
    top Fock level of each mode holds at most ``leak_tol`` population.
    """

    dim: int
    rho: np.ndarray
    label: str = ""
    leak_tol: float = DEFAULT_LEAK_TOL

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise InvalidInputError(f"dim must be positive, got {self.dim!r}")
        rho = _frozen(self.rho)
        if rho.shape != (dim * dim, dim * dim):
            raise InvalidInputError(
                f"rho has shape {rho.shape}, expected {(dim * dim, dim * dim)}"
            )
        _check_density_matrix(rho, self.label or "two-mode state")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "rho", rho)
        if dim > 1:
            t = rho.reshape(dim, dim, dim, dim)
            top1 = np.einsum("ajaj->a", t)[-1].real
            top2 = np.einsum("jaja->a", t)[-1].real
            leak = max(top1, top2)
            if leak > self.leak_tol:
                raise TruncationError(
                    f"{self.label or 'state'}: top Fock level population {leak:.3e} "
                    f"exceeds leak tolerance {self.leak_tol:.1e} at dim={dim}"
                )

    @classmethod
    def from_ket(cls, psi, label="", leak_tol=DEFAULT_LEAK_TOL):
        """Build from amplitudes ``psi[n1, n2]`` (matrix or flattened)."""
        psi = np.asarray(psi, dtype=complex)
        if psi.ndim == 2:
            dim = psi.shape[0]
            psi = psi.reshape(-1)
        else:
            dim = math.isqrt(psi.size)
            if dim * dim != psi.size:
                raise InvalidInputError("flattened ket length must be a square")
        psi = psi / np.linalg.norm(psi)
        return cls(dim, np.outer(psi, psi.conj()), label, leak_tol)

    @property
    def tensor(self):
        """View of rho indexed ``[m1, m2, n1, n2]``."""
        d = self.dim
        return self.rho.reshape(d, d, d, d)

    def purity(self):
        return float(np.real(np.vdot(self.rho, self.rho)))

    def mean_number(self):
        """Mean total excitation ``<n1 + n2>``."""
        d = self.dim
        n = np.add.outer(np.arange(d), np.arange(d)).reshape(-1)
        return float(np.real(np.sum(np.diag(self.rho) * n)))


def coherent_overlaps(alpha, dim):
    """Fock amplitudes ``<n|alpha>`` for ``n = 0 .. dim-1``.

    Evaluated as ``exp(n log|alpha| - log(n!)/2 - |alpha|^2/2)`` times the
    phase, which stays finite for amplitudes far beyond where ``alpha**n``
    overflows.
    """
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise InvalidInputError(f"alpha must be finite, got {alpha!r}")
    dim = int(dim)
    if dim < 1:
        raise InvalidInputError(f"dim must be positive, got {dim}")
    n = np.arange(dim)
    mod = abs(alpha)
    out = np.zeros(dim, dtype=complex)
    if mod == 0.0:
        out[0] = 1.0
        return out
    logmag = n * math.log(mod) - 0.5 * gammaln(n + 1) - 0.5 * mod * mod
    return np.exp(logmag) * np.exp(1j * n * math.atan2(alpha.imag, alpha.real))


def rotate_local(state, angles):
    """Apply the local rotations to ``state``.

    The returned state ``rho'`` satisfies ``Q_rho'(a1, a2) =
    Q_rho(exp(i theta1) a1, exp(i theta2) a2)``, i.e. it is
    ``U^dag rho U`` with ``U = exp(i theta1 n1 + i theta2 n2)``.
    """
    if not isinstance(angles, Angles):
        angles = Angles(*angles)
    if angles.is_zero:
        return state
    d = state.dim
    n = np.arange(d)
    phase = np.exp(1j * np.add.outer(angles.theta1 * n, angles.theta2 * n)).reshape(-1)
    rho = phase.conj()[:, None] * state.rho * phase[None, :]
    return TwoModeState(d, rho, state.label, state.leak_tol)


def reduce(state, mode):
    """Partial trace keeping ``mode`` (1 or 2)."""
    t = state.tensor
    if mode == 1:
        r = np.einsum("ajbj->ab", t)
    elif mode == 2:
        r = np.einsum("jajb->ab", t)
    else:
        raise InvalidInputError(f"mode must be 1 or 2, got {mode!r}")
    return SingleModeState(r)


def product_state(rho1, rho2, label="", leak_tol=DEFAULT_LEAK_TOL):
    """``rho1 (x) rho2`` for two single-mode states of equal dimension."""
    if rho1.dim != rho2.dim:
        raise InvalidInputError("product_state needs equal truncations")
    return TwoModeState(rho1.dim, np.kron(rho1.rho, rho2.rho), label, leak_tol)
