"""State generators and the declarative state-spec format.

A state spec is a YAML mapping::

    family: noon            # noon | cat | tmsv | coherent-product | fock-matrix | covariance
    params: {N: 3}
    dim: 30                 # optional Fock truncation override
    label: optional text

Family parameters:

* ``noon``: ``N`` (integer >= 0)
* ``cat``: ``alpha`` (complex, written ``1.5``, ``"1+0.5j"`` or ``[re, im]``), ``z`` in [0, 1]
* ``tmsv``: ``lambda`` >= 0 (covariance path, no truncation)
* ``coherent-product``: ``beta1``, ``beta2`` (complex)
* ``fock-matrix``: ``rho`` (``dim**2 x dim**2`` nested list) or ``ket`` (``dim x dim``)
* ``covariance``: ``gamma`` (4x4 row-major Wigner covariance, vacuum ``I/2``)

Complex matrix entries may be numbers, ``"a+bj"`` strings or ``[re, im]`` pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml
from scipy.stats import poisson

from .errors import InvalidInputError, SpecError, TruncationError
from .fock import DEFAULT_LEAK_TOL, TwoModeState, coherent_overlaps
from .gaussian import CovarianceSpec, tmsv_covariance

FAMILIES = ("noon", "cat", "tmsv", "coherent-product", "fock-matrix", "covariance")
POISSON_TAIL = 1e-16


def noon_dim(N):
    return max(24, int(N) + 8)


def coherent_dim(*amplitudes):
    """Truncation for coherent amplitudes.

    The larger of ``ceil(|a|^2 + 6|a| + 8)`` and the smallest ``d`` whose
    Poisson tail ``P(n >= d)`` is below ``1e-16``.
    """
    d = 1
    for a in amplitudes:
        mu = abs(complex(a)) ** 2
        d = max(d, math.ceil(mu + 6.0 * math.sqrt(mu) + 8.0))
        while poisson.sf(d - 1, mu) > POISSON_TAIL:
            d += 1
    return d


def noon_state(N, dim=None) -> TwoModeState:
    """``(|N,0> + |0,N>) / sqrt(2)``; ``N = 0`` gives the two-mode vacuum."""
    if int(N) != N or N < 0:
        raise InvalidInputError(f"N must be a non-negative integer, got {N!r}")
    N = int(N)
    if dim is None:
        dim = noon_dim(N)
    if dim < N + 2:
        raise TruncationError(f"N00N N={N} needs dim >= {N + 2}, got {dim}")
    psi = np.zeros((dim, dim), dtype=complex)
    psi[N, 0] += 1.0
    psi[0, N] += 1.0
    return TwoModeState.from_ket(psi, label=f"noon N={N}")


def cat_state(alpha, z, dim=None, leak_tol=DEFAULT_LEAK_TOL) -> TwoModeState:
    """Dephased even two-mode cat.

    ``rho = n(alpha) [|a,a><a,a| + |-a,-a><-a,-a| + (1-z)(|a,a><-a,-a| + h.c.)]``
    with ``n(alpha) = 1 / (2 (1 + (1 - z) exp(-4|alpha|^2)))``. The limit
    ``alpha -> 0`` is the two-mode vacuum for every ``z``.
    """
    alpha = complex(alpha)
    z = float(z)
    if not 0.0 <= z <= 1.0:
        raise InvalidInputError(f"z must lie in [0, 1], got {z!r}")
    if dim is None:
        dim = coherent_dim(alpha)
    if dim < 2 and alpha != 0:
        raise TruncationError("cat state needs dim >= 2")
    c = coherent_overlaps(alpha, dim)
    m = coherent_overlaps(-alpha, dim)
    plus = np.kron(c, c)
    minus = np.kron(m, m)
    rho = (np.outer(plus, plus.conj()) + np.outer(minus, minus.conj())
           + (1.0 - z) * (np.outer(plus, minus.conj()) + np.outer(minus, plus.conj())))
    rho = rho / np.trace(rho).real
    return TwoModeState(dim, rho, f"cat alpha={alpha:g} z={z:g}", leak_tol)


def coherent_product(beta1, beta2, dim=None, leak_tol=DEFAULT_LEAK_TOL) -> TwoModeState:
    """``|beta1><beta1| (x) |beta2><beta2|`` with truncation-renormalised kets."""
    if dim is None:
        dim = coherent_dim(beta1, beta2)
    psi = np.outer(coherent_overlaps(beta1, dim), coherent_overlaps(beta2, dim))
    state = TwoModeState.from_ket(psi, label=f"coherent {complex(beta1):g} {complex(beta2):g}",
                                  leak_tol=leak_tol)
    return state


# ---------------------------------------------------------------- spec parsing

def _complex(value, key):
    if isinstance(value, bool):
        raise SpecError(f"{key}: expected a complex number, got {value!r}", key)
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_real(value[0], key), _real(value[1], key))
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        return complex(_real(value.get("re", 0.0), key), _real(value.get("im", 0.0), key))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            pass
    raise SpecError(f"{key}: expected a complex number, got {value!r}", key)


def _real(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{key}: expected a real number, got {value!r}", key)
    if not math.isfinite(value):
        raise SpecError(f"{key}: must be finite", key)
    return float(value)


def _matrix(value, key):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise SpecError(f"{key}: expected a nested list (matrix)", key)
    width = len(value[0])
    if any(len(r) != width for r in value):
        raise SpecError(f"{key}: rows have unequal length", key)
    return np.array([[_complex(v, f"{key}[{i}][{j}]") for j, v in enumerate(r)]
                     for i, r in enumerate(value)])


@dataclass(frozen=True)
class StateSpec:
    """Declarative state description; :meth:`build` constructs it."""

    family: str
    params: dict = field(default_factory=dict)
    dim: int | None = None
    label: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"family: unknown family {self.family!r}; expected one of "
                            f"{', '.join(FAMILIES)}", "family")
        if self.dim is not None:
            if isinstance(self.dim, bool) or not isinstance(self.dim, int) or self.dim < 1:
                raise SpecError(f"dim: expected a positive integer, got {self.dim!r}", "dim")
        self._validated()

    def _need(self, name):
        if name not in self.params:
            raise SpecError(f"params.{name}: required for family {self.family!r}", f"params.{name}")
        return self.params[name]

    def _validated(self):
        """Check parameters and return them in canonical form."""
        f = self.family
        allowed = {
            "noon": {"N"}, "cat": {"alpha", "z"}, "tmsv": {"lambda"},
            "coherent-product": {"beta1", "beta2"}, "fock-matrix": {"rho", "ket"},
            "covariance": {"gamma"},
        }[f]
        if not isinstance(self.params, dict):
            raise SpecError("params: expected a mapping", "params")
        for k in self.params:
            if k not in allowed:
                raise SpecError(f"params.{k}: not a parameter of family {f!r}", f"params.{k}")
        if f == "noon":
            N = self._need("N")
            if isinstance(N, bool) or not isinstance(N, int) or N < 0:
                raise SpecError(f"params.N: expected an integer >= 0, got {N!r}", "params.N")
            return {"N": N}
        if f == "cat":
            alpha = _complex(self._need("alpha"), "params.alpha")
            z = _real(self._need("z"), "params.z")
            if not 0.0 <= z <= 1.0:
                raise SpecError(f"params.z: must lie in [0, 1], got {z!r}", "params.z")
            return {"alpha": alpha, "z": z}
        if f == "tmsv":
            lam = _real(self._need("lambda"), "params.lambda")
            if lam < 0:
                raise SpecError(f"params.lambda: must be >= 0, got {lam!r}", "params.lambda")
            return {"lambda": lam}
        if f == "coherent-product":
            return {"beta1": _complex(self._need("beta1"), "params.beta1"),
                    "beta2": _complex(self._need("beta2"), "params.beta2")}
        if f == "fock-matrix":
            if ("rho" in self.params) == ("ket" in self.params):
                raise SpecError("params.rho: give exactly one of rho or ket", "params.rho")
            key = "rho" if "rho" in self.params else "ket"
            return {key: _matrix(self.params[key], f"params.{key}")}
        gamma = _matrix(self._need("gamma"), "params.gamma")
        if gamma.shape != (4, 4) or np.any(gamma.imag != 0):
            raise SpecError("params.gamma: expected a real 4x4 matrix", "params.gamma")
        return {"gamma": gamma.real}

    @property
    def is_gaussian(self):
        return self.family in ("tmsv", "covariance")

    def build(self):
        """Return a :class:`TwoModeState` or, for Gaussian families, a :class:`CovarianceSpec`."""
        p = self._validated()
        f = self.family
        if f == "noon":
            state = noon_state(p["N"], self.dim)
        elif f == "cat":
            state = cat_state(p["alpha"], p["z"], self.dim)
        elif f == "coherent-product":
            state = coherent_product(p["beta1"], p["beta2"], self.dim)
        elif f == "fock-matrix":
            if "ket" in p:
                state = TwoModeState.from_ket(p["ket"])
            else:
                rho = p["rho"]
                dim = math.isqrt(rho.shape[0])
                if rho.shape != (dim * dim, dim * dim):
                    raise SpecError("params.rho: shape must be (dim**2, dim**2)", "params.rho")
                state = TwoModeState(dim, rho)
        elif f == "tmsv":
            state = tmsv_covariance(p["lambda"])
        else:
            state = CovarianceSpec(p["gamma"])
        if self.label:
            object.__setattr__(state, "label", self.label)
        return state

    def as_dict(self):
        d = {"family": self.family, "params": _plain(self.params)}
        if self.dim is not None:
            d["dim"] = self.dim
        if self.label:
            d["label"] = self.label
        return d


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def parse_state_spec(text) -> StateSpec:
    """Parse YAML text into a :class:`StateSpec`; errors name the offending key."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"<file>: not valid YAML ({exc})", "<file>") from None
    return spec_from_mapping(data)


def spec_from_mapping(data) -> StateSpec:
    if not isinstance(data, dict):
        raise SpecError("<file>: top level must be a mapping", "<file>")
    for k in data:
        if k not in ("family", "params", "dim", "label"):
            raise SpecError(f"{k}: unknown top-level key", str(k))
    if "family" not in data:
        raise SpecError("family: missing", "family")
    label = data.get("label", "")
    if not isinstance(label, str):
        raise SpecError("label: expected text", "label")
    params = data.get("params") or {}
    return StateSpec(str(data["family"]), params, data.get("dim"), label)


def load_state_spec(path) -> StateSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"<file>: cannot read {path}: {exc.strerror}", "<file>") from None
    return parse_state_spec(text)
