"""Witness pipeline: build a state, marginalise, take entropies, render verdicts."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import _backend
from .entropy import DEFAULT_MASS_TOL, EntropyResult, entropy_2d
from .errors import NormalizationError, PurityError, WitnessError
from .fock import Angles, TwoModeState, reduce, rotate_local
from .gaussian import (
    CovarianceSpec, GaussianQ, gaussian_sm, gaussian_twisted_grid, local_rotation,
    mgvt, optimize_squeezing, principal_sigmas, rotate_pm, sample_gaussian_single,
    second_order_criterion, twist,
)
from .husimi import (
    DEFAULT_GRID_N, FockQ, Grid2D, InnerQuadrature, default_single_grid,
    default_twisted_grid, marginalize_pm, parse_sign, sample_single,
)
from .states import StateSpec

SCHEMA_VERSION = 1
WEAK_BOUND = 1.0 + math.log(2.0)
PURITY_TOL = 1e-6

WITNESSED = "witnessed"
NOT_WITNESSED = "not-witnessed"
INCONCLUSIVE = "inconclusive"
NOT_APPLICABLE = "not-applicable"
_RANK = {WITNESSED: 3, INCONCLUSIVE: 2, NOT_WITNESSED: 1, NOT_APPLICABLE: 0}

# ring mass above which the outer grid is grown before entropies are trusted
RING_TRIGGER = 1e-14


@dataclass(frozen=True)
class NumericsConfig:
    """Numerical knobs of :func:`run_witness`.

    ``atol`` is the band around a bound inside which a value counts as
    equal to it (round-off of a saturating state); ``extent=None`` picks
    the state-dependent default.
    """

    grid_n: int = DEFAULT_GRID_N
    extent: float | None = None
    inner_scheme: str = "gauss-hermite"
    inner_nodes: int | None = None
    gaussian_nodes: int = 32
    single_grid_n: int = DEFAULT_GRID_N
    mass_tol: float = DEFAULT_MASS_TOL
    atol: float = 1e-12
    max_growth: int = 2
    growth_factor: float = 1.5
    threads: int | None = None
    backend: str | None = None

    def refined(self):
        """Same configuration with half the grid spacing on every grid."""
        return replace(self, grid_n=2 * self.grid_n - 1, single_grid_n=2 * self.single_grid_n - 1)


@dataclass(frozen=True)
class Verdict:
    verdict: str
    value: float
    bound: float
    margin: float

    @property
    def gap(self):
        return self.value - self.bound


def _decide(value, bound, margin, atol):
    """``witnessed`` below ``bound - margin - atol``; within ``atol`` counts as equality."""
    d = bound - value
    if d > margin + atol:
        v = WITNESSED
    elif d <= atol:
        v = NOT_WITNESSED
    else:
        v = INCONCLUSIVE
    return Verdict(v, float(value), float(bound), float(margin))


def evaluate_weak(s_m: EntropyResult, atol=1e-12) -> Verdict:
    """Weak criterion ``S_M >= 1 + ln 2``."""
    return _decide(s_m.value, WEAK_BOUND, s_m.tail_bound, atol)


def strong_bound(s_w1: EntropyResult, s_w2: EntropyResult):
    """``ln(e^S1 + e^S2)`` and its propagated tail bound."""
    m = max(s_w1.value, s_w2.value)
    e1 = math.exp(s_w1.value - m)
    e2 = math.exp(s_w2.value - m)
    bound = m + math.log(e1 + e2)
    tail = (e1 * s_w1.tail_bound + e2 * s_w2.tail_bound) / (e1 + e2)
    return bound, tail


def evaluate_strong(s_m: EntropyResult, s_w1: EntropyResult, s_w2: EntropyResult,
                    purity=None, atol=1e-12) -> Verdict:
    """Strong criterion ``S_M >= ln(e^S_W1 + e^S_W2)`` for pure states.

    Raises
    ------
    PurityError
        If ``purity`` is given and not above ``1 - 1e-6``.
    """
    if purity is not None and not purity > 1.0 - PURITY_TOL:
        raise PurityError(f"strong criterion needs a pure state, purity is {purity:.9g}")
    bound, tail = strong_bound(s_w1, s_w2)
    return _decide(s_m.value, bound, s_m.tail_bound + tail, atol)


@dataclass
class BranchResult:
    sign: int
    s_m: EntropyResult
    weak: Verdict
    strong: Verdict | None
    growths: int

    @property
    def name(self):
        return "plus" if self.sign > 0 else "minus"

    @property
    def w_value(self):
        return self.s_m.value - WEAK_BOUND


@dataclass
class WitnessReport:
    """Everything computed for one state and configuration.

    ``verdict_weak``/``verdict_strong``/``w_value`` are headline values
    taken from the strongest branch; per-branch details sit in
    ``branches``. ``verdict_strong`` is ``not-applicable`` for mixed states.
    """

    label: str
    family: str
    angles: Angles
    branches: dict
    s_w_1: EntropyResult
    s_w_2: EntropyResult
    strong_bound: float
    strong_tail: float
    purity: float
    verdict_weak: str
    verdict_strong: str
    headline_branch: str
    w_value: float
    numerics: dict
    gaussian: dict | None = None
    spec: dict | None = None
    weak_bound: float = WEAK_BOUND
    schema_version: int = SCHEMA_VERSION

    @property
    def s_m_plus(self):
        b = self.branches.get("plus")
        return b.s_m if b else None

    @property
    def s_m_minus(self):
        b = self.branches.get("minus")
        return b.s_m if b else None

    def entropies(self):
        """All reported entropies keyed by name."""
        out = {"s_w_1": self.s_w_1, "s_w_2": self.s_w_2}
        for name, b in self.branches.items():
            out[f"s_m_{name}"] = b.s_m
        return out

    def to_dict(self):
        branches = {}
        for name, b in self.branches.items():
            branches[name] = {
                "s_m": b.s_m.as_dict(),
                "w_value": b.w_value,
                "verdict_weak": b.weak.verdict,
                "weak_margin": b.weak.margin,
                "verdict_strong": b.strong.verdict if b.strong else NOT_APPLICABLE,
                "strong_margin": b.strong.margin if b.strong else None,
                "grid_growths": b.growths,
            }
        return {
            "schema_version": self.schema_version,
            "label": self.label,
            "family": self.family,
            "spec": self.spec,
            "angles": {"theta1": self.angles.theta1, "theta2": self.angles.theta2},
            "sign": "both" if len(self.branches) == 2 else next(iter(self.branches)),
            "headline_branch": self.headline_branch,
            "verdict_weak": self.verdict_weak,
            "verdict_strong": self.verdict_strong,
            "w_value": self.w_value,
            "s_m_plus": self.s_m_plus.value if self.s_m_plus else None,
            "s_m_minus": self.s_m_minus.value if self.s_m_minus else None,
            "weak_bound": self.weak_bound,
            "strong_bound": self.strong_bound,
            "strong_tail": self.strong_tail,
            "s_w_1": self.s_w_1.value,
            "s_w_2": self.s_w_2.value,
            "purity": self.purity,
            "branches": branches,
            "subsystems": {"s_w_1": self.s_w_1.as_dict(), "s_w_2": self.s_w_2.as_dict()},
            "gaussian": self.gaussian,
            "numerics": self.numerics,
        }


def _staged(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except WitnessError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = stage
        raise


def _twisted_entropy(q4, sign, grid, inner, config):
    """Marginalise and take the entropy, growing the extent while the boundary ring carries mass."""
    growths = 0
    while True:
        try:
            field = _staged("marginal", marginalize_pm, q4, sign, grid, inner,
                            backend=config.backend, threads=config.threads)
            result = _staged("entropy", entropy_2d, field, config.mass_tol)
            if result.ring_term <= RING_TRIGGER or growths >= config.max_growth:
                return result, growths
        except NormalizationError:
            if growths >= config.max_growth:
                raise
        grid = grid.scaled(config.growth_factor)
        growths += 1


def _single_entropy(sampler, grid, config):
    growths = 0
    while True:
        try:
            result = _staged("entropy", entropy_2d, sampler(grid), config.mass_tol)
            if result.ring_term <= RING_TRIGGER or growths >= config.max_growth:
                return result
        except NormalizationError:
            if growths >= config.max_growth:
                raise
        grid = grid.scaled(config.growth_factor)
        growths += 1


def _signs(sign):
    if sign in (None, "both"):
        return (1, -1)
    return (parse_sign(sign),)


def _gaussian_summary(spec: CovarianceSpec):
    out = {}
    for sgn, name in ((1, "plus"), (-1, "minus")):
        tc = twist(spec, sgn)
        sr, ss = principal_sigmas(tc)
        so = second_order_criterion(tc.sigma2_r, tc.sigma2_s, tc.cov, 1.0)
        opt = optimize_squeezing(tc.sigma2_r, tc.sigma2_s, tc.cov)
        out[name] = {
            "sigma2_r": tc.sigma2_r, "sigma2_s": tc.sigma2_s, "cov": tc.cov,
            "det_v": tc.det_v, "gaussian_sm": gaussian_sm(tc),
            "det_v_witnessed": bool(tc.det_v < 4.0),
            "mgvt_product": sr * ss, "mgvt_witnessed": mgvt(sr, ss),
            "second_order_lhs": so.lhs, "second_order_rhs": so.rhs,
            "second_order_witnessed": so.witnessed,
            "optimal_a": opt.a, "optimal_lhs": opt.lhs,
            "optimal_witnessed": opt.witnessed,
        }
    return out


def run_witness(spec, angles=None, config=None, sign="both") -> WitnessReport:
    """Run the full pipeline for ``spec``.

    Parameters
    ----------
    spec : StateSpec, TwoModeState or CovarianceSpec
    angles : Angles or (theta1, theta2), optional
    config : NumericsConfig, optional
    sign : ``"both"``, ``"plus"`` or ``"minus"``

    Errors raised by a stage carry its name in ``exc.stage``
    (``build``, ``marginal``, ``entropy`` or ``criteria``).
    """
    config = config or NumericsConfig()
    if angles is None:
        angles = Angles()
    elif not isinstance(angles, Angles):
        angles = Angles(*angles)
    spec_dict = None
    if isinstance(spec, StateSpec):
        spec_dict = spec.as_dict()
        state = _staged("build", spec.build)
    else:
        state = spec
    signs = _staged("build", _signs, sign)

    gaussian = None
    if isinstance(state, CovarianceSpec):
        if not angles.is_zero:
            state = rotate_pm(state, local_rotation(angles.theta1, angles.theta2))
        q4 = GaussianQ(state)
        grid = gaussian_twisted_grid(state, config.grid_n, config.extent)
        inners = {s: q4.inner_quadrature(s, config.gaussian_nodes) for s in signs}
        singles = []
        for mode in (1, 2):
            cov = state.mode_block(mode) + 0.5 * np.eye(2)
            ext = max(8.0, 8.0 * math.sqrt(np.linalg.eigvalsh(cov)[-1]))
            g1 = Grid2D.symmetric(ext, config.single_grid_n)
            singles.append(_single_entropy(lambda g, c=cov: sample_gaussian_single(c, g), g1, config))
        purity = state.purity()
        gaussian = _gaussian_summary(state)
        label = state.label
        family = "gaussian"
        inner_meta = {s: inners[s].as_dict() for s in signs}
    else:
        q4 = _staged("build", FockQ, state, angles)
        grid = default_twisted_grid(q4.mean_excitation, config.grid_n, config.extent)
        n_inner = config.inner_nodes if config.inner_nodes is not None else state.dim + 2
        inner = _staged("build", InnerQuadrature.make, config.inner_scheme, n_inner)
        inners = {s: inner for s in signs}
        rotated = rotate_local(state, angles)
        singles = []
        for mode in (1, 2):
            red = reduce(rotated, mode)
            g1 = default_single_grid(red.mean_number(), config.single_grid_n)
            singles.append(_single_entropy(lambda g, r=red: sample_single(r, g), g1, config))
        purity = state.purity()
        label = state.label
        family = "fock"
        inner_meta = {s: inner.as_dict() for s in signs}

    s_w1, s_w2 = singles
    pure = purity > 1.0 - PURITY_TOL
    bound, btail = strong_bound(s_w1, s_w2)
    branches = {}
    for s in signs:
        s_m, growths = _twisted_entropy(q4, s, grid, inners[s], config)
        weak = evaluate_weak(s_m, config.atol)
        strong = None
        if pure:
            strong = _staged("criteria", evaluate_strong, s_m, s_w1, s_w2, purity, config.atol)
        b = BranchResult(s, s_m, weak, strong, growths)
        branches[b.name] = b

    head = min(branches.values(), key=lambda b: b.s_m.value)
    verdict_weak = max((b.weak.verdict for b in branches.values()), key=_RANK.get)
    verdict_strong = NOT_APPLICABLE
    if pure:
        verdict_strong = max((b.strong.verdict for b in branches.values()), key=_RANK.get)

    numerics = {
        "config": {k: v for k, v in asdict(config).items()},
        "backend": config.backend or _backend.BACKEND,
        "threads": config.threads or _backend.default_threads(),
        "outer_grid": grid.as_dict(),
        "inner": {("plus" if s > 0 else "minus"): inner_meta[s] for s in signs},
        "pre_clamp_min": min(b.s_m.pre_clamp_min for b in branches.values()),
        "max_tail_bound": max(r.tail_bound for r in
                              [s_w1, s_w2] + [b.s_m for b in branches.values()]),
    }
    return WitnessReport(
        label=label, family=family, angles=angles, branches=branches,
        s_w_1=s_w1, s_w_2=s_w2, strong_bound=bound, strong_tail=btail, purity=purity,
        verdict_weak=verdict_weak, verdict_strong=verdict_strong,
        headline_branch=head.name, w_value=head.w_value, numerics=numerics,
        gaussian=gaussian, spec=spec_dict,
    )
