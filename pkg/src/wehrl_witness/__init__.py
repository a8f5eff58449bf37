"""Wehrl-entropic entanglement witnesses for two-mode bosonic states."""

from ._backend import BACKEND
from .criteria import (
    NumericsConfig, Verdict, WitnessReport, evaluate_strong, evaluate_weak, run_witness,
)
from .entropy import EntropyResult, entropy_2d, wehrl_single
from .errors import (
    ConfigurationError, InvalidInputError, NormalizationError, PurityError, SpecError,
    TruncationError, WitnessError,
)
from .fock import (
    Angles, SingleModeState, TwoModeState, coherent_overlaps, product_state, reduce,
    rotate_local,
)
from .gaussian import (
    CovarianceSpec, TwistedCov, gaussian_sm, mgvt, optimize_squeezing, rotate_pm,
    second_order_criterion, tmsv_covariance, twist,
)
from .husimi import (
    Grid2D, InnerQuadrature, QField2D, marginalize_pm, q_cat_closed, q_global,
    q_noon_closed, q_single,
)
from .states import StateSpec, cat_state, coherent_product, noon_state, parse_state_spec

__version__ = "0.1.0"
