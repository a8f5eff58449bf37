"""Differential entropies of sampled 2D distributions.

All entropies are in nats and use the ``dx dy/(2 pi)`` measure, so a
single-mode coherent state has Wehrl entropy exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import NormalizationError
from .husimi import MEASURE, Grid2D, QField2D, default_single_grid, sample_single

DEFAULT_MASS_TOL = 1e-3
ZERO_CUTOFF = 1e-300
# relative round-off floor of a Simpson sum over ~1e5 nodes
ROUNDOFF_FLOOR = 1e-13


@dataclass(frozen=True)
class EntropyResult:
    """Entropy estimate with an error bound.

    ``tail_bound`` is ``ring_term + richardson_term + roundoff``, see
    :func:`entropy_2d`.
    """

    value: float
    tail_bound: float
    grid_used: Grid2D
    mass: float = 1.0
    ring_term: float = 0.0
    richardson_term: float = 0.0
    pre_clamp_min: float = 0.0

    def as_dict(self):
        return {
            "value": self.value,
            "tail_bound": self.tail_bound,
            "mass": self.mass,
            "ring_term": self.ring_term,
            "richardson_term": self.richardson_term,
            "pre_clamp_min": self.pre_clamp_min,
            "grid": self.grid_used.as_dict(),
        }


def _neg_q_log_q(values):
    out = np.zeros_like(values)
    pos = values > ZERO_CUTOFF
    v = values[pos]
    out[pos] = -v * np.log(v)
    return out


def _simpson2(values, xs, ys):
    return float(simpson(simpson(values, x=ys, axis=1), x=xs)) * MEASURE


def _richardson(h, grid):
    """``|S(h) - S(2h)| / 15`` on the largest odd-count sub-block.

    Composite Simpson is fourth order, so this estimates the error of the
    fine-grid value; it costs no extra field evaluations.
    """
    kx = grid.nx if grid.nx % 2 else grid.nx - 1
    ky = grid.ny if grid.ny % 2 else grid.ny - 1
    xs = grid.xs[:kx]
    ys = grid.ys[:ky]
    block = h[:kx, :ky]
    fine = _simpson2(block, xs, ys)
    coarse = _simpson2(block[::2, ::2], xs[::2], ys[::2])
    return abs(fine - coarse) / 15.0


def _ring(values, k):
    """Nodes on the ``k``-th ring in from the boundary."""
    v = values[k:values.shape[0] - k, k:values.shape[1] - k]
    return np.concatenate([v[0, :], v[-1, :], v[1:-1, 0], v[1:-1, -1]])


def _ring_term(values, grid):
    """Boundary-ring indicator ``m_b (|ln m_b| + ln A_b)``.

    ``m_b`` is the mass on the outermost ring of nodes, inflated by the
    geometric series ``1 / (1 - q)`` with ``q`` the mass ratio of the two
    outermost rings, so it also stands for the mass beyond the grid.
    ``A_b`` is the area of one ring in ``dmu`` units; its log is floored
    at zero.
    """
    cell = grid.dx * grid.dy * MEASURE
    outer = _ring(values, 0)
    m_b = float(outer.sum()) * cell
    if m_b <= ZERO_CUTOFF:
        return 0.0
    m_2 = float(_ring(values, 1).sum()) * cell
    q = min(m_b / m_2, 0.99) if m_2 > 0 else 0.99
    m_b /= 1.0 - q
    area = outer.size * cell
    return m_b * (abs(math.log(m_b)) + max(math.log(area), 0.0))


def entropy_2d(field: QField2D, mass_tol=DEFAULT_MASS_TOL) -> EntropyResult:
    """Differential entropy ``-int Q ln Q dmu`` of a sampled field.

    Parameters
    ----------
    field : QField2D
        Non-negative samples with the ``1/(2 pi)`` measure.
    mass_tol : float
        Allowed ``|mass - 1|``.

    Returns
    -------
    EntropyResult
        Simpson estimate with ``tail_bound`` summing the boundary-ring
        indicator, a Richardson estimate of the Simpson error and a
        round-off floor.

    Raises
    ------
    NormalizationError
        If the field mass is further than ``mass_tol`` from one.
    """
    grid = field.grid
    if not abs(field.mass - 1.0) <= mass_tol:
        raise NormalizationError(
            f"field mass {field.mass:.6g} differs from 1 by more than {mass_tol:g}"
        )
    h = _neg_q_log_q(field.values)
    value = _simpson2(h, grid.xs, grid.ys)
    ring = _ring_term(field.values, grid)
    rich = _richardson(h, grid)
    tail = ring + rich + ROUNDOFF_FLOOR * max(1.0, abs(value))
    return EntropyResult(value, tail, grid, field.mass, ring, rich, field.pre_clamp_min)


def wehrl_single(state, grid=None, mass_tol=DEFAULT_MASS_TOL) -> EntropyResult:
    """Wehrl entropy of a single-mode state sampled on ``grid``.

    The default grid is centred on the origin with extent
    ``8 + 2 sqrt(2 <n>)``.
    """
    if grid is None:
        grid = default_single_grid(state.mean_number())
    return entropy_2d(sample_single(state, grid), mass_tol=mass_tol)


def gaussian_entropy(cov):
    """``1 + 0.5 ln det cov`` for a 2D Gaussian density on ``dmu``."""
    det = float(np.linalg.det(np.asarray(cov, dtype=float)))
    return 1.0 + 0.5 * math.log(det)
