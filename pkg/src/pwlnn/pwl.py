"""Multi-segment piecewise-linear actuator map and its inverse.

The map has four linear segments joined continuously at ``u_l < 0 < u_r``::

    T = m_r1*u                          0 < u <= u_r
    T = m_r2*(u - u_r) + m_r1*u_r       u > u_r
    T = m_l1*u                          u_l <= u < 0
    T = m_l2*(u - u_l) + m_l1*u_l       u < u_l

With all slopes positive the map is a bijection of the reals, so the inverse
is the same kind of map with reciprocal slopes and breakpoints ``T_r``/``T_l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PWL_KEYS = ("m_r1", "m_r2", "m_l1", "m_l2", "u_r", "u_l")


@dataclass(frozen=True)
class PwlParams:
    m_r1: float = 1.0
    m_r2: float = 2.0
    m_l1: float = 0.7
    m_l2: float = 0.5
    u_r: float = 0.7
    u_l: float = -0.6

    def __post_init__(self):
        for name in PWL_KEYS:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"pwl.{name} must be finite, got {value!r}")
        for name in ("m_r1", "m_r2", "m_l1", "m_l2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"pwl.{name} must be > 0 (invertibility), got {getattr(self, name)!r}")
        if not self.u_r > 0.0:
            raise ValueError(f"pwl.u_r must be > 0, got {self.u_r!r}")
        if not self.u_l < 0.0:
            raise ValueError(f"pwl.u_l must be < 0, got {self.u_l!r}")

    @property
    def T_r(self) -> float:
        return self.m_r1 * self.u_r

    @property
    def T_l(self) -> float:
        return self.m_l1 * self.u_l

    @classmethod
    def identity(cls, u_r: float = 1.0, u_l: float = -1.0) -> PwlParams:
        return cls(1.0, 1.0, 1.0, 1.0, u_r, u_l)

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in PWL_KEYS}


def evaluate(params: PwlParams, u: float) -> float:
    """Actuator output T = P(u)."""
    if u > params.u_r:
        return params.m_r2 * (u - params.u_r) + params.T_r
    if u > 0.0:
        return params.m_r1 * u
    if u >= params.u_l:
        # u == 0 lands here and maps to 0 as well
        return params.m_l1 * u
    return params.m_l2 * (u - params.u_l) + params.T_l


def invert_exact(params: PwlParams, T: float) -> float:
    """Input u with ``evaluate(params, u) == T``."""
    if T > params.T_r:
        return (T - params.T_r) / params.m_r2 + params.u_r
    if T > 0.0:
        return T / params.m_r1
    if T >= params.T_l:
        return T / params.m_l1
    return (T - params.T_l) / params.m_l2 + params.u_l


def inverse_decomposition(params: PwlParams, T: float) -> tuple[float, float]:
    """Split the exact inverse into a unity feedforward path and a residual.

    Returns ``(direct, residual)`` with ``direct == T``. The residual is the
    part a compensator has to learn on top of the unity path.
    """
    return T, invert_exact(params, T) - T


def local_slope(params: PwlParams, u: float) -> float:
    """dT/du of the active segment; at a breakpoint the right-hand slope wins."""
    if u >= params.u_r:
        return params.m_r2
    if u >= 0.0:
        return params.m_r1
    if u >= params.u_l:
        return params.m_l1
    return params.m_l2


def evaluate_array(params: PwlParams, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.select(
        [u > params.u_r, u > 0.0, u >= params.u_l],
        [params.m_r2 * (u - params.u_r) + params.T_r, params.m_r1 * u, params.m_l1 * u],
        default=params.m_l2 * (u - params.u_l) + params.T_l,
    )
