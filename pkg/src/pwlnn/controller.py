"""Backstepping compensator for a servo driven through a piecewise-linear actuator.

Outer loop: PI tracking law plus plant-function feedforward produces a desired
actuator torque ``T_des``. Inner loop: the actuator input is integrated from a
pseudo-control that drives ``T~ = T_des - T`` to zero, with a tuned network
cancelling the actuator inversion error and a robustifying term dominating
the weight and approximation errors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import neuralnet as nn
from .neuralnet import NnWeights, TuningGains
from .plant import PlantParams, f_estimate
from .pwl import PwlParams, local_slope

FILTER_MODES = ("derivative", "washout")


@dataclass(frozen=True)
class Gains:
    K_p: float = 0.3
    K_I: float = 1.1
    K_b: float = 0.4
    K_Z1: float = 5.2
    K_Z2: float = 3.5
    K_Z3: float = 5.8
    eps_sign: float = 0.1
    filter_pole: float = 100.0
    filter_gain: float = 1.0
    filter_mode: str = "derivative"

    def __post_init__(self):
        for name in ("K_p", "K_I", "K_b", "eps_sign", "filter_pole"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"gains.{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("K_Z1", "K_Z2", "K_Z3"):
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"gains.{name} must be >= 0, got {getattr(self, name)!r}")
        if self.filter_mode not in FILTER_MODES:
            raise ValueError(f"gains.filter_mode must be one of {FILTER_MODES}, got {self.filter_mode!r}")

    @property
    def filter_numerator(self) -> float:
        """Effective numerator of the ``num*s/(s+a)`` filter."""
        if self.filter_mode == "derivative":
            return self.filter_gain * self.filter_pole
        return self.filter_gain


@dataclass(frozen=True)
class BoundsConfig:
    Z_M: float = 0.0
    f_M: float = 0.0
    Theta_d: float = 1.0
    c0: float = 1.0
    c1: float = 1.0
    eps_N: float = 0.0

    def __post_init__(self):
        for name in ("Z_M", "f_M", "Theta_d", "c0", "c1", "eps_N"):
            value = getattr(self, name)
            if not (value >= 0.0 and math.isfinite(value)):
                raise ValueError(f"bounds.{name} must be finite and >= 0, got {value!r}")


def check_gain_conditions(g: Gains, bounds: BoundsConfig, L: int) -> list[str]:
    """Return the violated robustifier gain conditions (empty when all hold)."""
    root_l = math.sqrt(L)
    problems = []
    if not g.K_Z1 > root_l:
        problems.append(f"K_Z1 = {g.K_Z1} is not > sqrt(L) = {root_l:.4g}")
    if not g.K_Z2 > 1.0:
        problems.append(f"K_Z2 = {g.K_Z2} is not > 1")
    if not g.K_Z3 > bounds.c1 * root_l:
        problems.append(f"K_Z3 = {g.K_Z3} is not > c1*sqrt(L) = {bounds.c1 * root_l:.4g}")
    return problems


def warn_gain_conditions(g: Gains, bounds: BoundsConfig, L: int) -> None:
    for msg in check_gain_conditions(g, bounds, L):
        warnings.warn(f"stability gain condition violated: {msg}", stacklevel=2)


@dataclass
class ControllerState:
    e_int: float = 0.0
    u: float = 0.0
    x_f: float = 0.0
    weights: NnWeights | None = None
    last_T_des: float = 0.0


@dataclass
class ControllerOutput:
    """Time derivatives of the controller states plus the signals behind them."""

    de_int: float
    du: float
    dx_f: float
    dV: np.ndarray
    dW: np.ndarray
    e: float
    T_des: float
    T_des_dot: float
    T_tilde: float
    v1: float
    v2: float
    phi: float
    nn_output: float
    Z_norm: float

    def signals(self) -> dict[str, float]:
        return {
            "e": self.e,
            "T_des": self.T_des,
            "T_des_dot": self.T_des_dot,
            "T_tilde": self.T_tilde,
            "v1": self.v1,
            "v2": self.v2,
            "phi": self.phi,
            "nn_output": self.nn_output,
            "Z_norm": self.Z_norm,
        }


def smooth_sign(x: float, eps_sign: float) -> float:
    """Boundary-layer sign, ``x / (|x| + eps)``; odd and strictly inside (-1, 1)."""
    return x / (abs(x) + eps_sign)


def robustifier_v1(f_M: float, tau_M: float, e: float, eps_sign: float) -> float:
    return -(f_M + tau_M) * smooth_sign(e, eps_sign)


def t_des(g: Gains, e: float, e_int: float, f_hat: float, v1: float) -> float:
    """Desired actuator torque from the PI law, feedforward and robustifier."""
    return g.K_p * e + g.K_I * e_int + f_hat - v1


def washout_step(x_f: float, T_des: float, pole: float, gain: float) -> tuple[float, float]:
    """One evaluation of ``gain*s/(s+pole)`` in state-space form.

    Returns ``(dx_f/dt, y)`` for state ``dx_f/dt = -pole*x_f + T_des`` and
    output ``y = gain*(T_des - pole*x_f)``. With ``gain = pole`` the output
    approximates dT_des/dt below the pole frequency.
    """
    return -pole * x_f + T_des, gain * (T_des - pole * x_f)


def build_nn_input(e: float, thetadot_d: float, T_tilde: float, T: float, Z_norm: float) -> np.ndarray:
    """Network input in the fixed order [e, thetadot_d, T~, T, ||Z||_F]."""
    return np.array([e, thetadot_d, T_tilde, T, Z_norm])


def robustifier_v2(
    g: Gains, Z_norm_hat: float, Z_M: float, e: float, T_tilde: float, eps_sign: float
) -> float:
    z = Z_norm_hat + Z_M
    sgn = smooth_sign(T_tilde, eps_sign)
    abs_e = abs(e)
    return (
        -g.K_Z1 * z * (T_tilde + abs_e * sgn)
        - g.K_Z2 * abs_e * sgn
        - g.K_Z3 * z * z * sgn
    )


def pseudo_control(g: Gains, T_tilde: float, T_des_dot: float, nn_output: float, v2: float) -> float:
    """Commanded actuator rate; with the unity nominal inverse this is du/dt."""
    return g.K_b * T_tilde + T_des_dot - nn_output - v2


def controller_derivatives(
    state: ControllerState,
    g: Gains,
    bounds: BoundsConfig,
    tuning: TuningGains,
    plant: PlantParams,
    thetadot_d: float,
    thetaddot_d: float,
    omega: float,
    T: float,
    *,
    tau_M: float | None = None,
    nn_enabled: bool = True,
    robustifiers_enabled: bool = True,
    oracle_pwl: PwlParams | None = None,
) -> ControllerOutput:
    """Right-hand side of the compensator given the measured ``omega`` and ``T``.

    ``oracle_pwl`` replaces the unity nominal inverse by the exact actuator
    slope (du/dt = phi / slope); it is a reference configuration only.
    """
    tau = plant.tau_M if tau_M is None else tau_M
    e = thetadot_d - omega
    f_hat = f_estimate(plant, thetadot_d, thetaddot_d)
    v1 = robustifier_v1(bounds.f_M, tau, e, g.eps_sign) if robustifiers_enabled else 0.0
    T_des = t_des(g, e, state.e_int, f_hat, v1)
    T_tilde = T_des - T
    dx_f, T_des_dot = washout_step(state.x_f, T_des, g.filter_pole, g.filter_numerator)

    # a disabled network contributes no output and no weight estimate (||Z|| = 0)
    w = state.weights
    Z_norm = 0.0
    nn_output = 0.0
    dV = dW = None
    if w is not None:
        dV = np.zeros_like(w.V)
        dW = np.zeros_like(w.W)
        if nn_enabled:
            Z_norm = nn.frobenius_norm(w)
            x_nn = build_nn_input(e, thetadot_d, T_tilde, T, Z_norm)
            sigma = nn.hidden_activation(w, x_nn)
            nn_output = float(w.W[:, 0] @ nn.augment(sigma))
            dV, dW = nn.weight_derivatives(w, tuning, x_nn, T_tilde, sigma)

    v2 = robustifier_v2(g, Z_norm, bounds.Z_M, e, T_tilde, g.eps_sign) if robustifiers_enabled else 0.0
    phi = pseudo_control(g, T_tilde, T_des_dot, nn_output, v2)
    du = phi if oracle_pwl is None else phi / local_slope(oracle_pwl, state.u)

    return ControllerOutput(
        de_int=e, du=du, dx_f=dx_f, dV=dV, dW=dW,
        e=e, T_des=T_des, T_des_dot=T_des_dot, T_tilde=T_tilde,
        v1=v1, v2=v2, phi=phi, nn_output=nn_output, Z_norm=Z_norm,
    )


def theoretical_bounds(
    g: Gains, bounds: BoundsConfig, tuning: TuningGains, L: int
) -> tuple[float, float]:
    """Ultimate bounds on |T~| and on the weight error norm.

    C0 = eps_N + 2 Z_M sqrt(L),  C1 = sqrt(L) (c0 + Theta_d),  h = (Z_M k + C1) / (2k)

    |T~|  <= (k h^2 + C0) / K_b
    ||Z~|| <= h + sqrt(h^2 + C0 / k)
    """
    k = tuning.k
    if not k > 0.0:
        raise ValueError("tuning.k must be > 0")
    if not g.K_b > 0.0:
        raise ValueError("gains.K_b must be > 0")
    root_l = math.sqrt(L)
    C0 = bounds.eps_N + 2.0 * bounds.Z_M * root_l
    C1 = root_l * (bounds.c0 + bounds.Theta_d)
    h = (bounds.Z_M * k + C1) / (2.0 * k)
    T_tilde_bound = (k * h * h + C0) / g.K_b
    Z_tilde_bound = h + math.sqrt(h * h + C0 / k)
    return T_tilde_bound, Z_tilde_bound
