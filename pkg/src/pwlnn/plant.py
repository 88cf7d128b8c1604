"""Velocity-loop servo plant ``M*dw/dt + B*w + T_f + T_d = T``."""

from __future__ import annotations

import math
from dataclasses import dataclass

FRICTION_KINDS = ("none", "coulomb")
DISTURBANCE_KINDS = ("none", "constant", "sinusoid")

# velocity width (rad/s) of the tanh used to smooth coulomb friction through zero
FRICTION_SMOOTHING = 0.01


@dataclass(frozen=True)
class PlantParams:
    M: float = 0.015
    B: float = 0.951
    friction_level: float = 0.0
    disturbance_kind: str = "none"
    disturbance_amp: float = 0.0
    disturbance_freq: float = 0.0
    tau_M: float = 0.0

    def __post_init__(self):
        if not self.M > 0.0:
            raise ValueError(f"plant.M must be > 0, got {self.M!r}")
        if not self.B >= 0.0:
            raise ValueError(f"plant.B must be >= 0, got {self.B!r}")
        if not self.friction_level >= 0.0:
            raise ValueError(f"plant.friction_level must be >= 0, got {self.friction_level!r}")
        if self.disturbance_kind not in DISTURBANCE_KINDS:
            raise ValueError(
                f"plant.disturbance_kind must be one of {DISTURBANCE_KINDS}, got {self.disturbance_kind!r}"
            )
        if not self.tau_M >= 0.0:
            raise ValueError(f"plant.tau_M must be >= 0, got {self.tau_M!r}")
        if self.disturbance_kind != "none" and abs(self.disturbance_amp) > self.tau_M:
            raise ValueError(
                f"|plant.disturbance_amp| = {abs(self.disturbance_amp)} exceeds plant.tau_M = {self.tau_M}"
            )
        if self.disturbance_kind == "sinusoid" and not self.disturbance_freq > 0.0:
            raise ValueError("plant.disturbance_freq must be > 0 for a sinusoidal disturbance")

    @property
    def friction(self) -> str:
        return "coulomb" if self.friction_level > 0.0 else "none"


@dataclass
class PlantState:
    omega: float = 0.0


def friction_torque(p: PlantParams, omega: float) -> float:
    if p.friction_level == 0.0:
        return 0.0
    return p.friction_level * math.tanh(omega / FRICTION_SMOOTHING)


def disturbance_torque(p: PlantParams, t: float) -> float:
    if p.disturbance_kind == "constant":
        return p.disturbance_amp
    if p.disturbance_kind == "sinusoid":
        return p.disturbance_amp * math.sin(2.0 * math.pi * p.disturbance_freq * t)
    return 0.0


def plant_derivative(p: PlantParams, s: PlantState | float, T: float, t: float) -> float:
    """Angular acceleration for actuator torque ``T`` at time ``t``."""
    omega = s.omega if isinstance(s, PlantState) else s
    return (T - p.B * omega - friction_torque(p, omega) - disturbance_torque(p, t)) / p.M


def f_true(p: PlantParams, thetadot_d: float, thetaddot_d: float, omega: float) -> float:
    """The full plant function, including friction at the measured velocity."""
    return p.M * thetaddot_d + p.B * thetadot_d + friction_torque(p, omega)


def f_estimate(p: PlantParams, thetadot_d: float, thetaddot_d: float) -> float:
    """Fixed estimate of the plant function; friction is the unmodelled part."""
    return p.M * thetaddot_d + p.B * thetadot_d
