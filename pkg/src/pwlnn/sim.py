"""Fixed-step simulation of plant, actuator, compensator and weight tuning.

All continuous states (velocity, integral of error, actuator input, filter
state and both weight matrices) live in one flat vector and are advanced
together, so intermediate RK4 stages see a consistent coupled system.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import neuralnet as nn
from .controller import (
    BoundsConfig,
    ControllerState,
    Gains,
    controller_derivatives,
    robustifier_v1,
    t_des,
    warn_gain_conditions,
)
from .neuralnet import NnWeights, TuningGains
from .plant import PlantParams, disturbance_torque, f_estimate, plant_derivative
from .pwl import PwlParams, evaluate

REFERENCE_KINDS = ("sinusoid", "rectangular")
METHODS = ("euler", "rk4")
# unity: du/dt = phi; oracle: du/dt = phi / actuator slope; direct: u = T_des, no inner loop
INVERSE_MODES = ("unity", "oracle", "direct")

COLUMNS = (
    "t", "thetadot_d", "thetaddot_d", "omega", "e", "u", "T",
    "T_des", "T_tilde", "v1", "v2", "phi", "nn_output", "Z_norm",
)


class SimulationDiverged(RuntimeError):
    """A state or signal became non-finite."""

    def __init__(self, signal: str, t: float):
        super().__init__(f"non-finite value in {signal!r} at t = {t:.6g} s")
        self.signal = signal
        self.t = t


@dataclass(frozen=True)
class ReferenceSpec:
    kind: str = "sinusoid"
    amplitude: float = 1.0
    frequency: float = 0.5
    edge_time: float = 0.05

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(f"reference.kind must be one of {REFERENCE_KINDS}, got {self.kind!r}")
        if not self.amplitude >= 0.0:
            raise ValueError(f"reference.amplitude must be >= 0, got {self.amplitude!r}")
        if not self.frequency > 0.0:
            raise ValueError(f"reference.frequency must be > 0, got {self.frequency!r}")
        if not self.edge_time > 0.0:
            raise ValueError(f"reference.edge_time must be > 0, got {self.edge_time!r}")


def reference(spec: ReferenceSpec, t: float) -> tuple[float, float]:
    """Desired velocity and acceleration at time ``t``.

    The rectangular wave is ``A*tanh(sin(wt)/d)/tanh(1/d)`` with
    ``d = w*edge_time``: it reaches exactly ``+-A`` mid-plateau, its edges
    have time constant ``edge_time`` and its derivative exists everywhere.
    """
    A = spec.amplitude
    w = 2.0 * math.pi * spec.frequency
    s, c = math.sin(w * t), math.cos(w * t)
    if spec.kind == "sinusoid":
        return A * s, A * w * c
    d = w * spec.edge_time
    norm = math.tanh(1.0 / d)
    th = math.tanh(s / d)
    return A * th / norm, A * (1.0 - th * th) * c * w / (d * norm)


@dataclass(frozen=True)
class Scenario:
    pwl_enabled: bool = True
    nn_enabled: bool = True
    robustifiers_enabled: bool = True
    inverse: str = "unity"

    def __post_init__(self):
        if self.inverse not in INVERSE_MODES:
            raise ValueError(f"scenario.inverse must be one of {INVERSE_MODES}, got {self.inverse!r}")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    duration: float = 20.0
    method: str = "rk4"
    seed: int = 1
    settle_fraction: float = 0.5
    hidden: int = 8
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    pwl: PwlParams = field(default_factory=PwlParams)
    plant: PlantParams = field(default_factory=PlantParams)
    gains: Gains = field(default_factory=Gains)
    tuning: TuningGains = field(default_factory=TuningGains)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    scenario: Scenario = field(default_factory=Scenario)

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"sim.dt must be > 0, got {self.dt!r}")
        if not self.duration >= 0.0:
            raise ValueError(f"sim.duration must be >= 0, got {self.duration!r}")
        if self.method not in METHODS:
            raise ValueError(f"sim.method must be one of {METHODS}, got {self.method!r}")
        if not 0.0 <= self.settle_fraction < 1.0:
            raise ValueError(f"sim.settle_fraction must be in [0, 1), got {self.settle_fraction!r}")
        if self.hidden < 1:
            raise ValueError(f"sim.hidden must be >= 1, got {self.hidden!r}")
        if self.reference.amplitude > self.bounds.Theta_d:
            warnings.warn(
                f"reference amplitude {self.reference.amplitude} exceeds bounds.Theta_d {self.bounds.Theta_d}",
                stacklevel=2,
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def validate(self) -> None:
        """Emit the non-fatal warnings (step size, gain conditions)."""
        if self.dt * self.gains.filter_pole > 0.2:
            warnings.warn(
                f"dt*filter_pole = {self.dt * self.gains.filter_pole:.3g} > 0.2; the filter is under-resolved",
                stacklevel=2,
            )
        warn_gain_conditions(self.gains, self.bounds, self.hidden)

    def with_(self, **changes) -> SimConfig:
        return replace(self, **changes)


class _Layout:
    """Index bookkeeping for the flat state vector."""

    def __init__(self, n: int, L: int, m: int = 1):
        self.v_shape = (n + 1, L)
        self.w_shape = (L + 1, m)
        self.v_slice = slice(4, 4 + (n + 1) * L)
        self.w_slice = slice(self.v_slice.stop, self.v_slice.stop + (L + 1) * m)
        self.size = self.w_slice.stop

    def weights(self, x: np.ndarray) -> NnWeights:
        return NnWeights(x[self.v_slice].reshape(self.v_shape), x[self.w_slice].reshape(self.w_shape))


STATE_NAMES = ("omega", "e_int", "u", "x_f")


def pack_state(omega: float, e_int: float, u: float, x_f: float, weights: NnWeights) -> np.ndarray:
    return np.concatenate(([omega, e_int, u, x_f], weights.V.ravel(), weights.W.ravel()))


def initial_state(config: SimConfig) -> np.ndarray:
    w = nn.init_weights(nn.N_INPUTS, config.hidden, 1, config.seed)
    return pack_state(0.0, 0.0, 0.0, 0.0, w)


class Simulator:
    """Binds a config to its right-hand side and integrator."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.layout = _Layout(nn.N_INPUTS, config.hidden)
        sc = config.scenario
        self._oracle = config.pwl if sc.inverse == "oracle" and sc.pwl_enabled else None
        self._direct = sc.inverse == "direct"

    def actuator(self, u: float) -> float:
        if self.config.scenario.pwl_enabled:
            return evaluate(self.config.pwl, u)
        return u

    def _direct_command(self, t, omega, e_int, thetadot_d, thetaddot_d) -> float:
        cfg = self.config
        e = thetadot_d - omega
        v1 = 0.0
        if cfg.scenario.robustifiers_enabled:
            v1 = robustifier_v1(cfg.bounds.f_M, cfg.plant.tau_M, e, cfg.gains.eps_sign)
        return t_des(cfg.gains, e, e_int, f_estimate(cfg.plant, thetadot_d, thetaddot_d), v1)

    def rhs(self, t: float, x: np.ndarray) -> tuple[np.ndarray, dict]:
        cfg = self.config
        omega, e_int, u, x_f = x[0], x[1], x[2], x[3]
        thetadot_d, thetaddot_d = reference(cfg.reference, t)
        if self._direct:
            u = self._direct_command(t, omega, e_int, thetadot_d, thetaddot_d)
        T = self.actuator(u)
        weights = self.layout.weights(x)
        out = controller_derivatives(
            ControllerState(e_int=e_int, u=u, x_f=x_f, weights=weights),
            cfg.gains, cfg.bounds, cfg.tuning, cfg.plant,
            thetadot_d, thetaddot_d, omega, T,
            nn_enabled=cfg.scenario.nn_enabled,
            robustifiers_enabled=cfg.scenario.robustifiers_enabled,
            oracle_pwl=self._oracle,
        )
        T_d = disturbance_torque(cfg.plant, t)
        if cfg.plant.disturbance_kind != "none" and abs(T_d) > cfg.plant.tau_M:
            raise AssertionError(f"disturbance {T_d} exceeds tau_M = {cfg.plant.tau_M} at t = {t}")
        dx = np.empty_like(x)
        dx[0] = plant_derivative(cfg.plant, omega, T, t)
        dx[1] = out.de_int
        dx[2] = 0.0 if self._direct else out.du
        dx[3] = out.dx_f
        dx[self.layout.v_slice] = out.dV.ravel()
        dx[self.layout.w_slice] = out.dW.ravel()
        signals = {
            "t": t, "thetadot_d": thetadot_d, "thetaddot_d": thetaddot_d,
            "omega": omega, "e": out.e, "u": u, "T": T, "T_des": out.T_des,
            "T_tilde": out.T_tilde, "v1": out.v1, "v2": out.v2, "phi": out.phi,
            "nn_output": out.nn_output, "Z_norm": out.Z_norm,
        }
        return dx, signals

    def _checked_rhs(self, t: float, x: np.ndarray) -> tuple[np.ndarray, dict]:
        dx, signals = self.rhs(t, x)
        if not np.all(np.isfinite(dx)):
            raise SimulationDiverged(_first_non_finite(x, dx, signals, self.layout), t)
        return dx, signals

    def step(self, x: np.ndarray, t: float, k1: np.ndarray | None = None) -> np.ndarray:
        """Advance the flat state by one ``dt``; ``k1`` may be passed in if already known."""
        h = self.config.dt
        if k1 is None:
            k1, _ = self._checked_rhs(t, x)
        if self.config.method == "euler":
            x_next = x + h * k1
        else:
            k2, _ = self._checked_rhs(t + 0.5 * h, x + 0.5 * h * k1)
            k3, _ = self._checked_rhs(t + 0.5 * h, x + 0.5 * h * k2)
            k4, _ = self._checked_rhs(t + h, x + h * k3)
            x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x_next)):
            raise SimulationDiverged(_first_non_finite(x_next, None, {}, self.layout), t + h)
        return x_next


def _first_non_finite(x, dx, signals, layout) -> str:
    for name, value in signals.items():
        if not math.isfinite(value):
            return name
    for vec, suffix in ((x, ""), (dx, "_rate")):
        if vec is None:
            continue
        for i, name in enumerate(STATE_NAMES):
            if not math.isfinite(vec[i]):
                return name + suffix
        if not np.all(np.isfinite(vec[layout.v_slice])):
            return "V_hat" + suffix
        if not np.all(np.isfinite(vec[layout.w_slice])):
            return "W_hat" + suffix
    return "state"


def step(x: np.ndarray, config: SimConfig, t: float) -> np.ndarray:
    return Simulator(config).step(x, t)


@dataclass
class TimeSeries:
    """Per-step record of every loop signal on a uniform time grid."""

    data: dict[str, np.ndarray]
    final_weights: NnWeights | None = None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]

    def __len__(self) -> int:
        return len(self.data["t"])

    @property
    def t(self) -> np.ndarray:
        return self.data["t"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(COLUMNS) + "\n")
        table = np.column_stack([self.data[c] for c in COLUMNS])
        np.savetxt(buf, table, fmt="%.17g", delimiter=",")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> TimeSeries:
        lines = text.splitlines()
        header = lines[0].split(",")
        table = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
        return cls({name: table[:, i].copy() for i, name in enumerate(header)})


def run(config: SimConfig, progress=None) -> TimeSeries:
    """Integrate from rest with freshly initialised weights and record every step."""
    sim = Simulator(config)
    x = initial_state(config)
    n = config.n_steps
    rows = {c: np.empty(n + 1) for c in COLUMNS}
    for k in range(n + 1):
        t = k * config.dt
        k1, signals = sim._checked_rhs(t, x)
        for c in COLUMNS:
            rows[c][k] = signals[c]
        if k == n:
            break
        x = sim.step(x, t, k1)
        if progress is not None and k % 1000 == 0:
            progress(k, n)
    return TimeSeries(rows, final_weights=sim.layout.weights(x).copy())


@dataclass(frozen=True)
class Metrics:
    rms_e: float
    max_e: float
    rms_T_tilde: float
    final_Z_norm: float

    def as_dict(self) -> dict[str, float]:
        return {
            "rms_e": self.rms_e,
            "max_e": self.max_e,
            "rms_T_tilde": self.rms_T_tilde,
            "final_Z_norm": self.final_Z_norm,
        }


def window(ts: TimeSeries, settle_fraction: float) -> np.ndarray:
    if not 0.0 <= settle_fraction < 1.0:
        raise ValueError(f"settle_fraction must be in [0, 1), got {settle_fraction!r}")
    if len(ts) == 0:
        raise ValueError("empty time series")
    mask = ts.t >= settle_fraction * ts.t[-1]
    if not mask.any():
        raise ValueError("metric window is empty")
    return mask


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def metrics(ts: TimeSeries, settle_fraction: float = 0.5) -> Metrics:
    """Tracking statistics over ``t >= settle_fraction * duration``."""
    mask = window(ts, settle_fraction)
    e = ts["e"][mask]
    return Metrics(
        rms_e=rms(e),
        max_e=float(np.max(np.abs(e))),
        rms_T_tilde=rms(ts["T_tilde"][mask]),
        final_Z_norm=float(ts["Z_norm"][-1]),
    )


def rms_difference(a: TimeSeries, b: TimeSeries, column: str, settle_fraction: float = 0.5) -> float:
    """RMS of ``a[column] - b[column]`` over the settled window (same grid required)."""
    if len(a) != len(b) or not np.array_equal(a.t, b.t):
        raise ValueError("time series are on different grids")
    mask = window(a, settle_fraction)
    return rms(a[column][mask] - b[column][mask])
