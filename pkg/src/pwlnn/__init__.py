"""Neural-network compensation of servo systems with multi-segment piecewise-linear actuators."""

from .controller import BoundsConfig, Gains, theoretical_bounds
from .neuralnet import NnWeights, TuningGains, init_weights
from .plant import PlantParams
from .pwl import PwlParams
from .sim import ReferenceSpec, Scenario, SimConfig, SimulationDiverged, TimeSeries, metrics, run

__all__ = [
    "BoundsConfig",
    "Gains",
    "NnWeights",
    "PlantParams",
    "PwlParams",
    "ReferenceSpec",
    "Scenario",
    "SimConfig",
    "SimulationDiverged",
    "TimeSeries",
    "TuningGains",
    "init_weights",
    "metrics",
    "run",
    "theoretical_bounds",
]

__version__ = "0.1.0"
