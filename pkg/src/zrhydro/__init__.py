"""Simulation and numerical verification of asymmetric attractive
zero-range processes with particle destruction at the origin.

The package pairs an exact kinetic Monte Carlo engine (with coupled
variants) against the limiting scalar conservation law and against the
closed-form linear-case machinery, so that hydrodynamic-limit behavior
can be checked numerically at desk scale.
"""

from .engine import (Configuration, EventEngine, ModelParams,
                     SnapshotObserver, TrajectoryRecord, build_initial,
                     choose_window, empirical_density)
from .profiles import DensityProfile
from .rates import (RateFunction, bounded_rate, indicator_rate, linear_rate,
                    rate_from_spec)
from .thermo import ThermoTable, mean_density, partition_function

__all__ = [
    "Configuration", "DensityProfile", "EventEngine", "ModelParams",
    "RateFunction", "SnapshotObserver", "ThermoTable", "TrajectoryRecord",
    "bounded_rate", "build_initial", "choose_window", "empirical_density",
    "indicator_rate", "linear_rate", "mean_density", "partition_function",
    "rate_from_spec",
]

__version__ = "0.1.0"
