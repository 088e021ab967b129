"""Simulation and analysis of multimode high-gain parametric down-conversion
with pump depletion."""

from .exceptions import ConfigError, DomainError, NonThermalError, UndefinedStatisticError
from .model import (
    DetectorParams,
    ExperimentConfig,
    GainCurve,
    GainPoint,
    gain_from_power,
    load_config,
    n_undepleted,
    parse_config,
    photons_per_pulse,
)

__all__ = [
    "ConfigError", "DomainError", "NonThermalError", "UndefinedStatisticError",
    "DetectorParams", "ExperimentConfig", "GainCurve", "GainPoint",
    "gain_from_power", "load_config", "n_undepleted", "parse_config", "photons_per_pulse",
]
