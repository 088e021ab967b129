"""
Domain types, constants and the analytic undepleted-gain law.

Powers are average powers in microwatts, wavelengths are vacuum wavelengths
in nanometres, and per-pulse energy is ``power / rep_rate``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DomainError

#: Planck constant times speed of light, J*m.
HC = 1.986445e-25

#: Allowed relative mismatch of 1/lambda_p against 1/lambda_s + 1/lambda_i.
ENERGY_CONSERVATION_TOL = 5e-3


@dataclass(frozen=True)
class DetectorParams:
    """Photodetector and the filter in front of it.

    ``cal_const`` is the integrated voltage-pulse area per photon (V*s).
    ``nd_optical_density`` is the base-10 attenuation of the ND filter.
    """

    quantum_efficiency: float = 0.86
    cal_const: float = 9.47e-12
    nd_optical_density: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise DomainError(f"quantum_efficiency must lie in (0, 1], got {self.quantum_efficiency}")
        if not self.cal_const > 0.0:
            raise DomainError(f"cal_const must be positive, got {self.cal_const}")
        if not self.nd_optical_density >= 0.0:
            raise DomainError(f"nd_optical_density must be >= 0, got {self.nd_optical_density}")


@dataclass(frozen=True)
class ExperimentConfig:
    """All parameters of one simulated experiment.

    ``detector`` sits on the signal/idler path (PD2), ``pump_detector`` on
    the pump path after the crystal (PD1). Crystal length, grating period and
    pump waist are carried as metadata only.
    """

    lambda_pump: float = 532.0
    lambda_signal: float = 750.0
    lambda_idler: float = 1840.0
    rep_rate: float = 1.0e3
    gain_coeff_b: float = 1.28
    mode_count_M: int = 18
    pulses_per_point: int = 2000
    face_reflectivity: float = 0.15
    detector: DetectorParams = field(default_factory=DetectorParams)
    pump_detector: DetectorParams = field(
        default_factory=lambda: DetectorParams(0.86, 6.65e-12, 5.0))
    integrator_steps: int = 2000
    rng_seed: int = 20200101
    crystal_length_mm: float = 5.0
    grating_period_um: float = 7.9
    pump_waist_um: float = 17.0

    def __post_init__(self):
        for name in ("lambda_pump", "lambda_signal", "lambda_idler", "rep_rate", "gain_coeff_b"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        inv_p = 1.0 / self.lambda_pump
        inv_si = 1.0 / self.lambda_signal + 1.0 / self.lambda_idler
        if abs(inv_p - inv_si) / inv_p > ENERGY_CONSERVATION_TOL:
            raise DomainError(
                f"wavelengths violate energy conservation: 1/{self.lambda_pump} vs "
                f"1/{self.lambda_signal} + 1/{self.lambda_idler}")
        if self.mode_count_M < 1:
            raise DomainError(f"mode_count_M must be >= 1, got {self.mode_count_M}")
        if self.pulses_per_point < 2:
            raise DomainError(f"pulses_per_point must be >= 2, got {self.pulses_per_point}")
        if not 0.0 <= self.face_reflectivity < 1.0:
            raise DomainError(f"face_reflectivity must lie in [0, 1), got {self.face_reflectivity}")
        if self.integrator_steps < 1:
            raise DomainError(f"integrator_steps must be positive, got {self.integrator_steps}")

    @property
    def face_transmission(self):
        return 1.0 - self.face_reflectivity

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class GainPoint:
    power_in: float
    n_pump_out: float
    n_signal: float
    n_idler: float
    g2_pump: float
    g2_signal: float
    n_pump_out_err: float = 0.0
    n_signal_err: float = 0.0
    n_idler_err: float = 0.0
    g2_pump_err: float = 0.0
    g2_signal_err: float = 0.0


@dataclass(frozen=True)
class GainCurve:
    """Mean photon numbers and bunching versus input power.

    NaN bunching values are allowed (zero-mean channels, e.g. at zero power).
    """

    points: tuple
    pulses_per_point: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        powers = [p.power_in for p in self.points]
        if any(b <= a for a, b in zip(powers, powers[1:])):
            raise DomainError("powers must be strictly increasing")
        g2_floor = 1.0 - 1.0 / self.pulses_per_point
        for p in self.points:
            if min(p.n_pump_out, p.n_signal, p.n_idler) < 0:
                raise DomainError(f"negative photon number at {p.power_in} uW")
            for g in (p.g2_pump, p.g2_signal):
                if not math.isnan(g) and g < g2_floor:
                    raise DomainError(f"g2 = {g} below coherent floor at {p.power_in} uW")

    def __len__(self):
        return len(self.points)

    def column(self, name):
        return np.array([getattr(p, name) for p in self.points], dtype=float)

    @property
    def powers(self):
        return self.column("power_in")


def photons_per_pulse(power, lam, rep_rate):
    """Mean photon number per pulse for an average power in uW at wavelength
    ``lam`` (nm) and repetition rate ``rep_rate`` (Hz)."""
    if lam <= 0 or rep_rate <= 0:
        raise DomainError("wavelength and repetition rate must be positive")
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise DomainError("power must be non-negative")
    energy = power * 1e-6 / rep_rate
    out = energy / (HC / (lam * 1e-9))
    return out if out.ndim else float(out)


def gain_from_power(power, b):
    """Parametric gain ``G = b * sqrt(power)``."""
    if b <= 0:
        raise DomainError(f"gain coefficient must be positive, got {b}")
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise DomainError("power must be non-negative")
    out = b * np.sqrt(power)
    return out if out.ndim else float(out)


def n_undepleted(G, M):
    """Mean PDC photon number of ``M`` equal-gain modes, ``M sinh^2(G)``."""
    if M < 1:
        raise DomainError(f"mode count must be >= 1, got {M}")
    G = np.asarray(G, dtype=float)
    if np.any(G < 0):
        raise DomainError("gain must be non-negative")
    out = M * np.sinh(G) ** 2
    return out if out.ndim else float(out)


# -- config file ------------------------------------------------------------

_DETECTOR_FIELDS = {f.name: f.type for f in dataclasses.fields(DetectorParams)}
_INT_FIELDS = {"mode_count_M", "pulses_per_point", "integrator_steps", "rng_seed"}


def _parse_number(key, text, integer):
    try:
        if integer:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return float(text)
    except ValueError:
        kind = "an integer" if integer else "a number"
        raise ConfigError(key, f"expected {kind}, got '{text}'") from None


def parse_config(text):
    """Build an :class:`ExperimentConfig` from ``key = value`` lines.

    ``#`` starts a comment. Detector fields use dotted keys, e.g.
    ``detector.cal_const`` or ``pump_detector.nd_optical_density``.
    Unspecified keys keep their defaults.
    """
    top = {}
    nested = {"detector": {}, "pump_detector": {}}
    top_fields = {f.name for f in dataclasses.fields(ExperimentConfig)} - set(nested)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line, f"line {lineno} is not of the form 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not value:
            raise ConfigError(key, "missing value")
        if "." in key:
            group, sub = key.split(".", 1)
            if group not in nested or sub not in _DETECTOR_FIELDS:
                raise ConfigError(key, "unknown key")
            nested[group][sub] = _parse_number(key, value, integer=False)
        elif key in top_fields:
            top[key] = _parse_number(key, value, integer=key in _INT_FIELDS)
        else:
            raise ConfigError(key, "unknown key")

    defaults = ExperimentConfig()
    for group, values in nested.items():
        if values:
            try:
                top[group] = dataclasses.replace(getattr(defaults, group), **values)
            except DomainError as exc:
                bad = next((k for k in values if k in str(exc)), next(iter(values)))
                raise ConfigError(f"{group}.{bad}", str(exc)) from None
    try:
        return ExperimentConfig(**top)
    except DomainError as exc:
        bad = next((k for k in top if k in str(exc)), "wavelengths")
        raise ConfigError(bad, str(exc)) from None


def load_config(path):
    return parse_config(Path(path).read_text())


def format_config(cfg):
    """Inverse of :func:`parse_config`."""
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, DetectorParams):
            for sub in dataclasses.fields(value):
                lines.append(f"{f.name}.{sub.name} = {getattr(value, sub.name)!r}")
        else:
            lines.append(f"{f.name} = {value!r}")
    return "\n".join(lines) + "\n"
