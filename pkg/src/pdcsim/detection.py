"""Detector chain: quantum efficiency, ND attenuation, V*s calibration and
the half-wave-plate power calibration."""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError

#: Below this photon number stochastic thinning draws exact binomials.
BINOMIAL_LIMIT = 1e6


def _scalar_or_array(x):
    return x if np.ndim(x) else float(x)


def apply_efficiency(n, eta, rng=None, stochastic=False):
    """Detected photon number for ``n`` incident photons at efficiency ``eta``.

    Stochastic mode thins binomially for ``n < 1e6`` and uses the Gaussian
    approximation (mean ``eta n``, variance ``eta (1 - eta) n``) above it.
    """
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"efficiency must lie in (0, 1], got {eta}")
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise DomainError("photon number must be non-negative")
    if not stochastic or eta == 1.0:
        return _scalar_or_array(eta * n)
    if rng is None:
        raise DomainError("stochastic detection needs a random stream")
    small = n < BINOMIAL_LIMIT
    out = np.empty_like(n)
    out[small] = rng.binomial(np.rint(n[small]).astype(np.int64), eta)
    big = n[~small]
    out[~small] = np.maximum(rng.normal(eta * big, np.sqrt(eta * (1 - eta) * big)), 0.0)
    return _scalar_or_array(out)


def nd_attenuation(n, od):
    """Transmission through a neutral-density filter of optical density ``od``."""
    if od < 0:
        raise DomainError(f"optical density must be >= 0, got {od}")
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise DomainError("photon number must be non-negative")
    return _scalar_or_array(n * 10.0 ** (-od))


def photons_to_voltage_area(n, cal_const):
    if cal_const <= 0:
        raise DomainError("calibration constant must be positive")
    return _scalar_or_array(np.asarray(n, dtype=float) * cal_const)


def voltage_area_to_photons(area, cal_const):
    if cal_const <= 0:
        raise DomainError("calibration constant must be positive")
    return _scalar_or_array(np.asarray(area, dtype=float) / cal_const)


def hwp_transmission(theta):
    """Power fraction through a HWP at ``theta`` degrees from the transmission
    maximum followed by a fixed polarizer."""
    return _scalar_or_array(np.cos(2.0 * np.deg2rad(theta)) ** 2)


def hwp_power(theta, max_power):
    """Input power at HWP angle ``theta`` given the measured maximum."""
    return _scalar_or_array(max_power * np.asarray(hwp_transmission(theta)))


def detect(n, det, rng=None, od=None):
    """Run incident photon numbers through a detector channel.

    Photons pass the ND filter, are thinned by the quantum efficiency
    (binomially where the attenuated number is below 1e6 and a stream is
    given, by deterministic scaling otherwise), are converted to a voltage
    area and back, and are finally divided by the filter transmission.
    Returns detected photon numbers referred to the filter input.
    """
    od = det.nd_optical_density if od is None else od
    n = np.asarray(n, dtype=float)
    attenuated = np.asarray(nd_attenuation(n, od))
    eta = det.quantum_efficiency
    detected = np.array(apply_efficiency(attenuated, eta), dtype=float, ndmin=1)
    if rng is not None:
        small = np.atleast_1d(attenuated < BINOMIAL_LIMIT)
        detected[small] = apply_efficiency(np.atleast_1d(attenuated)[small], eta, rng, stochastic=True)
    detected = detected.reshape(attenuated.shape)
    area = photons_to_voltage_area(detected, det.cal_const)
    return _scalar_or_array(np.asarray(voltage_area_to_photons(area, det.cal_const)) * 10.0**od)
