"""
Photon-number statistics over pulse ensembles: bunching parameter g2,
variance decomposition, mode counting and bootstrap uncertainties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, NonThermalError, UndefinedStatisticError

#: g2 of a single thermal mode.
G2_SINGLE_MODE_THERMAL = 2.0

DEFAULT_RESAMPLES = 1000


@dataclass(frozen=True)
class StatsSummary:
    mean_n: float
    var_n: float
    g2: float
    g2_stderr: float
    n_pulses: int
    normal_order: bool = False

    @property
    def mean_stderr(self):
        return float(np.sqrt(self.var_n / self.n_pulses))


def _as_ensemble(ensemble):
    x = np.asarray(ensemble, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("ensemble must be a non-empty 1-d sequence")
    return x


def _g2_centered(m1, var, normal_order):
    # 1 + var/m1^2 keeps the excess g2 - 1 accurate when it is far below 1
    if np.any(m1 <= 0):
        raise UndefinedStatisticError("g2 is undefined for zero mean photon number")
    excess = var - m1 if normal_order else var
    return 1.0 + excess / m1**2


def g2(ensemble, normal_order=False):
    """Zero-delay bunching parameter of a photon-number ensemble.

    With ``normal_order`` the exact ``(<N^2> - <N>) / <N>^2`` is returned,
    otherwise the large-N form ``<N^2> / <N>^2``.
    """
    x = _as_ensemble(ensemble)
    return float(_g2_centered(x.mean(), x.var(), normal_order))


def variance_from_g2(mean_n, g2_value):
    """Photon-number variance ``<N> + (g2 - 1) <N>^2``."""
    if mean_n < 0 or g2_value < 0:
        raise DomainError("mean and g2 must be non-negative")
    return mean_n + (g2_value - 1.0) * mean_n**2


def mode_count_from_g2(g2_measured, g2_single=G2_SINGLE_MODE_THERMAL):
    """Number of equally populated thermal modes giving ``g2_measured``."""
    excess = g2_measured - 1.0
    if excess <= 0:
        raise NonThermalError(f"g2 = {g2_measured} <= 1: mode count is unbounded")
    return (g2_single - 1.0) / excess


def g2_stderr(ensemble, n_resamples=DEFAULT_RESAMPLES, rng=None, normal_order=False):
    """Bootstrap standard error of :func:`g2`.

    Pulses are resampled with replacement ``n_resamples`` times; the standard
    deviation of the resampled g2 values is returned.
    """
    x = _as_ensemble(ensemble)
    if x.size < 10:
        raise DomainError("bootstrap needs at least 10 pulses")
    if n_resamples < 100:
        raise DomainError("bootstrap needs at least 100 resamples")
    g2(x, normal_order)  # raises on zero mean
    rng = np.random.default_rng(rng)
    vals = np.empty(n_resamples)
    # chunks bound memory; the draw order is fixed so the result is seed-determined
    chunk = max(1, 2_000_000 // x.size)
    for start in range(0, n_resamples, chunk):
        stop = min(start + chunk, n_resamples)
        idx = rng.integers(0, x.size, size=(stop - start, x.size))
        xs = x[idx]
        m1 = xs.mean(axis=1)
        var = xs.var(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals[start:stop] = np.where(m1 > 0, 1.0 + ((var - m1) if normal_order else var) / m1**2, np.nan)
    return float(np.nanstd(vals))


def summarize(ensemble, normal_order=False, n_resamples=DEFAULT_RESAMPLES, rng=None):
    x = _as_ensemble(ensemble)
    if x.size < 2:
        raise DomainError("summary needs at least 2 pulses")
    return StatsSummary(
        mean_n=float(x.mean()),
        var_n=float(x.var()),
        g2=g2(x, normal_order),
        g2_stderr=g2_stderr(x, n_resamples, rng, normal_order),
        n_pulses=int(x.size),
        normal_order=normal_order,
    )


def multithermal_ensemble(mean_n, M, n_pulses, rng):
    """Total intensity of ``M`` independent, equally populated thermal modes.

    Each mode contributes an exponential intensity; the sum is scaled so its
    expectation is ``mean_n``.
    """
    if M < 1 or mean_n < 0:
        raise DomainError("need M >= 1 and non-negative mean")
    rng = np.random.default_rng(rng)
    return rng.exponential(1.0, size=(n_pulses, M)).sum(axis=1) * (mean_n / M)
