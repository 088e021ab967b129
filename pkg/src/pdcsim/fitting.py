"""
Gain-curve analysis: sinh^2 and linear least-squares fits, depletion-knee
detection, conversion efficiency and the pump + signal photon budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

MAX_ITER = 200
PARAM_RTOL = 1e-8
GRADIENT_TOL = 1e-6
KNEE_DELTA = 0.2


@dataclass(frozen=True)
class FitResult:
    """Outcome of a least-squares fit.

    ``kind`` is ``"sinh2"`` (params ``a``, ``b``; model ``a sinh^2(b sqrt(P))``)
    or ``"linear"`` (params ``slope``, ``intercept``). ``residual_norm`` is the
    weighted residual norm divided by the weighted data norm.
    """

    kind: str
    params: dict
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    n_iterations: int
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gradient_norm: float = 0.0

    @property
    def names(self):
        return list(self.params)

    @property
    def stderr(self):
        return dict(zip(self.params, np.sqrt(np.clip(np.diag(self.covariance), 0, None))))

    def predict(self, P):
        P = np.asarray(P, dtype=float)
        if self.kind == "sinh2":
            return sinh2_model(P, self.params["a"], self.params["b"])
        return self.params["slope"] * P + self.params["intercept"]


def sinh2_model(P, a, b):
    return a * np.sinh(b * np.sqrt(P)) ** 2


def _check_points(P, N, min_points):
    P = np.asarray(P, dtype=float)
    N = np.asarray(N, dtype=float)
    if P.ndim != 1 or P.shape != N.shape:
        raise DomainError("powers and photon numbers must be 1-d arrays of equal length")
    if np.unique(P).size < min_points:
        raise DomainError(f"need at least {min_points} distinct powers, got {np.unique(P).size}")
    return P, N


def _initial_guess(P, N):
    # asymptotically log N = 2 b sqrt(P) + log(a / 4)
    slope, intercept = np.polyfit(np.sqrt(P), np.log(N), 1)
    b0 = slope / 2 if slope > 0 else 1.0 / np.sqrt(P.max())
    a0 = math.exp(intercept + math.log(4.0))
    return a0, b0


def fit_sinh2(P, N, weights=None, p0=None):
    """Weighted fit of ``N = a sinh^2(b sqrt(P))`` by Levenberg-Marquardt.

    Parameters
    ----------
    P, N : array_like
        Input powers (uW) and photon numbers, all strictly positive.
    weights : array_like, optional
        Least-squares weights; default ``1 / N**2`` (constant relative error).
    p0 : (a, b), optional
        Starting point; default from a straight-line fit of ``log N`` against
        ``sqrt(P)``.

    Returns
    -------
    FitResult
        Non-convergence within 200 iterations is flagged, not raised.
    """
    P, N = _check_points(P, N, 3)
    if np.any(P <= 0) or np.any(N <= 0):
        raise DomainError("sinh^2 fit needs strictly positive powers and photon numbers")
    w = 1.0 / N**2 if weights is None else np.asarray(weights, dtype=float)
    theta = np.array(p0 if p0 is not None else _initial_guess(P, N), dtype=float)
    sq = np.sqrt(P)
    data_norm = math.sqrt(np.sum(w * N**2))

    def evaluate(th):
        a, b = th
        with np.errstate(over="ignore", invalid="ignore"):
            sh = np.sinh(b * sq)
            r = N - a * sh**2
            J = np.column_stack([sh**2, a * np.sinh(2 * b * sq) * sq])
            return r, J, float(np.sum(w * r * r))

    r, J, cost = evaluate(theta)
    if not np.isfinite(cost):
        return FitResult("sinh2", {"a": float(theta[0]), "b": float(theta[1])},
                         np.full((2, 2), np.nan), np.inf, False, 0, r, np.inf)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        A = J.T @ (w[:, None] * J)
        g = J.T @ (w * r)
        d = np.diag(A).copy()
        d[d == 0] = 1.0
        step_taken = False
        while lam < 1e20:
            try:
                delta = np.linalg.solve(A + lam * np.diag(d), g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = theta + delta
            r_t, J_t, cost_t = evaluate(trial)
            if np.isfinite(cost_t) and cost_t <= cost:
                step_taken = True
                break
            lam *= 10
        if not step_taken:
            # no downhill step at any damping: stationary to working precision
            converged = _scaled_gradient(A, g, data_norm) < GRADIENT_TOL
            break
        rel_change = np.max(np.abs(delta) / np.maximum(np.abs(theta), 1e-300))
        theta, r, J, cost = trial, r_t, J_t, cost_t
        lam = max(lam / 10, 1e-12)
        if rel_change < PARAM_RTOL:
            converged = True
            break

    A = J.T @ (w[:, None] * J)
    g = J.T @ (w * r)
    dof = P.size - 2
    scale = cost / dof if dof > 0 else 0.0
    try:
        cov = np.linalg.inv(A) * scale
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.nan)
    cov = 0.5 * (cov + cov.T)
    return FitResult(
        kind="sinh2",
        params={"a": float(theta[0]), "b": float(theta[1])},
        covariance=cov,
        residual_norm=math.sqrt(cost) / data_norm,
        converged=converged,
        n_iterations=it,
        residuals=r,
        gradient_norm=_scaled_gradient(A, g, data_norm),
    )


def _scaled_gradient(A, g, data_norm):
    d = np.sqrt(np.diag(A))
    d[d == 0] = 1.0
    return float(np.linalg.norm(g / d) / data_norm)


def fit_linear(P, N):
    """Ordinary least-squares straight line with parameter covariance."""
    P, N = _check_points(P, N, 2)
    xm, ym = P.mean(), N.mean()
    dx = P - xm
    sxx = np.sum(dx * dx)
    slope = np.sum(dx * (N - ym)) / sxx
    intercept = ym - slope * xm
    r = N - (slope * P + intercept)
    dof = P.size - 2
    # two points fit exactly; there is no residual to estimate the scatter from
    s2 = np.sum(r * r) / dof if dof > 0 else 0.0
    cov = s2 * np.array([[1.0 / sxx, -xm / sxx], [-xm / sxx, 1.0 / P.size + xm**2 / sxx]])
    norm = math.sqrt(np.sum(N * N))
    return FitResult(
        kind="linear",
        params={"slope": float(slope), "intercept": float(intercept)},
        covariance=cov,
        residual_norm=float(math.sqrt(np.sum(r * r)) / norm) if norm > 0 else 0.0,
        converged=True,
        n_iterations=1,
        residuals=r,
    )


def detect_knee(P, N, fit, delta=KNEE_DELTA):
    """Onset of depletion: the smallest power from which every measured N lies
    more than ``delta`` (relative) below the undepleted sinh^2 prediction.

    Returns ``None`` when the last point is not in deficit.
    """
    P = np.asarray(P, dtype=float)
    N = np.asarray(N, dtype=float)
    if np.any(np.diff(P) <= 0):
        raise DomainError("powers must be sorted and distinct")
    pred = fit.predict(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        deficit = np.where(pred > 0, (pred - N) / pred, 0.0) > delta
    if deficit.size == 0 or not deficit[-1]:
        return None
    k = deficit.size - 1
    while k > 0 and deficit[k - 1]:
        k -= 1
    return float(P[k])


def local_loglog_slope(P, N):
    """Slopes ``d log N / d log P`` between consecutive points."""
    P = np.asarray(P, dtype=float)
    N = np.asarray(N, dtype=float)
    return np.diff(np.log(N)) / np.diff(np.log(P))


def conversion_efficiency(n_signal, n_pump_expected):
    """Signal photons as a fraction of the pump photons expected without
    depletion."""
    if n_pump_expected <= 0:
        raise DomainError("expected pump photon number must be positive")
    return n_signal / n_pump_expected


@dataclass(frozen=True)
class BudgetRow:
    power_in: float
    total: float
    trend: float
    deviation: float
    relative: float


def photon_budget(curve, pump_fit):
    """Compare ``n_pump_out + n_signal`` with the undepleted pump trend."""
    rows = []
    for p in curve.points:
        total = p.n_pump_out + p.n_signal
        trend = float(pump_fit.predict(p.power_in))
        dev = total - trend
        rows.append(BudgetRow(p.power_in, total, trend, dev, dev / trend if trend != 0 else math.nan))
    return rows


@dataclass(frozen=True)
class CurveAnalysis:
    gain_fit: FitResult
    knee: float | None
    pump_fit: FitResult
    budget: list


def undepleted_mask(P, knee):
    P = np.asarray(P, dtype=float)
    return np.ones(P.shape, bool) if knee is None else P < knee


def analyze_curve(curve, delta=KNEE_DELTA):
    """Undepleted sinh^2 fit, knee, pump trend and photon budget of a curve.

    The first sinh^2 fit uses the lower half of the usable powers; it is
    refitted once below the resulting knee. The pump trend is a straight
    line through all points below the final knee.
    """
    P = curve.powers
    n_sig = curve.column("n_signal")
    usable = (P > 0) & (n_sig > 0)
    if usable.sum() < 3:
        raise DomainError("need at least 3 points with positive power and signal")
    Pu, Nu = P[usable], n_sig[usable]
    first = Pu <= np.median(Pu)
    if first.sum() < 3:
        first[:3] = True
    gain_fit = fit_sinh2(Pu[first], Nu[first])
    knee = detect_knee(Pu, Nu, gain_fit, delta)
    below = undepleted_mask(Pu, knee)
    if below.sum() >= 3:
        gain_fit = fit_sinh2(Pu[below], Nu[below], p0=(gain_fit.params["a"], gain_fit.params["b"]))
        knee = detect_knee(Pu, Nu, gain_fit, delta)
    pump_sel = undepleted_mask(P, knee)
    if np.unique(P[pump_sel]).size < 2:
        pump_sel[:2] = True
    pump_fit = fit_linear(P[pump_sel], curve.column("n_pump_out")[pump_sel])
    return CurveAnalysis(gain_fit, knee, pump_fit, photon_budget(curve, pump_fit))
