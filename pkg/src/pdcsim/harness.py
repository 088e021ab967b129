"""
Command-line front end: power sweeps, gain-curve fits, pulse statistics.

All randomness derives from one integer seed. Power point ``j`` of a sweep
uses the ``j``-th spawned child of that seed for the pulses, the detector
thinning and the bootstrap, so output does not depend on evaluation order.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import detection, dynamics, statistics
from .exceptions import ConfigError, DomainError, UndefinedStatisticError
from .fitting import analyze_curve, conversion_efficiency
from .model import ExperimentConfig, GainCurve, GainPoint, load_config, photons_per_pulse

log = logging.getLogger("pdcsim")

SWEEP_COLUMNS = (
    "power_uW", "n_pump_out", "n_signal", "n_idler", "g2_pump", "g2_signal",
    "n_pump_out_err", "n_signal_err", "n_idler_err", "g2_pump_err", "g2_signal_err",
)
_FIELD_FOR_COLUMN = dict(zip(SWEEP_COLUMNS, ("power_in",) + SWEEP_COLUMNS[1:]))
BUDGET_COLUMNS = ("power_uW", "total", "trend", "deviation", "relative")
REFERENCE_POWER = 100.0


def default_powers(pmin=5.0, pmax=160.0, npoints=20):
    return tuple(float(p) for p in np.geomspace(pmin, pmax, npoints))


@dataclass(frozen=True)
class SweepSpec:
    powers: tuple = default_powers()
    od: tuple = (0.0,)
    out: str | None = None
    rng_seed: int = 20200101

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        object.__setattr__(self, "od", tuple(float(d) for d in self.od))
        if not self.powers:
            raise DomainError("sweep needs at least one power")
        if any(b <= a for a, b in zip(self.powers, self.powers[1:])):
            raise DomainError("sweep powers must be strictly increasing")
        if len(self.od) not in (1, len(self.powers)):
            raise DomainError("give one optical density or one per power")
        if any(p < 0 for p in self.powers) or any(d < 0 for d in self.od):
            raise DomainError("powers and optical densities must be non-negative")

    def od_at(self, j):
        return self.od[0] if len(self.od) == 1 else self.od[j]


def point_seed(seed, j):
    return int(np.random.SeedSequence(seed, spawn_key=(j,)).generate_state(1, np.uint64)[0])


def _g2_or_nan(x, normal_order, rng, n_resamples):
    try:
        return statistics.g2(x, normal_order), statistics.g2_stderr(x, n_resamples, rng, normal_order)
    except UndefinedStatisticError:
        return math.nan, math.nan


def _sem(x):
    return float(np.std(x, ddof=1) / np.sqrt(x.size))


def measure_point(cfg, power, seed, od=0.0, normal_order=False,
                  n_resamples=statistics.DEFAULT_RESAMPLES):
    """Simulate, detect and summarise one power point; errors are one sigma."""
    ens = dynamics.run_ensemble(cfg, power, seed)
    det_rng = np.random.default_rng([seed, 1])
    n_pump = np.asarray(detection.detect(ens.n_pump_out, cfg.pump_detector, det_rng))
    n_sig = np.asarray(detection.detect(ens.n_signal, cfg.detector, det_rng, od=od))
    n_idl = np.asarray(detection.detect(ens.n_idler, cfg.detector, det_rng, od=od))
    boot_rng = np.random.default_rng([seed, 2])
    g2p, g2p_err = _g2_or_nan(n_pump, normal_order, boot_rng, n_resamples)
    g2s, g2s_err = _g2_or_nan(n_sig, normal_order, boot_rng, n_resamples)
    return GainPoint(
        power_in=float(power),
        n_pump_out=float(n_pump.mean()), n_signal=float(n_sig.mean()), n_idler=float(n_idl.mean()),
        g2_pump=g2p, g2_signal=g2s,
        n_pump_out_err=_sem(n_pump), n_signal_err=_sem(n_sig), n_idler_err=_sem(n_idl),
        g2_pump_err=g2p_err, g2_signal_err=g2s_err,
    )


def run_sweep(cfg, spec, normal_order=False, n_resamples=statistics.DEFAULT_RESAMPLES):
    points = []
    for j, power in enumerate(spec.powers):
        log.info("power %.4g uW (%d/%d)", power, j + 1, len(spec.powers))
        points.append(measure_point(cfg, power, point_seed(spec.rng_seed, j), spec.od_at(j),
                                    normal_order, n_resamples))
    return GainCurve(points, cfg.pulses_per_point)


def _fmt(x):
    return repr(float(x))


def curve_to_csv(curve, sigma=1.0):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for p in curve.points:
        row = []
        for col in SWEEP_COLUMNS:
            v = getattr(p, _FIELD_FOR_COLUMN[col])
            row.append(_fmt(v * sigma if col.endswith("_err") else v))
        w.writerow(row)
    return buf.getvalue()


def curve_from_csv(text, pulses_per_point=2000):
    """Parse a sweep CSV; raises :class:`DomainError` on schema problems."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise DomainError("empty gain-curve file")
    required = SWEEP_COLUMNS[:6]
    missing = [c for c in required if c not in reader.fieldnames]
    if missing:
        raise DomainError(f"missing columns: {', '.join(missing)}")
    points = []
    for lineno, row in enumerate(reader, 2):
        try:
            kw = {_FIELD_FOR_COLUMN[c]: float(row[c]) for c in SWEEP_COLUMNS if row.get(c) not in (None, "")}
        except ValueError:
            raise DomainError(f"non-numeric value on line {lineno}") from None
        points.append(GainPoint(**kw))
    if not points:
        raise DomainError("gain-curve file has no data rows")
    return GainCurve(points, pulses_per_point)


def read_areas(text):
    """Per-pulse voltage areas (V*s), one per line; an optional header line."""
    values = []
    rows = list(csv.reader(io.StringIO(text)))
    for lineno, row in enumerate(rows, 1):
        if not row or not "".join(row).strip():
            continue
        cell = row[0].strip()
        try:
            values.append(float(cell))
        except ValueError:
            if lineno == 1:
                continue
            raise DomainError(f"non-numeric value '{cell}' on row {lineno}") from None
    if not values:
        raise DomainError("no pulse areas in file")
    return np.array(values)


# -- reports ----------------------------------------------------------------

def fit_report(curve, cfg=None, reference_power=REFERENCE_POWER):
    """Text report and budget CSV for a gain curve."""
    cfg = cfg or ExperimentConfig()
    an = analyze_curve(curve)
    a, b = an.gain_fit.params["a"], an.gain_fit.params["b"]
    err = an.gain_fit.stderr
    lines = [
        f"sinh2 fit: a = {a:.6g} +/- {err['a']:.2g}, b = {b:.6g} +/- {err['b']:.2g} uW^-1/2"
        f" (converged={an.gain_fit.converged}, iterations={an.gain_fit.n_iterations})",
    ]
    if an.knee is None:
        lines.append("knee P': none (no depletion detected)")
    else:
        lines.append(f"knee P': {an.knee:.6g} uW")
        lines.append(f"G(P') = {b * math.sqrt(an.knee):.4g} +/- {err['b'] * math.sqrt(an.knee):.2g}")
    lines.append(f"G({reference_power:g} uW) = {b * math.sqrt(reference_power):.4g}"
                 f" +/- {err['b'] * math.sqrt(reference_power):.2g}")
    pf = an.pump_fit.params
    lines.append(f"pump trend: slope = {pf['slope']:.6g} photons/uW, intercept = {pf['intercept']:.6g}")
    top = curve.points[-1]
    expected = float(an.pump_fit.predict(top.power_in))
    if expected > 0 and top.power_in > 0:
        raw = conversion_efficiency(top.n_signal, expected)
        generated = top.n_signal / (cfg.detector.quantum_efficiency * cfg.face_transmission)
        incident = photons_per_pulse(top.power_in, cfg.lambda_pump, cfg.rep_rate)
        lines.append(f"conversion efficiency at {top.power_in:.6g} uW: raw = {raw:.4f}"
                     f" (detected signal / extrapolated detected pump),"
                     f" incident = {generated / incident:.4f}"
                     f" (generated signal / pump photons incident on the crystal)")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BUDGET_COLUMNS)
    for row in an.budget:
        w.writerow([_fmt(row.power_in), _fmt(row.total), _fmt(row.trend), _fmt(row.deviation), _fmt(row.relative)])
    return "\n".join(lines) + "\n", buf.getvalue(), an


def stats_report(areas, cal_const, normal_order=False, seed=0):
    n = detection.voltage_area_to_photons(areas, cal_const)
    s = statistics.summarize(n, normal_order, rng=np.random.default_rng(seed))
    try:
        M = f"{statistics.mode_count_from_g2(s.g2):.6g}"
    except statistics.NonThermalError:
        M = "inf"
    rows = [
        ("n_pulses", str(s.n_pulses)), ("mean_n", _fmt(s.mean_n)), ("var_n", _fmt(s.var_n)),
        ("g2", _fmt(s.g2)), ("g2_stderr", _fmt(s.g2_stderr)),
        ("normal_order", str(normal_order).lower()), ("mode_count", M),
    ]
    return "".join(f"{k},{v}\n" for k, v in rows), s


# -- CLI --------------------------------------------------------------------

def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value experiment config file")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--pulses", type=int, help="pulses per power point")
    common.add_argument("--steps", type=int, help="integrator steps")
    common.add_argument("--out", type=Path, help="output file")
    common.add_argument("--sigma", type=float, default=1.0, help="error-bar multiplier")
    common.add_argument("--normal-order", action="store_true", help="exact normally ordered g2")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pdcsim", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("sweep", "simulate a power sweep and write a gain-curve CSV"),
                        ("report", "sweep, then fit and summarise the depletion signatures")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--powers", type=_floats, help="comma-separated powers in uW")
        p.add_argument("--pmin", type=float, default=5.0)
        p.add_argument("--pmax", type=float, default=160.0)
        p.add_argument("--npoints", type=int, default=20)
        p.add_argument("--od", type=_floats, default=(0.0,), help="signal ND optical densities")
    p = sub.add_parser("fit", parents=[common], help="fit a gain-curve CSV")
    p.add_argument("csv", type=Path)
    p = sub.add_parser("stats", parents=[common], help="statistics of per-pulse voltage areas")
    p.add_argument("csv", type=Path)
    p.add_argument("--cal-const", type=float, default=6.65e-12, help="V*s per photon")
    return parser


def _config_from_args(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["rng_seed"] = args.seed
    if args.pulses is not None:
        changes["pulses_per_point"] = args.pulses
    if args.steps is not None:
        changes["integrator_steps"] = args.steps
    return cfg.replace(**changes) if changes else cfg


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _sweep(args, cfg):
    powers = args.powers or default_powers(args.pmin, args.pmax, args.npoints)
    spec = SweepSpec(powers, args.od, str(args.out) if args.out else None, cfg.rng_seed)
    return run_sweep(cfg, spec, args.normal_order)


def cmd_sweep(args, cfg):
    curve = _sweep(args, cfg)
    _write(args.out, curve_to_csv(curve, args.sigma))
    return 0


def cmd_fit(args, cfg):
    curve = curve_from_csv(args.csv.read_text(), cfg.pulses_per_point)
    text, budget, _ = fit_report(curve, cfg)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(budget)
    return 0


def cmd_stats(args, cfg):
    areas = read_areas(args.csv.read_text())
    text, _ = stats_report(areas, args.cal_const, args.normal_order, cfg.rng_seed)
    _write(args.out, text)
    return 0


def cmd_report(args, cfg):
    curve = _sweep(args, cfg)
    if args.out:
        Path(args.out).write_text(curve_to_csv(curve, args.sigma))
    text, _, an = fit_report(curve, cfg)
    g2s = curve.column("g2_signal") - 1
    g2p = curve.column("g2_pump") - 1
    low = 0
    text += (f"signal g2-1: {g2s[low]:.3g} at {curve.powers[low]:.4g} uW -> {g2s[-1]:.3g} at"
             f" {curve.powers[-1]:.4g} uW\n"
             f"pump g2-1: {g2p[low]:.3g} at {curve.powers[low]:.4g} uW -> {g2p[-1]:.3g} at"
             f" {curve.powers[-1]:.4g} uW\n")
    sys.stdout.write(text)
    return 0


COMMANDS = {"sweep": cmd_sweep, "fit": cmd_fit, "stats": cmd_stats, "report": cmd_report}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
