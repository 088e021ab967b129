"""Fine power scan of the raw crystal output beyond the depletion knee.

Prints the pump fraction remaining after the crystal and the bunching of
both beams. With perfect phase matching and equal gain the pump refills
after full conversion (back-conversion), so neither photon number levels
off at high power.

    python scripts/backconversion_scan.py [--pulses 400]
"""

import argparse

import numpy as np

from pdcsim.dynamics import run_ensemble
from pdcsim.model import ExperimentConfig, photons_per_pulse
from pdcsim.statistics import g2


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pulses", type=int, default=400)
    ap.add_argument("--pmin", type=float, default=50.0)
    ap.add_argument("--pmax", type=float, default=300.0)
    ap.add_argument("--npoints", type=int, default=26)
    args = ap.parse_args()

    cfg = ExperimentConfig(pulses_per_point=args.pulses)
    t2 = cfg.face_transmission**2
    print(f"{'P (uW)':>8} {'pump left':>10} {'signal/in':>10} {'g2s-1':>9} {'g2p-1':>9}")
    for p in np.linspace(args.pmin, args.pmax, args.npoints):
        ens = run_ensemble(cfg, p)
        n_in = photons_per_pulse(p, cfg.lambda_pump, cfg.rep_rate) * t2
        print(f"{p:8.1f} {ens.n_pump_out.mean() / n_in:10.3f} {ens.n_signal.mean() / n_in:10.3f}"
              f" {g2(ens.n_signal) - 1:9.2e} {g2(ens.n_pump_out) - 1:9.2e}")


if __name__ == "__main__":
    main()
