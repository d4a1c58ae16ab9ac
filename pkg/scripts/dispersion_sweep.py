"""SRB dispersion verdicts across a range of solubility products.

Writes one row per Ksp with the saturation condition, the verdict and the
largest real part of the spectrum over the wavenumber grid.

Usage: python3 scripts/dispersion_sweep.py [--out FILE] [--ksp-min 0.5] [--ksp-max 1.5]
"""
import argparse
import csv

import numpy as np

from biofilm_fbp.kinetics import KineticsSRB
from biofilm_fbp.stability import SteadySRB, dispersion_sweep, stability_verdict


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="dispersion_sweep.csv")
    ap.add_argument("--ksp-min", type=float, default=0.5)
    ap.add_argument("--ksp-max", type=float, default=1.5)
    ap.add_argument("--count", type=int, default=21)
    ap.add_argument("--n", type=int, default=21)
    args = ap.parse_args()

    steady = SteadySRB.from_functions(args.n, 1.5, lambda x: 0.3 + 0.1 * x,
                                      lambda x: 0.2 + 0 * x, lambda x: 0.7 + 0.2 * x**2)
    omegas = np.linspace(0.5, 5.0, 10)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Ksp", "ksp_condition", "verdict", "max_real_eta"])
        for Ksp in np.linspace(args.ksp_min, args.ksp_max, args.count):
            p = KineticsSRB(Ksp=Ksp)
            rows = dispersion_sweep(omegas, steady, p)
            v = stability_verdict(rows, p)
            top = max(float(np.max(row.eta.real)) for row in rows)
            label = "stable" if v.stable else "unstable"
            w.writerow([f"{Ksp:.6g}", f"{v.ksp_condition:.6g}", label, f"{top:.6e}"])
            print(f"Ksp = {Ksp:.3f}  {label:8s}  max Re eta = {top:+.3e}")


if __name__ == "__main__":
    main()
