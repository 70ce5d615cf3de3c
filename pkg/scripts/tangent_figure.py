"""Divergences near order one against their common first-order expansion.

Around alpha = 1 both the minimal and the Petz divergence of a qubit pair
follow ``D + (alpha - 1) V / 2`` (in nats), with ``V`` the relative entropy
variance. The script tabulates both curves, the tangent line and the deviation.
"""

import argparse
import csv

import numpy as np

from qit import divergences as dv

RHO = np.full((2, 2), 0.5)
SIGMA = np.diag([0.01, 0.99])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="tangent_figure.csv")
    args = ap.parse_args()
    D = dv.umegaki(RHO, SIGMA)
    slope = dv.variance_nats(RHO, SIGMA) / 2 * dv.log_scale(2)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "minimal", "petz", "tangent"])
        for a in np.round(np.linspace(0.5, 1.5, 41), 10):
            row = (dv.sandwiched(RHO, SIGMA, a), dv.petz(RHO, SIGMA, a), D + (a - 1) * slope)
            w.writerow([float(a)] + [f"{x:.12g}" for x in row])
    for h in (1e-1, 1e-2, 1e-3):
        dev = max(abs(dv.sandwiched(RHO, SIGMA, 1 + s * h) - D - s * h * slope) for s in (-1, 1))
        print(f"|alpha - 1| = {h:g}: deviation from tangent {dev:.3e} bits")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
