"""Regenerate laminar_golden.csv with an mpmath Taylor-series integration.

Stratified laminar flow rho = 1 - 0.1 p, beta = 0.3, g = 9.81, d = 0.5, p0 = -1,
kappa = 0.5, sampled on the 16 Lobatto nodes of the strip.
"""

import csv
from pathlib import Path

import mpmath
import numpy as np

mpmath.mp.dps = 30
G, D, B, DRHO, P0, KAPPA, N = 9.81, 0.5, 0.3, -0.1, -1.0, 0.5, 16


def rhs(p, y):
    return [y[1], -(B - G * (y[0] - D) * DRHO) * y[1] ** 3]


def main():
    sol = mpmath.odefun(rhs, P0, [mpmath.mpf(0), mpmath.mpf(KAPPA)])
    x = -np.cos(np.pi * np.arange(N) / (N - 1))
    p = P0 * (1 - x) / 2
    p[0], p[-1] = P0, 0.0
    out = Path(__file__).with_name("laminar_golden.csv")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "H", "dH"])
        for pj in p:
            H, dH = sol(mpmath.mpf(pj))
            w.writerow([repr(float(pj)), mpmath.nstr(H, 20), mpmath.nstr(dH, 20)])


if __name__ == "__main__":
    main()
