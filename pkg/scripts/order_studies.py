#!/usr/bin/env python3
"""Temporal and spatial order studies for the reference solvers.

The temporal study freezes a fine radial mesh and doubles the step count; the
spatial study solves the steady log / 1-over-rho Dirichlet profiles on a
halving mesh ladder.  Expected: first order in time (the splitting), second
order in space (the flux discretization).
"""
import numpy as np

from emikit.radial import solve_steady_radial
from emikit.verify import temporal_order_study


def main():
    errors, slope = temporal_order_study("exp1", c_l=0.05,
                                         n_fs=(28, 56, 112, 224))
    print("temporal ladder (exp1, c_l = 0.05):")
    for n, e in zip((28, 56, 112, 224), errors):
        print(f"  n_f={n:<4d} u_e error {e:.4e}")
    print(f"  observed temporal order: {slope:.3f}\n")

    for d, label, exact in (
            (1, "log profile (polar)", lambda r: np.log(r / 3) / np.log(2.0)),
            (2, "1/rho profile (spherical)",
             lambda r: (1 / 3 - 1 / r) / (1 / 3 - 1 / 6))):
        hs = (0.2, 0.1, 0.05, 0.025)
        errs = []
        for h in hs:
            nodes = np.linspace(3.0, 6.0, round(3.0 / h) + 1)
            u = solve_steady_radial(nodes, d, 1.0, 0.0, 1.0)
            errs.append(float(np.max(np.abs(u - exact(nodes)))))
        slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
        print(f"steady {label}:")
        for h, e in zip(hs, errs):
            print(f"  h={h:<6g} max error {e:.4e}")
        print(f"  observed spatial order: {slope:.3f}\n")


if __name__ == "__main__":
    main()
