"""Bernstein residual against degree on boxes inside and beyond the basin of the backward Van der Pol origin."""

import argparse
import time

import numpy as np

from koopstab import catalog
from koopstab.bernstein_fp import solve_box_eigenfunctions
from koopstab.system import BoxMap

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--degrees", type=int, nargs="+", default=[10, 20, 30, 40])
    ap.add_argument("--halves", type=float, nargs="+", default=[1.0, 3.0], help="box half-widths")
    a = ap.parse_args()
    system = catalog.backward_van_der_pol()
    for half in a.halves:
        box = BoxMap(np.array([-half, -half]), np.array([half, half]))
        for s in a.degrees:
            t0 = time.perf_counter()
            _, efs = solve_box_eigenfunctions(system, box, s, indices=[0])
            print(f"box +-{half:g}  degree {s:3d}  residual {efs[0].lsq_residual:.3e}  {time.perf_counter() - t0:.1f}s")
