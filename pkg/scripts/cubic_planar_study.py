"""Taylor and Bernstein eigenfunctions of the cubic planar system on [-2, 2]^2.

Reports the analyticity-radius estimate against order, and the Bernstein
least-squares residual and semigroup error against degree.
"""

import argparse
import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from koopstab import catalog
from koopstab.bernstein_fp import solve_box_eigenfunctions
from koopstab.stability import make_lyapunov, verify_decay_envelope, verify_semigroup
from koopstab.system import BoxMap, jacobian_spectrum
from koopstab.taylor import estimate_radius, solve_all_taylor


@dataclass
class Config:
    orders: tuple = (30, 45, 60, 75)
    degrees: tuple = (20, 30, 40)
    samples: int = 200
    seed: int = 0
    out_dir: Path = Path("results")


def taylor_sweep(cfg, system):
    spec = jacobian_spectrum(system, [0.0, 0.0])
    print("eigenvalues", spec.eigenvalues.real.round(4))
    rows = []
    for order in cfg.orders:
        efs = solve_all_taylor(system, spec, order)
        radii = [estimate_radius(ef) for ef in efs]
        coef = [estimate_radius(ef, "coefficient") for ef in efs]
        rows.append((order, *radii, *coef))
        print(f"order {order:3d}  radius (directional) {radii[0]:.4f} {radii[1]:.4f}  (coefficient) {coef[0]:.4f} {coef[1]:.4f}")
    return rows


def bernstein_sweep(cfg, system):
    box = BoxMap(np.array([-2.0, -2.0]), np.array([2.0, 2.0]))
    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(-1.9, 1.9, (cfg.samples, 2))
    rows = []
    for s in cfg.degrees:
        t0 = time.perf_counter()
        _, efs = solve_box_eigenfunctions(system, box, s)
        dt = time.perf_counter() - t0
        sg = [verify_semigroup(ef, ef.eigenvalue, system, pts, 1.0).max_error for ef in efs]
        env = verify_decay_envelope(make_lyapunov(efs), system, pts, 1.0)
        res = [ef.lsq_residual for ef in efs]
        rows.append((s, *res, *sg, env, dt))
        print(f"degree {s:3d}  residual {res[0]:.2e} {res[1]:.2e}  semigroup {sg[0]:.2e} {sg[1]:.2e}  envelope {env}  {dt:.1f}s")
    return rows


def run(cfg: Config):
    system = catalog.cubic_planar()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    t_rows = taylor_sweep(cfg, system)
    with (cfg.out_dir / "cubic_planar_radius.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["order", "radius_1", "radius_2", "coef_radius_1", "coef_radius_2"])
        w.writerows(t_rows)
    b_rows = bernstein_sweep(cfg, system)
    with (cfg.out_dir / "cubic_planar_bernstein.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "residual_1", "residual_2", "semigroup_1", "semigroup_2", "envelope", "seconds"])
        w.writerows(b_rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orders", type=int, nargs="+", default=list(Config.orders))
    ap.add_argument("--degrees", type=int, nargs="+", default=list(Config.degrees), help="75 takes ~5 min")
    ap.add_argument("--out-dir", type=Path, default=Config.out_dir)
    a = ap.parse_args()
    run(Config(tuple(a.orders), tuple(a.degrees), out_dir=a.out_dir))
