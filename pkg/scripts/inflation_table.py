"""Print the Sobolev norm-inflation table: per-(h, k) norms, local slopes and fitted exponents.

    python scripts/inflation_table.py [--amplitude 2] [--tau auto] [--N 1024]
"""

import argparse

from lossreg.config import resolve
from lossreg.experiments import inflation_run

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--amplitude", type=float, default=2.0)
    p.add_argument("--tau", default="auto")
    p.add_argument("--N", type=int, default=1024)
    a = p.parse_args()
    cfg = resolve({"amplitude": a.amplitude, "tau": a.tau, "N": a.N, "floor_stage": False}, "inflation")
    out = inflation_run(cfg)
    print(f"tau = {out.summary['tau']:.4g}")
    print(f"{'h':>10} {'eps':>8} {'k':>5} {'norm':>12} {'pred':>7} {'local':>8}")
    for h, eps, k, norm, pred, local in out.rows:
        print(f"{h:10.6f} {eps:8.4f} {k:5.2f} {norm:12.5e} {pred:7.3f} {local:8.4f}")
    for k, f in out.summary["fits"].items():
        print(f"k = {k}: fitted {f['fitted']:+.4f}, predicted {f['predicted']:+.4f}, threshold {f['threshold']:.4f}")
    for factor, fits in out.summary["tau_sensitivity"].items():
        print(f"tau x {factor}: " + ", ".join(f"k={k} {v:+.4f}" for k, v in fits.items()))
