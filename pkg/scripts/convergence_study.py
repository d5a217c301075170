"""Residual table for one config on n_cells * 2^k grids.

Prints the moment-identity residual, the Lyapunov dissipation residual and
their observed orders.  Example:

    python3 scripts/convergence_study.py configs/interval_smooth.ini --levels 3 --t-end 0.05
"""
import argparse
import dataclasses
import math
from pathlib import Path

from kscollapse import diagnostics as dg
from kscollapse.config import parse_config
from kscollapse.harness import residual_row
from kscollapse.runner import execute


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--t-end", type=float, default=None)
    args = ap.parse_args()
    base = parse_config(Path(args.config).read_text())
    if args.t_end is not None:
        base = base.with_(controls=dataclasses.replace(base.controls, t_end=args.t_end))
    prev = None
    print(f"{'N':>6} {'steps':>8} {'identity':>12} {'order':>6} {'dissipation':>12} {'order':>6}")
    for k in range(args.levels):
        cfg = base.with_(n_cells=base.n_cells * 2**k, diag_cadence=base.diag_cadence * 4**k)
        rec = execute(cfg)
        row = residual_row(rec)
        ident = row["identity_max"] or math.nan
        diss = dg.dissipation_residual(rec.lyapunov, 1.0 if cfg.geometry == "radial" else cfg.tau)
        o1 = o2 = math.nan
        if prev is not None:
            o1, o2 = math.log2(prev[0] / ident), math.log2(prev[1] / diss)
        print(f"{cfg.n_cells:>6} {len(rec.step_t) - 1:>8} {ident:>12.4e} {o1:>6.2f} {diss:>12.4e} {o2:>6.2f}")
        prev = (ident, diss)


if __name__ == "__main__":
    main()
