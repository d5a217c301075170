"""Term-by-term view of the second-moment identity along a radial collapse.

For every diagnostic sample prints M_2, the finite-difference rate, the
three pieces of the exact identity (A(u) integral, v term, v_t term) and
the bound with ||v_t|| raised to 1/2 and to 1.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from kscollapse import diagnostics as dg, fv
from kscollapse.config import parse_config
from kscollapse.runner import execute


def v_terms(state):
    g = state.grid
    n = g.n_dim
    M = dg.mean_density(state)
    r, w = dg._radial_gauss(g)
    dev = M / n - dg._radial_U(g, dg.cumulative(state), r)
    base = w * 0.5 * dev**2 * r ** (n - 1)
    vt = fv.v_rate(g, state.u, state.v, 1.0)[:, None]
    return float(np.sum(base * state.v[:, None])), float(np.sum(base * vt))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", nargs="?", default="configs/radial_collapse.ini")
    ap.add_argument("--every", type=int, default=10, help="print every k-th sample")
    args = ap.parse_args()
    cfg = parse_config(Path(args.config).read_text())
    # rerun sample by sample so the states are available
    rec = execute(cfg)
    print(f"{cfg.name}: {rec.outcome.value} at t={rec.t_final:.4g}, m*={dg.m_star(cfg.n_dim):.6g}")
    idx, der, _ = rec.moment_derivative()
    n = cfg.n_dim
    M = cfg.init.mass
    vol = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    print(f"{'t':>10} {'M_2':>10} {'dM_2/dt':>11} {'identity':>11} {'bound^1/2':>11} {'bound^1':>11}")
    for k, i in enumerate(idx):
        if k % args.every:
            continue
        row = rec.rows[i]
        b_half = dg._m2_bound(row.Mq_or_M2, M, n, rec.bounds.c1, row.vt_l2, vol, 0.5)
        b_one = dg._m2_bound(row.Mq_or_M2, M, n, rec.bounds.c1, row.vt_l2, vol, 1.0)
        print(f"{row.t:>10.3e} {row.Mq_or_M2:>10.3e} {der[k]:>11.4g} {row.rhs_identity:>11.4g} "
              f"{b_half:>11.4g} {b_one:>11.4g}")
    if rec.final_state is not None:
        tv, tvt = v_terms(rec.final_state)
        print(f"final state: v term {tv:.4g}, v_t term {tvt:.4g}")


if __name__ == "__main__":
    main()
