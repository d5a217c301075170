"""Command line: simulate, sweep, theta, mstar.

Exit codes: 0 success, 2 configuration error, 3 run failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import diagnostics as dg
from .config import ConfigError, parse_config
from .harness import load_configs, simulate, sweep
from .kinetics import Family
from .records import Termination
from .runner import adaptive_majorant, execute, initial_state

EXIT_OK, EXIT_CONFIG, EXIT_RUN = 0, 2, 3


def _read(path):
    try:
        return parse_config(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def cmd_simulate(args) -> int:
    cfg = _read(args.config)
    rec = simulate(cfg, args.out, refine=args.refine)
    print(f"{cfg.name}: {rec.outcome.value} ({rec.termination.value}) "
          f"t={rec.t_final:.6g} max u={rec.u_max_reached:.6g}")
    return EXIT_RUN if rec.termination is Termination.NON_FINITE else EXIT_OK


def cmd_sweep(args) -> int:
    configs = [cfg for _, cfg in load_configs(args.pattern)]
    report = sweep(configs, args.out, workers=args.workers)
    for r in report:
        print(f"{r['run_id']}: {r['outcome']}")
    return EXIT_RUN if any(r["error"] for r in report) else EXIT_OK


def cmd_theta(args) -> int:
    cfg = _read(args.config)
    if cfg.geometry != "interval" or cfg.spec.family is not Family.INTEGRABLE_POWER:
        raise ConfigError("theta needs an interval run with integrable_power diffusion")
    if args.pilot_t is not None:
        cfg = cfg.with_(controls=dataclasses.replace(cfg.controls, t_end=args.pilot_t))
    rec = execute(cfg)
    m = dg.masses(initial_state(cfg))[0]
    B = rec.majorant or adaptive_majorant(cfg.spec, m, cfg.q, cfg.r_max, cfg.majorant_samples)
    out = {"m": m, "q": cfg.q, "tau": cfg.tau, "c1": rec.bounds.c1, "c2": rec.bounds.c2,
           "pilot_t": rec.t_final, "pilot_outcome": rec.outcome.value, "r_max": B.r_max}
    for exponent in ("printed", "derived"):
        lam = dg.lambda_fn(m, cfg.q, cfg.tau, B, rec.bounds, exponent)
        res = dg.theta_find(lam, dg.max_moment(m, cfg.q))
        out[exponent] = {"lambda_zero": res.lambda_zero, "theta": res.theta,
                         "sign_change": res.found}
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_mstar(args) -> int:
    try:
        value = dg.m_star(args.n)
    except dg.DiagnosticsError as exc:
        raise ConfigError(str(exc)) from exc
    print(format(value, ".17g"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kscollapse", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one config and write CSV + summary")
    s.add_argument("config")
    s.add_argument("--out", required=True)
    s.add_argument("--refine", type=int, default=0,
                   help="extra grid-doubling levels for the residual table")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run every config matching a glob")
    s.add_argument("pattern")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("theta", help="Lambda(0+) and theta from a pilot run")
    s.add_argument("config")
    s.add_argument("--pilot-t", type=float, default=None, help="override t_end of the pilot")
    s.set_defaults(func=cmd_theta)

    s = sub.add_parser("mstar", help="critical mean density for the radial problem")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_mstar)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
