"""Finite-volume simulator and diagnostics for blowup in Keller-Segel systems
with nonlinear diffusion, on the interval and on the radial unit ball."""
from .config import ConfigError, InitRecipe, RunConfig, dump_config, parse_config
from .diagnostics import (Lambda, MeasuredBounds, jensen_chain_check, lambda_fn, lyapunov,
                          m2_identity_rhs, m2_radial, m_star, moment_identity_rhs, moment_q,
                          istotne_rhs, radial_term_checks, theta_find)
from .grid import Grid, GridState, StepFlag, TimeControls
from .harness import emit_summary, emit_timeseries, simulate, sweep
from .kinetics import DiffusionSpec, Family, MajorantB, a_eval, build_majorant, phi_eval
from .records import Outcome, RunRecord, detect_blowup
from .runner import execute, initial_state

__all__ = [
    "ConfigError", "InitRecipe", "RunConfig", "dump_config", "parse_config",
    "Lambda", "MeasuredBounds", "jensen_chain_check", "lambda_fn", "lyapunov",
    "m2_identity_rhs", "m2_radial", "m_star", "moment_identity_rhs", "moment_q",
    "istotne_rhs", "radial_term_checks", "theta_find",
    "Grid", "GridState", "StepFlag", "TimeControls",
    "emit_summary", "emit_timeseries", "simulate", "sweep",
    "DiffusionSpec", "Family", "MajorantB", "a_eval", "build_majorant", "phi_eval",
    "Outcome", "RunRecord", "detect_blowup", "execute", "initial_state",
]
