"""Radial solver on the unit ball, n >= 3, with tau = 1:

    u_t = r^(1-n) (r^(n-1) (a(u) u_r - u v_r))_r,  v_t = r^(1-n)(r^(n-1) v_r)_r + u - v.

The r^(n-1) face weight vanishes at the origin, so the inner face carries
no flux and no special treatment of the coordinate singularity is needed.
"""
from __future__ import annotations

from .fv import imex_step
from .grid import GridState, StepOutcome, TimeControls
from .kinetics import DiffusionSpec, Family
from .records import RunRecord


def step_radial(state: GridState, spec: DiffusionSpec, controls: TimeControls,
                dt_cap: float | None = None, threshold: float | None = None) -> StepOutcome:
    if not state.grid.radial:
        raise ValueError("step_radial needs a radial grid")
    if spec.family is Family.CRITICAL_POWER and spec.n != state.grid.n_dim:
        raise ValueError("critical power exponent does not match the ball dimension")
    return imex_step(state, 1.0, spec, controls, dt_cap, threshold)


def run_radial(config) -> RunRecord:
    from .runner import execute

    if config.geometry != "radial":
        raise ValueError("run_radial needs geometry = radial")
    return execute(config)
