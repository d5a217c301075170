"""Interval solver: u_t = (a(u)u_x - u v_x)_x, tau v_t = v_xx - v + u, Neumann ends."""
from __future__ import annotations

from .fv import imex_step
from .grid import GridState, StepOutcome, TimeControls
from .kinetics import DiffusionSpec
from .records import Outcome, RunRecord, detect_blowup


def step(state: GridState, tau: float, spec: DiffusionSpec, controls: TimeControls,
         dt_cap: float | None = None, threshold: float | None = None) -> StepOutcome:
    """One adaptive IMEX step; see :func:`kscollapse.fv.imex_step`."""
    if state.grid.radial:
        raise ValueError("solver1d.step needs an interval grid")
    if not tau > 0:
        raise ValueError("tau must be positive")
    return imex_step(state, tau, spec, controls, dt_cap, threshold)


def run(config) -> RunRecord:
    from .runner import execute

    if config.geometry != "interval":
        raise ValueError("solver1d.run needs geometry = interval")
    return execute(config)


__all__ = ["step", "run", "detect_blowup", "Outcome"]
