"""Finite-volume IMEX step shared by the interval and radial solvers.

Per step: an explicit conservative update of u with arithmetic-mean face
diffusivity and upwinded chemotactic flux, followed by an implicit
(backward Euler) solve of tau v_t = Lap v - v + u with the new u.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .grid import GridState, StepFlag, StepOutcome, TimeControls
from .kinetics import DiffusionSpec, a_eval


def interior_fluxes(grid, u, v, spec: DiffusionSpec):
    """Weighted face fluxes G_j = w_j F_j on all faces (zero at both ends).

    F_j = abar_j (u_j - u_{j-1})/h - u_up (v_j - v_{j-1})/h, where u_up is
    taken from the cell the chemotactic velocity (v_j - v_{j-1})/h points
    away from.  Also returns the face velocities and diffusivities, which the
    positivity limit needs.
    """
    h = grid.h
    a = a_eval(spec, u)
    abar = 0.5 * (a[1:] + a[:-1])
    gvel = (v[1:] - v[:-1]) / h
    up = np.where(gvel > 0, u[:-1], u[1:])
    flux = abar * (u[1:] - u[:-1]) / h - up * gvel
    G = np.zeros(grid.n_cells + 1)
    G[1:-1] = grid.weights[1:-1] * flux
    return G, abar, gvel


def positivity_dt(grid, abar, gvel) -> float:
    """Largest explicit dt keeping u >= 0 (each cell's outflow coefficient <= 1)."""
    h = grid.h
    w = grid.weights[1:-1]
    right = w * (abar / h + np.maximum(gvel, 0.0))   # leaving cell j-1 through face j
    left = w * (abar / h + np.maximum(-gvel, 0.0))   # leaving cell j through face j
    rate = np.zeros(grid.n_cells)
    rate[:-1] += right
    rate[1:] += left
    rate /= grid.volumes
    top = rate.max()
    return np.inf if top <= 0 else 1.0 / top


def _v_matrix(grid, dt, tau):
    """Banded form of (tau/dt + 1) diag(vol) - weighted Laplacian."""
    n = grid.n_cells
    k = grid.weights[1:-1] / grid.h
    diag = (tau / dt + 1.0) * grid.volumes
    diag = diag.copy()
    diag[:-1] += k
    diag[1:] += k
    ab = np.zeros((3, n))
    ab[0, 1:] = -k
    ab[1] = diag
    ab[2, :-1] = -k
    return ab


def weighted_laplacian(grid, v):
    """sum over faces of w_j (v_j - v_{j-1})/h, per cell (not divided by volume)."""
    k = grid.weights[1:-1] / grid.h
    dv = k * (v[1:] - v[:-1])
    out = np.zeros(grid.n_cells)
    out[:-1] += dv
    out[1:] -= dv
    return out


def v_rate(grid, u, v, tau):
    """v_t = (Lap v - v + u)/tau evaluated cellwise from the semi-discrete operator."""
    return (weighted_laplacian(grid, v) / grid.volumes - v + u) / tau


def solve_v(grid, u_new, v, dt, tau):
    """Backward Euler for v in increment form; a constant state maps to itself exactly."""
    rhs = grid.volumes * (u_new - v) + weighted_laplacian(grid, v)
    dv = solve_banded((1, 1), _v_matrix(grid, dt, tau), rhs, check_finite=False)
    return v + dv


def steady_v(grid, u):
    """Solve -Lap v + v = u with the same discrete operator as the time step."""
    return solve_banded((1, 1), _v_matrix(grid, 1.0, 0.0), grid.volumes * u, check_finite=False)


def imex_step(state: GridState, tau: float, spec: DiffusionSpec,
              controls: TimeControls, dt_cap: float | None = None,
              threshold: float | None = None) -> StepOutcome:
    grid = state.grid
    u, v = state.u, state.v
    G, abar, gvel = interior_fluxes(grid, u, v, spec)
    dt = controls.cfl_safety * positivity_dt(grid, abar, gvel)
    if dt < controls.dt_min:
        return StepOutcome(state, 0.0, StepFlag.DT_FLOOR)
    dt = min(dt, controls.dt_max)
    if dt_cap is not None:
        dt = min(dt, dt_cap)
    u_new = u + dt * np.diff(G) / grid.volumes
    # roundoff can leave -1e-17 where a cell empties exactly
    np.maximum(u_new, 0.0, out=u_new)
    v_new = solve_v(grid, u_new, v, dt, tau)
    new = state.evolve(u_new, v_new, dt)
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
        return StepOutcome(new, dt, StepFlag.NON_FINITE)
    if threshold is None:
        threshold = controls.threshold_for(state)
    if u_new.max() >= threshold:
        return StepOutcome(new, dt, StepFlag.BLOWUP)
    return StepOutcome(new, dt, StepFlag.OK)
