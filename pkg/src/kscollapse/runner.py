"""Time loop shared by both geometries: stepping, diagnostics cadence, bounds."""
from __future__ import annotations

import logging
import dataclasses
import time

import numpy as np

from . import diagnostics as dg
from . import fv, initdata
from .config import RunConfig
from .grid import Grid, GridState, StepFlag
from .kinetics import Family, MajorantB, build_majorant
from .records import DiagnosticRow, RunRecord, Termination, detect_blowup

log = logging.getLogger(__name__)

_NAN = float("nan")


def initial_state(cfg: RunConfig) -> GridState:
    ini = cfg.init
    if cfg.geometry == "interval":
        grid = Grid.interval(cfg.n_cells)
        if ini.u0 == "bump":
            u = initdata.bump_1d(initdata.BumpRecipe(ini.mass, ini.width, ini.profile,
                                                     ini.placement), grid)
        elif ini.u0 == "constant":
            u = initdata.constant(ini.mass, grid)
        else:
            u = initdata.perturbed_constant(ini.mass, ini.amplitude, ini.mode, grid)
        m = grid.integrate(u)
    else:
        grid = Grid.ball(cfg.n_cells, cfg.n_dim)
        n = cfg.n_dim
        M = ini.mass
        if ini.u0 == "radial_concentrated":
            target = ini.target_m2_ratio * (M / n) ** 2 / (6 * n)
            u = initdata.radial_concentrated(M, n, target, grid, ini.profile)
        elif ini.u0 == "radial_plateau":
            k = max(1, int(round(ini.width * cfg.n_cells)))
            u = initdata.radial_plateau(M, k, grid)
        elif ini.u0 == "constant":
            u = initdata.constant(M, grid)
        else:
            u = initdata.perturbed_constant(M, ini.amplitude, ini.mode, grid)
        m = M
    if ini.v0 == "admissible":
        if cfg.geometry != "interval":
            raise ValueError("the admissible v0 window belongs to the interval problem")
        v = initdata.v0_admissible(m, cfg.q, ini.v0_excess, grid)
    elif ini.v0 == "constant":
        v = initdata.constant(ini.v0_value, grid)
    elif ini.v0 == "quasi_steady":
        v = initdata.v0_quasi_steady(u, grid)
    elif ini.v0 == "match":
        v = initdata.constant(dg.mean_density(GridState(grid, u, u)), grid)
    else:
        v = np.zeros(grid.n_cells)
    return GridState(grid, u, v, 0.0)


def adaptive_majorant(spec, m: float, q: float, r_max: float = 1e4, samples: int = 400,
                      margin: float = 0.5, max_doublings: int = 60) -> MajorantB:
    """Raise r_max until the Jensen term of Lambda(0+) is below ``margin`` of the drift.

    Checks both exponent conventions, (q-2)/2 and (q-2)/q.
    """
    B = build_majorant(spec, r_max, samples)
    drift = m ** (q + 1) / (2 * q * (q + 1))
    for _ in range(max_doublings):
        ok = True
        for e in ((q - 2) / 2, (q - 2) / q):
            jensen = ((q - 1) * B(m) ** (2 / q) * (m ** (q + 1) / (q + 1)) ** e
                      * max(B.asymptotic_slope, 0.0) ** e)
            ok &= jensen < margin * drift
        if ok:
            return B
        r_max *= 4
        B = build_majorant(spec, r_max, samples)
    raise RuntimeError("could not make Lambda(0+) negative by raising r_max")


class _Sampler:
    """Computes one CSV row (plus structured samples) from a state."""

    def __init__(self, cfg: RunConfig, state0: GridState, majorant: MajorantB | None):
        self.cfg = cfg
        self.radial = cfg.geometry == "radial"
        self.tau = 1.0 if self.radial else cfg.tau
        self.spec = cfg.spec
        self.q = cfg.q
        self.B = majorant
        self.mass = dg.masses(state0)[0]
        self.M = dg.mean_density(state0)
        self.has_tail = self.spec.has_integrable_tail

    def moment(self, state: GridState) -> float:
        if self.radial:
            return dg.m2_of_state(state)
        return dg.moment_q(dg.cumulative(state), self.q)

    def row(self, state: GridState, bounds: dg.MeasuredBounds, moment: float):
        lyap = dg.lyapunov(state, self.spec, self.tau)
        bounds.update(float(state.v.max()), dg.vt_norm(state, self.tau), lyap.L)
        if self.radial:
            ident = dg.m2_identity_rhs(state, self.spec)
            bound = dg._m2_bound(moment, self.M, self.cfg.n_dim, bounds.c1, bounds.c2,
                                state.grid.ball_volume, self.cfg.vt_power)
        elif self.has_tail:
            ident = dg.moment_identity_rhs(state, self.spec, self.tau, self.q)
            lam = dg.lambda_fn(self.mass, self.q, self.tau, self.B, bounds,
                               self.cfg.lambda_exponent)
            bound = lam(moment) if moment > 0 else lam.at_zero()
        else:
            ident, bound = _NAN, _NAN
        um, vm = dg.masses(state)
        row = DiagnosticRow(state.t, float(state.u.max()), um, vm, lyap.L, lyap.dissipation_v,
                            lyap.dissipation_flux, moment, ident, bound,
                            dg.vt_norm(state, self.tau), float(state.v.max()))
        mom = dg.MomentSample(state.t, moment, ident, bound, None if self.radial else self.q)
        return row, lyap, mom


def execute(cfg: RunConfig, state0: GridState | None = None) -> RunRecord:
    t0 = time.perf_counter()
    state = initial_state(cfg) if state0 is None else state0
    controls = cfg.controls
    radial = cfg.geometry == "radial"
    tau = 1.0 if radial else cfg.tau
    majorant = None
    if not radial and cfg.spec.family is Family.INTEGRABLE_POWER:
        majorant = adaptive_majorant(cfg.spec, dg.masses(state)[0], cfg.q, cfg.r_max,
                                     cfg.majorant_samples)
    sampler = _Sampler(cfg, state, majorant)
    threshold = controls.threshold_for(state)
    rec = RunRecord(config=cfg, t_end=controls.t_end, threshold=threshold, majorant=majorant)
    bounds = rec.bounds

    def take_sample(st, step_index, moment):
        row, lyap, mom = sampler.row(st, bounds, moment)
        rec.rows.append(row)
        rec.lyapunov.append(lyap)
        rec.moments.append(mom)
        rec.sample_steps.append(step_index)

    def log_step(st):
        mom = sampler.moment(st)
        rec.step_t.append(st.t)
        rec.step_u_max.append(float(st.u.max()))
        rec.step_moment.append(mom)
        bounds.update(float(st.v.max()), dg.vt_norm(st, tau))
        return mom

    mom = log_step(state)
    take_sample(state, 0, mom)
    k = 0
    termination = Termination.COMPLETED
    t_end = controls.t_end
    while state.t < t_end * (1 - 1e-14):
        if k >= controls.max_steps:
            termination = Termination.MAX_STEPS
            break
        cap = t_end - state.t
        if k == 0:
            cap = min(cap, controls.dt_init)
        out = fv.imex_step(state, tau, cfg.spec, controls, dt_cap=cap, threshold=threshold)
        if out.flag is StepFlag.DT_FLOOR:
            termination = Termination.DT_FLOOR
            break
        if out.flag is StepFlag.NON_FINITE:
            termination = Termination.NON_FINITE
            break
        state = out.state
        k += 1
        mom = log_step(state)
        last = out.flag is StepFlag.BLOWUP or state.t >= t_end * (1 - 1e-14)
        if k % cfg.diag_cadence == 0 or last:
            take_sample(state, k, mom)
        if out.flag is StepFlag.BLOWUP:
            termination = Termination.BLOWUP
            break
    if rec.sample_steps[-1] != k:
        take_sample(state, k, rec.step_moment[-1])
    rec.termination = termination
    rec.final_state = state
    rec.outcome = detect_blowup(rec)
    if majorant is not None and bounds.c2 > 0:
        try:
            lam = dg.lambda_fn(sampler.mass, cfg.q, tau, majorant, bounds, cfg.lambda_exponent)
            rec.theta = dg.theta_find(lam, dg.max_moment(sampler.mass, cfg.q)).theta
        except dg.DiagnosticsError as exc:
            log.warning("theta not computed: %s", exc)
    rec.wall_time = time.perf_counter() - t0
    log.info("%s: %s after %d steps, t=%.6g, max u=%.4g", cfg.name, rec.outcome.value, k,
             state.t, rec.u_max_reached)
    return rec


def pilot_bounds(cfg: RunConfig, t_end: float | None = None) -> dg.MeasuredBounds:
    """Measured c1, c2 from a (short) run of ``cfg``."""
    if t_end is not None:
        cfg = cfg.with_(controls=dataclasses.replace(cfg.controls, t_end=t_end))
    return execute(cfg).bounds


def theta_for(m, q, tau, B, bounds, exponent="printed"):
    lam = dg.lambda_fn(m, q, tau, B, bounds, exponent)
    return lam, dg.theta_find(lam, dg.max_moment(m, q))


__all__ = ["execute", "initial_state", "adaptive_majorant", "pilot_bounds", "theta_for"]
