"""Acceptance suite: one test (or group) per criterion, one PASS/FAIL line each.

The lines are printed as the tests run and again in the terminal summary.
"""
import dataclasses
import math

import numpy as np
import pytest

from kscollapse import diagnostics as dg
from kscollapse.config import InitRecipe, RunConfig, parse_config
from kscollapse.grid import Grid, GridState, TimeControls
from kscollapse.harness import CSV_HEADER, summary_dict, timeseries_text, validate_summary
from kscollapse.kinetics import DiffusionSpec
from kscollapse.records import Outcome
from kscollapse.runner import adaptive_majorant, execute, initial_state
from kscollapse import fv

from conftest import ACCEPTANCE_LINES
from oracles import mstar_bisection

pytestmark = pytest.mark.acceptance


def report(label, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def check(label, ok, detail=""):
    assert report(label, bool(ok), detail), detail


def _orders(errs):
    errs = np.asarray(errs, dtype=float)
    return np.log2(errs[:-1] / errs[1:])


# ---------------------------------------------------------------------------
# 1. conservation


def _conservation_configs(seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(20):
        radial = k % 2 == 1
        tau = 1.0 if radial else float(rng.uniform(0.1, 0.3))
        mass = float(rng.uniform(0.5, 3))
        v0 = float(rng.uniform(0.1, 4))
        linear = k % 4 < 2
        if linear:
            spec = DiffusionSpec.constant(float(rng.uniform(0.5, 2)))
        elif radial:
            spec = DiffusionSpec.critical_power(3)
        else:
            spec = DiffusionSpec.integrable_power(float(rng.uniform(1.2, 3)))
        init = InitRecipe(u0="perturbed", mass=mass, amplitude=float(rng.uniform(0, 0.5)),
                          mode=int(rng.integers(1, 4)), v0="constant", v0_value=v0)
        out.append(RunConfig(geometry="radial" if radial else "interval",
                             n_dim=3 if radial else 1, tau=tau, spec=spec, n_cells=16, init=init,
                             diag_cadence=50, name=f"conservation{k}",
                             controls=TimeControls(t_end=tau if radial else 3 * tau, dt_init=1e-4,
                                                   dt_max=0.02 * tau, cfl_safety=0.8)))
    return out


def test_c1_conservation():
    worst_drift, worst_order = 0.0, math.inf
    for cfg in _conservation_configs():
        errs = []
        for lev in range(3):
            # halving the cap and the positivity factor halves every step
            c = cfg.with_(controls=dataclasses.replace(
                cfg.controls, dt_max=cfg.controls.dt_max / 2**lev,
                cfl_safety=0.8 / 2**lev, dt_init=1e-4 / 2**lev))
            rec = execute(c)
            mass = rec.column("u_mass")
            worst_drift = max(worst_drift, float(np.max(np.abs(mass - mass[0])) / mass[0]))
            m, vm = dg.masses(initial_state(c))
            exact = m + (vm - m) * math.exp(-rec.t_final / c.tau)
            errs.append(abs(rec.rows[-1].v_mass - exact))
        worst_order = min(worst_order, float(_orders(errs).min()))
    # the scheme is exactly first order here, so the measured order scatters
    # around 1 by a few 1e-4; 1% slack separates that from a real loss of order
    check("1 conservation", worst_drift <= 1e-12 and worst_order >= 0.99,
          f"max u-mass drift {worst_drift:.2e} (<= 1e-12), min v-mass order {worst_order:.4f} "
          f"(>= 1 within 1%)")


# ---------------------------------------------------------------------------
# 2. steady state


def test_c2_fixed_point():
    ctrl = TimeControls(dt_init=1e-3, dt_max=1e-2)
    worst = 0.0
    cases = [(Grid.interval(64), DiffusionSpec.integrable_power(2), 0.7, 2.0),
             (Grid.interval(64), DiffusionSpec.constant(), 1.0, 0.1),
             (Grid.ball(64, 3), DiffusionSpec.critical_power(3), 1.0, 5.0),
             (Grid.ball(64, 4), DiffusionSpec.constant(), 1.0, 300.0)]
    for g, spec, tau, m in cases:
        s = GridState(g, np.full(g.n_cells, m), np.full(g.n_cells, m))
        for _ in range(1000):
            s = fv.imex_step(s, tau, spec, ctrl, threshold=np.inf).state
        worst = max(worst, np.max(np.abs(s.u - m)) / m, np.max(np.abs(s.v - m)) / m)
    check("2 steady-state fixed point", worst <= 1e-13, f"max relative change {worst:.1e} (<= 1e-13)")


# ---------------------------------------------------------------------------
# 3 and 4. Lyapunov dissipation and moment identity under refinement


IDENTITY_CONFIGS = [dict(), dict(p=1.5, tau=0.5, m=2.0), dict(place="right", width=0.4),
                    dict(q=2.5, m=0.5), dict(q=4.0, p=3.0)]


def _smooth_interval(n, cadence, p=2.0, tau=1.0, m=1.0, width=0.5, place="center", q=3.0):
    return RunConfig(geometry="interval", tau=tau, spec=DiffusionSpec.integrable_power(p),
                     n_cells=n, q=q, diag_cadence=cadence,
                     controls=TimeControls(t_end=0.05, dt_init=1e-3, dt_max=1e-3),
                     init=InitRecipe(u0="bump", mass=m, width=width, profile="smooth",
                                     placement=place, v0="admissible"))


@pytest.fixture(scope="module")
def refinement_runs():
    # cadence 4^k keeps the samples at the same times while dt ~ h^2
    return [[execute(_smooth_interval(32 * 2**k, 4**k, **kw)) for k in range(3)]
            for kw in IDENTITY_CONFIGS]


def test_c3_lyapunov(refinement_runs):
    rise = -math.inf
    orders = []
    radial = execute(parse_config(
        "geometry = radial\nn_dim = 3\nfamily = critical_power\nn_cells = 32\nu0 = perturbed\n"
        "mass = 20\namplitude = 0.5\nv0 = constant\nv0_value = 5\nt_end = 0.05\n"))
    for runs in refinement_runs:
        res = [dg.dissipation_residual(r.lyapunov, r.config.tau) for r in runs]
        orders.append(_orders(res).min())
        for r in runs:
            rise = max(rise, float(np.max(np.diff(r.column("L")))))
    rise = max(rise, float(np.max(np.diff(radial.column("L")))))
    check("3 Lyapunov", rise <= 1e-8 and min(orders) >= 1,
          f"max L increase {rise:.2e} (<= 1e-8), min dissipation-residual order "
          f"{min(orders):.2f} (>= 1)")


def test_c4_moment_identity(refinement_runs):
    orders = []
    for runs in refinement_runs:
        errs = []
        for r in runs:
            idx, der, _ = r.moment_derivative()
            ident = np.array([r.rows[i].rhs_identity for i in idx])
            errs.append(np.max(np.abs(der - ident)))
        orders.append(_orders(errs).min())
    check("4 moment identity", min(orders) >= 1,
          f"orders per config {np.round(orders, 2).tolist()} (>= 1)")


# ---------------------------------------------------------------------------
# 5. Jensen chains


def test_c5_jensen_chains():
    rng = np.random.default_rng(5)
    B = {p: adaptive_majorant(DiffusionSpec.integrable_power(p), 1.0, 3.0) for p in (1.5, 2, 3)}
    worst_chain, worst_radial = math.inf, math.inf
    for k in range(1000):
        n = int(rng.integers(4, 200))
        u = 10 ** rng.uniform(-3, 3) * rng.random(n) ** rng.choice([1, 2, 6])
        u[rng.random(n) < rng.uniform(0, 0.8)] = 0.0
        if not np.any(u > 0):
            u[rng.integers(n)] = 1.0
        q = float(rng.uniform(2.05, 6))
        sl = dg.jensen_chain_check(GridState(Grid.interval(n), u, u), B[(1.5, 2, 3)[k % 3]], q)
        if not sl.vacuous:
            worst_chain = min(worst_chain, min(sl.as_tuple()))
        nd = 3 + k % 3
        rs = dg.radial_term_checks(GridState(Grid.ball(n, nd), u, u))
        worst_radial = min(worst_radial, rs.slack_term1, rs.slack_term2)
    check("5 Jensen chains", min(worst_chain, worst_radial) >= -1e-10,
          f"min chain slack {worst_chain:.2e}, min radial slack {worst_radial:.2e} (>= -1e-10)")


# ---------------------------------------------------------------------------
# 6. Lambda / theta


def test_c6_lambda_theta():
    spec = DiffusionSpec.integrable_power(2)
    worst_lam0, worst_gap, found = -math.inf, 0.0, 0
    for m in (0.1, 1.0, 10.0):
        for q in (2.5, 3.0, 4.0):
            pilot = execute(RunConfig(
                geometry="interval", spec=spec, n_cells=128, q=q,
                controls=TimeControls(t_end=0.01, dt_init=1e-5, dt_max=1e-3),
                init=InitRecipe(u0="bump", mass=m, width=0.5, profile="smooth")))
            B = adaptive_majorant(spec, m, q)
            lam = dg.lambda_fn(m, q, 1.0, B, pilot.bounds)
            worst_lam0 = max(worst_lam0, lam.at_zero())
            r_hi = dg.max_moment(m, q)
            res = dg.theta_find(lam, r_hi)
            scan = dg.theta_scan(lam, r_hi, 10_000)
            if res.found:
                found += 1
                assert res.theta > 0 and scan is not None
                worst_gap = max(worst_gap, abs(res.theta - scan[0]) / res.theta)
            else:
                # all-negative bracket: verify on a grid independent of theta_find's
                r = np.geomspace(r_hi * 1e-12, r_hi, 20_000)
                assert scan is None and np.all(lam(r) < 0)
    check("6 Lambda/theta", worst_lam0 < 0 and worst_gap <= 1e-6,
          f"max Lambda(0+) {worst_lam0:.3e} (< 0), {found}/9 sign changes, "
          f"max theta mismatch vs scan {worst_gap:.1e} (<= 1e-6)")


# ---------------------------------------------------------------------------
# 7. m*


def test_c7_m_star():
    worst, signs = 0.0, True
    for n in (3, 4, 5):
        ms = dg.m_star(n)
        worst = max(worst, abs(ms - mstar_bisection(n)) / ms)
        signs &= dg.leading_terms(2 * ms, n) < 0 < dg.leading_terms(ms / 2, n)
    check("7 m*", worst <= 1e-10 and signs,
          f"max relative gap to bisection {worst:.1e} (<= 1e-10), signs at 2m* and m*/2 correct")


# ---------------------------------------------------------------------------
# 8. radial collapse mechanism


def _collapse_config(n_cells, cadence, vt_power):
    return RunConfig(geometry="radial", n_dim=3, spec=DiffusionSpec.critical_power(3),
                     n_cells=n_cells, diag_cadence=cadence, vt_power=vt_power,
                     controls=TimeControls(t_end=10.0, dt_init=1e-7, dt_max=1e-3),
                     init=InitRecipe(u0="radial_concentrated", mass=2 * dg.m_star(3),
                                     target_m2_ratio=1e-3, v0="quasi_steady"))


def _bound_excess(rec):
    idx, der, _ = rec.moment_derivative()
    bound = np.array([rec.rows[i].rhs_bound for i in idx])
    return float(np.max(der - bound))


@pytest.fixture(scope="module")
def collapse_runs():
    return {n: execute(_collapse_config(n, 8 * 4 ** (n // 256), 1.0)) for n in (64, 128, 256)}


def test_c8_collapse_mechanism(collapse_runs):
    rec = collapse_runs[128]
    M = rec.config.init.mass
    m2_0 = rec.step_moment[0]
    ok_data = m2_0 <= 1e-3 * (M / 3) ** 2 / 18
    decreasing = bool(np.all(np.diff(rec.step_moment) < 0))
    ok_outcome = rec.outcome is Outcome.UNBOUNDED_SUSPECTED and rec.t_final < 10
    excess = {n: _bound_excess(r) for n, r in collapse_runs.items()}
    ok_bound = all(e <= 0 for e in excess.values())
    check("8 collapse mechanism (||v_t|| to the first power)",
          ok_data and decreasing and ok_outcome and ok_bound,
          f"M_2 strictly decreasing {decreasing}, {rec.outcome.value} at t={rec.t_final:.3g}, "
          f"max FD - bound by N {{{', '.join(f'{n}: {e:.3g}' for n, e in excess.items())}}} (<= 0)")


@pytest.mark.xfail(strict=True, reason="the square-root power on ||v_t|| undercounts the v_t "
                                        "term of the exact identity; see the decisions ledger")
def test_c8_collapse_bound_square_root_power():
    excess = {}
    for n, cad in ((64, 8), (128, 8), (256, 32)):
        excess[n] = _bound_excess(execute(_collapse_config(n, cad, 0.5)))
    vanishing = all(e <= 0 for e in excess.values()) or (
        excess[256] < 0.25 * excess[64])
    check("8 collapse bound with ||v_t||^(1/2)", vanishing,
          "max FD - bound by N "
          f"{{{', '.join(f'{n}: {e:.3g}' for n, e in excess.items())}}}, does not shrink under refinement")


# ---------------------------------------------------------------------------
# 9. interval collapse mechanism


def _interval_collapse_config(t_end, exponent="printed"):
    return RunConfig(geometry="interval", tau=1.0, spec=DiffusionSpec.integrable_power(2),
                     n_cells=1024, q=3.0, diag_cadence=20, lambda_exponent=exponent,
                     controls=TimeControls(t_end=t_end, dt_init=1e-7, dt_max=1e-3),
                     init=InitRecipe(u0="bump", mass=1.0, width=0.002, profile="plateau",
                                     placement="right", v0="admissible", v0_excess=0.5))


@pytest.fixture(scope="module")
def interval_pilot():
    pilot = execute(_interval_collapse_config(2e-4))
    lam = dg.lambda_fn(1.0, 3.0, 1.0, pilot.majorant, pilot.bounds)
    return pilot, dg.theta_find(lam, dg.max_moment(1.0, 3.0))


def test_c9_trend(interval_pilot):
    pilot, theta = interval_pilot
    rec = execute(_interval_collapse_config(0.002))
    idx, der, _ = rec.moment_derivative()
    bound = np.array([rec.rows[i].rhs_bound for i in idx])
    excess = float(np.max(der - bound))
    check("9 interval moment trend dM_q/dt <= Lambda(M_q)",
          excess <= 0 and rec.outcome in (Outcome.UNBOUNDED_SUSPECTED, Outcome.INCONCLUSIVE),
          f"max FD - Lambda {excess:.3g} (<= 0) with running c1={rec.bounds.c1:.3g}, "
          f"c2={rec.bounds.c2:.3g}; outcome {rec.outcome.value} at t={rec.t_final:.3g} "
          f"(bounded pilot: {pilot.outcome.value})")


@pytest.mark.xfail(strict=True, reason="theta scales like M_q(0) as the bump narrows, so "
                                        "M_q(0) < theta is out of reach; see the decisions ledger")
def test_c9_initial_moment_below_theta(interval_pilot):
    pilot, theta = interval_pilot
    s0 = initial_state(pilot.config)
    mq0 = dg.moment_q(dg.cumulative(s0), 3.0)
    check("9 precondition M_q(0) < theta", mq0 < theta.theta,
          f"M_q(0)={mq0:.3g}, theta={theta.theta:.3g}")


# ---------------------------------------------------------------------------
# 10. determinism and interfaces


def test_c10_determinism_and_interfaces():
    cfgs = [parse_config("family = integrable_power\nn_cells = 64\nt_end = 0.02\n"),
            parse_config("geometry = radial\nn_dim = 4\nfamily = critical_power\nn_cells = 32\n"
                         "u0 = perturbed\nmass = 3\nv0 = match\nt_end = 0.02\n")]
    identical, schema_ok = True, True
    for cfg in cfgs:
        a, b = execute(cfg), execute(cfg)
        ta = timeseries_text(a)
        identical &= ta == timeseries_text(b)
        identical &= ta.splitlines()[0] == CSV_HEADER
        try:
            validate_summary(summary_dict(a))
        except Exception:
            schema_ok = False
    header_ok = CSV_HEADER == ("t,u_max,u_mass,v_mass,L,diss_v,diss_flux,Mq_or_M2,"
                               "rhs_identity,rhs_bound,vt_l2,v_linf")
    check("10 determinism and interfaces", identical and schema_ok and header_ok,
          f"bit-identical CSVs {identical}, exact header {header_ok}, summaries valid {schema_ok}")
