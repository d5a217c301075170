import numpy as np
import pytest
from hypothesis import given, strategies as st

from kscollapse.config import parse_config
from kscollapse.grid import Grid, GridState, StepFlag, TimeControls
from kscollapse.kinetics import DiffusionSpec
from kscollapse.records import Outcome, RunRecord, Termination, detect_blowup
from kscollapse.solver1d import run, step

CTRL = TimeControls(dt_init=1e-4, dt_min=1e-12, dt_max=1e-2, cfl_safety=0.9, t_end=1.0)

specs = st.one_of(st.floats(0.1, 5).map(DiffusionSpec.constant),
                  st.floats(1.05, 4).map(DiffusionSpec.integrable_power))


@st.composite
def states(draw, n_min=8, n_max=256):
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    scale = draw(st.floats(1e-2, 1e2))
    u = scale * rng.random(n) ** 2
    v = scale * rng.random(n)
    if draw(st.booleans()):
        u[rng.integers(n)] = 0.0
    return GridState(Grid.interval(n), u, v)


def _cell_avg_cos(grid, amp):
    f = grid.faces
    return 1 + amp * (np.sin(np.pi * f[1:]) - np.sin(np.pi * f[:-1])) / (np.pi * grid.h)


class TestStep:
    @pytest.mark.parametrize("m,tau", [(0.5, 0.1), (1.0, 1.0), (7.0, 3.0)])
    def test_constant_state_fixed_for_many_steps(self, m, tau):
        g = Grid.interval(64)
        s = GridState(g, np.full(64, m), np.full(64, m))
        for _ in range(1000):
            s = step(s, tau, DiffusionSpec.integrable_power(2), CTRL).state
        assert np.max(np.abs(s.u - m)) <= 1e-13 * m
        assert np.max(np.abs(s.v - m)) <= 1e-13 * m

    @given(states(), st.floats(0.05, 5), specs)
    def test_mass_positivity_flags(self, s, tau, spec):
        out = step(s, tau, spec, CTRL, threshold=np.inf)
        assert out.flag is StepFlag.OK
        assert out.state.is_valid()
        m0 = s.grid.integrate(s.u)
        assert abs(out.state.grid.integrate(out.state.u) - m0) <= 1e-14 * max(m0, 1e-300) * 4
        assert 0 < out.dt_used <= CTRL.dt_max

    @given(states(), st.floats(0.05, 5), specs)
    def test_mirror_equivariance(self, s, tau, spec):
        a = step(s, tau, spec, CTRL, threshold=np.inf)
        b = step(s.mirrored(), tau, spec, CTRL, threshold=np.inf)
        assert a.dt_used == pytest.approx(b.dt_used, rel=1e-13)
        scale = max(s.u.max(), s.v.max())
        assert np.max(np.abs(a.state.u[::-1] - b.state.u)) <= 1e-13 * scale
        assert np.max(np.abs(a.state.v[::-1] - b.state.v)) <= 1e-13 * scale

    def test_flags(self):
        g = Grid.interval(16)
        s = GridState(g, np.linspace(1, 2, 16), np.ones(16))
        assert step(s, 1.0, DiffusionSpec.constant(), CTRL, threshold=1.5).flag is StepFlag.BLOWUP
        tight = TimeControls(dt_init=1e-3, dt_min=1e-3, dt_max=1e-2)
        assert step(s, 1.0, DiffusionSpec.constant(100.0), tight).flag is StepFlag.DT_FLOOR
        bad = GridState(g, np.full(16, np.inf), np.ones(16))
        with np.errstate(invalid="ignore"):
            assert step(bad, 1.0, DiffusionSpec.constant(), CTRL).flag is StepFlag.NON_FINITE

    def test_rejects_radial_grid_and_bad_tau(self):
        s = GridState(Grid.ball(8, 3), np.ones(8), np.ones(8))
        with pytest.raises(ValueError):
            step(s, 1.0, DiffusionSpec.constant(), CTRL)
        with pytest.raises(ValueError):
            step(GridState(Grid.interval(8), np.ones(8), np.ones(8)), 0.0,
                 DiffusionSpec.constant(), CTRL)

    def test_self_convergence_linear_diffusion(self):
        # small amplitude: the upwind drift error is quadratic in the amplitude,
        # so the central diffusion flux sets the order
        T = 0.05
        ctrl = TimeControls(dt_init=1e-12, dt_min=1e-14, dt_max=1.0, cfl_safety=0.4, t_end=T)
        sols = []
        for n in (32, 64, 128, 256):
            g = Grid.interval(n)
            s = GridState(g, _cell_avg_cos(g, 0.01), np.ones(n))
            while s.t < T * (1 - 1e-14):
                s = step(s, 1.0, DiffusionSpec.constant(), ctrl, dt_cap=T - s.t,
                         threshold=np.inf).state
            sols.append(s.u)
        err = [np.sqrt(np.mean((a - 0.5 * (b[::2] + b[1::2])) ** 2)) for a, b in zip(sols, sols[1:])]
        orders = np.log2(np.array(err[:-1]) / np.array(err[1:]))
        assert np.all(orders >= 1.8), orders


def _record(series, term):
    rec = RunRecord(config=None)
    rec.step_u_max = list(series)
    rec.termination = term
    return rec


class TestDetectBlowup:
    def test_examples(self):
        assert detect_blowup(_record([1, 2, 10], Termination.BLOWUP)) is Outcome.UNBOUNDED_SUSPECTED
        assert detect_blowup(_record([1] * 50, Termination.COMPLETED)) is Outcome.COMPLETED_BOUNDED
        assert detect_blowup(_record([1] * 50, Termination.DT_FLOOR)) is Outcome.INCONCLUSIVE
        rising = np.geomspace(1, 1e4, 50)
        assert detect_blowup(_record(rising, Termination.DT_FLOOR)) is Outcome.UNBOUNDED_SUSPECTED
        assert detect_blowup(_record([1] * 20 + [100], Termination.COMPLETED)) is Outcome.INCONCLUSIVE
        assert detect_blowup(_record([1] * 5, Termination.MAX_STEPS)) is Outcome.INCONCLUSIVE

    def test_empty_record(self):
        with pytest.raises(ValueError):
            detect_blowup(_record([], Termination.COMPLETED))


class TestRun:
    def test_steady_state_completes_bounded(self):
        cfg = parse_config("u0 = constant\nmass = 1\nv0 = match\nt_end = 1\nn_cells = 32\n")
        rec = run(cfg)
        assert rec.outcome is Outcome.COMPLETED_BOUNDED
        assert np.allclose(rec.final_state.u, 1.0, atol=1e-13)
        assert np.allclose(rec.final_state.v, 1.0, atol=1e-13)
        assert rec.t_final == pytest.approx(1.0)

    def test_small_perturbation_decays(self):
        cfg = parse_config("u0 = perturbed\nmass = 1\namplitude = 0.05\nmode = 2\nv0 = match\n"
                           "t_end = 2\nn_cells = 64\n")
        rec = run(cfg)
        assert rec.outcome is Outcome.COMPLETED_BOUNDED
        s = rec.final_state
        # slowest Neumann mode k = 2: rate at least the pure diffusion rate minus the drift gain
        assert np.max(np.abs(s.u - 1)) < 0.05 * np.exp(-1.0)
        L = rec.column("L")
        assert np.all(np.diff(L) <= 1e-8)

    def test_rejects_radial_config(self):
        with pytest.raises(ValueError):
            run(parse_config("geometry = radial\nn_dim = 3\n"))
