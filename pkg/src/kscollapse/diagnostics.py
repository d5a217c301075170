"""Functionals and inequality ingredients evaluated on grid states.

Grid functions are piecewise constant in each cell, so cumulative masses
are piecewise linear (interval) or linear in r^n (radial).  Integrals of
powers of the cumulative are evaluated cell by cell in closed form or with
Gauss rules that are exact for the polynomial integrands that occur, so the
inequality slacks below carry roundoff only, not quadrature error.

Radial integrals use the measure r^(n-1) dr (the surface factor n|B(0,1)|
folded out), so the cumulative mass satisfies U(1) = M/n for mean density M.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import fv
from .grid import Grid, GridState
from .kinetics import (U_FLOOR, DiffusionSpec, MajorantB, A_primitive, A_tail,
                       a_eval, beta_eval, phi_floored)


class DiagnosticsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sample containers


@dataclass(frozen=True)
class LyapunovSample:
    t: float
    L: float
    dissipation_v: float
    dissipation_flux: float


@dataclass(frozen=True)
class MomentSample:
    t: float
    value: float
    rhs_identity: float
    rhs_bound: float
    q: float | None = None


@dataclass
class MeasuredBounds:
    """Running suprema/infima along one trajectory."""

    c1: float = 0.0          # sup ||v||_inf
    c2: float = 0.0          # sup ||v_t||_2
    L_lower: float = math.inf

    def update(self, v_linf: float, vt_l2: float, L: float | None = None) -> None:
        self.c1 = max(self.c1, float(v_linf))
        self.c2 = max(self.c2, float(vt_l2))
        if L is not None:
            self.L_lower = min(self.L_lower, float(L))


# ---------------------------------------------------------------------------
# masses and cumulatives


def masses(state: GridState) -> tuple[float, float]:
    """Discrete integrals of u and v (radially: sum u_i omega_i = M/n)."""
    g = state.grid
    return g.integrate(state.u), g.integrate(state.v)


def mean_density(state: GridState) -> float:
    g = state.grid
    return g.integrate(state.u) / g.total_volume


def cumulative(state: GridState, f: np.ndarray | None = None) -> np.ndarray:
    """Face values of the running integral of ``f`` (default u); first entry is 0."""
    f = state.u if f is None else f
    out = np.empty(state.n_cells + 1)
    out[0] = 0.0
    np.cumsum(state.grid.volumes * f, out=out[1:])
    return out


# ---------------------------------------------------------------------------
# cellwise integrals on the interval

_GL12 = np.polynomial.legendre.leggauss(12)
_S12 = 0.5 * (_GL12[0] + 1.0)
_W12 = 0.5 * _GL12[1]


def _cell_power_integrals(U: np.ndarray, p: float, coef: np.ndarray | None = None):
    """Per cell of the unit interval: int_0^1 (U_i + s dU_i)^p (c0_i + s c1_i) ds.

    ``coef`` is an optional pair (c0, c1) of a linear weight; omitted means 1.
    Uses the antiderivative where dU >= U_i and a 12-point Gauss rule where
    the cell is a small relative increment (there the antiderivative cancels).
    """
    U0, U1 = U[:-1], U[1:]
    dU = U1 - U0
    c0, c1 = (np.ones_like(U0), np.zeros_like(U0)) if coef is None else coef
    out = np.empty_like(U0)
    closed = dU >= U0
    # tiny increments underflow d**2; the Gauss branch handles them exactly
    flat = dU <= 1e-100
    if np.any(closed & ~flat):
        i = closed & ~flat
        a, b, d = U0[i], U1[i], dU[i]
        P1 = (b ** (p + 1) - a ** (p + 1)) / (p + 1)
        P2 = (b ** (p + 2) - a ** (p + 2)) / (p + 2)
        # int_0^1 X^p ds = P1/d; int_0^1 s X^p ds = (P2 - a P1)/d^2
        out[i] = c0[i] * P1 / d + c1[i] * (P2 - a * P1) / d**2
    rest = ~closed | flat
    if np.any(rest):
        X = U0[rest, None] + _S12[None, :] * dU[rest, None]
        lin = c0[rest, None] + _S12[None, :] * c1[rest, None]
        out[rest] = (X**p * lin) @ _W12
    return out


def _interval_only(state: GridState):
    if state.grid.radial:
        raise DiagnosticsError("this diagnostic is defined on the interval")


def moment_q(U: np.ndarray, q: float) -> float:
    """(1/q) int_0^1 U^q dx for face values U of a piecewise-linear cumulative."""
    if not q > 2:
        raise DiagnosticsError(f"moment exponent must exceed 2, got {q}")
    U = np.maximum(np.asarray(U, dtype=float), 0.0)
    h = 1.0 / (U.size - 1)
    return float(h * _cell_power_integrals(U, q).sum() / q)


# ---------------------------------------------------------------------------
# Lyapunov functional


def lyapunov(state: GridState, spec: DiffusionSpec, tau: float = 1.0) -> LyapunovSample:
    """L = int Phi(u) - uv + |v_x|^2/2 + v^2/2 and its two dissipation rates.

    v_x is the face difference quotient; the flux dissipation uses the face
    flux a-bar u_x - u-bar v_x with arithmetic face means, skipping faces whose
    mean density is below the floor.
    """
    g = state.grid
    u, v = state.u, state.v
    h = g.h
    dv = (v[1:] - v[:-1]) / h
    w = g.weights[1:-1]
    L = g.integrate(phi_floored(spec, u) - u * v + 0.5 * v * v) + 0.5 * h * np.dot(w, dv * dv)
    vt = fv.v_rate(g, u, v, tau)
    diss_v = g.integrate(vt * vt)
    a = a_eval(spec, u)
    abar = 0.5 * (a[1:] + a[:-1])
    ubar = 0.5 * (u[1:] + u[:-1])
    flux = abar * (u[1:] - u[:-1]) / h - ubar * dv
    ok = ubar >= U_FLOOR
    diss_f = h * float(np.sum(w[ok] * flux[ok] ** 2 / ubar[ok]))
    return LyapunovSample(state.t, float(L), float(diss_v), diss_f)


def dissipation_residual(traj: list[LyapunovSample], tau: float = 1.0) -> float:
    """|L(t) + tau int ||v_t||^2 + int int flux^2/u - L(0)| with the trapezoid rule."""
    if len(traj) < 2:
        raise DiagnosticsError("need at least two samples")
    t = np.array([s.t for s in traj])
    dv = np.array([s.dissipation_v for s in traj])
    df = np.array([s.dissipation_flux for s in traj])
    integral = np.sum(0.5 * np.diff(t) * ((tau * dv + df)[1:] + (tau * dv + df)[:-1]))
    return float(abs(traj[-1].L + integral - traj[0].L))


def vt_norm(state: GridState, tau: float = 1.0) -> float:
    """||v_t||_2 from the second equation's right-hand side.

    On the interval this is the L^2(0,1) norm; radially the L^2(B(0,1))
    norm of the radial profile (surface factor included).
    """
    g = state.grid
    vt = fv.v_rate(g, state.u, state.v, tau)
    return math.sqrt(g.surface_factor * g.integrate(vt * vt))


def vt_time_difference(prev: GridState, nxt: GridState) -> float:
    """||(v_next - v_prev)/dt||_2; the finite-difference counterpart of :func:`vt_norm`."""
    g = prev.grid
    dt = nxt.t - prev.t
    if not dt > 0:
        raise DiagnosticsError("states must be strictly ordered in time")
    d = (nxt.v - prev.v) / dt
    return math.sqrt(g.surface_factor * g.integrate(d * d))


# ---------------------------------------------------------------------------
# generalized moment identity and the Lambda majorant (interval)


def moment_identity_rhs(state: GridState, spec: DiffusionSpec, tau: float, q: float) -> float:
    """d/dt M_q written as

    -(q-1) int U^(q-2) u A(u) + m^(q-1) A(u(1)) + int U^(q-1) u (U - V - tau V_t)

    with the tail primitive A and V_t the cumulative of the v equation's
    right-hand side.
    """
    _interval_only(state)
    g = state.grid
    u = state.u
    U = cumulative(state)
    m = U[-1]
    A = A_tail(spec, u)
    # u_i int_cell U^(q-2) dx = (U_{i+1}^(q-1) - U_i^(q-1))/(q-1)
    t1 = -float(np.dot(A, U[1:] ** (q - 1) - U[:-1] ** (q - 1)))
    t2 = m ** (q - 1) * float(A[-1])
    V = cumulative(state, state.v)
    Vt = cumulative(state, fv.v_rate(g, u, state.v, tau))
    W = U - V - tau * Vt
    coef = (W[:-1], np.diff(W))
    t3 = float(np.dot(u * g.h, _cell_power_integrals(U, q - 1, coef)))
    return t1 + t2 + t3


class Lambda:
    """r -> Lambda_m(r), the right-hand side of the differential inequality for M_q.

    ``exponent="printed"`` raises the Jensen factor to (q-2)/2; ``"derived"``
    uses (q-2)/q, which is what the Jensen chain itself delivers.
    """

    def __init__(self, m, q, tau, B: MajorantB, bounds: MeasuredBounds, exponent="printed"):
        if not m > 0:
            raise DiagnosticsError("mass must be positive")
        if not q > 2:
            raise DiagnosticsError("q must exceed 2")
        if exponent not in ("printed", "derived"):
            raise DiagnosticsError(f"unknown exponent convention {exponent!r}")
        self.m, self.q, self.tau, self.B = float(m), float(q), float(tau), B
        self.c1, self.c2 = float(bounds.c1), float(bounds.c2)
        self.exponent = exponent
        e = (q - 2) / 2 if exponent == "printed" else (q - 2) / q
        self._e = e
        self._jensen = (q - 1) * B(self.m) ** (2 / q) * (self.m ** (q + 1) / (q + 1)) ** e
        self._sqrt = self.c2 * self.tau * self.m ** (q / 2) / math.sqrt(q)
        self.drift = self.m ** (q + 1) / (2 * q * (q + 1))

    def at_zero(self) -> float:
        """Lambda(0+): beta evaluated at infinity, the other r-terms vanish."""
        return self._jensen * B_slope(self.B) ** self._e - self.drift

    def __call__(self, r, limit: bool = False):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or (np.any(r == 0) and not limit):
            raise DiagnosticsError("Lambda is evaluated at r > 0 (pass limit=True for r = 0)")
        rr = np.where(r > 0, r, 1.0)
        X = self.m ** (self.q + 1) / (self.q * (self.q + 1) * rr)
        beta = beta_eval(self.B, X)
        val = self.c1 * rr + self._jensen * beta**self._e + self._sqrt * np.sqrt(rr) - self.drift
        val = np.where(r > 0, val, self.at_zero())
        return float(val) if val.ndim == 0 else val


def B_slope(B: MajorantB) -> float:
    return max(float(B.asymptotic_slope), 0.0)


def lambda_fn(m, q, tau, B, bounds, exponent="printed") -> Lambda:
    return Lambda(m, q, tau, B, bounds, exponent)


@dataclass(frozen=True)
class ThetaResult:
    found: bool
    theta: float
    bracket: tuple[float, float]
    lambda_zero: float


class ThetaPreconditionError(DiagnosticsError):
    pass


def theta_find(lam: Callable, r_hi: float, tol: float = 1e-13,
               n_refine: int = 4096) -> ThetaResult:
    """First sign change of Lambda on (0, r_hi], refined by bisection.

    ``found=False`` means Lambda < 0 at every refinement point of
    [0, r_hi]; then ``theta`` is r_hi.
    """
    lam0 = lam.at_zero() if hasattr(lam, "at_zero") else float(lam(0.0))
    if not lam0 < 0:
        raise ThetaPreconditionError(
            f"Lambda(0+) = {lam0:.3e} >= 0; raise r_max of the majorant")
    grid = np.unique(np.concatenate((np.linspace(0, r_hi, n_refine + 1)[1:],
                                     np.geomspace(r_hi * 1e-14, r_hi, 512))))
    vals = np.asarray(lam(grid))
    pos = np.nonzero(vals >= 0)[0]
    if pos.size == 0:
        return ThetaResult(False, float(r_hi), (0.0, float(r_hi)), lam0)
    k = pos[0]
    lo = 0.0 if k == 0 else float(grid[k - 1])
    hi = float(grid[k])
    while hi - lo > tol * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f = lam(mid) if mid > 0 else lam0
        if f < 0:
            lo = mid
        else:
            hi = mid
    return ThetaResult(True, lo, (lo, hi), lam0)


def theta_scan(lam: Callable, r_hi: float, points: int = 10_000) -> tuple[float, float] | None:
    """Independent check for theta: uniform scan, then Brent's method in the bracket."""
    r = np.linspace(0.0, r_hi, points + 1)
    vals = np.array([lam.at_zero()] + list(np.asarray(lam(r[1:]))))
    pos = np.nonzero(vals >= 0)[0]
    if pos.size == 0:
        return None
    k = pos[0]
    lo, hi = r[k - 1], r[k]

    def f(x):
        return lam(x) if x > 0 else lam.at_zero()

    # purely relative tolerance: theta can be as small as 1e-17
    root = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(root), float(hi - lo)


def max_moment(m: float, q: float) -> float:
    """M_q never exceeds m^q/q because 0 <= U <= m."""
    return m**q / q


# ---------------------------------------------------------------------------
# Jensen chain for int U^(q-2) B(u)


@dataclass(frozen=True)
class JensenSlacks:
    measure_B: float       # Jensen for B(u)dx/int B(u), applied to t -> t^((q-2)/q)
    measure_dx: float      # Jensen for dx, applied to B
    measure_Uq: float      # Jensen for U^q dx/(q M_q), applied to B
    printed_tail: float    # last step redone with exponents (q-2)/2 in place of (q-2)/q
    vacuous: bool = False

    def as_tuple(self):
        return (self.measure_B, self.measure_dx, self.measure_Uq)


def jensen_chain_check(state: GridState, B: MajorantB, q: float, m: float | None = None) -> JensenSlacks:
    """Slacks of the three Jensen steps bounding int U^(q-2) B(u) dx.

    Each slack is (next bound) - (previous bound) in the chain, so every
    one must be nonnegative.
    """
    _interval_only(state)
    if not q > 2:
        raise DiagnosticsError("q must exceed 2")
    u = state.u
    if not np.any(u > 0):
        raise DiagnosticsError("u vanishes identically")
    h = state.h
    U = cumulative(state)
    m = U[-1] if m is None else float(m)
    Bu = np.asarray(B(u))
    intB = h * Bu.sum()
    if intB <= 0:
        return JensenSlacks(0.0, 0.0, 0.0, 0.0, vacuous=True)
    Iq = h * _cell_power_integrals(U, q)       # int_cell U^q
    qM = Iq.sum()
    lhs = h * float(np.dot(Bu, _cell_power_integrals(U, q - 2)))
    BUq = float(np.dot(Bu, Iq))
    e = (q - 2) / q
    E1 = intB ** (2 / q) * BUq**e
    Bm = float(B(m))
    E2 = Bm ** (2 / q) * BUq**e
    X = float(np.dot(u, Iq)) / qM
    E3 = Bm ** (2 / q) * qM**e * float(B(X)) ** e
    Xp = m ** (q + 1) / ((q + 1) * qM)
    E4 = qM ** ((q - 2) / 2) * Bm ** (2 / q) * float(B(Xp)) ** ((q - 2) / 2)
    return JensenSlacks(E1 - lhs, E2 - E1, E3 - E2, E4 - E3)


# ---------------------------------------------------------------------------
# radial second moment


@lru_cache(maxsize=64)
def _radial_nodes(n_cells: int, n_dim: int, extra: int):
    grid = Grid.ball(n_cells, n_dim)
    k = (3 * n_dim) // 2 + extra
    x, w = np.polynomial.legendre.leggauss(k)
    lo, hi = grid.faces[:-1, None], grid.faces[1:, None]
    r = lo + 0.5 * (x[None, :] + 1.0) * (hi - lo)
    w = 0.5 * w[None, :] * (hi - lo)
    rn0, rn1 = lo**n_dim, hi**n_dim
    frac = (r**n_dim - rn0) / (rn1 - rn0)
    for arr in (r, w, frac):
        arr.flags.writeable = False
    return r, w, frac


def _radial_gauss(grid: Grid, extra: int = 2):
    """Gauss points/weights per cell, exact for polynomials of degree 3n + 1."""
    r, w, _ = _radial_nodes(grid.n_cells, grid.n_dim, extra)
    return r, w


def _radial_U(grid: Grid, U_faces: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Cumulative inside cells: linear in r^n between face values."""
    r0, _, frac = _radial_nodes(grid.n_cells, grid.n_dim, 2)
    if r is not r0:
        n = grid.n_dim
        rn0, rn1 = grid.faces[:-1, None] ** n, grid.faces[1:, None] ** n
        frac = (r**n - rn0) / (rn1 - rn0)
    return U_faces[:-1, None] + frac * np.diff(U_faces)[:, None]


def m2_radial(U: np.ndarray, M: float, n: int, grid: Grid | None = None) -> float:
    """(1/2) int_0^1 (M/n - U)^2 r^(n-1) dr for a cumulative given at faces."""
    U = np.asarray(U, dtype=float)
    grid = Grid.ball(U.size - 1, n) if grid is None else grid
    r, w = _radial_gauss(grid)
    Ur = _radial_U(grid, U, r)
    return float(0.5 * np.sum(w * (M / n - Ur) ** 2 * r ** (n - 1)))


def m2_of_state(state: GridState) -> float:
    g = state.grid
    return m2_radial(cumulative(state), mean_density(state), g.n_dim, g)


def m2_identity_rhs(state: GridState, spec: DiffusionSpec) -> float:
    """d/dt M_2 after integration by parts:

    int [2(n-1) r^(2n-3)(M/n - U) - r^(2n-2) U_r] A(u) dr - (M/n)^3/6
      + int (M/n - U)^2 r^(n-1) (v_t + v)/2 dr,   A(0) = 0.
    """
    g = state.grid
    n = g.n_dim
    u, v = state.u, state.v
    M = mean_density(state)
    U = cumulative(state)
    r, w = _radial_gauss(g)
    Ur = _radial_U(g, U, r)
    A = A_primitive(spec, u)[:, None]
    ucell = u[:, None]
    dev = M / n - Ur
    kern = 2 * (n - 1) * r ** (2 * n - 3) * dev - r ** (3 * n - 3) * ucell
    t1 = float(np.sum(w * kern * A))
    vt = fv.v_rate(g, u, v, 1.0)[:, None]
    t3 = float(np.sum(w * 0.5 * dev**2 * r ** (n - 1) * (vt + v[:, None])))
    return t1 - (M / n) ** 3 / 6 + t3


def leading_terms(M: float, n: int) -> float:
    """Mass-only part of the M_2 inequality; negative exactly when M > m_star(n)."""
    K = (2 * (n - 1)) ** (2 - 2 / n) / ((2 - 2 / n) * (3 - 2 / n))
    return K * (M / n) ** (3 - 2 / n) - (M / n) ** 3 / 6


def m_star(n: int) -> float:
    """Mean density at which the leading terms change sign."""
    if int(n) != n or n < 3:
        raise DiagnosticsError(f"m_star needs integer n >= 3, got {n}")
    K = (2 * (n - 1)) ** (2 - 2 / n) / ((2 - 2 / n) * (3 - 2 / n))
    return n * (6 * K) ** (n / 2)


def istotne_rhs(state: GridState, M: float, n: int, bounds: MeasuredBounds,
                vt_power: float = 0.5) -> float:
    """Upper bound for d/dt M_2 from measured ||v||_inf and ||v_t||_{L^2(B)}.

    ``vt_power`` is the exponent on ||v_t||; the default 0.5 keeps the square
    root, 1 is what the Cauchy-Schwarz step produces.
    """
    g = state.grid
    M2 = m2_radial(cumulative(state), M, n, g)
    return _m2_bound(M2, M, n, bounds.c1, bounds.c2, g.ball_volume, vt_power)


def _m2_bound(M2, M, n, c1, c2, ball_volume, vt_power):
    return (leading_terms(M, n)
            + (n - 1) * (2 * n) ** (1 - 2 / n) * (M / n) ** (4 / n) * M2 ** (1 - 2 / n)
            + c1 * M2
            + M / (n**1.5 * math.sqrt(ball_volume)) * math.sqrt(M2) * c2**vt_power)


@dataclass(frozen=True)
class RadialTermSlacks:
    term: float
    term1_bound: float
    term2_lhs: float
    term2_rhs: float

    @property
    def slack_term1(self) -> float:
        return self.term1_bound - self.term

    @property
    def slack_term2(self) -> float:
        return self.term2_rhs - self.term2_lhs


def radial_term_checks(state: GridState) -> RadialTermSlacks:
    """Both steps bounding the A(u) integral for a(u) = (1+u)^(1-2/n)."""
    g = state.grid
    n = g.n_dim
    spec = DiffusionSpec.critical_power(n)
    u = state.u
    M = mean_density(state)
    U = cumulative(state)
    r, w = _radial_gauss(g)
    Ur = _radial_U(g, U, r)
    dev = M / n - Ur
    A = A_primitive(spec, u)[:, None]
    ucell = u[:, None]
    term = float(np.sum(w * (2 * (n - 1) * r ** (2 * n - 3) * dev - r ** (3 * n - 3) * ucell) * A))
    K = (2 * (n - 1)) ** (2 - 2 / n) / ((2 - 2 / n) * (3 - 2 / n))
    # U_r = r^(n-1) u inside a cell
    t2_lhs = 2 * (n - 1) * float(np.sum(w * r ** (n - 2) * dev * r ** (n - 1) * ucell))
    M2 = m2_radial(U, M, n, g)
    t2_rhs = (n - 1) * (2 * n) ** (1 - 2 / n) * (M / n) ** (4 / n) * M2 ** (1 - 2 / n)
    return RadialTermSlacks(term, K * (M / n) ** (3 - 2 / n) + t2_lhs, t2_lhs, t2_rhs)
