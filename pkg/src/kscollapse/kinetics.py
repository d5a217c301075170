"""Diffusion nonlinearity a(u), its primitives, the entropy density Phi, and
the concave majorant B of r -> -r A(r).

Three closed-form families are supported::

    constant          a(u) = c
    integrable_power  a(u) = (1 + u)^(-p),     p > 1
    critical_power    a(u) = (1 + u)^(1 - 2/n), n >= 3

Two primitive conventions are kept apart on purpose.  ``A_tail`` is the
tail integral ``-int_u^inf a`` (only finite for the integrable family) and
``A_primitive`` is ``int_0^u a`` with ``A(0) = 0``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

U_FLOOR = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


class KineticsError(ValueError):
    """Domain or convention error raised by the kinetics functions."""


class Family(str, enum.Enum):
    CONSTANT = "constant"
    INTEGRABLE_POWER = "integrable_power"
    CRITICAL_POWER = "critical_power"


@dataclass(frozen=True)
class DiffusionSpec:
    """Tag plus parameters of the diffusion nonlinearity."""

    family: Family
    c: float = 1.0
    p: float = 2.0
    n: int = 3

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.CONSTANT and not self.c > 0:
            raise KineticsError(f"constant diffusion needs c > 0, got {self.c}")
        if self.family is Family.INTEGRABLE_POWER and not self.p > 1:
            raise KineticsError(f"integrable power needs p > 1, got {self.p}")
        if self.family is Family.CRITICAL_POWER and (int(self.n) != self.n or self.n < 3):
            raise KineticsError(f"critical power needs integer n >= 3, got {self.n}")

    @classmethod
    def constant(cls, c: float = 1.0) -> "DiffusionSpec":
        return cls(Family.CONSTANT, c=float(c))

    @classmethod
    def integrable_power(cls, p: float) -> "DiffusionSpec":
        return cls(Family.INTEGRABLE_POWER, p=float(p))

    @classmethod
    def critical_power(cls, n: int) -> "DiffusionSpec":
        return cls(Family.CRITICAL_POWER, n=int(n))

    @property
    def closed_form_A(self) -> bool:
        # all three families have elementary primitives
        return True

    @property
    def has_integrable_tail(self) -> bool:
        return self.family is Family.INTEGRABLE_POWER

    @property
    def exponent(self) -> float:
        """Exponent g of a(u) = (1 + u)^g for the power families."""
        if self.family is Family.INTEGRABLE_POWER:
            return -self.p
        if self.family is Family.CRITICAL_POWER:
            return 1.0 - 2.0 / self.n
        return 0.0

    def describe(self) -> dict:
        d = {"family": self.family.value}
        if self.family is Family.CONSTANT:
            d["c"] = self.c
        elif self.family is Family.INTEGRABLE_POWER:
            d["p"] = self.p
        else:
            d["n"] = self.n
        return d


def _nonneg(u, name="u"):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(np.isnan(u)):
        raise KineticsError(f"{name} must be >= 0")
    return u


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def a_eval(spec: DiffusionSpec, u):
    u = _nonneg(u)
    if spec.family is Family.CONSTANT:
        res = np.full_like(u, spec.c)
    else:
        res = (1.0 + u) ** spec.exponent
    return _out(res, u)


def A_tail(spec: DiffusionSpec, u):
    """``-int_u^inf a(s) ds``; nonpositive, nondecreasing, vanishing at infinity."""
    if not spec.has_integrable_tail:
        raise KineticsError(
            f"A_tail needs an integrable diffusion, {spec.family.value} has an infinite tail"
        )
    u = _nonneg(u)
    k = spec.p - 1.0
    return _out(-((1.0 + u) ** (-k)) / k, u)


def A_primitive(spec: DiffusionSpec, u):
    """``int_0^u a(s) ds`` (the normalization A(0) = 0)."""
    u = _nonneg(u)
    if spec.family is Family.CONSTANT:
        res = spec.c * u
    else:
        k = spec.exponent + 1.0
        # expm1/log1p keeps full relative accuracy for small u
        res = np.expm1(k * np.log1p(u)) / k
    return _out(res, u)


def _log_integral(spec: DiffusionSpec, u: np.ndarray) -> np.ndarray:
    """G(u) = int_1^u a(s)/s ds, by composite Gauss-Legendre in y = ln s."""
    y = np.log(u)
    if spec.family is Family.CONSTANT:
        return spec.c * y
    n_panels = max(1, int(math.ceil(float(np.max(np.abs(y), initial=0.0)))))
    edges = np.arange(n_panels)[:, None] + _GL_NODES[None, :]  # (panels, nodes)
    frac = (edges / n_panels).ravel()
    t = y[..., None] * frac
    vals = (1.0 + np.exp(t)) ** spec.exponent
    w = np.tile(_GL_WEIGHTS, n_panels) / n_panels
    return y * (vals @ w)


def phi_eval(spec: DiffusionSpec, u):
    """Phi with Phi(1) = Phi'(1) = 0 and Phi'' = a(u)/u."""
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0)):
        raise KineticsError("phi_eval needs u > 0")
    g = _log_integral(spec, u)
    if spec.family is Family.CONSTANT:
        res = spec.c * (u * np.log(u) - u + 1.0)
    else:
        res = u * g - (A_primitive(spec, u) - A_primitive(spec, 1.0))
    return _out(res, u)


def phi_floored(spec: DiffusionSpec, u):
    """Phi evaluated at max(u, U_FLOOR); used inside the Lyapunov integrand."""
    return phi_eval(spec, np.maximum(np.asarray(u, dtype=float), U_FLOOR))


# ---------------------------------------------------------------------------
# concave majorant


def upper_concave_envelope(x, y):
    """Vertices of the least concave majorant of the points (x_i, y_i).

    Andrew's monotone chain restricted to the upper hull.  Collinear
    interior points are dropped, so collinear data gives two vertices.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("x and y must be nonempty 1-d arrays of equal length")
    order = np.lexsort((-y, x))
    xs, ys = x[order], y[order]
    keep = np.concatenate(([True], np.diff(xs) > 0))  # highest y per abscissa
    xs, ys = xs[keep], ys[keep]
    hx: list[float] = []
    hy: list[float] = []
    for px, py in zip(xs, ys):
        while len(hx) >= 2:
            cross = (hx[-1] - hx[-2]) * (py - hy[-2]) - (hy[-1] - hy[-2]) * (px - hx[-2])
            if cross >= 0:
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(px)
        hy.append(py)
    return np.array(hx), np.array(hy)


@dataclass(frozen=True)
class MajorantB:
    """Piecewise-linear concave function with a linear tail beyond r_max."""

    r: np.ndarray
    values: np.ndarray
    asymptotic_slope: float
    r_max: float
    sup_data: float = field(default=float("nan"))

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        vals = np.array(self.values, dtype=float)
        r.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_points(cls, x, y, asymptotic_slope: float | None = None) -> "MajorantB":
        """Upper concave envelope of samples, extended linearly past the last one."""
        hx, hy = upper_concave_envelope(x, y)
        slopes = np.diff(hy) / np.diff(hx)
        if slopes.size == 0:
            tail = 0.0 if asymptotic_slope is None else float(asymptotic_slope)
        elif asymptotic_slope is None:
            tail = float(slopes[-1])
        else:
            tail = min(float(asymptotic_slope), float(slopes[-1]))
        return cls(hx, hy, tail, float(hx[-1]), float(np.max(y)))

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.r.tolist(), self.values.tolist()))

    @property
    def slopes(self) -> np.ndarray:
        return np.append(np.diff(self.values) / np.diff(self.r), self.asymptotic_slope)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise KineticsError("B is defined on r >= 0")
        res = np.interp(r, self.r, self.values)
        beyond = r > self.r[-1]
        res = np.where(beyond, self.values[-1] + self.asymptotic_slope * (r - self.r[-1]), res)
        return _out(res, r)


def _tail_shape(spec: DiffusionSpec):
    """f(r) = -r A_tail(r), f'(r), and the location of the maximum of f."""
    p = spec.p
    k = p - 1.0

    def f(r):
        return r * (1.0 + r) ** (-k) / k

    def df(r):
        return (1.0 + r) ** (-p) * (1.0 + (2.0 - p) * r) / k

    r_peak = 1.0 / (p - 2.0) if p > 2 else math.inf
    return f, df, r_peak


def majorant_samples(spec: DiffusionSpec, r_max: float, samples: int) -> np.ndarray:
    """Abscissae where B is tangent to -rA: 0, a geometric ladder up to r_max, and the peak."""
    _, _, r_peak = _tail_shape(spec)
    lo = min(1e-4, r_max / samples)
    pts = np.concatenate(([0.0], np.geomspace(lo, r_max, samples - 1)))
    if r_peak < r_max:
        pts = np.unique(np.append(pts, r_peak))
    return pts


def build_majorant(spec: DiffusionSpec, r_max: float, samples: int = 400) -> MajorantB:
    """Concave piecewise-linear B with 0 <= -rA(r) <= B(r) and slope -> 0.

    f = -rA is concave up to its maximum (at 1/(p-2) when p > 2, nowhere
    otherwise) and decreasing afterwards, so the running maximum of f is
    concave.  B is the lower envelope of tangent lines of that running
    maximum at the sample points: it touches f at every sample, lies above
    f everywhere, and its last tangent carries the asymptotic slope, which
    tends to 0 as r_max grows.
    """
    if not spec.has_integrable_tail:
        raise KineticsError("build_majorant needs an integrable diffusion")
    if not r_max > 0:
        raise KineticsError("r_max must be positive")
    if samples < 3:
        raise KineticsError("need at least 3 samples")
    f, df, r_peak = _tail_shape(spec)
    pts = majorant_samples(spec, r_max, samples)
    capped = np.minimum(pts, r_peak)
    fx = f(capped)
    slope = np.where(pts < r_peak, df(pts), 0.0)
    icpt = fx - slope * pts

    # consecutive tangent intersections are the kinks of the lower envelope
    ds = slope[:-1] - slope[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = np.where(ds > 0, (icpt[1:] - icpt[:-1]) / ds, np.nan)
    kinks = xi[np.isfinite(xi) & (xi > 0) & (xi < r_max)]
    nodes = np.unique(np.concatenate((pts, kinks)))
    vals = np.min(slope[None, :] * nodes[:, None] + icpt[None, :], axis=1)
    # a relative lift of a few ulps keeps B >= f after rounding in evaluation
    vals = vals * (1.0 + 1e-14)
    # the envelope only raises values, so the majorant property is kept
    maj = MajorantB.from_points(nodes, vals, asymptotic_slope=float(slope[-1]))
    sup = 1.0 / (spec.p - 1.0) if spec.p <= 2 else float(f(r_peak))
    if spec.p < 2:
        sup = math.inf
    return MajorantB(maj.r, maj.values, maj.asymptotic_slope, float(r_max), sup)


def beta_eval(B: MajorantB, r):
    """beta(r) = B(r)/r for r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise KineticsError("beta is defined for r > 0")
    return _out(B(r) / r, r)


def beta_infinity(B: MajorantB) -> float:
    """Limit of B(r)/r as r -> infinity."""
    return float(B.asymptotic_slope)
