"""Initial data: concentrated bumps, admissible v0, and smooth perturbations."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import Grid


class ResolutionError(ValueError):
    """The requested concentration is not representable on the grid."""

    def __init__(self, msg, floor=None):
        super().__init__(msg)
        self.floor = floor


class Profile(str, enum.Enum):
    PLATEAU = "plateau"
    SMOOTH = "smooth"


class Placement(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    CENTER = "center"


@dataclass(frozen=True)
class BumpRecipe:
    mass: float
    width: float = 1.0
    profile: Profile = Profile.PLATEAU
    placement: Placement = Placement.RIGHT

    def __post_init__(self):
        object.__setattr__(self, "profile", Profile(self.profile))
        object.__setattr__(self, "placement", Placement(self.placement))
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not (0 < self.width <= 1):
            raise ValueError("width must lie in (0, 1]")


def _normalize(u, grid: Grid, target: float):
    u = u * (target / grid.integrate(u))
    return u


def bump_1d(recipe: BumpRecipe, grid: Grid) -> np.ndarray:
    """Nonnegative u0 supported on a strip of width ``recipe.width`` with mass m.

    The plateau occupies whole cells, so its support is ``round(width/h)``
    cells.  The smooth profile is (1 - s^2)^3 in the scaled distance s from
    the bump's centre, which is C^2 across the support edge.
    """
    if grid.radial:
        raise ValueError("bump_1d builds interval data")
    h = grid.h
    eps = recipe.width
    if eps < 2 * h * (1 - 1e-12):
        raise ResolutionError(f"width {eps} is below two cells (h = {h})", floor=2 * h)
    x = grid.centers
    if recipe.placement is Placement.LEFT:
        dist, half = x, eps
    elif recipe.placement is Placement.RIGHT:
        dist, half = 1.0 - x, eps
    else:
        dist, half = np.abs(x - 0.5), eps / 2
    if recipe.profile is Profile.PLATEAU:
        k = max(2, int(round(eps / h)))
        u = np.zeros(grid.n_cells)
        if recipe.placement is Placement.LEFT:
            u[:k] = 1.0
        elif recipe.placement is Placement.RIGHT:
            u[grid.n_cells - k:] = 1.0
        else:
            c = grid.n_cells // 2
            lo = c - k // 2
            u[lo:lo + k] = 1.0
    else:
        s = np.clip(dist / half, 0.0, 1.0)
        u = (1.0 - s * s) ** 3
    return _normalize(u, grid, recipe.mass)


def v0_admissible(m: float, q: float, excess: float, grid: Grid) -> np.ndarray:
    """Constant v0 whose mass exceeds m by the fraction ``excess`` of the
    admissible window (0, m/(2(q+1)))."""
    if not m > 0:
        raise ValueError("mass must be positive")
    if not q > 2:
        raise ValueError("the moment exponent q must exceed 2")
    if not (0 < excess < 1):
        raise ValueError("excess fraction must lie strictly inside (0, 1)")
    width = m / (2 * (q + 1))
    v0 = np.full(grid.n_cells, m + excess * width)
    gap = grid.integrate(v0) - m
    if not (0 < gap < width):
        raise ValueError("v0 mass falls outside the admissible window at this precision")
    return v0


def v0_window(m: float, q: float) -> tuple[float, float]:
    """Open interval that the excess int v0 - m must lie in."""
    return 0.0, m / (2 * (q + 1))


def radial_plateau(M: float, n_inner: int, grid: Grid) -> np.ndarray:
    """Plateau on the innermost ``n_inner`` cells with mean density M over the ball."""
    if not grid.radial:
        raise ValueError("radial_plateau builds radial data")
    u = np.zeros(grid.n_cells)
    u[:n_inner] = 1.0
    return _normalize(u, grid, M / grid.n_dim)


def radial_smooth(M: float, radius: float, grid: Grid) -> np.ndarray:
    """(1 - (r/radius)^2)^3 near the origin, scaled to mean density M over the ball."""
    if not grid.radial:
        raise ValueError("radial_smooth builds radial data")
    s = np.clip(grid.centers / radius, 0.0, 1.0)
    u = (1.0 - s * s) ** 3
    if not u.any():
        raise ResolutionError(f"radius {radius} misses every cell centre", floor=grid.h / 2)
    return _normalize(u, grid, M / grid.n_dim)


def radial_concentrated(M: float, n_dim: int, target_M2: float, grid: Grid,
                        profile: Profile | str = Profile.PLATEAU) -> np.ndarray:
    """Widest concentrated profile whose M_2 does not exceed ``target_M2``.

    ``plateau`` searches over the number of inner cells; ``smooth`` bisects on
    the support radius of :func:`radial_smooth`, keeping at least four cells
    inside the support.
    """
    from .diagnostics import m2_radial  # diagnostics imports grid types only

    if not M > 0 or not target_M2 > 0:
        raise ValueError("M and target_M2 must be positive")
    if grid.n_dim != n_dim:
        raise ValueError("grid dimension does not match n")
    profile = Profile(profile)

    def m2_of(u):
        U = np.concatenate(([0.0], np.cumsum(grid.volumes * u)))
        return m2_radial(U, M, n_dim, grid)

    if profile is Profile.SMOOTH:
        lo, hi = 4 * grid.h, 1.0
        floor = m2_of(radial_smooth(M, lo, grid))
        if floor > target_M2:
            raise ResolutionError(
                f"target M_2 {target_M2:.3e} below the grid floor {floor:.3e}", floor=floor)
        if m2_of(radial_smooth(M, hi, grid)) <= target_M2:
            return radial_smooth(M, hi, grid)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if m2_of(radial_smooth(M, mid, grid)) <= target_M2:
                lo = mid
            else:
                hi = mid
        return radial_smooth(M, lo, grid)

    def m2(k):
        return m2_of(radial_plateau(M, k, grid))

    floor = m2(1)
    if floor > target_M2:
        raise ResolutionError(
            f"target M_2 {target_M2:.3e} below the grid floor {floor:.3e}", floor=floor)
    lo, hi = 1, grid.n_cells
    if m2(hi) <= target_M2:
        return radial_plateau(M, hi, grid)
    while hi - lo > 1:  # m2(lo) <= target < m2(hi)
        mid = (lo + hi) // 2
        if m2(mid) <= target_M2:
            lo = mid
        else:
            hi = mid
    return radial_plateau(M, lo, grid)


def v0_quasi_steady(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Discrete solution of -Lap v + v = u, so that v_t = 0 at t = 0."""
    from .fv import steady_v

    return steady_v(grid, u)


def perturbed_constant(mean: float, amplitude: float, mode: int, grid: Grid) -> np.ndarray:
    """mean * (1 + amplitude cos(mode pi x)), renormalized to the exact mean."""
    if not (0 <= amplitude < 1):
        raise ValueError("amplitude must lie in [0, 1) to keep u positive")
    u = mean * (1.0 + amplitude * np.cos(mode * np.pi * grid.centers))
    return _normalize(u, grid, mean * grid.total_volume)


def constant(value: float, grid: Grid) -> np.ndarray:
    return np.full(grid.n_cells, float(value))
