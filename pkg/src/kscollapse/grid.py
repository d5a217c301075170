"""Cell-centred grids on [0, 1] (interval or radial shell) and solver state types."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform partition of [0, 1] into cells.

    ``n_dim == 1`` is the interval with unit face weights.  ``n_dim >= 3`` is
    the radial variable of the unit ball: face weights r^(n-1) and exact
    shell measures (r_{i+1}^n - r_i^n)/n, i.e. the measure r^(n-1) dr with
    the surface factor n|B(0,1)| folded out.
    """

    n_cells: int
    n_dim: int = 1
    faces: np.ndarray = field(init=False, repr=False)
    centers: np.ndarray = field(init=False, repr=False)
    volumes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_cells < 2:
            raise ValueError("need at least 2 cells")
        if self.n_dim != 1 and self.n_dim < 3:
            raise ValueError("n_dim must be 1 (interval) or >= 3 (radial ball)")
        n = self.n_cells
        faces = np.arange(n + 1) / n
        faces[-1] = 1.0
        centers = (np.arange(n) + 0.5) / n
        if self.n_dim == 1:
            volumes = np.full(n, 1.0 / n)
            weights = np.ones(n + 1)
        else:
            d = self.n_dim
            volumes = np.diff(faces**d) / d
            weights = faces ** (d - 1)
        for name, arr in (("faces", faces), ("centers", centers),
                          ("volumes", volumes), ("weights", weights)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def interval(cls, n_cells: int) -> "Grid":
        return cls(n_cells, 1)

    @classmethod
    def ball(cls, n_cells: int, n_dim: int) -> "Grid":
        if n_dim < 3:
            raise ValueError("radial solver needs n >= 3")
        return cls(n_cells, n_dim)

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def radial(self) -> bool:
        return self.n_dim >= 3

    @property
    def total_volume(self) -> float:
        """Sum of cell measures: 1 on the interval, 1/n radially."""
        return 1.0 if self.n_dim == 1 else 1.0 / self.n_dim

    @property
    def ball_volume(self) -> float:
        """|B(0,1)| in R^n."""
        d = self.n_dim
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1)

    @property
    def surface_factor(self) -> float:
        """n|B(0,1)|: converts radial-measure integrals to ball integrals."""
        return 1.0 if self.n_dim == 1 else self.n_dim * self.ball_volume

    def integrate(self, f: np.ndarray) -> float:
        return float(np.dot(self.volumes, f))

    def mirror(self, f: np.ndarray) -> np.ndarray:
        if self.radial:
            raise ValueError("mirroring only makes sense on the interval")
        return f[::-1].copy()


@dataclass(frozen=True)
class GridState:
    grid: Grid
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != (self.grid.n_cells,) or v.shape != (self.grid.n_cells,):
            raise ValueError("u and v must have one value per cell")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    @property
    def h(self) -> float:
        return self.grid.h

    def is_valid(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))
                    and self.u.min() >= 0 and self.v.min() >= 0)

    def evolve(self, u, v, dt) -> "GridState":
        return replace(self, u=u, v=v, t=self.t + dt)

    def mirrored(self) -> "GridState":
        return replace(self, u=self.grid.mirror(self.u), v=self.grid.mirror(self.v))


# the radial solver works on the same container with a radial grid
RadialGridState = GridState


@dataclass(frozen=True)
class TimeControls:
    dt_init: float = 1e-4
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    cfl_safety: float = 0.9
    t_end: float = 1.0
    u_blowup_threshold: float | None = None
    capacity_fraction: float = 0.5
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not (0 < self.cfl_safety < 1):
            raise ValueError("cfl_safety must lie in (0, 1)")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not (0 < self.capacity_fraction <= 1):
            raise ValueError("capacity_fraction must lie in (0, 1]")

    def threshold_for(self, state: GridState) -> float:
        """Blowup sentinel for this grid.

        Defaults to 1e6 times the mean density, but never above
        ``capacity_fraction`` of the largest density the grid can hold
        (all mass in the smallest cell), which a discrete solution
        cannot exceed.  The fraction is measured from the initial maximum,
        so data that already sits above the plain fraction is not flagged
        at step one.
        """
        if self.u_blowup_threshold is not None:
            return float(self.u_blowup_threshold)
        g = state.grid
        mass = g.integrate(state.u)
        mean = mass / g.total_volume
        capacity = mass / g.volumes.min()
        top = float(state.u.max())
        return min(1e6 * mean, top + self.capacity_fraction * (capacity - top))


class StepFlag(str, enum.Enum):
    OK = "OK"
    DT_FLOOR = "DtFloorHit"
    BLOWUP = "BlowupThresholdHit"
    NON_FINITE = "NonFiniteDetected"


@dataclass(frozen=True)
class StepOutcome:
    state: GridState
    dt_used: float
    flag: StepFlag = StepFlag.OK
