"""Run records and the blowup classification."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import LyapunovSample, MeasuredBounds, MomentSample

CSV_HEADER = ("t,u_max,u_mass,v_mass,L,diss_v,diss_flux,Mq_or_M2,"
              "rhs_identity,rhs_bound,vt_l2,v_linf")
CSV_FIELDS = tuple(CSV_HEADER.split(","))


class Outcome(str, enum.Enum):
    COMPLETED_BOUNDED = "CompletedBounded"
    UNBOUNDED_SUSPECTED = "UnboundedSuspected"
    INCONCLUSIVE = "Inconclusive"


class Termination(str, enum.Enum):
    COMPLETED = "Completed"
    DT_FLOOR = "DtFloorHit"
    BLOWUP = "BlowupThresholdHit"
    NON_FINITE = "NonFiniteDetected"
    MAX_STEPS = "MaxSteps"


@dataclass(frozen=True)
class DiagnosticRow:
    t: float
    u_max: float
    u_mass: float
    v_mass: float
    L: float
    diss_v: float
    diss_flux: float
    Mq_or_M2: float
    rhs_identity: float
    rhs_bound: float
    vt_l2: float
    v_linf: float

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in CSV_FIELDS)


@dataclass
class RunRecord:
    config: object
    rows: list[DiagnosticRow] = field(default_factory=list)
    lyapunov: list[LyapunovSample] = field(default_factory=list)
    moments: list[MomentSample] = field(default_factory=list)
    sample_steps: list[int] = field(default_factory=list)
    step_t: list[float] = field(default_factory=list)
    step_u_max: list[float] = field(default_factory=list)
    step_moment: list[float] = field(default_factory=list)
    bounds: MeasuredBounds = field(default_factory=MeasuredBounds)
    termination: Termination | None = None
    outcome: Outcome | None = None
    t_end: float = float("nan")
    threshold: float = float("nan")
    wall_time: float = 0.0
    final_state: object = None
    majorant: object = None
    theta: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def t_final(self) -> float:
        return self.step_t[-1] if self.step_t else float("nan")

    @property
    def u_max_reached(self) -> float:
        return max(self.step_u_max) if self.step_u_max else float("nan")

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def moment_derivative(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Centred difference of the per-step moment at each interior sample.

        Returns (sample indices, d/dt moment, times).  Samples at the first or
        last step have no centred stencil and are skipped.
        """
        t = np.asarray(self.step_t)
        mom = np.asarray(self.step_moment)
        idx, der, times = [], [], []
        for k, s in enumerate(self.sample_steps):
            if 0 < s < len(t) - 1:
                idx.append(k)
                der.append((mom[s + 1] - mom[s - 1]) / (t[s + 1] - t[s - 1]))
                times.append(t[s])
        return np.array(idx, dtype=int), np.array(der), np.array(times)


def detect_blowup(record: RunRecord, window: int = 10) -> Outcome:
    """Classify a finished run.

    UnboundedSuspected: the run hit the blowup threshold, or hit the dt floor
    while max u rose over the last ``window`` accepted steps.
    CompletedBounded: t_end was reached and max u never exceeded ten times
    the running median of the max-u series.  Anything else is Inconclusive.
    """
    if not record.step_u_max:
        raise ValueError("record has no max-density series")
    umax = np.asarray(record.step_u_max, dtype=float)
    term = record.termination
    if term is Termination.BLOWUP:
        return Outcome.UNBOUNDED_SUSPECTED
    if term is Termination.DT_FLOOR:
        tail = umax[-window:]
        if tail.size >= 2 and np.all(np.diff(tail) >= 0) and tail[-1] > tail[0]:
            return Outcome.UNBOUNDED_SUSPECTED
        return Outcome.INCONCLUSIVE
    if term is Termination.COMPLETED:
        # running median over the prefix, computed on the (short) sample grid
        med = np.array([np.median(umax[: k + 1]) for k in _median_points(umax.size)])
        pts = _median_points(umax.size)
        if np.all(umax[pts] <= 10 * med) and umax.max() <= 10 * np.median(umax):
            return Outcome.COMPLETED_BOUNDED
    return Outcome.INCONCLUSIVE


def _median_points(n: int, cap: int = 512) -> np.ndarray:
    if n <= cap:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, cap).astype(int))
