"""Post-anneal resistance aging under atmospheric storage.

Junctions drift upward in resistance after processing; the drift follows a
saturating exponential in storage time,

    dR/R0 (t) = A - B * exp(-t / tau)

with A the final plateau, A - B the shift on day 0 (the annealing day), and
tau the aging constant in days. Annealed and unannealed cohorts age with
similar time constants, so frequency offsets written by trimming are
approximately preserved; ``offset_preservation`` quantifies exactly how well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import DomainError
from .fitkit import Dataset, FitResult, ModelSpec, fit_curve

__all__ = [
    "AgingParams",
    "AgingSeries",
    "REFERENCE_COHORTS",
    "aging_shift",
    "fit_aging",
    "fit_aging_samples",
    "offset_preservation",
]


@dataclass(frozen=True)
class AgingParams:
    """Plateau-exponential aging curve parameters (fractions, days)."""

    final_shift_a: float
    depth_b: float
    tau_days: float

    def __post_init__(self) -> None:
        if self.tau_days <= 0:
            raise DomainError("tau_days must be positive")

    @property
    def initial_shift(self) -> float:
        return self.final_shift_a - self.depth_b


# Reference cohort fits (fraction units): measured 30-day storage series for
# annealed ("L" recipes) and unannealed control junctions on two wafers.
REFERENCE_COHORTS: dict[str, AgingParams] = {
    "wafer1_annealed": AgingParams(final_shift_a=0.21, depth_b=0.12, tau_days=10.40),
    "wafer1_unannealed": AgingParams(final_shift_a=0.16, depth_b=0.13, tau_days=8.72),
    "wafer2_annealed": AgingParams(final_shift_a=0.11, depth_b=0.08, tau_days=41.15),
    "wafer2_unannealed": AgingParams(final_shift_a=0.07, depth_b=0.07, tau_days=27.95),
}


@dataclass(frozen=True)
class AgingSeries:
    """One junction's storage series: (day, resistance_ohm) samples.

    r0_ohm is the pre-anneal reference resistance that fractional shifts are
    measured against; it defaults to the first sample's resistance, which is
    only correct for series whose day-0 shift is zero, so supply it whenever
    known.
    """

    junction_id: str
    samples: tuple[tuple[float, float], ...]
    cohort: Literal["annealed", "unannealed"] = "annealed"
    wafer_label: str = ""
    r0_ohm: float = field(default=0.0)

    def __post_init__(self) -> None:
        days = [d for d, _ in self.samples]
        if any(b < a for a, b in zip(days, days[1:])):
            raise DomainError("sample days must be non-decreasing")
        if any(r <= 0 for _, r in self.samples):
            raise DomainError("resistances must be positive")
        if self.r0_ohm == 0.0 and self.samples:
            object.__setattr__(self, "r0_ohm", self.samples[0][1])
        if self.samples and self.r0_ohm <= 0:
            raise DomainError("reference resistance must be positive")


def aging_shift(t: float, params: AgingParams) -> float:
    """Fractional resistance shift after t days of storage."""
    if t < 0:
        raise DomainError(f"storage time must be non-negative, got {t!r}")
    return params.final_shift_a - params.depth_b * np.exp(-t / params.tau_days)


def _shift_model(p: np.ndarray, t: np.ndarray) -> np.ndarray:
    return p[0] - p[1] * np.exp(-t / p[2])


_AGING_SPEC = ModelSpec(
    evaluator=_shift_model,
    parameter_names=("final_shift_a", "depth_b", "tau_days"),
    bounds=((-np.inf, np.inf), (-np.inf, np.inf), (1e-6, np.inf)),
)


def fit_aging_samples(days: Sequence[float], shifts: Sequence[float]) -> FitResult:
    """Fit (A, B, tau) to fractional-shift samples vs storage day.

    Initialization: A from the last sample, A - B from the first, tau from a
    third of the observed day range. A constant series converges with B ~ 0
    and tau unidentifiable, which the result flags via std_error > value.
    """
    t = np.asarray(list(days), dtype=float)
    y = np.asarray(list(shifts), dtype=float)
    if np.unique(t).size < 4:
        raise DomainError("need at least 4 distinct sample days to fit aging")
    order = np.argsort(t, kind="stable")
    t, y = t[order], y[order]
    span = float(t.max() - t.min())
    p0 = [y[-1], y[-1] - y[0], span / 3.0]
    return fit_curve(_AGING_SPEC, Dataset(inputs=t, observations=y), p0)


def fit_aging(series: AgingSeries) -> FitResult:
    """Fit the aging curve to one junction's resistance series."""
    days = [d for d, _ in series.samples]
    shifts = [r / series.r0_ohm - 1.0 for _, r in series.samples]
    return fit_aging_samples(days, shifts)


def offset_preservation(
    annealed: AgingParams,
    unannealed: AgingParams,
    horizon: float,
    grid_points: int = 3001,
) -> dict[str, float]:
    """How stable the annealed-vs-unannealed shift gap is over storage.

    Evaluates gap(t) = shift_annealed(t) - shift_unannealed(t) on a dense
    grid over [0, horizon] and reports the day-0 gap, the horizon gap, and
    the worst absolute drift away from the day-0 value.
    """
    if horizon <= 0:
        raise DomainError(f"horizon must be positive, got {horizon!r}")
    t = np.linspace(0.0, horizon, grid_points)
    gap = (
        annealed.final_shift_a
        - annealed.depth_b * np.exp(-t / annealed.tau_days)
    ) - (
        unannealed.final_shift_a
        - unannealed.depth_b * np.exp(-t / unannealed.tau_days)
    )
    return {
        "initial_gap": float(gap[0]),
        "final_gap": float(gap[-1]),
        "max_drift": float(np.max(np.abs(gap - gap[0]))),
    }
