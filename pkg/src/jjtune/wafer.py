"""Wafer-scale operations: layout, registration, alignment QC, batch anneals.

The stage addresses junctions through an affine map fitted to fiducial
junctions (design coordinates vs observed stage coordinates). Each visit
then centers and focuses on the junction; residual alignment errors are
modeled as scalar Gaussian draws scored by

    qc_score = exp(-(centering / delta_c)^2 - (focus / delta_f)^2)

and gated at 0.97 (inclusive). A batch run walks the whole wafer, annealing
every junction that passes QC, with one independent random stream per
junction so results do not depend on processing order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

from .dose import DoseModel, JunctionState, LasingRecipe, apply_anneal, mean_shift
from .errors import DomainError
from .streams import child_rng

__all__ = [
    "WaferLayout",
    "JunctionRecord",
    "HistoryEvent",
    "AffineTransform",
    "AlignmentResult",
    "StageNoise",
    "BatchRow",
    "BatchReport",
    "SECONDS_PER_JUNCTION",
    "estimate_affine",
    "apply_affine",
    "alignment_score",
    "simulate_alignment",
    "qc_gate",
    "run_batch",
    "synthesize_wafer",
    "default_fiducials",
]

SECONDS_PER_JUNCTION = 20.0

QcStatus = Literal["pending", "passed", "excluded"]


@dataclass(frozen=True)
class HistoryEvent:
    recipe: LasingRecipe
    resistance: float
    day: float


@dataclass(frozen=True)
class JunctionRecord:
    """One junction on the wafer, addressed by design coordinates (um)."""

    id: str
    design_xy: tuple[float, float]
    area: float
    resistance: float
    age_days: float = 0.0
    qc_status: QcStatus = "pending"
    history: tuple[HistoryEvent, ...] = ()

    def __post_init__(self) -> None:
        if self.resistance <= 0:
            raise DomainError(f"junction {self.id}: resistance must be positive")
        if self.area <= 0:
            raise DomainError(f"junction {self.id}: area must be positive")


@dataclass(frozen=True)
class WaferLayout:
    wafer_id: str
    rows: int
    cols: int
    pitch: float
    junctions: tuple[JunctionRecord, ...]

    def __post_init__(self) -> None:
        if len(self.junctions) > self.rows * self.cols:
            raise DomainError("more junctions than grid sites")
        ids = [j.id for j in self.junctions]
        if len(set(ids)) != len(ids):
            raise DomainError("junction ids must be unique")


@dataclass(frozen=True)
class AffineTransform:
    """Stage = linear @ design + offset."""

    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self) -> None:
        if np.asarray(self.linear).shape != (2, 2) or np.asarray(self.offset).shape != (2,):
            raise DomainError("affine transform must be 2x2 plus a 2-vector")
        if abs(float(np.linalg.det(self.linear))) <= 1e-12:
            raise DomainError("affine transform is singular")


@dataclass(frozen=True)
class AlignmentResult:
    centering_offset: float  # um
    focus_error: float       # um
    qc_score: float


@dataclass(frozen=True)
class StageNoise:
    """Alignment error scales (sigma) and score constants (delta), all um.

    The calibrated defaults keep sigma/delta equal on both axes, which makes
    the pass-rate analytically checkable and lands it near 98.5% at the 0.97
    gate.
    """

    sigma_center: float = 0.06
    sigma_focus: float = 0.12
    delta_center: float = 1.0
    delta_focus: float = 2.0

    def __post_init__(self) -> None:
        if self.sigma_center < 0 or self.sigma_focus < 0:
            raise DomainError("noise sigmas must be non-negative")
        if self.delta_center <= 0 or self.delta_focus <= 0:
            raise DomainError("score constants must be positive")


@dataclass(frozen=True)
class BatchRow:
    id: str
    r_before: float
    r_after: float
    qc_status: QcStatus
    shift_frac: float


@dataclass(frozen=True)
class BatchReport:
    wafer_id: str
    entries: tuple[BatchRow, ...]          # sorted by junction id
    estimated_wall_time_s: float
    master_seed: int


def estimate_affine(
    design_pts: Sequence[Sequence[float]],
    stage_pts: Sequence[Sequence[float]],
) -> AffineTransform:
    """Least-squares affine registration from point correspondences.

    Requires at least 3 non-collinear pairs; exact on consistent data.
    """
    design = np.asarray(design_pts, dtype=float)
    stage = np.asarray(stage_pts, dtype=float)
    if design.shape != stage.shape or design.ndim != 2 or design.shape[1] != 2:
        raise DomainError("point lists must be equal-length sequences of 2-vectors")
    if design.shape[0] < 3:
        raise DomainError("need at least 3 point pairs")
    basis = np.column_stack([design, np.ones(design.shape[0])])
    if np.linalg.matrix_rank(basis) < 3:
        raise DomainError("fiducial points are collinear; affine fit is rank-deficient")
    coefficients, _, _, _ = np.linalg.lstsq(basis, stage, rcond=None)
    return AffineTransform(linear=coefficients[:2].T.copy(), offset=coefficients[2].copy())


def apply_affine(transform: AffineTransform, point: Sequence[float]) -> np.ndarray:
    return transform.linear @ np.asarray(point, dtype=float) + transform.offset


def alignment_score(centering: float, focus: float, noise: StageNoise) -> float:
    """Gaussian quality score: 1 at perfect alignment, e^-1 when either error
    equals its characteristic length."""
    return math.exp(
        -((centering / noise.delta_center) ** 2) - ((focus / noise.delta_focus) ** 2)
    )


def simulate_alignment(
    junction: JunctionRecord,
    noise: StageNoise,
    rng: np.random.Generator,
) -> AlignmentResult:
    """Draw one visit's centering and focus errors and score them."""
    centering = abs(noise.sigma_center * float(rng.standard_normal()))
    focus = abs(noise.sigma_focus * float(rng.standard_normal()))
    score = alignment_score(centering, focus, noise)
    return AlignmentResult(centering_offset=centering, focus_error=focus, qc_score=score)


def qc_gate(result: AlignmentResult, threshold: float = 0.97) -> QcStatus:
    """Gate a visit on its alignment score; the boundary passes."""
    if not 0.0 < threshold <= 1.0:
        raise DomainError(f"threshold must be in (0, 1], got {threshold!r}")
    return "passed" if result.qc_score >= threshold else "excluded"


def run_batch(
    wafer: WaferLayout,
    recipe: LasingRecipe,
    master_seed: int,
    stage_noise: StageNoise = StageNoise(),
    model: DoseModel = DoseModel(),
    qc_threshold: float = 0.97,
) -> BatchReport:
    """Anneal every QC-passing junction on the wafer, one shot each.

    Per junction: derive its private random stream, simulate the alignment
    visit, gate it, and if passed run the anneal with the centering error
    added to the recipe displacement. Excluded junctions keep their
    resistance and are reported, never dropped. The report is sorted by id
    and is bit-identical under any processing order of the input.
    """
    rows = []
    for junction in wafer.junctions:
        rng = child_rng(master_seed, junction.id)
        visit = simulate_alignment(junction, stage_noise, rng)
        status = qc_gate(visit, qc_threshold)
        if status == "passed":
            shot = replace(recipe, displacement=recipe.displacement + visit.centering_offset)
            state = apply_anneal(JunctionState(resistance=junction.resistance), shot, rng, model)
            r_after = state.resistance
            shift = state.history[-1].shift
        else:
            r_after = junction.resistance
            shift = 0.0
        rows.append(
            BatchRow(
                id=junction.id,
                r_before=junction.resistance,
                r_after=r_after,
                qc_status=status,
                shift_frac=shift,
            )
        )
    rows.sort(key=lambda row: row.id)
    return BatchReport(
        wafer_id=wafer.wafer_id,
        entries=tuple(rows),
        estimated_wall_time_s=SECONDS_PER_JUNCTION * len(wafer.junctions),
        master_seed=master_seed,
    )


def synthesize_wafer(
    wafer_id: str,
    rows: int,
    cols: int,
    pitch: float,
    base_resistance: float,
    resistance_sigma: float,
    seed: int,
    area: float = 0.1,
) -> WaferLayout:
    """Generate a full grid of junctions with lognormal resistance spread.

    Row-major ids; junction (r, c) sits at design (c*pitch, r*pitch). Useful
    for synthetic-batch experiments and as CLI input material.
    """
    if rows < 1 or cols < 1:
        raise DomainError("grid must have at least one site")
    width = len(str(rows * cols - 1))
    junctions = []
    for r in range(rows):
        for c in range(cols):
            index = r * cols + c
            jid = f"{wafer_id}-J{index:0{width}d}"
            rng = child_rng(seed, jid)
            resistance = base_resistance * math.exp(
                resistance_sigma * float(rng.standard_normal())
            )
            junctions.append(
                JunctionRecord(
                    id=jid,
                    design_xy=(c * pitch, r * pitch),
                    area=area,
                    resistance=resistance,
                )
            )
    return WaferLayout(
        wafer_id=wafer_id, rows=rows, cols=cols, pitch=pitch, junctions=tuple(junctions)
    )


def default_fiducials(wafer: WaferLayout, count: int = 10) -> tuple[JunctionRecord, ...]:
    """Pick registration fiducials spread over the wafer hull.

    Corners first, then edge midpoints, then center, then quarter points,
    skipping duplicates, until ``count`` junctions are selected.
    """
    if not wafer.junctions:
        raise DomainError("wafer has no junctions to pick fiducials from")
    by_xy = {j.design_xy: j for j in wafer.junctions}
    xs = sorted({xy[0] for xy in by_xy})
    ys = sorted({xy[1] for xy in by_xy})

    def nearest(x: float, y: float) -> JunctionRecord:
        return min(
            wafer.junctions,
            key=lambda j: (j.design_xy[0] - x) ** 2 + (j.design_xy[1] - y) ** 2,
        )

    lo_x, hi_x, lo_y, hi_y = xs[0], xs[-1], ys[0], ys[-1]
    mid_x, mid_y = (lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0
    probe_points = [
        (lo_x, lo_y), (hi_x, lo_y), (lo_x, hi_y), (hi_x, hi_y),
        (mid_x, lo_y), (mid_x, hi_y), (lo_x, mid_y), (hi_x, mid_y),
        (mid_x, mid_y),
        ((lo_x + mid_x) / 2.0, (lo_y + mid_y) / 2.0),
        ((mid_x + hi_x) / 2.0, (mid_y + hi_y) / 2.0),
    ]
    picked: list[JunctionRecord] = []
    for x, y in probe_points:
        candidate = nearest(x, y)
        if candidate not in picked:
            picked.append(candidate)
        if len(picked) == count:
            break
    return tuple(picked)
