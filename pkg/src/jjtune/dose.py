"""Laser dose response: how a lasing shot moves junction resistance.

The model is a separable composition, calibrated against trim-curve fits:

    shift(P, E, n, D) = plateau(T(P * c(D))) * saturation(E * n)

- T(P) is the steady-state junction temperature under absorbed power P,
  linear in power.
- plateau(T) = m - b * exp(-T / T0) is the saturating dose-response curve;
  with the default tie b = m * exp(ambient / T0) it equals
  m * (1 - exp(-(T - ambient) / T0)) and is exactly zero at ambient.
- c(D) is the thermal-transfer ratio for a beam displaced D um from the
  junction, normalized to 1 at D = 0, so displacement only ever reduces the
  delivered dose.
- saturation(u) = 1 - exp(-u / u0) accumulates total exposure time across
  repetitions; the default recipe (60 s x 1) is fully saturated.

The separately measured response-vs-displacement curve (metal vs substrate
absorption times thermal transfer, peaked just off the electrode edge) lives
in ``displacement_response`` and is used for alignment error budgets, not
composed into ``mean_shift``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import DomainError, InfeasibleError

__all__ = [
    "HeatingParams",
    "DoseResponseParams",
    "BeamGeometry",
    "DisplacementParams",
    "LasingRecipe",
    "StochasticParams",
    "DoseModel",
    "AnnealRecord",
    "JunctionState",
    "POWER_LIMIT_MW",
    "DEFAULT_RECIPE",
    "junction_temperature",
    "mean_shift_vs_temperature",
    "absorption_fraction",
    "heat_transfer_factor",
    "displacement_response",
    "exposure_factor",
    "mean_shift",
    "apply_anneal",
    "default_dose_model",
]

POWER_LIMIT_MW = 50.0


@dataclass(frozen=True)
class HeatingParams:
    """Linear power-to-temperature map: T = slope * P + ambient (degC, mW)."""

    slope: float = 2.47
    ambient: float = 20.0

    def __post_init__(self) -> None:
        if self.slope <= 0:
            raise DomainError("heating slope must be positive")


def _tied_depth(plateau_m: float, t0: float, ambient: float) -> float:
    return plateau_m * math.exp(ambient / t0)


@dataclass(frozen=True)
class DoseResponseParams:
    """Saturating plateau curve m - b * exp(-T / T0) plus exposure scale u0.

    The default depth_b is tied to plateau_m * exp(ambient / T0) so the curve
    passes exactly through zero at ambient temperature.
    """

    plateau_m: float = 0.018
    char_temperature_t0: float = 28.0
    char_exposure_u0: float = 1.5
    depth_b: float = field(default=0.0)

    def __post_init__(self) -> None:
        if self.plateau_m <= 0 or self.char_temperature_t0 <= 0 or self.char_exposure_u0 <= 0:
            raise DomainError("dose response scales must be positive")
        if self.depth_b == 0.0:
            object.__setattr__(
                self, "depth_b", _tied_depth(self.plateau_m, self.char_temperature_t0, 20.0)
            )


@dataclass(frozen=True)
class BeamGeometry:
    """Gaussian spot geometry and surface reflectances.

    waist is the 1/e^2 intensity radius in um; electrode_extent is the
    half-width of the metalized region along the displacement axis.
    wavelength is fixed by the hardware and kept only for documentation.
    """

    wavelength: float = 532.0
    waist: float = 0.81
    si_reflectance: float = 0.374
    al_reflectance: float = 0.92
    electrode_extent: float = 4.0

    def __post_init__(self) -> None:
        if self.waist <= 0 or self.electrode_extent < 0:
            raise DomainError("beam geometry must have positive waist")
        for r in (self.si_reflectance, self.al_reflectance):
            if not 0.0 <= r < 1.0:
                raise DomainError("reflectance must lie in [0, 1)")


@dataclass(frozen=True)
class DisplacementParams:
    """Thermal transfer vs beam displacement: A * exp(-D / D0) + B (all > 0)."""

    transfer_amp_a: float = 1.0
    transfer_offset_b: float = 0.002
    decay_d0: float = 9.5

    def __post_init__(self) -> None:
        if min(self.transfer_amp_a, self.transfer_offset_b, self.decay_d0) <= 0:
            raise DomainError("transfer parameters must be positive")


@dataclass(frozen=True)
class LasingRecipe:
    """One shot command: power (mW), exposure (s), repetitions, displacement (um)."""

    power: float
    exposure: float = 60.0
    repetitions: int = 1
    displacement: float = 0.0

    def __post_init__(self) -> None:
        if self.power < 0:
            raise DomainError(f"power must be non-negative, got {self.power!r}")
        if self.power >= POWER_LIMIT_MW:
            raise InfeasibleError(
                f"power {self.power:.4g} mW is at or above the {POWER_LIMIT_MW:.0f} mW "
                "lasing ceiling"
            )
        if self.exposure <= 0:
            raise DomainError(f"exposure must be positive, got {self.exposure!r}")
        if self.repetitions < 1:
            raise DomainError(f"repetitions must be >= 1, got {self.repetitions!r}")
        if self.displacement < 0:
            raise DomainError(f"displacement must be non-negative, got {self.displacement!r}")


@dataclass(frozen=True)
class StochasticParams:
    """Shot-to-shot scatter: sigma relative to the commanded shift, plus a floor."""

    relative_sigma: float = 0.01
    shift_floor: float = -0.005


@dataclass(frozen=True)
class AnnealRecord:
    recipe: LasingRecipe
    shift: float


@dataclass(frozen=True)
class JunctionState:
    """Immutable junction snapshot; anneals return a new state."""

    resistance: float
    history: tuple[AnnealRecord, ...] = ()

    def __post_init__(self) -> None:
        if self.resistance <= 0:
            raise DomainError("resistance must be positive")


@dataclass(frozen=True)
class DoseModel:
    """Bundle of every dose-related parameter set, as loaded from defaults."""

    heating: HeatingParams = HeatingParams()
    response: DoseResponseParams = DoseResponseParams()
    beam: BeamGeometry = BeamGeometry()
    displacement: DisplacementParams = DisplacementParams()
    response_scale: float = 0.0404207352594069
    stochastic: StochasticParams = StochasticParams()


DEFAULT_RECIPE = LasingRecipe(power=40.0, exposure=60.0, repetitions=1, displacement=0.0)


def junction_temperature(power: float, heating: HeatingParams = HeatingParams()) -> float:
    """Steady-state junction temperature (degC) under power mW on target."""
    if power < 0:
        raise DomainError(f"power must be non-negative, got {power!r}")
    if power >= POWER_LIMIT_MW:
        raise InfeasibleError(
            f"power {power:.4g} mW is at or above the {POWER_LIMIT_MW:.0f} mW ceiling"
        )
    return heating.slope * power + heating.ambient


def mean_shift_vs_temperature(
    temperature: float, response: DoseResponseParams = DoseResponseParams()
) -> float:
    """Saturated fractional resistance shift at a given anneal temperature."""
    return response.plateau_m - response.depth_b * math.exp(
        -temperature / response.char_temperature_t0
    )


def absorption_fraction(displacement: float, beam: BeamGeometry = BeamGeometry()) -> float:
    """Absorbed power fraction vs beam displacement (um) from the junction.

    The Gaussian spot straddles the electrode edge: the metalized fraction
    absorbs 1 - al_reflectance, the exposed substrate 1 - si_reflectance.
    Rises steeply once the spot walks off the metal at electrode_extent.
    """
    if displacement < 0:
        raise DomainError(f"displacement must be non-negative, got {displacement!r}")
    on_metal = 0.5 * (
        1.0 + math.erf(math.sqrt(2.0) * (beam.electrode_extent - displacement) / beam.waist)
    )
    return (1.0 - beam.al_reflectance) * on_metal + (1.0 - beam.si_reflectance) * (
        1.0 - on_metal
    )


def heat_transfer_factor(
    displacement: float, params: DisplacementParams = DisplacementParams()
) -> float:
    """Fraction of deposited heat reaching the junction from distance D (um)."""
    if displacement < 0:
        raise DomainError(f"displacement must be non-negative, got {displacement!r}")
    return params.transfer_amp_a * math.exp(-displacement / params.decay_d0) + params.transfer_offset_b


def displacement_response(
    displacement: float,
    beam: BeamGeometry = BeamGeometry(),
    params: DisplacementParams = DisplacementParams(),
    scale: float = 0.0404207352594069,
) -> float:
    """Measured fractional shift vs beam displacement at the reference dose.

    absorption * transfer, scaled so the peak (just off the electrode edge,
    where substrate absorption has jumped but the junction is still close)
    sits at 1.5e-2. Falls below the unannealed drift band past ~30 um.
    """
    return scale * absorption_fraction(displacement, beam) * heat_transfer_factor(
        displacement, params
    )


def exposure_factor(
    exposure: float,
    repetitions: int,
    response: DoseResponseParams = DoseResponseParams(),
) -> float:
    """Saturating dose accumulation over total exposure time, in (0, 1]."""
    if exposure <= 0:
        raise DomainError(f"exposure must be positive, got {exposure!r}")
    if repetitions < 1:
        raise DomainError(f"repetitions must be >= 1, got {repetitions!r}")
    return 1.0 - math.exp(-(exposure * repetitions) / response.char_exposure_u0)


def _coupling(displacement: float, model: DoseModel) -> float:
    # Normalized thermal transfer; 1 at zero displacement by construction.
    return heat_transfer_factor(displacement, model.displacement) / heat_transfer_factor(
        0.0, model.displacement
    )


def mean_shift(recipe: LasingRecipe, model: DoseModel = DoseModel()) -> float:
    """Expected fractional resistance shift for a recipe (noise-free)."""
    effective_power = recipe.power * _coupling(recipe.displacement, model)
    temperature = junction_temperature(effective_power, model.heating)
    saturated = mean_shift_vs_temperature(temperature, model.response)
    return saturated * exposure_factor(recipe.exposure, recipe.repetitions, model.response)


def apply_anneal(
    state: JunctionState,
    recipe: LasingRecipe,
    rng: np.random.Generator,
    model: DoseModel = DoseModel(),
) -> JunctionState:
    """Execute one lasing shot: draw the realized shift and update the state.

    Scatter is relative to the commanded shift, R -> R * (1 + mu * (1 +
    relative_sigma * eps)), floored at shift_floor; a zero-dose shot is
    exactly a no-op.
    """
    mu = mean_shift(recipe, model)
    draw = mu * (1.0 + model.stochastic.relative_sigma * float(rng.standard_normal()))
    shift = max(draw, model.stochastic.shift_floor)
    return JunctionState(
        resistance=state.resistance * (1.0 + shift),
        history=state.history + (AnnealRecord(recipe=recipe, shift=shift),),
    )


def default_dose_model() -> DoseModel:
    """Load the versioned calibration defaults shipped with the package."""
    raw = json.loads(resources.files("jjtune.data").joinpath("dose_defaults.json").read_text())
    heat = raw["heating"]
    resp = raw["dose_response"]
    beam = raw["beam"]
    disp = raw["displacement"]
    stoch = raw["stochastic"]
    return DoseModel(
        heating=HeatingParams(slope=heat["slope_c_per_mw"], ambient=heat["ambient_c"]),
        response=DoseResponseParams(
            plateau_m=resp["plateau_m"],
            char_temperature_t0=resp["char_temperature_t0_c"],
            char_exposure_u0=resp["char_exposure_u0_s"],
            depth_b=resp["depth_b"],
        ),
        beam=BeamGeometry(
            wavelength=beam["wavelength_nm"],
            waist=beam["waist_um"],
            si_reflectance=beam["si_reflectance"],
            al_reflectance=beam["al_reflectance"],
            electrode_extent=beam["electrode_extent_um"],
        ),
        displacement=DisplacementParams(
            transfer_amp_a=disp["transfer_amp_a"],
            transfer_offset_b=disp["transfer_offset_b"],
            decay_d0=disp["decay_d0_um"],
        ),
        response_scale=raw["response_scale"],
        stochastic=StochasticParams(
            relative_sigma=stoch["relative_sigma"],
            shift_floor=stoch["shift_floor"],
        ),
    )
