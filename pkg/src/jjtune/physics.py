"""Junction electrostatics: resistance, critical current, qubit frequency.

The tunnel junction is characterized by its normal-state resistance R_N.
Everything else follows from two material numbers, the superconducting gap
and the charging energy:

    I_C  = pi * gap / (2 e R_N)                     (Ambegaokar-Baratoff, T=0)
    h f  = sqrt(h * gap * E_C / (e^2 R_N)) - E_C

with E_C the charging energy and gap expressed in joules. The frequency map
is strictly decreasing in R_N and is invertible in closed form, which is what
the planner relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "PhysicalConstants",
    "MaterialParams",
    "BarrierModelParams",
    "CONSTANTS",
    "DEFAULT_MATERIAL",
    "DEFAULT_BARRIER",
    "critical_current",
    "qubit_frequency",
    "resistance_for_frequency",
    "max_resistance",
    "linearized_shift",
    "barrier_resistance",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """SI defining constants (exact by definition)."""

    planck_h: float = 6.62607015e-34      # J s
    electron_charge_e: float = 1.602176634e-19  # C


@dataclass(frozen=True)
class MaterialParams:
    """Aluminum junction material parameters.

    gap_delta_al: superconducting gap in eV.
    charging_energy_over_h: E_C / h in Hz.
    critical_current_density: A/m^2 (default 5e5 A/m^2, i.e. 500 nA/um^2),
        used for area sizing, not by the frequency map.
    """

    gap_delta_al: float = 170e-6
    charging_energy_over_h: float = 275e6
    critical_current_density: float = 5e5

    def __post_init__(self) -> None:
        if self.gap_delta_al <= 0 or self.charging_energy_over_h <= 0:
            raise DomainError("gap and charging energy must be positive")


@dataclass(frozen=True)
class BarrierModelParams:
    """Exponential thickness model for the oxide barrier.

    R_N * area = prefactor * exp(thickness / tau_barrier)

    tau_barrier: nm. prefactor: ohm um^2 (geometric-mean calibration of the
    reference junction set at the default tau).
    """

    tau_barrier: float = 0.39
    prefactor: float = 2.33

    def __post_init__(self) -> None:
        if self.tau_barrier <= 0 or self.prefactor <= 0:
            raise DomainError("barrier parameters must be positive")


CONSTANTS = PhysicalConstants()
DEFAULT_MATERIAL = MaterialParams()
DEFAULT_BARRIER = BarrierModelParams()


def _gap_joule(mat: MaterialParams, const: PhysicalConstants) -> float:
    return mat.gap_delta_al * const.electron_charge_e


def _ec_joule(mat: MaterialParams, const: PhysicalConstants) -> float:
    return const.planck_h * mat.charging_energy_over_h


def max_resistance(
    mat: MaterialParams = DEFAULT_MATERIAL,
    const: PhysicalConstants = CONSTANTS,
) -> float:
    """Upper edge of the valid resistance domain, where f_Q crosses zero.

    R_max = h * gap / (e^2 * E_C); about 3.858 Mohm for the defaults.
    """
    e = const.electron_charge_e
    return const.planck_h * _gap_joule(mat, const) / (e * e * _ec_joule(mat, const))


def critical_current(
    r_n: float,
    mat: MaterialParams = DEFAULT_MATERIAL,
    const: PhysicalConstants = CONSTANTS,
) -> float:
    """Ambegaokar-Baratoff critical current (A) at zero temperature."""
    if r_n <= 0:
        raise DomainError(f"resistance must be positive, got {r_n!r}")
    return math.pi * _gap_joule(mat, const) / (2.0 * const.electron_charge_e * r_n)


def qubit_frequency(
    r_n: float,
    mat: MaterialParams = DEFAULT_MATERIAL,
    const: PhysicalConstants = CONSTANTS,
) -> float:
    """Qubit transition frequency (Hz) for a junction of resistance r_n (ohm).

    Strictly decreasing in r_n. Valid for 0 < r_n < max_resistance(mat);
    outside that window the formula would return a non-positive frequency.
    """
    if r_n <= 0:
        raise DomainError(f"resistance must be positive, got {r_n!r}")
    r_max = max_resistance(mat, const)
    if r_n >= r_max:
        raise DomainError(
            f"resistance {r_n:.6g} ohm is at or beyond the zero-frequency "
            f"bound {r_max:.6g} ohm"
        )
    e = const.electron_charge_e
    ec = _ec_joule(mat, const)
    hf = math.sqrt(const.planck_h * _gap_joule(mat, const) * ec / (e * e * r_n)) - ec
    return hf / const.planck_h


def resistance_for_frequency(
    f_q: float,
    mat: MaterialParams = DEFAULT_MATERIAL,
    const: PhysicalConstants = CONSTANTS,
) -> float:
    """Exact inverse of qubit_frequency: resistance (ohm) hitting f_q (Hz)."""
    if f_q <= 0:
        raise DomainError(f"frequency must be positive, got {f_q!r}")
    e = const.electron_charge_e
    ec = _ec_joule(mat, const)
    hf = const.planck_h * f_q
    return const.planck_h * _gap_joule(mat, const) * ec / (e * e * (hf + ec) ** 2)


def linearized_shift(resistance_shift: float) -> float:
    """First-order fractional frequency shift for a fractional resistance shift.

    df/f = -(dR/R) / 1.9. The 1.9 folds the square root's factor 2 together
    with the charging-energy correction at the operating point (about 5%).
    Good to ~1e-3 absolute for |dR/R| up to 5%.
    """
    return -resistance_shift / 1.9


def barrier_resistance(
    thickness: float,
    area: float,
    barrier: BarrierModelParams = DEFAULT_BARRIER,
) -> float:
    """Normal-state resistance (ohm) of a barrier of given thickness and area.

    thickness in nm, area in um^2. Exponential in thickness: a +0.1 nm step
    multiplies resistance by exp(0.1 / tau_barrier), about +29% at the
    default tau.
    """
    if thickness < 0:
        raise DomainError(f"thickness must be non-negative, got {thickness!r}")
    if area <= 0:
        raise DomainError(f"area must be positive, got {area!r}")
    return barrier.prefactor * math.exp(thickness / barrier.tau_barrier) / area
