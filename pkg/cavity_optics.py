"""Optical cavity response and shot-noise-limited displacement sensitivity.

A single-ended Fabry-Perot cavity turns a back-mirror displacement into a phase
shift of the reflected field, 8F/lambda per meter on resonance. Homodyne
detection of that phase is limited by the shot noise of the incident beam,
1/(2 sqrt(I)). Their ratio is the static displacement floor; losses, detection
efficiency and the single-pole cavity filter give the frequency-dependent floor
:func:`dx_min`.

All spectral densities here are amplitude densities (m/sqrt(Hz)). Functions that
take a frequency accept floats or numpy arrays and work elementwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray

from cavity_constants import PLANCK, PPM, SPEED_OF_LIGHT
from cavity_errors import InvariantError

FloatOrArray = float | NDArray[np.float64]


@dataclass(frozen=True)
class OpticalCavity:
    length: float  # m
    wavelength: float  # m
    coupler_transmission: float  # fraction
    losses: float  # fraction
    measured_finesse: float | None = None

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise InvariantError("cavity length must be > 0", ["length"])
        if not self.wavelength > 0:
            raise InvariantError("wavelength must be > 0", ["wavelength"])
        if self.coupler_transmission == 0 and self.losses == 0:
            raise InvariantError(
                "degenerate lossless cavity: T_c + A must be > 0",
                ["coupler_transmission", "losses"],
            )
        if not 0 < self.coupler_transmission < 1:
            raise InvariantError(
                "coupler transmission must lie in (0, 1)", ["coupler_transmission"]
            )
        if not 0 <= self.losses < 1:
            raise InvariantError("losses must lie in [0, 1)", ["losses"])
        if not self.coupler_transmission + self.losses < 1:
            raise InvariantError(
                "coupler transmission + losses must be < 1",
                ["coupler_transmission", "losses"],
            )
        if not self.loss_finesse > 1:
            raise InvariantError(
                "2*pi/(T_c + A) must exceed 1", ["coupler_transmission", "losses"]
            )
        if self.measured_finesse is not None and not self.measured_finesse > 1:
            raise InvariantError("measured finesse must be > 1", ["measured_finesse"])

    @property
    def round_trip_loss(self) -> float:
        return self.coupler_transmission + self.losses

    @property
    def loss_finesse(self) -> float:
        """Finesse implied by the round-trip loss, 2*pi/(T_c + A)."""
        return 2 * math.pi / self.round_trip_loss

    @property
    def optical_frequency(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength


@dataclass(frozen=True)
class Beam:
    power: float  # W
    quantum_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if not self.power > 0:
            raise InvariantError("incident power must be > 0", ["power"])
        if not 0 < self.quantum_efficiency <= 1:
            raise InvariantError(
                "quantum efficiency must lie in (0, 1]", ["quantum_efficiency"]
            )


@dataclass(frozen=True)
class DerivedCavity:
    finesse: float
    free_spectral_range: float  # Hz
    bandwidth: float  # Hz, half-width at half-maximum (cavity pole)


def derive_cavity(cavity: OpticalCavity) -> DerivedCavity:
    """Finesse, free spectral range and HWHM bandwidth of ``cavity``.

    ``measured_finesse`` overrides the loss-derived value when set.
    """
    if cavity.round_trip_loss <= 0:
        raise ValueError("degenerate lossless cavity: T_c + A must be > 0")
    finesse = (
        cavity.measured_finesse
        if cavity.measured_finesse is not None
        else cavity.loss_finesse
    )
    fsr = SPEED_OF_LIGHT / (2 * cavity.length)
    return DerivedCavity(
        finesse=finesse,
        free_spectral_range=fsr,
        bandwidth=fsr / (2 * finesse),
    )


def scaled_cavity(
    cavity: OpticalCavity, finesse: float, losses: float = 1 * PPM
) -> OpticalCavity:
    """Same geometry with the round-trip loss rescaled to ``2*pi/finesse``.

    The coupler takes whatever is left once ``losses`` are accounted for, and
    the requested finesse is pinned as the measured value.
    """
    total = 2 * math.pi / finesse
    if not total > losses:
        raise ValueError(
            f"finesse {finesse:g} leaves no coupler transmission above losses {losses:g}"
        )
    return replace(
        cavity,
        coupler_transmission=total - losses,
        losses=losses,
        measured_finesse=finesse,
    )


def photon_flux(beam: Beam, cavity: OpticalCavity) -> float:
    """Mean incident photon flux P*lambda/(h*c), in photons per second."""
    return beam.power * cavity.wavelength / (PLANCK * SPEED_OF_LIGHT)


def phase_shift_per_displacement(cavity: OpticalCavity) -> float:
    """Reflected-phase slope 8F/lambda of a resonant lossless cavity, rad/m."""
    return 8 * derive_cavity(cavity).finesse / cavity.wavelength


def shot_noise_phase(beam: Beam, cavity: OpticalCavity) -> float:
    """Shot-noise phase floor 1/(2 sqrt(I)) in rad/sqrt(Hz)."""
    flux = photon_flux(beam, cavity)
    if flux <= 0:
        raise ValueError("shot-noise phase undefined for zero incident power")
    return 1 / (2 * math.sqrt(flux))


def dx_min_static(cavity: OpticalCavity, beam: Beam) -> float:
    """Lossless, zero-frequency displacement floor lambda/(16 F sqrt(I)), m/sqrt(Hz)."""
    return shot_noise_phase(beam, cavity) / phase_shift_per_displacement(cavity)


def loss_factor(cavity: OpticalCavity, beam: Beam) -> float:
    """(T_c + A)/(sqrt(eta) T_c).

    Always built from T_c and A directly, even when a measured finesse is set.
    """
    if cavity.coupler_transmission <= 0:
        raise ValueError("coupler transmission must be > 0")
    return cavity.round_trip_loss / (
        math.sqrt(beam.quantum_efficiency) * cavity.coupler_transmission
    )


def _frequencies(frequency: ArrayLike) -> FloatOrArray:
    f = np.asarray(frequency, dtype=float)
    if np.any(f < 0) or np.any(np.isnan(f)):
        raise ValueError("frequency must be >= 0")
    return f if f.ndim else float(f)


def cavity_filter(cavity: OpticalCavity, frequency: ArrayLike) -> FloatOrArray:
    """Single-pole cavity response sqrt(1 + (f/bandwidth)^2)."""
    f = _frequencies(frequency)
    bandwidth = derive_cavity(cavity).bandwidth
    return np.sqrt(1 + (f / bandwidth) ** 2)


def dx_min(cavity: OpticalCavity, beam: Beam, frequency: ArrayLike) -> FloatOrArray:
    """Minimum observable displacement at ``frequency`` in m/sqrt(Hz).

    Static floor times the loss/efficiency factor times the cavity filter.
    """
    return (
        dx_min_static(cavity, beam)
        * loss_factor(cavity, beam)
        * cavity_filter(cavity, frequency)
    )
