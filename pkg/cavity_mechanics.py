"""Mechanical resonator: susceptibility, radiation-pressure drive, mode overlap.

The mode is a single Lorentzian with a frequency-independent loss angle,

    chi(f) = chi0 / (1 - f^2/f_M^2 - i/Q),

applied literally at every frequency. Displacement amplitudes are peak values,
not rms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from cavity_constants import HBAR, PLANCK, SPEED_OF_LIGHT
from cavity_errors import InvariantError, QuadratureError


@dataclass(frozen=True)
class MechanicalMode:
    resonance_frequency: float  # Hz
    quality_factor: float
    static_susceptibility: float  # m/N

    def __post_init__(self) -> None:
        for name in ("resonance_frequency", "quality_factor", "static_susceptibility"):
            if not getattr(self, name) > 0:
                raise InvariantError(f"{name.replace('_', ' ')} must be > 0", [name])

    @property
    def angular_frequency(self) -> float:
        return 2 * math.pi * self.resonance_frequency

    @property
    def linewidth(self) -> float:
        """Full width at half maximum of |chi|^2, f_M/Q."""
        return self.resonance_frequency / self.quality_factor


@dataclass(frozen=True)
class RadiationPressureDrive:
    intensity_modulation_amplitude: float  # photons/s
    modulation_frequency: float  # Hz
    wavelength: float = 810e-9  # m

    def __post_init__(self) -> None:
        if self.intensity_modulation_amplitude < 0:
            raise InvariantError(
                "intensity modulation must be >= 0", ["intensity_modulation_amplitude"]
            )
        if self.modulation_frequency < 0:
            raise InvariantError(
                "modulation frequency must be >= 0", ["modulation_frequency"]
            )
        if not self.wavelength > 0:
            raise InvariantError("wavelength must be > 0", ["wavelength"])

    @classmethod
    def from_power(
        cls, power_modulation: float, modulation_frequency: float, wavelength: float
    ) -> RadiationPressureDrive:
        """Drive from a power modulation amplitude dP (W)."""
        flux = power_modulation * wavelength / (PLANCK * SPEED_OF_LIGHT)
        return cls(flux, modulation_frequency, wavelength)

    @classmethod
    def from_force(
        cls, force: float, modulation_frequency: float, wavelength: float
    ) -> RadiationPressureDrive:
        """Drive producing a force amplitude ``force`` (N) on reflection."""
        return cls.from_power(force * SPEED_OF_LIGHT / 2, modulation_frequency, wavelength)

    @property
    def power_modulation(self) -> float:
        return self.intensity_modulation_amplitude * PLANCK * SPEED_OF_LIGHT / self.wavelength


@dataclass(frozen=True)
class SpatialModes:
    optical_waist: float  # m
    acoustic_waist: float  # m

    def __post_init__(self) -> None:
        if not self.optical_waist > 0:
            raise InvariantError("optical waist must be > 0", ["optical_waist"])
        if not self.acoustic_waist > 0:
            raise InvariantError("acoustic waist must be > 0", ["acoustic_waist"])


def susceptibility(mode: MechanicalMode, frequency: ArrayLike) -> complex | NDArray:
    """Complex force-to-displacement response chi(f) in m/N."""
    f = np.asarray(frequency, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequency must be >= 0")
    ratio = f / mode.resonance_frequency
    chi = mode.static_susceptibility / (1 - ratio**2 - 1j / mode.quality_factor)
    return chi if chi.ndim else complex(chi)


def effective_mass(mode: MechanicalMode) -> float:
    """Mass of the equivalent point oscillator, 1/(chi0 Omega_M^2), in kg."""
    return 1 / (mode.static_susceptibility * mode.angular_frequency**2)


def mode_from_effective_mass(
    mass: float, resonance_frequency: float, quality_factor: float
) -> MechanicalMode:
    omega = 2 * math.pi * resonance_frequency
    return MechanicalMode(resonance_frequency, quality_factor, 1 / (mass * omega**2))


def radiation_force(drive: RadiationPressureDrive) -> float:
    """Force amplitude 2*hbar*k*dI (equivalently 2 dP/c), in N."""
    k = 2 * math.pi / drive.wavelength
    return 2 * HBAR * k * drive.intensity_modulation_amplitude


def driven_response(mode: MechanicalMode, drive: RadiationPressureDrive) -> float:
    """Peak displacement |chi(f_mod)| * F_rad at the modulation frequency, m."""
    return abs(susceptibility(mode, drive.modulation_frequency)) * radiation_force(drive)


def spatial_overlap(modes: SpatialModes) -> float:
    """Acoustic displacement averaged over the optical intensity profile.

    Unit-peak gaussian exp(-r^2/w_ac^2) weighted by (2/pi w0^2) exp(-2 r^2/w0^2).
    """
    return 1 / (1 + modes.optical_waist**2 / (2 * modes.acoustic_waist**2))


def spatial_overlap_numeric(modes: SpatialModes) -> float:
    """Quadrature of the same overlap integral in polar coordinates.

    Integrates in units of the optical waist so the result does not depend on
    the absolute scale.
    """
    aspect = modes.optical_waist / modes.acoustic_waist

    def integrand(u: float) -> float:
        return 4 * u * math.exp(-2 * u**2) * math.exp(-((aspect * u) ** 2))

    value, abserr = integrate.quad(integrand, 0, np.inf, epsabs=0, epsrel=1e-12, limit=200)
    if not abserr <= 1e-9 * abs(value):
        raise QuadratureError(f"overlap quadrature error {abserr:.2e} too large")
    return value
