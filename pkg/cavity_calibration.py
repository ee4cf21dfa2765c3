"""Frequency-modulation calibration of the displacement scale.

The cavity detuning depends only on the optical frequency and the length, so a
laser frequency modulation dnu is indistinguishable from a mirror displacement
dx = L dnu / nu. The FM amplitude itself is measured on a mode-cleaner cavity
locked at half transmission, where the transmitted intensity changes by
dnu/nu_cav to first order.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

from cavity_errors import InvariantError, LinearizationError
from cavity_optics import Beam, OpticalCavity, dx_min

# Largest dnu/nu_cav accepted by the first-order half-transmission slope.
LINEAR_REGIME_LIMIT = 0.1


@dataclass(frozen=True)
class ModeCleaner:
    bandwidth_hwhm: float  # Hz

    def __post_init__(self) -> None:
        if not self.bandwidth_hwhm > 0:
            raise InvariantError("mode-cleaner bandwidth must be > 0", ["bandwidth_hwhm"])


@dataclass(frozen=True)
class FmCalibrationPoint:
    fm_amplitude: float  # Hz
    normalized_power: float

    def __post_init__(self) -> None:
        if not self.fm_amplitude > 0:
            raise InvariantError("FM amplitude must be > 0", ["fm_amplitude"])
        if not self.normalized_power > 0:
            raise InvariantError("normalized power must be > 0", ["normalized_power"])


def fm_to_displacement(cavity: OpticalCavity, fm_amplitude: ArrayLike) -> float | NDArray:
    """Displacement equivalent to a laser FM amplitude, L dnu/nu, in m."""
    fm = np.asarray(fm_amplitude, dtype=float)
    if np.any(fm < 0):
        raise ValueError("FM amplitude must be >= 0")
    x = cavity.length * fm / cavity.optical_frequency
    return x if x.ndim else float(x)


def displacement_to_fm(cavity: OpticalCavity, displacement: ArrayLike) -> float | NDArray:
    """Laser FM amplitude equivalent to a displacement, nu dx/L, in Hz."""
    fm = np.asarray(displacement, dtype=float) * cavity.optical_frequency / cavity.length
    return fm if fm.ndim else float(fm)


def mode_cleaner_transmission(mc: ModeCleaner, detuning: ArrayLike) -> float | NDArray:
    """Exact Lorentzian transmission 1/(1 + (delta/nu_cav)^2)."""
    t = 1 / (1 + (np.asarray(detuning, dtype=float) / mc.bandwidth_hwhm) ** 2)
    return t if t.ndim else float(t)


def mode_cleaner_intensity_modulation(mc: ModeCleaner, fm_amplitude: float) -> float:
    """Relative intensity modulation dI/I = dnu/nu_cav at half transmission."""
    if fm_amplitude < 0:
        raise ValueError("FM amplitude must be >= 0")
    ratio = fm_amplitude / mc.bandwidth_hwhm
    if ratio >= LINEAR_REGIME_LIMIT:
        raise LinearizationError(
            f"dnu/nu_cav = {ratio:.3g} is outside the first-order regime (< {LINEAR_REGIME_LIMIT})"
        )
    return ratio


def fm_from_intensity_modulation(mc: ModeCleaner, relative_modulation: float) -> float:
    """Invert the half-transmission slope: dnu = nu_cav * dI/I."""
    if not 0 <= relative_modulation < LINEAR_REGIME_LIMIT:
        raise LinearizationError(
            f"dI/I = {relative_modulation:.3g} is outside the first-order regime"
        )
    return relative_modulation * mc.bandwidth_hwhm


def mode_cleaner_intensity_transfer(mc: ModeCleaner, frequency: ArrayLike) -> float | NDArray:
    """Amplitude transfer of an intensity modulation through the locked cavity."""
    h = 1 / np.sqrt(1 + (np.asarray(frequency, dtype=float) / mc.bandwidth_hwhm) ** 2)
    return h if h.ndim else float(h)


def estimate_mode_cleaner_bandwidth(
    frequencies: ArrayLike, transfer: ArrayLike, initial: float | None = None
) -> tuple[ModeCleaner, float]:
    """Fit a single-pole transfer to measured data.

    Returns the mode cleaner and the one-sigma uncertainty on its bandwidth.
    """
    f = np.asarray(frequencies, dtype=float)
    h = np.asarray(transfer, dtype=float)
    if f.size < 2 or f.shape != h.shape:
        raise ValueError("need at least two matching (frequency, transfer) samples")
    guess = initial if initial is not None else float(np.median(f))
    if not guess > 0:
        raise ValueError("initial bandwidth guess must be > 0")

    # Fitted in units of the guess so the solver tolerances are O(1).
    def pole(freq: NDArray, scaled: float) -> NDArray:
        return 1 / np.sqrt(1 + (freq / (scaled * guess)) ** 2)

    popt, pcov = optimize.curve_fit(pole, f, h, p0=[1.0], bounds=(0, np.inf))
    sigma = float(np.sqrt(pcov[0, 0])) * guess if np.isfinite(pcov[0, 0]) else math.inf
    return ModeCleaner(float(popt[0]) * guess), sigma


def shot_floor_fm(
    cavity: OpticalCavity,
    beam: Beam,
    frequency: ArrayLike,
    *,
    laser_frequency_noise: float = 0.0,
) -> float | NDArray:
    """Shot-noise floor as an FM spectral density, Hz/sqrt(Hz).

    A constant technical laser-frequency-noise density can be added in
    quadrature; it is off by default.
    """
    if laser_frequency_noise < 0:
        raise ValueError("laser frequency noise must be >= 0")
    shot = displacement_to_fm(cavity, dx_min(cavity, beam, frequency))
    return np.hypot(shot, laser_frequency_noise) if laser_frequency_noise else shot


def calibration_curve(
    cavity: OpticalCavity,
    beam: Beam,
    fm_amplitudes: Sequence[float],
    measurement_frequency: float,
    rbw: float,
) -> list[FmCalibrationPoint]:
    """Normalized line power for each FM amplitude.

    Same convention as a radiation-pressure line: rms power of the equivalent
    displacement over the shot noise in one resolution bandwidth.
    """
    if not rbw > 0:
        raise ValueError("resolution bandwidth must be > 0")
    amplitudes = np.asarray(fm_amplitudes, dtype=float)
    if amplitudes.ndim != 1 or amplitudes.size == 0 or np.any(~(amplitudes > 0)):
        raise ValueError("FM amplitudes must be a list of positive values")
    floor = dx_min(cavity, beam, measurement_frequency)
    powers = (fm_to_displacement(cavity, amplitudes) ** 2 / 2) / (floor**2 * rbw)
    return [
        FmCalibrationPoint(float(a), float(p)) for a, p in zip(amplitudes, powers)
    ]


def loglog_slope(points: Sequence[FmCalibrationPoint]) -> float:
    """Least-squares slope of log(power) against log(FM amplitude)."""
    if len(points) < 2:
        raise ValueError("at least 2 calibration points are required for a slope")
    x = np.log([p.fm_amplitude for p in points])
    y = np.log([p.normalized_power for p in points])
    if np.ptp(x) == 0:
        raise ValueError("calibration points need at least two distinct FM amplitudes")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def shot_floor_from_calibration(points: Sequence[FmCalibrationPoint], rbw: float) -> float:
    """FM density equivalent to the shot floor, read off the quadratic law.

    Fits ``power = k * dnu^2`` and returns ``sqrt(1/(2 k rbw))``: the density
    whose rms line power in ``rbw`` equals the floor. Agrees with
    :func:`shot_floor_fm` when the points obey the model.
    """
    if not points:
        raise ValueError("no calibration points")
    if not rbw > 0:
        raise ValueError("resolution bandwidth must be > 0")
    amplitudes = np.array([p.fm_amplitude for p in points])
    powers = np.array([p.normalized_power for p in points])
    # Least squares for k in log space: mean of log(power / dnu^2).
    k = math.exp(float(np.mean(np.log(powers / amplitudes**2))))
    return math.sqrt(1 / (2 * k * rbw))
