"""Shot-noise-normalized homodyne spectra and spectrum-analyzer traces.

Normalized spectra are power ratios against the shot-noise floor of the
homodyne detection:

* noise spectra: ``1 + S_x(f) / dx_min(f)^2`` (the floor contributes exactly 1);
* coherent lines: ``(x^2 / 2) / (dx_min(f)^2 * rbw)``, the rms power of a line of
  peak amplitude ``x`` over the shot-noise power in one resolution bandwidth.

Averaged analyzer traces multiply the analytic curve bin by bin by
chi^2_{2N}/(2N) factors (power average of N independent periodograms). Each
bin's factor depends only on ``(seed, bin index)``.
"""

from __future__ import annotations

import enum
import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from cavity_errors import BelowShotNoiseError, InvariantError
from cavity_mechanics import (
    MechanicalMode,
    RadiationPressureDrive,
    driven_response,
    radiation_force,
    susceptibility,
)
from cavity_optics import Beam, OpticalCavity, dx_min
from cavity_thermal import ThermalEnvironment, thermal_psd

logger = logging.getLogger(__name__)

SpectrumGenerator = Callable[[NDArray[np.float64]], NDArray[np.float64]]

_UINT64_MAX = 2**64 - 1


class SpectrumUnit(enum.StrEnum):
    SHOT_NORMALIZED_POWER = "shot_normalized_power"
    DISPLACEMENT_PSD = "displacement_psd_m2_per_Hz"
    DISPLACEMENT_ASD = "displacement_asd_m_per_rtHz"


@dataclass(frozen=True)
class AnalyzerSettings:
    rbw: float  # Hz
    n_averages: int
    f_start: float  # Hz
    f_stop: float  # Hz
    n_points: int
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.rbw > 0:
            raise InvariantError("resolution bandwidth must be > 0", ["rbw"])
        if self.n_averages < 1:
            raise InvariantError("n_averages must be >= 1", ["n_averages"])
        if not self.f_start < self.f_stop:
            raise InvariantError("f_start must be < f_stop", ["f_start", "f_stop"])
        if self.n_points < 2:
            raise InvariantError("n_points must be >= 2", ["n_points"])
        if not 0 <= self.seed <= _UINT64_MAX:
            raise InvariantError("seed must be an unsigned 64-bit integer", ["seed"])

    @classmethod
    def centered(
        cls,
        center: float,
        span: float,
        *,
        rbw: float = 1.0,
        n_averages: int = 1000,
        n_points: int = 500,
        seed: int = 0,
    ) -> AnalyzerSettings:
        return cls(rbw, n_averages, center - span / 2, center + span / 2, n_points, seed)

    def frequencies(self) -> NDArray[np.float64]:
        return np.linspace(self.f_start, self.f_stop, self.n_points)


@dataclass(frozen=True, eq=False)
class Spectrum:
    frequencies: NDArray[np.float64]
    values: NDArray[np.float64]
    unit: SpectrumUnit
    settings: AnalyzerSettings | None = None

    def __post_init__(self) -> None:
        frequencies = np.asarray(self.frequencies, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if frequencies.ndim != 1 or frequencies.shape != values.shape:
            raise InvariantError(
                "frequencies and values must be 1-D of equal length",
                ["frequencies", "values"],
            )
        if np.any(np.diff(frequencies) <= 0):
            raise InvariantError("frequencies must be strictly increasing", ["frequencies"])
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvariantError("values must be finite and >= 0", ["values"])
        object.__setattr__(self, "frequencies", frequencies)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "unit", SpectrumUnit(self.unit))

    def __len__(self) -> int:
        return self.frequencies.size


def _coherent_ratio(amplitude: ArrayLike, floor: ArrayLike, rbw: float) -> NDArray:
    if not rbw > 0:
        raise ValueError("resolution bandwidth must be > 0")
    return (np.asarray(amplitude) ** 2 / 2) / (np.asarray(floor) ** 2 * rbw)


def normalized_thermal_spectrum(
    cavity: OpticalCavity,
    beam: Beam,
    mode: MechanicalMode,
    env: ThermalEnvironment,
    frequency: ArrayLike,
) -> float | NDArray[np.float64]:
    """Thermal phase noise over the shot-noise floor, ``1 + S_x/dx_min^2``."""
    return 1 + thermal_psd(mode, env, frequency) / dx_min(cavity, beam, frequency) ** 2


def normalized_drive_power(
    cavity: OpticalCavity,
    beam: Beam,
    mode: MechanicalMode,
    drive: RadiationPressureDrive,
    rbw: float,
) -> float:
    """Coherent radiation-pressure line over the shot noise in ``rbw``."""
    floor = dx_min(cavity, beam, drive.modulation_frequency)
    return float(_coherent_ratio(driven_response(mode, drive), floor, rbw))


def thermal_spectrum_model(
    cavity: OpticalCavity, beam: Beam, mode: MechanicalMode, env: ThermalEnvironment
) -> SpectrumGenerator:
    def generator(frequencies: NDArray[np.float64]) -> NDArray[np.float64]:
        return normalized_thermal_spectrum(cavity, beam, mode, env, frequencies)

    return generator


def drive_spectrum_model(
    cavity: OpticalCavity,
    beam: Beam,
    mode: MechanicalMode,
    drive: RadiationPressureDrive,
    rbw: float,
) -> SpectrumGenerator:
    """Line power seen when the drive is stepped across each frequency.

    Only the modulation frequency of ``drive`` is swept; its force is kept.
    """
    force = radiation_force(drive)

    def generator(frequencies: NDArray[np.float64]) -> NDArray[np.float64]:
        amplitude = np.abs(susceptibility(mode, frequencies)) * force
        return _coherent_ratio(amplitude, dx_min(cavity, beam, frequencies), rbw)

    return generator


def analytic_spectrum(generator: SpectrumGenerator, settings: AnalyzerSettings) -> Spectrum:
    frequencies = settings.frequencies()
    return Spectrum(
        frequencies, generator(frequencies), SpectrumUnit.SHOT_NORMALIZED_POWER, settings
    )


def averaging_factors(seed: int, n_bins: int, n_averages: int) -> NDArray[np.float64]:
    """Per-bin chi^2_{2N}/(2N) factors with mean 1 and variance 1/N.

    Bin ``i`` draws one 64-bit word from ``SeedSequence(seed, spawn_key=(i,))``
    (numpy's documented, platform-independent hash) and maps it through the
    inverse regularized incomplete gamma function: chi^2_{2N}/(2N) is
    Gamma(shape=N, scale=1/N).
    """
    words = np.empty(n_bins, dtype=np.uint64)
    for i in range(n_bins):
        words[i] = np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1, np.uint64)[0]
    # 53-bit mantissa, offset by half a step so u lies strictly in (0, 1).
    uniforms = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return special.gammaincinv(n_averages, uniforms) / n_averages


def synthesize_trace(generator: SpectrumGenerator, settings: AnalyzerSettings) -> Spectrum:
    """Averaged analyzer trace: the analytic curve times per-bin averaging noise."""
    truth = analytic_spectrum(generator, settings)
    factors = averaging_factors(settings.seed, settings.n_points, settings.n_averages)
    logger.debug(
        "synthesized %d bins, %d averages, seed %d", settings.n_points, settings.n_averages, settings.seed
    )
    return Spectrum(truth.frequencies, truth.values * factors, truth.unit, settings)


def excess_displacement(
    spectrum: Spectrum,
    cavity: OpticalCavity,
    beam: Beam,
    *,
    coherent: bool = False,
    rbw: float | None = None,
) -> NDArray[np.float64]:
    """Signed per-bin displacement estimate behind a normalized spectrum.

    Noise mode gives ``(value - 1) * dx_min^2`` in m^2/Hz and goes negative
    wherever averaging noise pushes a bin below the floor. Coherent mode gives
    ``value * dx_min^2 * rbw``.
    """
    if spectrum.unit is not SpectrumUnit.SHOT_NORMALIZED_POWER:
        raise ValueError(f"expected a shot-normalized spectrum, got {spectrum.unit}")
    floor_psd = dx_min(cavity, beam, spectrum.frequencies) ** 2
    if not coherent:
        return (spectrum.values - 1) * floor_psd
    if rbw is None:
        if spectrum.settings is None:
            raise ValueError("coherent conversion needs a resolution bandwidth")
        rbw = spectrum.settings.rbw
    return spectrum.values * floor_psd * rbw


def equivalent_displacement(
    spectrum: Spectrum,
    cavity: OpticalCavity,
    beam: Beam,
    *,
    coherent: bool = False,
    rbw: float | None = None,
) -> Spectrum:
    """Displacement spectrum behind a shot-normalized one.

    In noise mode every bin must sit at or above the shot-noise floor;
    :class:`BelowShotNoiseError` lists the bins that do not.
    """
    if not coherent:
        below = np.flatnonzero(spectrum.values < 1)
        if below.size:
            raise BelowShotNoiseError(below.tolist())
    values = excess_displacement(spectrum, cavity, beam, coherent=coherent, rbw=rbw)
    return Spectrum(
        spectrum.frequencies, values, SpectrumUnit.DISPLACEMENT_PSD, spectrum.settings
    )
