"""Command bodies shared by the CLI and the MCP server.

Each function takes an :class:`ExperimentConfig` (plus command options) and
returns plain data; the ``format_*`` helpers turn that data into the text the
CLI prints.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray

from cavity_calibration import (
    FmCalibrationPoint,
    calibration_curve,
    loglog_slope,
    mode_cleaner_intensity_modulation,
    shot_floor_fm,
    shot_floor_from_calibration,
)
from cavity_config import ExperimentConfig
from cavity_detection import (
    AnalyzerSettings,
    Spectrum,
    analytic_spectrum,
    drive_spectrum_model,
    excess_displacement,
    normalized_drive_power,
    normalized_thermal_spectrum,
    synthesize_trace,
    thermal_spectrum_model,
)
from cavity_errors import LinearizationError
from cavity_fitting import LorentzianFitResult
from cavity_mechanics import (
    driven_response,
    effective_mass,
    radiation_force,
    spatial_overlap,
    susceptibility,
)
from cavity_optics import (
    derive_cavity,
    dx_min,
    dx_min_static,
    loss_factor,
    photon_flux,
)
from cavity_spectrum_io import format_csv
from cavity_thermal import equipartition_variance, thermal_variance

SpectrumKind = Literal["thermal", "excitation"]

# Relative disagreement between loss-derived and measured finesse that gets flagged.
FINESSE_TOLERANCE = 0.05

SENSITIVITY_HEADER = "frequency_hz,dx_min_m_per_rthz,fm_floor_hz_per_rthz"
CALIBRATION_HEADER = "fm_amplitude_hz,normalized_power"


def db(ratio: float) -> float:
    """Power ratio in dB (labelled "dB re shot noise" in reports)."""
    return 10 * math.log10(ratio)


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def format_block(items: dict[str, Any]) -> str:
    """Flat ``key: value`` lines."""
    return "".join(f"{key}: {_fmt(value)}\n" for key, value in items.items())


def _finite_or_none(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite_or_none(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [_finite_or_none(item) for item in value]
    return value


def to_json(data: Any, **kwargs: Any) -> str:
    """Strict JSON text; NaN and infinite values are written as null."""
    return json.dumps(_finite_or_none(data), allow_nan=False, **kwargs)


# ---------------------------------------------------------------------------
# params
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParamsReport:
    values: dict[str, Any]
    flags: list[str]


def cavity_parameters(config: ExperimentConfig) -> ParamsReport:
    cavity, beam, mode = config.cavity, config.beam, config.mode
    derived = derive_cavity(cavity)
    rbw = config.analyzer.rbw
    thermal_peak = float(
        normalized_thermal_spectrum(cavity, beam, mode, config.environment, mode.resonance_frequency)
    )
    drive_peak = normalized_drive_power(cavity, beam, mode, config.drive, rbw)

    values: dict[str, Any] = {
        "finesse": derived.finesse,
        "loss_finesse": cavity.loss_finesse,
    }
    flags: list[str] = []
    if cavity.measured_finesse is not None:
        deviation = abs(cavity.loss_finesse - cavity.measured_finesse) / cavity.measured_finesse
        values["measured_finesse"] = cavity.measured_finesse
        values["finesse_deviation_percent"] = 100 * deviation
        if deviation > FINESSE_TOLERANCE:
            flags.append(
                f"loss-derived finesse {cavity.loss_finesse:.6g} differs from measured "
                f"{cavity.measured_finesse:.6g} by {100 * deviation:.1f}%"
            )
    values.update(
        {
            "free_spectral_range_hz": derived.free_spectral_range,
            "cavity_bandwidth_hz": derived.bandwidth,
            "photon_flux_per_s": photon_flux(beam, cavity),
            "dx_min_static_m_per_rthz": dx_min_static(cavity, beam),
            "loss_factor": loss_factor(cavity, beam),
            "dx_min_at_resonance_m_per_rthz": float(dx_min(cavity, beam, mode.resonance_frequency)),
            "fm_floor_at_calibration_hz_per_rthz": float(
                shot_floor_fm(
                    cavity,
                    beam,
                    config.calibration_frequency,
                    laser_frequency_noise=config.laser_frequency_noise,
                )
            ),
            "effective_mass_kg": effective_mass(mode),
            "mechanical_linewidth_hz": mode.linewidth,
            "peak_susceptibility_m_per_n": abs(susceptibility(mode, mode.resonance_frequency)),
            "spatial_overlap": spatial_overlap(config.spatial),
            "thermal_rms_m": math.sqrt(thermal_variance(mode, config.environment)),
            "equipartition_rms_m": math.sqrt(equipartition_variance(mode, config.environment)),
            "thermal_peak_db_re_shot_noise": db(thermal_peak),
            "drive_force_n": radiation_force(config.drive),
            "drive_power_modulation_w": config.drive.power_modulation,
            "driven_amplitude_m": driven_response(mode, config.drive),
            "drive_line_db_re_shot_noise": db(drive_peak),
        }
    )
    return ParamsReport(values, flags)


# ---------------------------------------------------------------------------
# sensitivity
# ---------------------------------------------------------------------------


def parse_sweep(text: str) -> NDArray[np.float64]:
    """``f0:f1:n`` to ``n`` evenly spaced frequencies, both ends included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"sweep must be f0:f1:n, got {text!r}")
    try:
        f0, f1, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValueError(f"sweep must be f0:f1:n, got {text!r}") from None
    if f0 < 0 or not f1 > f0:
        raise ValueError("sweep needs 0 <= f0 < f1")
    if n < 2:
        raise ValueError("sweep needs at least 2 points")
    return np.linspace(f0, f1, n)


def sensitivity_table(
    config: ExperimentConfig, frequencies: Sequence[float] | NDArray
) -> tuple[NDArray, NDArray, NDArray]:
    f = np.asarray(frequencies, dtype=float)
    dx = np.asarray(dx_min(config.cavity, config.beam, f), dtype=float)
    fm = np.asarray(
        shot_floor_fm(
            config.cavity, config.beam, f, laser_frequency_noise=config.laser_frequency_noise
        ),
        dtype=float,
    )
    return f, dx, fm


def format_sensitivity_csv(table: tuple[NDArray, NDArray, NDArray]) -> str:
    return format_csv(SENSITIVITY_HEADER, list(table))


def format_sensitivity_line(frequency: float, dx: float, fm: float) -> str:
    return (
        f"f = {frequency:.6g} Hz  dx_min = {dx:.4e} m/sqrt(Hz)  "
        f"fm_floor = {1e3 * fm:.4g} mHz/sqrt(Hz)\n"
    )


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


def generate_spectrum(
    config: ExperimentConfig,
    kind: SpectrumKind,
    settings: AnalyzerSettings | None = None,
    *,
    analytic: bool = False,
) -> tuple[Spectrum, NDArray[np.float64]]:
    """Normalized spectrum plus its signed displacement column.

    ``thermal`` is the Brownian noise around the mode in m^2/Hz; ``excitation``
    steps the radiation-pressure line across the grid and converts each bin
    coherently (m^2).
    """
    settings = settings or config.analyzer
    cavity, beam, mode = config.cavity, config.beam, config.mode
    if kind == "thermal":
        generator = thermal_spectrum_model(cavity, beam, mode, config.environment)
    elif kind == "excitation":
        generator = drive_spectrum_model(cavity, beam, mode, config.drive, settings.rbw)
    else:
        raise ValueError(f"unknown spectrum kind {kind!r}")
    spectrum = analytic_spectrum(generator, settings) if analytic else synthesize_trace(generator, settings)
    displacement = excess_displacement(spectrum, cavity, beam, coherent=kind == "excitation")
    return spectrum, displacement


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationReport:
    points: list[FmCalibrationPoint]
    slope: float
    measurement_frequency: float
    shot_floor_fm: float
    shot_floor_from_points: float
    # dI/I on the mode cleaner per point; None outside the first-order regime.
    intensity_modulations: list[float | None]


def calibration_report(
    config: ExperimentConfig,
    amplitudes: Sequence[float],
    measurement_frequency: float | None = None,
) -> CalibrationReport:
    frequency = config.calibration_frequency if measurement_frequency is None else measurement_frequency
    rbw = config.analyzer.rbw
    points = calibration_curve(config.cavity, config.beam, amplitudes, frequency, rbw)
    slope = loglog_slope(points)
    modulations: list[float | None] = []
    for point in points:
        try:
            modulations.append(mode_cleaner_intensity_modulation(config.mode_cleaner, point.fm_amplitude))
        except LinearizationError:
            modulations.append(None)
    return CalibrationReport(
        points=points,
        slope=slope,
        measurement_frequency=frequency,
        shot_floor_fm=float(shot_floor_fm(config.cavity, config.beam, frequency)),
        shot_floor_from_points=shot_floor_from_calibration(points, rbw),
        intensity_modulations=modulations,
    )


def format_calibration_csv(report: CalibrationReport) -> str:
    return format_csv(
        CALIBRATION_HEADER,
        [[p.fm_amplitude for p in report.points], [p.normalized_power for p in report.points]],
    )


def calibration_summary(report: CalibrationReport) -> dict[str, Any]:
    return {
        "measurement_frequency_hz": report.measurement_frequency,
        "points": len(report.points),
        "loglog_slope": report.slope,
        "fm_floor_model_hz_per_rthz": report.shot_floor_fm,
        "fm_floor_from_points_hz_per_rthz": report.shot_floor_from_points,
    }


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def fit_summary(result: LorentzianFitResult, weights: str = "none") -> dict[str, Any]:
    model = result.model
    sigma = result.parameter_uncertainties
    summary: dict[str, Any] = {
        "model": "lorentzian",
        "weights": weights,
        "center_hz": model.center,
        "center_sigma_hz": sigma["center"],
        "quality_factor": model.quality_factor,
        "quality_factor_sigma": sigma["quality_factor"],
        "peak_amplitude": model.peak_amplitude,
        "peak_amplitude_sigma": sigma["peak_amplitude"],
        "offset": model.offset,
        "offset_sigma": sigma["offset"],
        "linewidth_hz": model.linewidth,
    }
    if model.offset + model.peak_amplitude > 0:
        summary["peak_db_re_shot_noise"] = db(model.offset + model.peak_amplitude)
    summary.update(
        {
            "residual_norm": result.residual_norm,
            "iterations": result.iterations,
            "converged": result.converged,
        }
    )
    return summary
