from typing import Any, Literal

from mcp.server.fastmcp import Context, FastMCP
from mcp.server.fastmcp.prompts.base import AssistantMessage, UserMessage
from mcp.types import ToolAnnotations

from cavity_constants import BOLTZMANN, HBAR, PLANCK, SPEED_OF_LIGHT
from cavity_config import (
    DEFAULT_CONFIG_PATH,
    ExperimentConfig,
    describe_keys,
    load_experiment_config,
)
from cavity_detection import AnalyzerSettings
from cavity_fitting import fit_lorentzian
from cavity_reports import (
    calibration_report,
    calibration_summary,
    cavity_parameters as params_report,
    fit_summary,
    generate_spectrum,
    parse_sweep,
    sensitivity_table,
    to_json,
)
from cavity_spectrum_io import format_spectrum_csv, parse_spectrum_csv

# Initialize FastMCP server
mcp = FastMCP("cavity-sense")

# ---------------------------------------------------------------------------
# Tool annotation presets
# ---------------------------------------------------------------------------
READ_ONLY = ToolAnnotations(
    readOnlyHint=True,
    destructiveHint=False,
    idempotentHint=True,
    openWorldHint=False,
)


def _config(config_path: str | None, seed: int | None = None) -> ExperimentConfig:
    return load_experiment_config(config_path, seed=seed)


# ---------------------------------------------------------------------------
# MCP Resources: discoverable experiment metadata
# ---------------------------------------------------------------------------


@mcp.resource("cavity://defaults")
def get_defaults() -> str:
    """The experiment config in effect when no config path is given."""
    if DEFAULT_CONFIG_PATH.is_file():
        return DEFAULT_CONFIG_PATH.read_text(encoding="utf-8")
    return describe_keys()


@mcp.resource("cavity://constants")
def get_constants() -> str:
    """Physical constants used by every computation (SI, CODATA)."""
    return to_json(
        {
            "planck_j_s": PLANCK,
            "hbar_j_s": HBAR,
            "speed_of_light_m_per_s": SPEED_OF_LIGHT,
            "boltzmann_j_per_k": BOLTZMANN,
        }
    )


@mcp.resource("cavity://config-keys")
def get_config_keys() -> str:
    """Accepted config keys, their defaults and unit suffixes."""
    return describe_keys()


# ---------------------------------------------------------------------------
# MCP Prompts: reusable analysis templates
# ---------------------------------------------------------------------------


@mcp.prompt()
def noise_budget(frequency_hz: float = 2e6) -> list:
    """Walk through the displacement noise budget at one analysis frequency."""
    return [
        UserMessage(
            f"Build a displacement noise budget for the sensor at {frequency_hz:g} Hz: "
            "shot-noise floor, thermal noise of the mechanical mode and the "
            "radiation-pressure calibration line."
        ),
        AssistantMessage(
            "I'll call cavity_parameters for the derived cavity and resonator "
            f"quantities, then sensitivity at {frequency_hz:g} Hz for the shot-noise "
            "floor, and synthesize_spectrum with analytic=true for the thermal "
            "peak relative to that floor."
        ),
    ]


# ---------------------------------------------------------------------------
# MCP Tools
# ---------------------------------------------------------------------------


@mcp.tool(annotations=READ_ONLY)
async def cavity_parameters(config_path: str | None = None) -> str:
    """Derived cavity and resonator quantities as JSON.

    Finesse, free spectral range, bandwidth, photon flux, effective mass,
    spatial overlap and dB levels of the thermal peak and the drive line.
    Disagreements above 5% between loss-derived and measured finesse are
    listed under ``flags``.

    Args:
        config_path: Experiment config file (default: ./experiment.cfg or built-in values)
    """
    report = params_report(_config(config_path))
    return to_json({**report.values, "flags": report.flags})


@mcp.tool(annotations=READ_ONLY)
async def sensitivity(
    frequency_hz: float | None = None,
    sweep: str | None = None,
    config_path: str | None = None,
) -> str:
    """Shot-noise-limited displacement floor and its FM equivalent.

    Args:
        frequency_hz: Single analysis frequency in Hz
        sweep: Frequency sweep "f0:f1:n" instead of a single frequency
        config_path: Experiment config file
    """
    if (frequency_hz is None) == (sweep is None):
        raise ValueError("give exactly one of frequency_hz or sweep")
    frequencies = parse_sweep(sweep) if sweep else [frequency_hz]
    f, dx, fm = sensitivity_table(_config(config_path), frequencies)
    rows = [
        {"frequency_hz": float(a), "dx_min_m_per_rthz": float(b), "fm_floor_hz_per_rthz": float(c)}
        for a, b, c in zip(f, dx, fm)
    ]
    return to_json(rows[0] if frequency_hz is not None else rows)


@mcp.tool(annotations=READ_ONLY)
async def synthesize_spectrum(
    kind: Literal["thermal", "excitation"] = "thermal",
    center_hz: float | None = None,
    span_hz: float | None = None,
    points: int | None = None,
    rbw_hz: float | None = None,
    averages: int | None = None,
    seed: int | None = None,
    analytic: bool = False,
    config_path: str | None = None,
    ctx: Context | None = None,
) -> str:
    """Shot-noise-normalized spectrum as CSV (same format as the CLI).

    Columns: frequency_hz, normalized_power, displacement_psd_m2_per_hz.
    The same seed always gives the same trace.

    Args:
        kind: "thermal" (Brownian noise) or "excitation" (swept radiation-pressure line)
        center_hz: Analyzer center (default: mechanical resonance)
        span_hz: Analyzer span (default 500 Hz)
        points: Number of bins (default 500)
        rbw_hz: Resolution bandwidth (default 1 Hz)
        averages: Number of power averages (default 1000)
        seed: Trace seed
        analytic: Skip the averaging noise
        config_path: Experiment config file
    """
    config = _config(config_path, seed)
    base = config.analyzer
    settings = AnalyzerSettings.centered(
        center_hz if center_hz is not None else (base.f_start + base.f_stop) / 2,
        span_hz if span_hz is not None else base.f_stop - base.f_start,
        rbw=rbw_hz if rbw_hz is not None else base.rbw,
        n_averages=averages if averages is not None else base.n_averages,
        n_points=points if points is not None else base.n_points,
        seed=base.seed,
    )
    if ctx:
        await ctx.info(
            f"Synthesizing {kind} spectrum: {settings.n_points} bins, "
            f"{'analytic' if analytic else f'seed {settings.seed}'}"
        )
    spectrum, displacement = generate_spectrum(config, kind, settings, analytic=analytic)
    return format_spectrum_csv(spectrum, displacement)


@mcp.tool(annotations=READ_ONLY)
async def calibration_curve(
    amplitudes_hz: list[float],
    frequency_hz: float | None = None,
    config_path: str | None = None,
) -> str:
    """Normalized line power against laser FM amplitude, with its log-log slope.

    Args:
        amplitudes_hz: FM amplitudes in Hz (at least 2 for a slope)
        frequency_hz: Measurement frequency (default: config calibration frequency)
        config_path: Experiment config file
    """
    report = calibration_report(_config(config_path), amplitudes_hz, frequency_hz)
    result: dict[str, Any] = calibration_summary(report)
    result["curve"] = [
        {
            "fm_amplitude_hz": p.fm_amplitude,
            "normalized_power": p.normalized_power,
            "mode_cleaner_intensity_modulation": m,
        }
        for p, m in zip(report.points, report.intensity_modulations)
    ]
    return to_json(result)


@mcp.tool(annotations=READ_ONLY)
async def fit_spectrum(
    csv_text: str,
    weights: Literal["none", "chi2"] = "none",
    ctx: Context | None = None,
) -> str:
    """Lorentzian fit of a spectrum CSV, returned as JSON.

    Args:
        csv_text: Spectrum CSV as produced by synthesize_spectrum
        weights: "none" for plain least squares, "chi2" to weight by 1/value
    """
    spectrum, _ = parse_spectrum_csv(csv_text)
    result = fit_lorentzian(spectrum, weights=weights)
    if ctx and not result.converged:
        await ctx.info(f"Fit did not converge after {result.iterations} iterations")
    return to_json(fit_summary(result, weights))


def main():
    mcp.run(transport="stdio")


if __name__ == "__main__":
    main()
