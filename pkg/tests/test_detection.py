"""Unit tests for cavity_detection: normalized spectra and averaged traces."""

import numpy as np
import pytest

from cavity_detection import (
    AnalyzerSettings,
    Spectrum,
    SpectrumUnit,
    analytic_spectrum,
    averaging_factors,
    drive_spectrum_model,
    equivalent_displacement,
    excess_displacement,
    normalized_drive_power,
    normalized_thermal_spectrum,
    synthesize_trace,
    thermal_spectrum_model,
)
from cavity_errors import BelowShotNoiseError, InvariantError
from cavity_mechanics import susceptibility
from cavity_optics import dx_min
from cavity_thermal import thermal_psd


@pytest.fixture
def settings() -> AnalyzerSettings:
    """Default analyzer: 500 Hz around 2 MHz, 1 Hz RBW, 1000 averages."""
    return AnalyzerSettings.centered(2e6, 500.0, seed=42)


# ---------------------------------------------------------------------------
# Normalized spectra
# ---------------------------------------------------------------------------


def test_thermal_peak_over_shot_noise(cavity, beam, mode, env):
    """Thermal peak about 2.2e4 times the shot-noise floor (43.5 dB)."""
    peak = normalized_thermal_spectrum(cavity, beam, mode, env, 2e6)

    assert peak == pytest.approx(1 + thermal_psd(mode, env, 2e6) / dx_min(cavity, beam, 2e6) ** 2)
    assert peak == pytest.approx(2.2e4, rel=0.02)


def test_thermal_spectrum_tends_to_floor_far_from_resonance(cavity, beam, mode, env):
    assert normalized_thermal_spectrum(cavity, beam, mode, env, 1e5) == pytest.approx(1.0, abs=1e-3)


def test_drive_line_over_shot_noise(cavity, beam, mode, drive):
    """1.2 nN at resonance in a 1 Hz RBW: about 1.7e7."""
    assert normalized_drive_power(cavity, beam, mode, drive, rbw=1.0) == pytest.approx(1.7e7, rel=0.01)


def test_drive_line_scales_inversely_with_rbw(cavity, beam, mode, drive):
    narrow = normalized_drive_power(cavity, beam, mode, drive, rbw=1.0)
    wide = normalized_drive_power(cavity, beam, mode, drive, rbw=10.0)

    assert narrow / wide == pytest.approx(10.0, rel=1e-12)


def test_drive_model_matches_line_power(cavity, beam, mode, drive):
    model = drive_spectrum_model(cavity, beam, mode, drive, rbw=1.0)

    assert model(np.array([2e6]))[0] == pytest.approx(
        normalized_drive_power(cavity, beam, mode, drive, rbw=1.0), rel=1e-12
    )


def test_invalid_rbw_rejected(cavity, beam, mode, drive):
    with pytest.raises(ValueError, match="resolution bandwidth"):
        normalized_drive_power(cavity, beam, mode, drive, rbw=0.0)


# ---------------------------------------------------------------------------
# AnalyzerSettings / Spectrum
# ---------------------------------------------------------------------------


def test_centered_settings_grid():
    settings = AnalyzerSettings.centered(2e6, 500.0, n_points=501)
    f = settings.frequencies()

    assert f[0] == 2e6 - 250.0
    assert f[-1] == 2e6 + 250.0
    assert f[250] == pytest.approx(2e6)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"rbw": 0.0}, "rbw"),
        ({"n_averages": 0}, "n_averages"),
        ({"f_start": 10.0, "f_stop": 10.0}, "f_stop"),
        ({"n_points": 1}, "n_points"),
        ({"seed": -1}, "seed"),
        ({"seed": 2**64}, "seed"),
    ],
)
def test_analyzer_invariants(kwargs, field):
    values = {"rbw": 1.0, "n_averages": 10, "f_start": 1.0, "f_stop": 2.0, "n_points": 10}
    values.update(kwargs)

    with pytest.raises(InvariantError) as excinfo:
        AnalyzerSettings(**values)

    assert field in excinfo.value.fields


def test_spectrum_requires_increasing_frequencies():
    with pytest.raises(InvariantError, match="strictly increasing"):
        Spectrum([1.0, 1.0, 2.0], [1.0, 1.0, 1.0], SpectrumUnit.SHOT_NORMALIZED_POWER)


def test_spectrum_rejects_negative_values():
    with pytest.raises(InvariantError, match=">= 0"):
        Spectrum([1.0, 2.0], [1.0, -1.0], SpectrumUnit.SHOT_NORMALIZED_POWER)


def test_spectrum_rejects_length_mismatch():
    with pytest.raises(InvariantError):
        Spectrum([1.0, 2.0, 3.0], [1.0, 1.0], SpectrumUnit.SHOT_NORMALIZED_POWER)


# ---------------------------------------------------------------------------
# Averaging noise
# ---------------------------------------------------------------------------


def test_averaging_factors_deterministic():
    first = averaging_factors(seed=7, n_bins=200, n_averages=100)
    second = averaging_factors(seed=7, n_bins=200, n_averages=100)

    assert np.array_equal(first, second)


def test_averaging_factors_depend_on_seed():
    assert not np.array_equal(averaging_factors(1, 50, 100), averaging_factors(2, 50, 100))


def test_averaging_factors_are_per_bin():
    """Bin i's factor depends only on (seed, i), not on how many bins are drawn."""
    short = averaging_factors(seed=3, n_bins=10, n_averages=1000)
    long = averaging_factors(seed=3, n_bins=40, n_averages=1000)

    assert np.array_equal(short, long[:10])


def test_averaging_factor_statistics():
    """Gamma(N, 1/N): mean 1, variance 1/N (well within three standard errors)."""
    n_averages = 10
    factors = averaging_factors(seed=0, n_bins=20000, n_averages=n_averages)

    assert np.all(factors > 0)
    assert factors.mean() == pytest.approx(1.0, abs=3 * np.sqrt(0.1 / 20000))
    assert factors.var() == pytest.approx(1 / n_averages, rel=0.05)


def test_flat_floor_trace_moments():
    """1000 averages on a flat floor of 1: mean 1, relative scatter 1/sqrt(1000)."""
    settings = AnalyzerSettings(
        rbw=1.0, n_averages=1000, f_start=1e6, f_stop=1e6 + 4999, n_points=5000, seed=17
    )

    trace = synthesize_trace(np.ones_like, settings)

    assert trace.values.mean() == pytest.approx(1.0, abs=0.01)
    assert trace.values.std() / trace.values.mean() == pytest.approx(1 / np.sqrt(1000), rel=0.2)


def test_trace_is_deterministic(cavity, beam, mode, env, settings):
    generator = thermal_spectrum_model(cavity, beam, mode, env)

    first = synthesize_trace(generator, settings)
    second = synthesize_trace(generator, settings)

    assert np.array_equal(first.values, second.values)
    assert first.settings == settings


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_trace_approaches_truth_with_many_averages(cavity, beam, mode, env, seed):
    settings = AnalyzerSettings.centered(2e6, 500.0, n_averages=10**6, seed=seed)
    generator = thermal_spectrum_model(cavity, beam, mode, env)

    trace = synthesize_trace(generator, settings)
    truth = analytic_spectrum(generator, settings)

    assert np.max(np.abs(trace.values / truth.values - 1)) < 0.01


def test_analytic_spectrum_has_no_noise(cavity, beam, mode, env, settings):
    generator = thermal_spectrum_model(cavity, beam, mode, env)
    spectrum = analytic_spectrum(generator, settings)

    np.testing.assert_array_equal(spectrum.values, generator(settings.frequencies()))
    assert spectrum.unit is SpectrumUnit.SHOT_NORMALIZED_POWER


# ---------------------------------------------------------------------------
# Displacement conversion
# ---------------------------------------------------------------------------


def test_thermal_round_trip_per_bin(cavity, beam, mode, env, settings):
    generator = thermal_spectrum_model(cavity, beam, mode, env)
    spectrum = analytic_spectrum(generator, settings)

    displacement = equivalent_displacement(spectrum, cavity, beam)

    assert displacement.unit is SpectrumUnit.DISPLACEMENT_PSD
    np.testing.assert_allclose(
        displacement.values, thermal_psd(mode, env, spectrum.frequencies), rtol=1e-12
    )


def test_coherent_conversion_gives_line_power(cavity, beam, mode, drive, settings):
    generator = drive_spectrum_model(cavity, beam, mode, drive, settings.rbw)
    spectrum = analytic_spectrum(generator, settings)

    displacement = equivalent_displacement(spectrum, cavity, beam, coherent=True)

    amplitude = np.abs(susceptibility(mode, spectrum.frequencies)) * 1.2e-9
    np.testing.assert_allclose(displacement.values, amplitude**2 / 2, rtol=1e-9)


def test_below_floor_bins_are_reported(cavity, beam):
    spectrum = Spectrum([1e6, 2e6, 3e6], [0.5, 2.0, 0.9], SpectrumUnit.SHOT_NORMALIZED_POWER)

    with pytest.raises(BelowShotNoiseError) as excinfo:
        equivalent_displacement(spectrum, cavity, beam)

    assert excinfo.value.bins == (0, 2)


def test_excess_displacement_keeps_sign(cavity, beam):
    spectrum = Spectrum([1e6, 2e6], [0.5, 2.0], SpectrumUnit.SHOT_NORMALIZED_POWER)

    excess = excess_displacement(spectrum, cavity, beam)

    assert excess[0] < 0 < excess[1]
    assert excess[1] == pytest.approx(dx_min(cavity, beam, 2e6) ** 2)


def test_coherent_conversion_needs_rbw(cavity, beam):
    spectrum = Spectrum([1e6, 2e6], [1.0, 2.0], SpectrumUnit.SHOT_NORMALIZED_POWER)

    with pytest.raises(ValueError, match="resolution bandwidth"):
        excess_displacement(spectrum, cavity, beam, coherent=True)
    assert excess_displacement(spectrum, cavity, beam, coherent=True, rbw=2.0)[1] == pytest.approx(
        2.0 * dx_min(cavity, beam, 2e6) ** 2 * 2.0
    )


def test_displacement_conversion_needs_normalized_input(cavity, beam):
    spectrum = Spectrum([1e6, 2e6], [1e-36, 2e-36], SpectrumUnit.DISPLACEMENT_PSD)

    with pytest.raises(ValueError, match="shot-normalized"):
        excess_displacement(spectrum, cavity, beam)
