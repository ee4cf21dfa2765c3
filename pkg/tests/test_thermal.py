"""Unit tests for cavity_thermal: FDT spectrum and band variance."""

import math

import numpy as np
import pytest

from cavity_constants import BOLTZMANN
from cavity_errors import InvariantError
from cavity_mechanics import MechanicalMode
from cavity_thermal import (
    ThermalEnvironment,
    _panels,
    equipartition_variance,
    thermal_asd,
    thermal_psd,
    thermal_variance,
)


def _band_variance_closed_form(mode, env, f_lo, f_hi):
    """Exact integral of the constant-loss-angle FDT spectrum over [f_lo, f_hi].

    With y = (f/f_M)^2 and eps = 1/Q the integrand reduces to
    (k_B T chi0 eps/pi) dy / (y ((y-1)^2 + eps^2)), integrated by partial fractions.
    """
    eps = 1 / mode.quality_factor

    def antiderivative(f):
        y = (f / mode.resonance_frequency) ** 2
        return (
            math.log(y)
            - 0.5 * math.log((y - 1) ** 2 + eps**2)
            + math.atan((y - 1) / eps) / eps
        )

    scale = env.thermal_energy * mode.static_susceptibility * eps / (math.pi * (1 + eps**2))
    return scale * (antiderivative(f_hi) - antiderivative(f_lo))


# ---------------------------------------------------------------------------
# thermal_psd
# ---------------------------------------------------------------------------


def test_psd_peak_value(mode, env):
    """(4 k_B T / Omega_M) chi0 Q at resonance, about 1.86e-33 m^2/Hz."""
    expected = 4 * BOLTZMANN * 300 / (2 * math.pi * 2e6) * 3.2e-11 * 44000

    assert thermal_psd(mode, env, 2e6) == pytest.approx(expected, rel=1e-9)
    assert thermal_psd(mode, env, 2e6) == pytest.approx(1.86e-33, rel=0.005)


def test_psd_is_positive_and_peaks_at_resonance(mode, env):
    f = np.linspace(1.99e6, 2.01e6, 2001)
    psd = thermal_psd(mode, env, f)

    assert np.all(psd > 0)
    assert f[np.argmax(psd)] == pytest.approx(2e6, abs=10.0)


def test_psd_scales_with_temperature(mode):
    cold = thermal_psd(mode, ThermalEnvironment(4.0), 2e6)
    warm = thermal_psd(mode, ThermalEnvironment(300.0), 2e6)

    assert warm / cold == pytest.approx(75.0, rel=1e-12)


def test_psd_peak_grows_with_q(env):
    peaks = [
        thermal_psd(MechanicalMode(2e6, q, 3.2e-11), env, 2e6) / q for q in (1e3, 44000, 1e6)
    ]

    assert peaks == pytest.approx([peaks[0]] * 3, rel=1e-12)


@pytest.mark.parametrize("side", [-1, 1])
def test_psd_halves_one_half_linewidth_off_resonance(mode, env, side):
    peak = thermal_psd(mode, env, 2e6)
    f = 2e6 + side * 2e6 / (2 * mode.quality_factor)

    assert thermal_psd(mode, env, f) == pytest.approx(peak / 2, rel=1e-4)


@pytest.mark.parametrize("frequency", [0.0, -1.0])
def test_psd_rejects_non_positive_frequency(mode, env, frequency):
    with pytest.raises(ValueError, match="frequency > 0"):
        thermal_psd(mode, env, frequency)


def test_asd_is_root_of_psd(mode, env):
    f = np.array([1e6, 2e6, 3e6])

    np.testing.assert_allclose(thermal_asd(mode, env, f) ** 2, thermal_psd(mode, env, f), rtol=1e-12)


def test_temperature_must_be_positive():
    with pytest.raises(InvariantError):
        ThermalEnvironment(0.0)


# ---------------------------------------------------------------------------
# thermal_variance
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("quality_factor", [1e4, 1e6])
def test_full_band_matches_equipartition(env, quality_factor):
    mode = MechanicalMode(2e6, quality_factor, 3.2e-11)

    assert thermal_variance(mode, env) == pytest.approx(equipartition_variance(mode, env), rel=0.005)


@pytest.mark.parametrize("quality_factor", [1e2, 1e4, 1e6])
def test_full_band_matches_closed_form(env, quality_factor):
    """The 1/f tail below resonance carries a share of order ln(f_lo)/Q.

    At Q = 100 that share is a few percent of k_B T chi0, so the reference is
    the exact band integral rather than equipartition.
    """
    mode = MechanicalMode(2e6, quality_factor, 3.2e-11)
    expected = _band_variance_closed_form(mode, env, 2e6 * 1e-4, 2e6 * 1e2)

    assert thermal_variance(mode, env) == pytest.approx(expected, rel=1e-6)


def test_half_power_band_carries_half_the_variance(mode, env):
    half = mode.linewidth / 2

    band = thermal_variance(mode, env, 2e6 - half, 2e6 + half)

    assert band == pytest.approx(equipartition_variance(mode, env) / 2, rel=0.005)


def test_high_q_panels_keep_shoulders_out_of_log_panels():
    mode = MechanicalMode(2e6, 1e6, 3.2e-11)

    panels = _panels(mode, 200.0, 2e8)

    assert panels[0][0] == 200.0 and panels[-1][1] == 2e8
    assert all(a[1] == b[0] for a, b in zip(panels, panels[1:]))
    near = [(lo, hi) for lo, hi, use_log in panels if not use_log]
    assert min(lo for lo, _ in near) == 1e6 and max(hi for _, hi in near) == 4e6
    for lo, hi, use_log in panels:
        if use_log:
            assert hi <= 2e6 - 1e4 * mode.linewidth or lo >= 2e6 + 1e4 * mode.linewidth
    widths = [hi - lo for lo, hi, _ in panels if lo >= 2e6 - 1e3 and hi <= 2e6 + 1e3]
    assert max(widths) <= 1e3 * mode.linewidth


def test_equipartition_value(mode, env):
    assert equipartition_variance(mode, env) == pytest.approx(1.33e-31, rel=0.005)
    assert math.sqrt(equipartition_variance(mode, env)) == pytest.approx(3.6e-16, rel=0.02)


def test_narrow_band_matches_closed_form(mode, env):
    f_lo, f_hi = 2e6 - 100.0, 2e6 + 300.0

    assert thermal_variance(mode, env, f_lo, f_hi) == pytest.approx(
        _band_variance_closed_form(mode, env, f_lo, f_hi), rel=1e-7
    )


def test_band_variance_is_additive(mode, env):
    whole = thermal_variance(mode, env, 1e6, 3e6)
    parts = thermal_variance(mode, env, 1e6, 2e6 + 5.0) + thermal_variance(mode, env, 2e6 + 5.0, 3e6)

    assert parts == pytest.approx(whole, rel=1e-8)


def test_empty_band_is_zero(mode, env):
    assert thermal_variance(mode, env, 2e6, 2e6) == 0.0


def test_inverted_band_rejected(mode, env):
    with pytest.raises(ValueError, match="empty band"):
        thermal_variance(mode, env, 3e6, 1e6)


def test_band_must_start_above_zero(mode, env):
    with pytest.raises(ValueError, match="lower band edge"):
        thermal_variance(mode, env, 0.0, 1e6)
