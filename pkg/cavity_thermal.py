"""Brownian displacement noise of a mechanical mode.

Classical fluctuation-dissipation theorem, one-sided convention:

    S_x(f) = 4 k_B T Im chi(2 pi f) / (2 pi f)    [m^2/Hz]

so that integrating over f in (0, inf) gives the variance. With the constant
loss angle of :mod:`cavity_mechanics` the integrand behaves like 1/f at low
frequency, so band integrals need a strictly positive lower edge.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from cavity_constants import BOLTZMANN
from cavity_errors import InvariantError, QuadratureError
from cavity_mechanics import MechanicalMode, susceptibility

logger = logging.getLogger(__name__)

# Default full-band edges, relative to the resonance frequency.
FULL_BAND_LOW = 1e-4
FULL_BAND_HIGH = 1e2
# Breakpoints at f_M +/- these many linewidths, kept while inside the linear region.
RESONANCE_BREAKPOINTS = (10, 1e2, 1e3, 1e4)
# Panels inside f_M * [1/2, 2] are integrated in frequency, the rest in log-frequency.
LINEAR_REGION = (0.5, 2.0)


@dataclass(frozen=True)
class ThermalEnvironment:
    temperature: float  # K

    def __post_init__(self) -> None:
        if not self.temperature > 0:
            raise InvariantError("temperature must be > 0", ["temperature"])

    @property
    def thermal_energy(self) -> float:
        return BOLTZMANN * self.temperature


def thermal_psd(
    mode: MechanicalMode, env: ThermalEnvironment, frequency: ArrayLike
) -> float | NDArray[np.float64]:
    """One-sided displacement PSD in m^2/Hz; ``frequency`` must be > 0."""
    f = np.asarray(frequency, dtype=float)
    if np.any(~(f > 0)):
        raise ValueError("thermal PSD needs frequency > 0 (1/f singularity at 0)")
    omega = 2 * math.pi * f
    psd = 4 * env.thermal_energy * np.imag(susceptibility(mode, f)) / omega
    return psd if psd.ndim else float(psd)


def thermal_asd(
    mode: MechanicalMode, env: ThermalEnvironment, frequency: ArrayLike
) -> float | NDArray[np.float64]:
    """Amplitude density sqrt(S_x) in m/sqrt(Hz)."""
    return np.sqrt(thermal_psd(mode, env, frequency))


def equipartition_variance(mode: MechanicalMode, env: ThermalEnvironment) -> float:
    """k_B T chi0 = k_B T/(M Omega_M^2), the full-band variance in m^2."""
    return env.thermal_energy * mode.static_susceptibility


def _panels(
    mode: MechanicalMode, f_lo: float, f_hi: float
) -> list[tuple[float, float, bool]]:
    """Split [f_lo, f_hi] into (lo, hi, use_log) quadrature panels.

    Edges sit at f_M, at f_M +/- 10, 100, 1e3 and 1e4 linewidths (those that
    fall within f_M/2 of resonance) and at the linear-region bounds.
    """
    f_m = mode.resonance_frequency
    linear_lo, linear_hi = LINEAR_REGION[0] * f_m, LINEAR_REGION[1] * f_m
    offsets = [k * mode.linewidth for k in RESONANCE_BREAKPOINTS]
    offsets = [d for d in offsets if d < f_m - linear_lo]
    candidates = [f_m, linear_lo, linear_hi]
    candidates += [f_m - d for d in offsets] + [f_m + d for d in offsets]
    edges = sorted({f_lo, f_hi, *(p for p in candidates if f_lo < p < f_hi)})
    panels = []
    for lo, hi in zip(edges, edges[1:]):
        inside = lo >= linear_lo and hi <= linear_hi
        panels.append((lo, hi, not inside))
    return panels


def thermal_variance(
    mode: MechanicalMode,
    env: ThermalEnvironment,
    f_lo: float | None = None,
    f_hi: float | None = None,
    *,
    rtol: float = 1e-9,
) -> float:
    """Integral of :func:`thermal_psd` over [f_lo, f_hi], in m^2.

    Defaults to the full band f_M * [1e-4, 1e2]. Raises
    :class:`QuadratureError` when any panel misses the tolerance.
    """
    f_m = mode.resonance_frequency
    f_lo = FULL_BAND_LOW * f_m if f_lo is None else f_lo
    f_hi = FULL_BAND_HIGH * f_m if f_hi is None else f_hi
    if not f_lo > 0:
        raise ValueError("lower band edge must be > 0")
    if f_hi < f_lo:
        raise ValueError(f"empty band: f_lo={f_lo:g} > f_hi={f_hi:g}")
    if f_hi == f_lo:
        return 0.0

    def linear(f: float) -> float:
        return thermal_psd(mode, env, f)

    def logarithmic(u: float) -> float:
        f = math.exp(u)
        return thermal_psd(mode, env, f) * f

    total = 0.0
    for lo, hi, use_log in _panels(mode, f_lo, f_hi):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                if use_log:
                    value, err = integrate.quad(
                        logarithmic, math.log(lo), math.log(hi),
                        epsabs=0, epsrel=rtol, limit=500,
                    )
                else:
                    value, err = integrate.quad(
                        linear, lo, hi, epsabs=0, epsrel=rtol, limit=500
                    )
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(
                    f"thermal variance did not converge on [{lo:g}, {hi:g}] Hz: {exc}"
                ) from exc
        logger.debug("panel [%g, %g] Hz log=%s -> %.6e (+/- %.1e)", lo, hi, use_log, value, err)
        total += value
    return total
