"""Lorentzian resonance fitting by damped least squares.

The line shape is |chi|^2 of the constant-loss-angle susceptibility,

    y(f) = offset + peak_amplitude / (Q^2 (1 - f^2/center^2)^2 + 1),

which peaks at ``offset + peak_amplitude`` on ``center`` and has a full width
at half maximum of ``center/Q``.

The minimizer is a Levenberg-Marquardt loop over the logarithms of the four
parameters, which keeps them positive without explicit bounds. Damping is
Marquardt-scaled (``lambda * diag(J^T J)``), starts at 1e-3, is divided by 10
on every accepted step and multiplied by 10 on every rejected one. A single
step changes no parameter by more than a factor of ten, and every parameter is
floored at 1e-12 of the data scale.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from cavity_detection import Spectrum
from cavity_errors import InvariantError

logger = logging.getLogger(__name__)

PARAMETER_NAMES = ("center", "quality_factor", "peak_amplitude", "offset")
MIN_POINTS = 8
MAX_LOG_STEP = math.log(10)
INITIAL_DAMPING = 1e-3
MAX_DAMPING = 1e20

Weights = Literal["none", "chi2"]


@dataclass(frozen=True)
class LorentzianModel:
    center: float  # Hz
    quality_factor: float
    peak_amplitude: float
    offset: float

    def __post_init__(self) -> None:
        if not self.center > 0:
            raise InvariantError("center must be > 0", ["center"])
        if not self.quality_factor > 0:
            raise InvariantError("quality factor must be > 0", ["quality_factor"])
        if not self.peak_amplitude >= 0:
            raise InvariantError("peak amplitude must be >= 0", ["peak_amplitude"])
        if not self.offset >= 0:
            raise InvariantError("offset must be >= 0", ["offset"])

    def as_array(self) -> NDArray[np.float64]:
        return np.array([getattr(self, name) for name in PARAMETER_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values: ArrayLike) -> LorentzianModel:
        return cls(*(float(v) for v in np.asarray(values, dtype=float)))

    @property
    def linewidth(self) -> float:
        return self.center / self.quality_factor


@dataclass(frozen=True)
class LorentzianFitResult:
    model: LorentzianModel
    residual_norm: float
    iterations: int
    converged: bool
    parameter_uncertainties: dict[str, float]
    gradient_norm: float = 0.0
    objective_history: tuple[float, ...] = field(default=(), repr=False)


def _frequencies(frequency: ArrayLike) -> NDArray[np.float64]:
    f = np.asarray(frequency, dtype=float)
    if np.any(~(f > 0)):
        raise ValueError("Lorentzian evaluation needs frequency > 0")
    return f


def lorentzian_eval(model: LorentzianModel, frequency: ArrayLike) -> float | NDArray:
    f = _frequencies(frequency)
    detuning = 1 - (f / model.center) ** 2
    y = model.offset + model.peak_amplitude / (model.quality_factor**2 * detuning**2 + 1)
    return y if y.ndim else float(y)


def lorentzian_jacobian(model: LorentzianModel, frequency: ArrayLike) -> NDArray[np.float64]:
    """Partial derivatives of :func:`lorentzian_eval`, shape (n, 4).

    Columns follow :data:`PARAMETER_NAMES`.
    """
    f = np.atleast_1d(_frequencies(frequency))
    c, q, a = model.center, model.quality_factor, model.peak_amplitude
    detuning = 1 - (f / c) ** 2
    denom = q**2 * detuning**2 + 1
    d_center = -a * q**2 * 2 * detuning * (2 * f**2 / c**3) / denom**2
    d_quality = -a * 2 * q * detuning**2 / denom**2
    d_amplitude = 1 / denom
    d_offset = np.ones_like(f)
    return np.column_stack([d_center, d_quality, d_amplitude, d_offset])


def _half_crossing(
    f: NDArray, y: NDArray, peak: int, level: float, direction: int
) -> float:
    i = peak
    while 0 < i < f.size - 1 and y[i] > level:
        i += direction
    if y[i] > level:
        return float(f[i])
    # Interpolate between the last bin above the level and the first at or below it.
    inner = i - direction
    fraction = (y[inner] - level) / (y[inner] - y[i])
    return float(f[inner] + fraction * (f[i] - f[inner]))


def initial_guess(spectrum: Spectrum) -> LorentzianModel:
    """Starting point read off the data.

    center at the highest bin, offset from the median of the outer 20% of bins,
    Q from the half-maximum crossings.
    """
    f, y = spectrum.frequencies, spectrum.values
    n = f.size
    if n < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points to fit, got {n}")
    if np.ptp(y) == 0:
        raise ValueError("degenerate spectrum: all values are equal")
    peak = int(np.argmax(y))
    if peak in (0, n - 1):
        raise ValueError("peak on the grid boundary: resonance not captured")
    edge = max(1, round(0.1 * n))
    offset = max(float(np.median(np.concatenate([y[:edge], y[-edge:]]))), 0.0)
    amplitude = float(y[peak]) - offset
    if amplitude <= 0:
        raise ValueError("no peak above the spectrum baseline")
    level = offset + amplitude / 2
    left = _half_crossing(f, y, peak, level, -1)
    right = _half_crossing(f, y, peak, level, +1)
    fwhm = right - left
    if fwhm <= 0:
        fwhm = float(f[peak + 1] - f[peak - 1])
    return LorentzianModel(float(f[peak]), float(f[peak]) / fwhm, amplitude, offset)


def fit_lorentzian(
    spectrum: Spectrum,
    initial: LorentzianModel | None = None,
    *,
    weights: Weights = "none",
    max_iterations: int = 200,
    xtol: float = 1e-9,
    gtol: float = 1e-12,
) -> LorentzianFitResult:
    """Least-squares Lorentzian fit of ``spectrum``.

    ``weights="chi2"`` divides each residual by the measured value, the natural
    weighting for averaged power spectra. Convergence: every parameter step
    below ``xtol`` relative, or the scaled gradient below ``gtol``. A run that
    exhausts ``max_iterations`` returns its best iterate with
    ``converged=False``.
    """
    f, y = spectrum.frequencies, spectrum.values
    if f.size < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points to fit, got {f.size}")
    if np.ptp(y) == 0:
        raise ValueError("degenerate spectrum: all values are equal")
    if weights not in ("none", "chi2"):
        raise ValueError(f"unknown weighting {weights!r}")
    start = initial if initial is not None else initial_guess(spectrum)

    scale = float(np.max(np.abs(y)))
    tiny = 1e-12 * scale
    w = np.ones_like(y) if weights == "none" else 1 / np.maximum(y, tiny)
    # Offset and amplitude may legitimately approach zero; their steps are
    # judged against a small fraction of the data scale.
    step_floor = np.array([0.0, 0.0, 1e-6 * scale, 1e-6 * scale])

    floor = np.full(len(PARAMETER_NAMES), tiny)
    log_floor = np.log(floor)

    def natural(p: NDArray) -> NDArray:
        return np.maximum(np.exp(p), floor)

    def residuals(p: NDArray) -> NDArray:
        model = LorentzianModel.from_array(natural(p))
        return w * (lorentzian_eval(model, f) - y)

    def jacobian(p: NDArray) -> NDArray:
        theta = natural(p)
        return w[:, None] * lorentzian_jacobian(LorentzianModel.from_array(theta), f) * theta

    def small_step(old: NDArray, new: NDArray) -> bool:
        theta_old, theta_new = natural(old), natural(new)
        return bool(np.all(np.abs(theta_new - theta_old) <= xtol * (np.abs(theta_old) + step_floor)))

    p = np.log(np.maximum(start.as_array(), floor))
    r = residuals(p)
    cost = 0.5 * float(r @ r)
    history = [cost]
    damping = INITIAL_DAMPING
    converged = False
    gradient_norm = float("inf")
    iteration = 0

    while iteration < max_iterations and not converged:
        iteration += 1
        jac = jacobian(p)
        gradient = jac.T @ r
        gram = jac.T @ jac
        column_norms = np.sqrt(np.diag(gram))
        residual_norm = np.sqrt(2 * cost)
        if residual_norm == 0:
            gradient_norm = 0.0
            converged = True
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            cosines = np.where(column_norms > 0, np.abs(gradient) / (column_norms * residual_norm), 0.0)
        gradient_norm = float(np.max(cosines))
        if gradient_norm < gtol:
            converged = True
            break

        # Solve in column-normalized form: columns can differ by tens of orders
        # of magnitude once offset or amplitude head towards zero.
        norms = np.maximum(column_norms, np.finfo(float).tiny)
        scaled_gram = gram / np.outer(norms, norms)
        scaled_gradient = gradient / norms
        entry_damping = damping
        while True:
            try:
                scaled_step = np.linalg.solve(
                    scaled_gram + damping * np.eye(len(p)), -scaled_gradient
                )
            except np.linalg.LinAlgError:
                damping *= 10
                if damping > MAX_DAMPING:
                    break
                continue
            step = np.clip(scaled_step / norms, -MAX_LOG_STEP, MAX_LOG_STEP)
            trial = np.maximum(p + step, log_floor)
            try:
                trial_r = residuals(trial)
                trial_cost = 0.5 * float(trial_r @ trial_r)
            except InvariantError:
                # exp() overflowed a parameter out of its domain.
                trial_r, trial_cost = r, math.inf
            if np.isfinite(trial_cost) and trial_cost <= cost:
                converged = small_step(p, trial)
                p, r, cost = trial, trial_r, trial_cost
                history.append(cost)
                damping /= 10
                break
            damping *= 10
            if small_step(p, trial) or damping > MAX_DAMPING:
                # No representable step lowers the objective any further.
                converged = small_step(p, trial)
                break

        logger.debug(
            "LM iteration %d: objective %.6e, damping %.1e, scaled gradient %.2e",
            iteration, cost, damping, gradient_norm,
        )
        if damping > MAX_DAMPING:
            if converged or entry_damping <= INITIAL_DAMPING:
                break
            # Smaller dampings were last tried at another iterate.
            damping = INITIAL_DAMPING

    theta = natural(p)
    model = LorentzianModel.from_array(theta)
    uncertainties = _uncertainties(jacobian(p), cost, theta)
    if not converged:
        logger.warning("Lorentzian fit did not converge after %d iterations", iteration)
    return LorentzianFitResult(
        model=model,
        residual_norm=float(np.sqrt(2 * cost)),
        iterations=iteration,
        converged=converged,
        parameter_uncertainties=uncertainties,
        gradient_norm=gradient_norm,
        objective_history=tuple(history),
    )


def _uncertainties(jac: NDArray, cost: float, theta: NDArray) -> dict[str, float]:
    """One-sigma errors from the local quadratic approximation of the objective."""
    dof = jac.shape[0] - jac.shape[1]
    if dof <= 0:
        return dict.fromkeys(PARAMETER_NAMES, float("nan"))
    variance = 2 * cost / dof
    norms = np.maximum(np.linalg.norm(jac, axis=0), np.finfo(float).tiny)
    scaled = jac / norms
    covariance = np.linalg.pinv(scaled.T @ scaled) / np.outer(norms, norms) * variance
    sigma_log = np.sqrt(np.clip(np.diag(covariance), 0, None))
    return {name: float(s * t) for name, s, t in zip(PARAMETER_NAMES, sigma_log, theta)}
