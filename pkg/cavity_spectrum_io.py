"""Spectrum CSV files.

One header row, then one row per bin ordered by frequency::

    frequency_hz,normalized_power,displacement_psd_m2_per_hz
    1.9997500000000000e+06,1.8204771315862313e+02,5.3154049102227435e-37

Numbers are written with 17 significant digits, which round-trips every
float64 exactly. Rows end with a single ``\\n``. Analyzer settings are not
stored; a parsed spectrum has ``settings=None``.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from cavity_detection import Spectrum, SpectrumUnit
from cavity_errors import InvariantError, SpectrumParseError

SPECTRUM_COLUMNS = ("frequency_hz", "normalized_power", "displacement_psd_m2_per_hz")
SPECTRUM_HEADER = ",".join(SPECTRUM_COLUMNS)


def format_number(value: float) -> str:
    return f"{value:.16e}"


def format_csv(header: str, columns: list[ArrayLike]) -> str:
    """Render equal-length numeric columns under ``header``."""
    arrays = [np.asarray(c, dtype=float) for c in columns]
    rows = [header]
    for row in zip(*arrays):
        rows.append(",".join(format_number(float(x)) for x in row))
    return "\n".join(rows) + "\n"


def format_spectrum_csv(spectrum: Spectrum, displacement: ArrayLike) -> str:
    """CSV text for a shot-normalized spectrum and its displacement column (m^2/Hz)."""
    if spectrum.unit is not SpectrumUnit.SHOT_NORMALIZED_POWER:
        raise ValueError(f"only shot-normalized spectra are written, got {spectrum.unit}")
    column = np.asarray(displacement, dtype=float)
    if column.shape != spectrum.frequencies.shape:
        raise ValueError("displacement column length does not match the spectrum")
    return format_csv(SPECTRUM_HEADER, [spectrum.frequencies, spectrum.values, column])


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise SpectrumParseError(f"{column}: {text.strip()!r} is not a number", line) from None
    if not math.isfinite(value):
        raise SpectrumParseError(f"{column}: non-finite value {text.strip()!r}", line)
    return value


def parse_spectrum_csv(text: str) -> tuple[Spectrum, NDArray[np.float64]]:
    """Parse CSV text into a spectrum and its displacement column.

    Every problem is reported as :class:`SpectrumParseError` carrying the
    1-based line number.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SpectrumParseError("empty file", 1)
    if lines[0].rstrip("\r").strip() != SPECTRUM_HEADER:
        raise SpectrumParseError(f"expected header {SPECTRUM_HEADER!r}", 1)

    frequencies: list[float] = []
    values: list[float] = []
    displacement: list[float] = []
    for number, raw in enumerate(lines[1:], start=2):
        fields = raw.rstrip("\r").split(",")
        if len(fields) != len(SPECTRUM_COLUMNS):
            raise SpectrumParseError(
                f"expected {len(SPECTRUM_COLUMNS)} fields, got {len(fields)}", number
            )
        f, p, x = (
            _parse_float(field, number, name) for field, name in zip(fields, SPECTRUM_COLUMNS)
        )
        if frequencies and not f > frequencies[-1]:
            raise SpectrumParseError("frequencies must be strictly increasing", number)
        if p < 0:
            raise SpectrumParseError("normalized power must be >= 0", number)
        frequencies.append(f)
        values.append(p)
        displacement.append(x)

    if not frequencies:
        raise SpectrumParseError("no data rows", len(lines) + 1)
    try:
        spectrum = Spectrum(
            np.array(frequencies), np.array(values), SpectrumUnit.SHOT_NORMALIZED_POWER
        )
    except InvariantError as exc:
        raise SpectrumParseError(str(exc), 2) from exc
    return spectrum, np.array(displacement)


def read_spectrum_file(path: str | Path) -> tuple[Spectrum, NDArray[np.float64]]:
    return parse_spectrum_csv(Path(path).read_text(encoding="utf-8"))


def write_spectrum_file(path: str | Path, spectrum: Spectrum, displacement: ArrayLike) -> None:
    Path(path).write_text(format_spectrum_csv(spectrum, displacement), encoding="utf-8", newline="")
