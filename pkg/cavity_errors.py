"""Exception types shared by the cavity-sense modules.

Everything is a ``ValueError`` or ``RuntimeError`` subclass so callers that only
care about "bad input" vs "numerical failure" can keep catching the builtins.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence


class InvariantError(ValueError):
    """A value type was constructed with fields that break its invariants."""

    def __init__(self, message: str, fields: Iterable[str] = ()) -> None:
        super().__init__(message)
        self.fields: tuple[str, ...] = tuple(fields)


class ConfigError(ValueError):
    """Experiment configuration could not be loaded or validated."""

    def __init__(
        self, message: str, keys: Iterable[str] = (), line: int | None = None
    ) -> None:
        super().__init__(message)
        self.keys: tuple[str, ...] = tuple(keys)
        self.line = line


class SpectrumParseError(ValueError):
    """A spectrum CSV file is malformed."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class BelowShotNoiseError(ValueError):
    """Noise-mode displacement conversion hit bins below the shot-noise floor."""

    def __init__(self, bins: Sequence[int]) -> None:
        preview = ", ".join(str(b) for b in bins[:10])
        more = f" (+{len(bins) - 10} more)" if len(bins) > 10 else ""
        super().__init__(
            f"{len(bins)} bin(s) below the shot-noise floor: {preview}{more}"
        )
        self.bins: tuple[int, ...] = tuple(bins)


class LinearizationError(ValueError):
    """Frequency modulation too large for the first-order mode-cleaner slope."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""
