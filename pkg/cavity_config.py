"""Experiment configuration: one frozen record plus a flat ``key = value`` loader.

A config file looks like::

    # cavity
    length_mm = 1.06
    coupler_transmission_ppm = 60
    power_uW = 100

Each key is a parameter name with an optional unit suffix; a bare name means SI
units. Keys not set in the file keep their built-in default.

Resolution order, as for every other setting in this project:
explicit argument > environment variable > config file > built-in default.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from cavity_calibration import ModeCleaner
from cavity_detection import AnalyzerSettings
from cavity_errors import ConfigError, InvariantError
from cavity_mechanics import MechanicalMode, RadiationPressureDrive, SpatialModes
from cavity_optics import Beam, OpticalCavity
from cavity_thermal import ThermalEnvironment

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path("experiment.cfg")
SEED_ENV = "CAVITY_SENSE_SEED"
CONFIG_ENV = "CAVITY_SENSE_CONFIG"

# ---------------------------------------------------------------------------
# Units
# ---------------------------------------------------------------------------

UNITS: dict[str, dict[str, float]] = {
    "length": {"": 1.0, "m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "power": {"": 1.0, "W": 1.0, "mW": 1e-3, "uW": 1e-6, "nW": 1e-9},
    "frequency": {"": 1.0, "Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "fraction": {"": 1.0, "ppm": 1e-6, "percent": 1e-2},
    "temperature": {"": 1.0, "K": 1.0},
    "force": {"": 1.0, "N": 1.0, "mN": 1e-3, "uN": 1e-6, "nN": 1e-9},
    "susceptibility": {"": 1.0, "m_per_N": 1.0},
    "fm_density": {"": 1.0, "Hz_per_rtHz": 1.0, "mHz_per_rtHz": 1e-3},
    "number": {"": 1.0},
    "integer": {"": 1.0},
}


@dataclass(frozen=True)
class ConfigKey:
    name: str
    dimension: str
    default: float | int | None
    description: str


CONFIG_KEYS: tuple[ConfigKey, ...] = (
    ConfigKey("length", "length", 1.06e-3, "cavity length L"),
    ConfigKey("wavelength", "length", 810e-9, "laser wavelength"),
    ConfigKey("coupler_transmission", "fraction", 60e-6, "input coupler transmission T_c"),
    ConfigKey("losses", "fraction", 109e-6, "other round-trip losses A"),
    ConfigKey("measured_finesse", "number", None, "measured finesse, overrides 2*pi/(T_c+A)"),
    ConfigKey("power", "power", 100e-6, "incident power"),
    ConfigKey("quantum_efficiency", "fraction", 0.91, "detection quantum efficiency"),
    ConfigKey("resonance_frequency", "frequency", 2e6, "mechanical resonance f_M"),
    ConfigKey("quality_factor", "number", 44000.0, "mechanical quality factor"),
    ConfigKey("static_susceptibility", "susceptibility", 3.2e-11, "static susceptibility chi0"),
    ConfigKey("temperature", "temperature", 300.0, "bath temperature"),
    ConfigKey("mode_cleaner_bandwidth", "frequency", 1e6, "mode-cleaner HWHM bandwidth"),
    ConfigKey("optical_waist", "length", 90e-6, "optical beam waist"),
    ConfigKey("acoustic_waist", "length", 3.4e-3, "acoustic mode waist"),
    ConfigKey("drive_force", "force", 1.2e-9, "radiation-pressure force amplitude"),
    ConfigKey("drive_frequency", "frequency", None, "drive modulation frequency (default f_M)"),
    ConfigKey("rbw", "frequency", 1.0, "analyzer resolution bandwidth"),
    ConfigKey("averages", "integer", 1000, "analyzer power averages"),
    ConfigKey("span", "frequency", 500.0, "analyzer span"),
    ConfigKey("center", "frequency", None, "analyzer center (default f_M)"),
    ConfigKey("points", "integer", 500, "analyzer points"),
    ConfigKey("seed", "integer", 0, "trace seed (overridden by CAVITY_SENSE_SEED)"),
    ConfigKey("calibration_frequency", "frequency", 2e6, "FM calibration frequency"),
    ConfigKey("laser_frequency_noise", "fm_density", 0.0, "technical laser FM noise floor"),
)

# Component field -> config key, for mapping invariant failures back to keys.
_FIELD_KEYS = {
    "length": "length",
    "wavelength": "wavelength",
    "coupler_transmission": "coupler_transmission",
    "losses": "losses",
    "measured_finesse": "measured_finesse",
    "power": "power",
    "quantum_efficiency": "quantum_efficiency",
    "resonance_frequency": "resonance_frequency",
    "quality_factor": "quality_factor",
    "static_susceptibility": "static_susceptibility",
    "temperature": "temperature",
    "bandwidth_hwhm": "mode_cleaner_bandwidth",
    "optical_waist": "optical_waist",
    "acoustic_waist": "acoustic_waist",
    "intensity_modulation_amplitude": "drive_force",
    "modulation_frequency": "drive_frequency",
    "rbw": "rbw",
    "n_averages": "averages",
    "f_start": "span",
    "f_stop": "span",
    "n_points": "points",
    "seed": "seed",
}


# ---------------------------------------------------------------------------
# Config record
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    cavity: OpticalCavity
    beam: Beam
    mode: MechanicalMode
    environment: ThermalEnvironment
    mode_cleaner: ModeCleaner
    spatial: SpatialModes
    drive: RadiationPressureDrive
    analyzer: AnalyzerSettings
    calibration_frequency: float = 2e6
    laser_frequency_noise: float = 0.0
    source: str = field(default="<defaults>", compare=False)

    def with_seed(self, seed: int) -> ExperimentConfig:
        return replace(self, analyzer=replace(self.analyzer, seed=seed))


def _build(values: dict[str, Any], source: str) -> ExperimentConfig:
    try:
        cavity = OpticalCavity(
            values["length"],
            values["wavelength"],
            values["coupler_transmission"],
            values["losses"],
            values["measured_finesse"],
        )
        mode = MechanicalMode(
            values["resonance_frequency"],
            values["quality_factor"],
            values["static_susceptibility"],
        )
        drive_frequency = values["drive_frequency"]
        if drive_frequency is None:
            drive_frequency = mode.resonance_frequency
        center = values["center"]
        if center is None:
            center = mode.resonance_frequency
        if values["calibration_frequency"] < 0:
            raise InvariantError("calibration frequency must be >= 0", ["calibration_frequency"])
        if values["laser_frequency_noise"] < 0:
            raise InvariantError("laser frequency noise must be >= 0", ["laser_frequency_noise"])
        return ExperimentConfig(
            cavity=cavity,
            beam=Beam(values["power"], values["quantum_efficiency"]),
            mode=mode,
            environment=ThermalEnvironment(values["temperature"]),
            mode_cleaner=ModeCleaner(values["mode_cleaner_bandwidth"]),
            spatial=SpatialModes(values["optical_waist"], values["acoustic_waist"]),
            drive=RadiationPressureDrive.from_force(
                values["drive_force"], drive_frequency, cavity.wavelength
            ),
            analyzer=AnalyzerSettings.centered(
                center,
                values["span"],
                rbw=values["rbw"],
                n_averages=values["averages"],
                n_points=values["points"],
                seed=values["seed"],
            ),
            calibration_frequency=values["calibration_frequency"],
            laser_frequency_noise=values["laser_frequency_noise"],
            source=source,
        )
    except InvariantError as exc:
        keys = list(dict.fromkeys(_FIELD_KEYS.get(f, f) for f in exc.fields))
        raise ConfigError(f"{source}: {exc} (keys: {', '.join(keys)})", keys) from exc


def default_values() -> dict[str, Any]:
    return {k.name: k.default for k in CONFIG_KEYS}


def default_config() -> ExperimentConfig:
    return _build(default_values(), "<defaults>")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def split_key(key: str) -> tuple[ConfigKey, float]:
    """Resolve ``length_mm`` into (the ``length`` key, 1e-3)."""
    # Longest name first so ``measured_finesse`` never matches a shorter prefix.
    for entry in sorted(CONFIG_KEYS, key=lambda k: len(k.name), reverse=True):
        if key == entry.name:
            return entry, 1.0
        if key.startswith(entry.name + "_"):
            suffix = key[len(entry.name) + 1 :]
            scale = UNITS[entry.dimension].get(suffix)
            if scale is None or suffix == "":
                allowed = ", ".join(u for u in UNITS[entry.dimension] if u) or "none"
                raise ConfigError(
                    f"unit suffix {suffix!r} is not a {entry.dimension} unit (allowed: {allowed})",
                    [key],
                )
            return entry, scale
    raise ConfigError(f"unknown config key {key!r}", [key])


def _convert(entry: ConfigKey, raw: str, scale: float, key: str, line: int) -> float | int:
    text = raw.strip()
    if entry.dimension == "integer":
        try:
            return int(text, 10)
        except ValueError:
            raise ConfigError(f"line {line}: {key} must be an integer, got {text!r}", [key], line) from None
    try:
        return float(text) * scale
    except ValueError:
        raise ConfigError(f"line {line}: {key} must be a number, got {text!r}", [key], line) from None


def parse_config_text(text: str, source: str = "<string>") -> dict[str, Any]:
    """Parse ``key = value`` text into SI values for the keys present."""
    values: dict[str, Any] = {}
    seen: dict[str, tuple[str, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected 'key = value'", (), number)
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            entry, scale = split_key(key)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{number}: {exc}", exc.keys, number) from None
        if entry.name in seen:
            first_key, first_line = seen[entry.name]
            raise ConfigError(
                f"{source}:{number}: {key} duplicates {first_key} from line {first_line}",
                [first_key, key],
                number,
            )
        seen[entry.name] = (key, number)
        values[entry.name] = _convert(entry, value, scale, key, number)
    return values


def config_from_text(text: str, source: str = "<string>") -> ExperimentConfig:
    values = default_values()
    values.update(parse_config_text(text, source))
    return _build(values, source)


# ---------------------------------------------------------------------------
# Loader
# ---------------------------------------------------------------------------


def _env_seed() -> int | None:
    raw = os.getenv(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw.strip(), 10)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}", [SEED_ENV]) from None


def load_experiment_config(
    path: str | Path | None = None,
    *,
    seed: int | None = None,
) -> ExperimentConfig:
    """Load the experiment configuration.

    ``path`` falls back to ``$CAVITY_SENSE_CONFIG`` and then to
    ``./experiment.cfg``; if none of these was given explicitly and the default
    file is absent, the built-in defaults are used. A path that was asked for
    but does not exist raises ``FileNotFoundError``. ``seed`` overrides
    ``$CAVITY_SENSE_SEED``, which overrides the file.
    """
    explicit = path or os.getenv(CONFIG_ENV)
    if explicit:
        resolved = Path(explicit)
        config = config_from_text(resolved.read_text(encoding="utf-8"), str(resolved))
    elif DEFAULT_CONFIG_PATH.is_file():
        config = config_from_text(
            DEFAULT_CONFIG_PATH.read_text(encoding="utf-8"), str(DEFAULT_CONFIG_PATH)
        )
    else:
        config = default_config()
    logger.debug("loaded experiment config from %s", config.source)

    resolved_seed = seed if seed is not None else _env_seed()
    if resolved_seed is not None:
        try:
            config = config.with_seed(resolved_seed)
        except InvariantError as exc:
            raise ConfigError(str(exc), ["seed"]) from exc
    return config


def describe_keys() -> str:
    """One line per accepted key with its default and unit suffixes."""
    lines = []
    for entry in CONFIG_KEYS:
        suffixes = ", ".join(u for u in UNITS[entry.dimension] if u) or "-"
        default = "derived" if entry.default is None else f"{entry.default:g}"
        lines.append(f"{entry.name:24s} {default:>10s}  [{suffixes}]  {entry.description}")
    return "\n".join(lines)
