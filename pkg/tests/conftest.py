"""Pytest configuration and shared fixtures."""

import sys
from pathlib import Path

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from cavity_config import CONFIG_ENV, SEED_ENV, ExperimentConfig, default_config  # noqa: E402
from cavity_mechanics import (  # noqa: E402
    MechanicalMode,
    RadiationPressureDrive,
    SpatialModes,
)
from cavity_optics import Beam, OpticalCavity  # noqa: E402
from cavity_thermal import ThermalEnvironment  # noqa: E402

PROJECT_ROOT = project_root


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep CAVITY_SENSE_* variables from the developer's shell out of the tests."""
    monkeypatch.delenv(SEED_ENV, raising=False)
    monkeypatch.delenv(CONFIG_ENV, raising=False)


@pytest.fixture
def cavity() -> OpticalCavity:
    """1.06 mm cavity, 810 nm, T_c = 60 ppm, A = 109 ppm."""
    return OpticalCavity(
        length=1.06e-3,
        wavelength=810e-9,
        coupler_transmission=60e-6,
        losses=109e-6,
    )


@pytest.fixture
def beam() -> Beam:
    """100 uW incident, 91% detection efficiency."""
    return Beam(power=100e-6, quantum_efficiency=0.91)


@pytest.fixture
def mode() -> MechanicalMode:
    """2 MHz compression mode, Q = 44000, chi0 = 3.2e-11 m/N."""
    return MechanicalMode(
        resonance_frequency=2e6, quality_factor=44000, static_susceptibility=3.2e-11
    )


@pytest.fixture
def env() -> ThermalEnvironment:
    return ThermalEnvironment(temperature=300.0)


@pytest.fixture
def spatial() -> SpatialModes:
    return SpatialModes(optical_waist=90e-6, acoustic_waist=3.4e-3)


@pytest.fixture
def drive(mode) -> RadiationPressureDrive:
    """1.2 nN radiation-pressure force at the mechanical resonance."""
    return RadiationPressureDrive.from_force(1.2e-9, mode.resonance_frequency, 810e-9)


@pytest.fixture
def config() -> ExperimentConfig:
    return default_config()


@pytest.fixture
def shipped_config_path() -> Path:
    return PROJECT_ROOT / "experiment.cfg"
