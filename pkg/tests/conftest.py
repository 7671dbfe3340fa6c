import numpy as np
import pytest

from dfsgate.config import ExperimentConfig
from dfsgate.drive import DriveConfig, axial_wave_vector_difference, tune_trap
from dfsgate.experiments import working_point
from dfsgate.ion_crystal import CALCIUM_40, IonCrystal, normal_modes

TWO_PI = 2 * np.pi


@pytest.fixture(scope="session")
def tuned():
    """Four 40Ca+ ions at the n = 15 E-mode tuning."""
    _, wz = tune_trap(CALCIUM_40, 15)
    crystal = IonCrystal.build(CALCIUM_40, 4, wz)
    return crystal, normal_modes(crystal)


@pytest.fixture(scope="session")
def base_drive():
    return DriveConfig(delta_k=axial_wave_vector_difference(397e-9), detuning=TWO_PI * 40e3)


@pytest.fixture(scope="session")
def table_points():
    """Working points of the three mediating modes with default settings."""
    return {m: working_point(ExperimentConfig(mode=m)) for m in ("breathing", "e", "fourth")}
