from __future__ import annotations

import sys
from importlib.resources import files
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nlijsf.dispersion import SMALL_DETUNING, DispersiveMediumSpec, FiberSpec, PumpSpec  # noqa: E402
from nlijsf.grid import SpectralGrid  # noqa: E402
from nlijsf.jsf import NliDesign, build_nli_jsf  # noqa: E402

CONFIG_DIR = Path(str(files("nlijsf") / "configs"))


@pytest.fixture(scope="session")
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture(scope="session")
def pump() -> PumpSpec:
    return PumpSpec(1548.5e-9, 1e-9)


@pytest.fixture(scope="session")
def fiber() -> FiberSpec:
    return FiberSpec(50.0, 1548.2e-9, 0.075e3, 1e-3)


@pytest.fixture(scope="session")
def smf7() -> DispersiveMediumSpec:
    return DispersiveMediumSpec(SMALL_DETUNING, 7.0, d_smf=17e-6)


@pytest.fixture(scope="session")
def smf11() -> DispersiveMediumSpec:
    return DispersiveMediumSpec(SMALL_DETUNING, 11.0, d_smf=17e-6)


@pytest.fixture(scope="session")
def telecom_grid_256() -> SpectralGrid:
    return SpectralGrid.from_wavelength_window(1528e-9, 1568e-9, 256)


@pytest.fixture(scope="session")
def two_stage_256(pump, fiber, smf7, telecom_grid_256):
    return build_nli_jsf(NliDesign((50.0, 50.0), smf7), pump, fiber, telecom_grid_256)
