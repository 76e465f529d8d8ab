"""
Pytest configuration and shared fixtures.
"""

import math
import os
import tempfile
from pathlib import Path

import pytest

from stepscatter.config import Config
from stepscatter.geometry import example_geometry
from stepscatter.models import PmlProfile, SourceConfig, SourceRegion
from stepscatter.pml_bie import assemble, solve
from stepscatter.scattering_service import ScatteringService
from stepscatter.wiener_hopf import FactorizationContext


# Wavenumber of the Green function cross-check; kh/pi is not an integer for h = 1
K_CHECK = 2.0 * math.pi / 1.1
# Coarse plane-wave problems: k = 2 pi / 1.6 keeps kh/pi away from integers
WAVELENGTH_BIE = 1.6
NODES_BIE = 96


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def test_config():
    """Create a test configuration with a clean environment."""
    saved = {key: os.environ.pop(key) for key in ("STEPSCATTER_TOL", "STEPSCATTER_NODES", "LOG_LEVEL")
             if key in os.environ}
    config = Config()
    config.nodes = NODES_BIE
    yield config
    os.environ.update(saved)


@pytest.fixture
def service(test_config):
    """Create a ScatteringService instance for testing."""
    return ScatteringService(test_config)


@pytest.fixture(scope="session")
def ctx():
    """Factorization context for k = 2 pi / 1.1, h = 1."""
    return FactorizationContext(K_CHECK, 1.0)


@pytest.fixture
def upper_source():
    return SourceConfig(0.3, 0.4, SourceRegion.UPPER_HALF_PLANE)


@pytest.fixture
def aperture_source():
    return SourceConfig(0.5, 0.0, SourceRegion.GAMMA_PLUS)


@pytest.fixture
def strip_source():
    return SourceConfig(-0.5, -0.5, SourceRegion.WAVEGUIDE)


@pytest.fixture(scope="session")
def k_bie():
    return 2.0 * math.pi / WAVELENGTH_BIE


@pytest.fixture(scope="session")
def step_system(k_bie):
    """Solved coarse plane-wave problem on the plain step at theta = pi/3."""
    geometry = example_geometry("step", 1.0, k_bie)
    return solve(assemble(geometry, PmlProfile(), math.pi / 3, k_bie, NODES_BIE))


@pytest.fixture
def geometry_file(temp_dir):
    """Geometry file describing a step with a rounded upper corner."""
    path = temp_dir / "rounded.geo"
    path.write_text(
        "# rounded upper corner\n"
        "step_height 1.5\n"
        "arc -0.5 -0.5 0.5 1.5707963267948966 0\n"
        "segment 0 -0.5 0 -1.5\n",
        encoding="utf-8",
    )
    return path
