"""
Unit tests for configuration, error categories and data models.
"""

import logging

import pytest

from stepscatter.config import Config
from stepscatter.errors import (
    ConfigError,
    DomainError,
    GeometryError,
    QuadratureError,
    RegionError,
    SingularSystemError,
    exit_code_for,
)
from stepscatter.models import ExperimentSpec, PmlProfile, SourceConfig, SourceRegion, model_to_dict


class TestConfig:
    """Test Config loading."""

    def test_defaults(self, test_config):
        """Test default numerical settings."""
        config = Config()
        assert config.tolerance == Config.DEFAULT_TOLERANCE
        assert config.nodes == Config.DEFAULT_NODES
        assert config.log_level == "INFO"

    def test_environment(self, test_config, monkeypatch):
        """Test STEPSCATTER_TOL and STEPSCATTER_NODES."""
        monkeypatch.setenv("STEPSCATTER_TOL", "1e-8")
        monkeypatch.setenv("STEPSCATTER_NODES", "64")
        config = Config()
        assert config.tolerance == 1e-8
        assert config.nodes == 64

    def test_invalid_environment_falls_back(self, test_config, monkeypatch):
        """Test that invalid values fall back to the defaults."""
        monkeypatch.setenv("STEPSCATTER_TOL", "2.0")
        monkeypatch.setenv("STEPSCATTER_NODES", "many")
        monkeypatch.setenv("LOG_LEVEL", "chatty")
        config = Config()
        assert config.tolerance == Config.DEFAULT_TOLERANCE
        assert config.nodes == Config.DEFAULT_NODES
        assert config.log_level == "INFO"

    def test_file_overrides(self, test_config, temp_dir):
        """Test key = value overrides with comments."""
        path = temp_dir / "solver.conf"
        path.write_text("# tighter\ntolerance = 1e-12\nnodes = 96  # more\n", encoding="utf-8")
        config = Config(path)
        assert config.tolerance == 1e-12
        assert config.nodes == 96

    def test_file_unknown_key(self, test_config, temp_dir):
        """Test ConfigError for an unknown key."""
        path = temp_dir / "solver.conf"
        path.write_text("colour = blue\n", encoding="utf-8")
        with pytest.raises(ConfigError) as info:
            Config(path)
        assert info.value.key == "colour"

    def test_file_bad_value(self, test_config, temp_dir):
        """Test ConfigError for a nonpositive value."""
        path = temp_dir / "solver.conf"
        path.write_text("nodes = -3\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            Config(path)

    def test_missing_file(self, test_config, temp_dir):
        """Test ConfigError for an unreadable file."""
        with pytest.raises(ConfigError):
            Config(temp_dir / "absent.conf")

    def test_get_logger(self, test_config, monkeypatch):
        """Test that loggers inherit the configured level."""
        monkeypatch.setenv("LOG_LEVEL", "WARNING")
        logger = Config().get_logger("stepscatter.solver")
        assert logger.name == "stepscatter.solver"
        assert logger.getEffectiveLevel() == logging.WARNING


class TestErrors:
    """Test error categories and exit codes."""

    @pytest.mark.parametrize(
        ("error", "code"),
        [
            (DomainError("hankel1_0", 0), 3),
            (RegionError("wrong side"), 3),
            (QuadratureError(1j, 1e-3, 100, 1e-10), 4),
            (GeometryError("bad"), 5),
            (SingularSystemError(1e16), 6),
            (ConfigError("bad"), 7),
            (RuntimeError("other"), 1),
        ],
    )
    def test_exit_codes(self, error, code):
        """Test the mapping from categories to exit codes."""
        assert exit_code_for(error) == code

    def test_geometry_line(self):
        """Test that the line number appears in the message."""
        error = GeometryError("bad arc", line=4)
        assert error.line == 4
        assert "line 4" in str(error)


class TestModels:
    """Test data model validation and serialization."""

    def test_source_region_from_coordinates(self):
        """Test region tags derived by SourceConfig.at."""
        assert SourceConfig.at(0.0, 0.4, 1.0).region is SourceRegion.UPPER_HALF_PLANE
        assert SourceConfig.at(0.5, 0.0, 1.0).region is SourceRegion.GAMMA_PLUS
        assert SourceConfig.at(-0.5, -0.5, 1.0).region is SourceRegion.WAVEGUIDE

    @pytest.mark.parametrize("point", [(-0.5, 0.0), (0.0, 0.0), (0.2, -1.0), (0.2, -1.5)])
    def test_invalid_sources(self, point):
        """Test RegionError on the crack, the floor and below it."""
        with pytest.raises(RegionError):
            SourceConfig.at(point[0], point[1], 1.0)

    def test_profile_geometry(self):
        """Test half widths and wall positions."""
        profile = PmlProfile(L1=6.0, L2=4.0, D1=1.0, D2=0.5)
        assert profile.half_width(1) == 3.0
        assert profile.outer(2) == 2.5

    def test_spec_rejects_reference_value(self):
        """Test that the sweep cannot contain the reference parameter."""
        with pytest.raises(GeometryError):
            ExperimentSpec(values=[1.0, 2.0]).validate()

    def test_spec_rejects_bad_sweep(self):
        """Test GeometryError for an unknown sweep axis."""
        with pytest.raises(GeometryError):
            ExperimentSpec(sweep="L").validate()

    def test_default_spec(self):
        """Test the default sweep 0.1, 0.3, ..., 1.9."""
        spec = ExperimentSpec()
        spec.validate()
        assert len(spec.values) == 10
        assert spec.values[0] == pytest.approx(0.1)
        assert spec.values[-1] == pytest.approx(1.9)

    def test_model_to_dict(self):
        """Test complex numbers and enums in JSON form."""
        data = model_to_dict(SourceConfig(0.5, 0.0, SourceRegion.GAMMA_PLUS))
        assert data == {"x1": 0.5, "x2": 0.0, "region": "gamma_plus"}
        assert model_to_dict({"z": 1 - 2j}) == {"z": [1.0, -2.0]}
