"""
Configuration management for the step scattering toolkit.

Centralizes numerical defaults and logging setup in one place.
"""

import logging
import os
from pathlib import Path
from typing import ClassVar

from .errors import ConfigError


class Config:
    """
    Configuration for the solvers, the CLI and the MCP server.

    Loads settings from environment variables with sensible defaults, then
    applies overrides from an optional ``key = value`` config file.
    """

    # Quadrature defaults
    DEFAULT_TOLERANCE: ClassVar[float] = 1e-10
    GAUSS_ORDER: ClassVar[int] = 16
    MAX_DEPTH: ClassVar[int] = 40
    XI_MAX_FACTOR: ClassVar[float] = 40.0

    # Green function representation switch, in wavelengths
    AUTO_SWITCH_WAVELENGTHS: ClassVar[float] = 2.0

    # Nyström defaults
    DEFAULT_NODES: ClassVar[int] = 200
    GRADING_EXPONENT: ClassVar[int] = 3
    NEAR_SUBSTITUTION_EXPONENT: ClassVar[int] = 6
    NEAR_GAUSS_ORDER: ClassVar[int] = 24

    DEFAULT_LOG_LEVEL: ClassVar[str] = "INFO"
    SERVER_NAME: ClassVar[str] = "stepscatter"
    SERVER_VERSION: ClassVar[str] = "1.0.1"

    # Output
    FLOAT_FORMAT: ClassVar[str] = "%.17g"

    # Keys accepted in a config file, with their parsers
    _FILE_KEYS: ClassVar[dict[str, type]] = {
        "tolerance": float,
        "nodes": int,
        "gauss_order": int,
        "max_depth": int,
        "xi_max_factor": float,
        "auto_switch_wavelengths": float,
        "grading_exponent": int,
        "log_level": str,
    }

    def __init__(self, config_file: str | Path | None = None):
        """
        Initialize configuration from environment variables and an optional file.

        Args:
            config_file: Path to a ``key = value`` file overriding the environment.

        Raises:
            ConfigError: If the file cannot be read or holds an unknown key.
        """
        self.tolerance = self._load_tolerance()
        self.nodes = self._load_nodes()
        self.gauss_order = self.GAUSS_ORDER
        self.max_depth = self.MAX_DEPTH
        self.xi_max_factor = self.XI_MAX_FACTOR
        self.auto_switch_wavelengths = self.AUTO_SWITCH_WAVELENGTHS
        self.grading_exponent = self.GRADING_EXPONENT
        self.log_level = self._load_log_level()
        if config_file is not None:
            self._apply_file(Path(config_file))
        self._setup_logging()

    def _load_tolerance(self) -> float:
        """Load the quadrature tolerance from STEPSCATTER_TOL."""
        raw = os.environ.get("STEPSCATTER_TOL")
        if raw is None:
            return self.DEFAULT_TOLERANCE
        try:
            value = float(raw)
        except ValueError:
            value = -1.0
        if not 0.0 < value < 1.0:
            logging.warning(f"Invalid STEPSCATTER_TOL '{raw}', using {self.DEFAULT_TOLERANCE}")
            return self.DEFAULT_TOLERANCE
        return value

    def _load_nodes(self) -> int:
        """Load the Nyström resolution (nodes per smooth segment) from STEPSCATTER_NODES."""
        raw = os.environ.get("STEPSCATTER_NODES")
        if raw is None:
            return self.DEFAULT_NODES
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value < self.GAUSS_ORDER:
            logging.warning(f"Invalid STEPSCATTER_NODES '{raw}', using {self.DEFAULT_NODES}")
            return self.DEFAULT_NODES
        return value

    def _load_log_level(self) -> str:
        """Load log level from LOG_LEVEL env var."""
        level = os.environ.get("LOG_LEVEL", self.DEFAULT_LOG_LEVEL).upper()
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

        if level not in valid_levels:
            logging.warning(f"Invalid LOG_LEVEL '{level}', using INFO")
            return "INFO"

        return level

    def _apply_file(self, path: Path) -> None:
        """
        Apply overrides from a plain-text config file.

        Args:
            path: File of ``key = value`` lines; ``#`` starts a comment.

        Raises:
            ConfigError: On unreadable files, malformed lines, unknown keys or bad values.
        """
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}", key=str(path)) from e

        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'", key=line)
            key, raw = (part.strip() for part in line.split("=", 1))
            parser = self._FILE_KEYS.get(key)
            if parser is None:
                raise ConfigError(f"line {lineno}: unknown key", key=key)
            try:
                value = parser(raw)
            except ValueError as e:
                raise ConfigError(f"line {lineno}: invalid value '{raw}'", key=key) from e
            if key == "log_level":
                value = str(value).upper()
                if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
                    raise ConfigError(f"line {lineno}: invalid log level '{raw}'", key=key)
            elif isinstance(value, (int, float)) and value <= 0:
                raise ConfigError(f"line {lineno}: value must be positive", key=key)
            setattr(self, key, value)

    def _setup_logging(self) -> None:
        """Configure logging with the specified level."""
        logging.basicConfig(
            level=getattr(logging, self.log_level),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            force=True  # Override any existing config
        )

    def get_logger(self, name: str) -> logging.Logger:
        """
        Get a logger with the configured level.

        Args:
            name: Logger name (typically __name__ of the module).

        Returns:
            Configured logger instance.
        """
        return logging.getLogger(name)
