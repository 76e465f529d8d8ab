"""
Data models for Green function values, solver results and harness tables.

Uses dataclasses for type safety and better IDE support.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .errors import GeometryError, RegionError


class SourceRegion(str, Enum):
    """Where a point source sits in the cracked half-plane."""

    UPPER_HALF_PLANE = "upper_half_plane"
    GAMMA_PLUS = "gamma_plus"
    WAVEGUIDE = "waveguide"


@dataclass(frozen=True)
class SourceConfig:
    """Point source location with its region tag."""

    x1: float
    x2: float
    region: SourceRegion

    @classmethod
    def at(cls, x1: float, x2: float, h: float) -> "SourceConfig":
        """
        Build a source, deriving the region tag from the coordinates.

        Args:
            x1: Horizontal source coordinate.
            x2: Vertical source coordinate.
            h: Step height (depth of the strip).

        Returns:
            Validated SourceConfig.

        Raises:
            RegionError: If the point lies on Γ⁻, on Γ_h or outside the domain.
        """
        if x2 > 0:
            region = SourceRegion.UPPER_HALF_PLANE
        elif x2 == 0:
            region = SourceRegion.GAMMA_PLUS
        else:
            region = SourceRegion.WAVEGUIDE
        source = cls(float(x1), float(x2), region)
        source.validate(h)
        return source

    def validate(self, h: float) -> None:
        """Check the region tag against the coordinates."""
        if self.region is SourceRegion.UPPER_HALF_PLANE and not self.x2 > 0:
            raise RegionError(f"upper half-plane source needs x2 > 0, got {self.x2}")
        if self.region is SourceRegion.GAMMA_PLUS and (self.x2 != 0 or not self.x1 > 0):
            raise RegionError(
                f"source at ({self.x1}, {self.x2}) is not on the aperture x2 = 0, x1 > 0"
            )
        if self.region is SourceRegion.WAVEGUIDE and not -h < self.x2 < 0:
            raise RegionError(f"waveguide source needs -h < x2 < 0, got x2={self.x2}, h={h}")

    @property
    def point(self) -> tuple[float, float]:
        return (self.x1, self.x2)


@dataclass
class QuadResult:
    """Result of a contour integral (an array value for vector integrands)."""

    value: complex | np.ndarray
    err_estimate: float
    n_evals: int


@dataclass
class GreenValue:
    """Green function value at one field point."""

    point: tuple[float, float]
    value: complex
    representation: str
    grad: tuple[complex, complex] | None = None


@dataclass
class ModalData:
    """Waveguide modal coefficients of the strip field for x1 < 0."""

    M: int
    mu_m: list[float]
    xi_m: list[complex]
    c_m: list[complex]
    cutoff_flag: bool = False
    slope: complex | None = None


@dataclass
class RadiationResidual:
    """Radiation-condition residuals at one point."""

    r: float
    alpha: float
    usrc: float
    tangential: float | None = None


@dataclass
class FactorSample:
    """K+ and K- at one node of the contour."""

    xi: complex
    k_plus: complex
    k_minus: complex


@dataclass
class IdentityReport:
    """Residuals of the factorization identities sampled on the contour."""

    n_nodes: int
    product_residual: float
    split_residual: float
    two_form_residual: float
    plemelj_residual: float


@dataclass(frozen=True)
class PmlProfile:
    """PML box widths, thicknesses and absorbing strength."""

    L1: float = 5.0
    L2: float = 5.0
    D1: float = 2.0
    D2: float = 2.0
    S: float = 2.0

    def validate(self) -> None:
        """Raise GeometryError unless every parameter is positive."""
        for name in ("L1", "L2", "D1", "D2", "S"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"PML parameter {name} must be positive")

    def half_width(self, axis: int) -> float:
        """Half width of the physical box along ``axis`` (1 or 2)."""
        return (self.L1 if axis == 1 else self.L2) / 2.0

    def thickness(self, axis: int) -> float:
        return self.D1 if axis == 1 else self.D2

    def outer(self, axis: int) -> float:
        """Distance from the origin to the truncation wall along ``axis``."""
        return self.half_width(axis) + self.thickness(axis)


@dataclass
class FarFieldPattern:
    """Far-field values at a list of observation angles."""

    angles: list[float]
    values: list[complex]
    radius: float | None = None


@dataclass
class SolveSummary:
    """Outcome of one plane-wave PML-BIE solve."""

    example: str
    theta: float
    unknowns: int
    residual: float
    condition: float
    points: list[tuple[float, float]] = field(default_factory=list)
    u_tot: list[complex] = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class ExperimentSpec:
    """Parameters of a convergence sweep."""

    example: str = "step"
    sweep: str = "D"
    values: list[float] = field(default_factory=lambda: [0.1 + 0.2 * i for i in range(10)])
    resolution: int = 200
    theta: float = float(np.pi / 3)
    wavelength: float = 1.0
    h: float = 1.0
    reference_D: float = 2.0
    reference_S: float = 2.0
    L1: float = 5.0
    L2: float = 5.0
    geometry_file: str | None = None

    def validate(self) -> None:
        """Raise GeometryError for inconsistent sweep parameters."""
        if self.sweep not in ("D", "S"):
            raise GeometryError(f"sweep must be 'D' or 'S', got '{self.sweep}'")
        if any(not v > 0 for v in self.values):
            raise GeometryError("sweep values must be positive")
        reference = self.reference_D if self.sweep == "D" else self.reference_S
        if any(abs(v - reference) < 1e-12 for v in self.values):
            raise GeometryError("the reference parameter cannot be part of the sweep")


@dataclass
class ConvergenceRecord:
    """One sweep point."""

    param: float
    e_rel: float
    seconds: float
    error: str | None = None


@dataclass
class ConvergenceReport:
    """Sweep records plus the log-linear fit over the pre-saturation range."""

    parameters: dict[str, Any]
    records: list[ConvergenceRecord]
    slope: float | None = None
    floor: float | None = None


@dataclass
class CrossCheckRow:
    """One field point of the Green function cross-check."""

    x1: float
    bie: complex
    wiener_hopf: complex
    extended: complex


@dataclass
class CrossCheckTable:
    """PML-BIE against Wiener–Hopf values of the scattered Green function."""

    parameters: dict[str, Any]
    rows: list[CrossCheckRow]
    max_physical_discrepancy: float
    decay_slope: float | None = None


@dataclass
class RadiationTable:
    """Radiation residuals with fitted decay exponents."""

    parameters: dict[str, Any]
    residuals: list[RadiationResidual]
    usrc_exponents: dict[str, float] = field(default_factory=dict)
    tangential_exponents: dict[str, float] = field(default_factory=dict)
    circle_integrals: list[tuple[float, float]] = field(default_factory=list)


def model_to_dict(obj: Any) -> Any:
    """
    Convert a dataclass to JSON-ready data, handling nested structures.

    Complex numbers become ``[re, im]`` pairs, enums their value and numpy
    scalars/arrays plain Python numbers/lists.

    Args:
        obj: Object to convert (typically a dataclass).

    Returns:
        JSON-serializable representation.
    """
    if hasattr(obj, '__dataclass_fields__'):
        return {name: model_to_dict(value) for name, value in obj.__dict__.items()}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return [model_to_dict(item) for item in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, dict):
        return {str(key): model_to_dict(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [model_to_dict(item) for item in obj]
    return obj
