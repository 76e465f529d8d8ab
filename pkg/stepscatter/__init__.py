"""
stepscatter - Public API

Green function of the cracked half-plane with a step and a PML-truncated
boundary integral solver for plane-wave scattering by locally perturbed steps,
with a command-line harness and an MCP server.
"""

__version__ = "1.0.1"

from .config import Config
from .errors import (
    BranchCutError,
    ConfigError,
    ContourError,
    DomainError,
    GeometryError,
    QuadratureError,
    RegionError,
    ScatteringError,
    SingularSystemError,
    TailDirectionError,
)
from .geometry import SurfaceGeometry, example_geometry, load_geometry, parse_geometry
from .green_function import far_field_G, green, green_pml_extended, modal_coeffs
from .models import (
    ConvergenceRecord,
    ConvergenceReport,
    CrossCheckTable,
    ExperimentSpec,
    FarFieldPattern,
    GreenValue,
    IdentityReport,
    ModalData,
    PmlProfile,
    RadiationTable,
    SolveSummary,
    SourceConfig,
    SourceRegion,
)
from .pml import LinearStretch, PmlStretch, sigma
from .pml_bie import BieSystem, assemble, evaluate_field, far_field_from_solution, solve
from .scattering_service import ScatteringService
from .wiener_hopf import FactorizationContext, f_hat_plus, identity_report

__all__ = [
    # Core
    "Config",
    "ScatteringService",
    "FactorizationContext",
    # Green function
    "green",
    "far_field_G",
    "green_pml_extended",
    "modal_coeffs",
    "f_hat_plus",
    "identity_report",
    # PML-BIE
    "SurfaceGeometry",
    "example_geometry",
    "load_geometry",
    "parse_geometry",
    "PmlStretch",
    "LinearStretch",
    "sigma",
    "BieSystem",
    "assemble",
    "solve",
    "evaluate_field",
    "far_field_from_solution",
    # Errors
    "ScatteringError",
    "DomainError",
    "ContourError",
    "QuadratureError",
    "TailDirectionError",
    "BranchCutError",
    "RegionError",
    "GeometryError",
    "SingularSystemError",
    "ConfigError",
    # Models
    "SourceConfig",
    "SourceRegion",
    "GreenValue",
    "ModalData",
    "IdentityReport",
    "PmlProfile",
    "FarFieldPattern",
    "SolveSummary",
    "ExperimentSpec",
    "ConvergenceRecord",
    "ConvergenceReport",
    "CrossCheckTable",
    "RadiationTable",
]
