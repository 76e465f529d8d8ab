"""
Custom exceptions for the step scattering toolkit.

All exceptions inherit from ScatteringError for easy catching. Each class
carries a machine-readable ``category`` used for CLI exit codes and MCP
error payloads.
"""


class ScatteringError(Exception):
    """Base exception for all numerical and configuration failures."""

    category: str = "error"

    def __init__(self, message: str, category: str | None = None):
        if category is not None:
            self.category = category
        super().__init__(message)


class DomainError(ScatteringError):
    """Raised when a special function or kernel is evaluated at a singular point."""

    category = "domain"

    def __init__(self, function: str, argument: object):
        self.function = function
        self.argument = argument
        super().__init__(f"{function} is singular or undefined at {argument!r}")


class ContourError(ScatteringError):
    """Raised when a spectral contour fails validation."""

    category = "contour"

    def __init__(self, reason: str, margin: float | None = None):
        self.margin = margin
        message = f"Invalid contour: {reason}"
        if margin is not None:
            message += f" (margin {margin:.3e})"
        super().__init__(message)


class QuadratureError(ScatteringError):
    """Raised when adaptive quadrature fails to reach the requested tolerance."""

    category = "quadrature"

    def __init__(self, value: complex, err_estimate: float, n_evals: int, tol: float):
        self.value = value
        self.err_estimate = err_estimate
        self.n_evals = n_evals
        super().__init__(
            f"Quadrature did not converge: error estimate {err_estimate:.3e} > tol {tol:.1e} "
            f"after {n_evals} evaluations"
        )


class TailDirectionError(ScatteringError):
    """Raised when a tail ray does not make the oscillatory factor decay."""

    category = "contour"

    def __init__(self, phase_rate: complex, direction: complex):
        self.phase_rate = phase_rate
        self.direction = direction
        super().__init__(
            f"Tail direction {direction:.6g} is not decaying for phase rate {phase_rate:.6g}"
        )


class BranchCutError(ScatteringError):
    """Raised when a spectral function is evaluated on its branch cut."""

    category = "domain"

    def __init__(self, xi: complex, cut: str):
        self.xi = xi
        super().__init__(f"Spectral point {xi!r} lies on the branch cut {cut}")


class RegionError(ScatteringError):
    """Raised for side/region mismatches and invalid source or field locations."""

    category = "domain"

    def __init__(self, reason: str):
        super().__init__(f"Region mismatch: {reason}")


class GeometryError(ScatteringError):
    """Raised when a scattering surface or inclusion is not admissible."""

    category = "geometry"

    def __init__(self, reason: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"Invalid geometry: {prefix}{reason}")


class SingularSystemError(ScatteringError):
    """Raised when the Nyström matrix is singular or too ill-conditioned."""

    category = "linear_system"

    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"Linear system is ill-conditioned (condition estimate {condition:.3e})")


class ConfigError(ScatteringError):
    """Raised for malformed configuration files or values."""

    category = "config"

    def __init__(self, reason: str, key: str | None = None):
        self.key = key
        suffix = f" ({key})" if key else ""
        super().__init__(f"Configuration error: {reason}{suffix}")


EXIT_CODES: dict[str, int] = {
    "domain": 3,
    "contour": 4,
    "quadrature": 4,
    "geometry": 5,
    "linear_system": 6,
    "config": 7,
}


def exit_code_for(error: BaseException) -> int:
    """
    Map an exception to the CLI exit code of its category.

    Args:
        error: Any exception raised while running a command.

    Returns:
        Exit code (1 for anything without a known category).
    """
    if isinstance(error, ScatteringError):
        return EXIT_CODES.get(error.category, 1)
    return 1
