"""
Complex-plane primitives shared by the spectral and the boundary-integral layers.

Branch-cut square roots, the spectral symbol mu = sqrt(k^2 - xi^2), Hankel
functions of complex argument and the (complexified) fundamental solution of
the Helmholtz equation together with its layer kernels.

All functions accept scalars or numpy arrays and broadcast like numpy ufuncs.
"""

from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import hankel1e

from .errors import DomainError


ComplexArray = NDArray[np.complex128]

# Tolerated negative imaginary part of Hankel arguments, relative to |z|.
_IMAG_TOLERANCE = 1e-8


class StretchMap(Protocol):
    """Complex coordinate stretch x -> x~ used by the PML layer."""

    def stretch(self, x1: ArrayLike, x2: ArrayLike) -> tuple[ComplexArray, ComplexArray]: ...

    def jacobian(self, x1: ArrayLike, x2: ArrayLike) -> tuple[ComplexArray, ComplexArray]: ...


def _complex(z: ArrayLike) -> ComplexArray:
    return np.asarray(z, dtype=np.complex128)


def _unwrap_scalar(value: ComplexArray, like: ArrayLike) -> ComplexArray | complex:
    return complex(value) if np.ndim(like) == 0 else value


# ----------------------------------------------------------------------------
# Branches
# ----------------------------------------------------------------------------

def sqrt_branch(z: ArrayLike) -> ComplexArray | complex:
    """
    Square root with the cut on the negative real axis and Re(w) >= 0.

    On the cut the limit from the upper half-plane is returned (+i sqrt|z|),
    also when the input carries a negative zero imaginary part.
    """
    zc = _complex(z)
    w = np.sqrt(zc)
    flip = (w.real == 0.0) & (w.imag < 0.0)
    w = np.where(flip, -w, w)
    return _unwrap_scalar(w, z)


def mu(xi: ArrayLike, k: float) -> ComplexArray | complex:
    """Spectral symbol mu(xi) = sqrt_branch(k^2 - xi^2)."""
    xc = _complex(xi)
    return _unwrap_scalar(_complex(sqrt_branch(k * k - xc * xc)), xi)


def sqrt_k_minus(xi: ArrayLike, k: float, continued: bool = False) -> ComplexArray | complex:
    """
    sqrt(k - xi).

    With ``continued`` the cut [k, inf) is swung to the vertical ray k + i[0, inf),
    which continues the values found just below the positive real axis upward.
    """
    xc = _complex(xi)
    w = _complex(sqrt_branch(k - xc))
    if continued:
        w = np.where((xc.real > k) & (xc.imag > 0.0), -w, w)
    return _unwrap_scalar(w, xi)


def sqrt_k_plus(xi: ArrayLike, k: float, continued: bool = False) -> ComplexArray | complex:
    """
    sqrt(k + xi).

    With ``continued`` the cut (-inf, -k] is swung to the vertical ray -k - i[0, inf).
    """
    xc = _complex(xi)
    w = _complex(sqrt_branch(k + xc))
    if continued:
        w = np.where((xc.real < -k) & (xc.imag < 0.0), -w, w)
    return _unwrap_scalar(w, xi)


def mu_continued(xi: ArrayLike, k: float) -> ComplexArray | complex:
    """
    mu continued off the contour L across the real rays |xi| > k.

    Equals the principal mu except in {Re xi > k, Im xi > 0} and
    {Re xi < -k, Im xi < 0}, where the sign is flipped; the cuts become the
    vertical rays above +k and below -k.
    """
    xc = _complex(xi)
    m = _complex(mu(xc, k))
    flip = ((xc.real > k) & (xc.imag > 0.0)) | ((xc.real < -k) & (xc.imag < 0.0))
    return _unwrap_scalar(np.where(flip, -m, m), xi)


def mu_on_branch(xi: ArrayLike, k: float, branch: str = "principal") -> ComplexArray | complex:
    """
    mu on a named sheet.

    Args:
        xi: Spectral point(s).
        k: Wavenumber.
        branch: ``principal`` (Re >= 0), ``continued`` (see mu_continued) or
            ``upper`` (Im >= 0, for integrands even in mu).

    Returns:
        mu values on the requested sheet.
    """
    if branch == "principal":
        return mu(xi, k)
    if branch == "continued":
        return mu_continued(xi, k)
    if branch == "upper":
        m = _complex(mu(xi, k))
        return _unwrap_scalar(np.where(m.imag < 0.0, -m, m), xi)
    raise ValueError(f"Unknown branch '{branch}'")


# ----------------------------------------------------------------------------
# Hankel functions
# ----------------------------------------------------------------------------

def _check_hankel_argument(z: ComplexArray, name: str) -> None:
    if np.any(z == 0):
        raise DomainError(name, 0)
    bad = z.imag < -_IMAG_TOLERANCE * np.maximum(np.abs(z), 1.0)
    if np.any(bad):
        raise DomainError(name, complex(z[bad].flat[0]))


def hankel1_0(z: ArrayLike) -> ComplexArray | complex:
    """
    Hankel function H_0^(1)(z) for z != 0 with Im z >= 0.

    Evaluated through the exponentially scaled routine so that arguments deep
    in the upper half-plane underflow to zero instead of overflowing.
    """
    zc = _complex(z)
    _check_hankel_argument(zc, "hankel1_0")
    return _unwrap_scalar(hankel1e(0, zc) * np.exp(1j * zc), z)


def hankel1_1(z: ArrayLike) -> ComplexArray | complex:
    """Hankel function H_1^(1)(z) for z != 0 with Im z >= 0."""
    zc = _complex(z)
    _check_hankel_argument(zc, "hankel1_1")
    return _unwrap_scalar(hankel1e(1, zc) * np.exp(1j * zc), z)


# ----------------------------------------------------------------------------
# Fundamental solutions
# ----------------------------------------------------------------------------

def complex_distance(dx1: ArrayLike, dx2: ArrayLike) -> ComplexArray | complex:
    """rho = sqrt_branch(dx1^2 + dx2^2) for (possibly complex) coordinate differences."""
    d1 = _complex(dx1)
    d2 = _complex(dx2)
    return sqrt_branch(d1 * d1 + d2 * d2)


def phi_k(x: ArrayLike, y: ArrayLike, k: float) -> ComplexArray | complex:
    """
    Free-space fundamental solution (i/4) H_0^(1)(k|x - y|).

    Args:
        x: Field point(s), shape (..., 2).
        y: Source point(s), shape (..., 2).
        k: Wavenumber.

    Raises:
        DomainError: If x coincides with y.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    r = np.hypot(xa[..., 0] - ya[..., 0], xa[..., 1] - ya[..., 1])
    if np.any(r == 0):
        raise DomainError("phi_k", "x == y")
    value = 0.25j * _complex(hankel1_0(k * r))
    return complex(value) if value.ndim == 0 else value


def phi_k_stretched(
    x: ArrayLike, y: ArrayLike, k: float, stretch_map: StretchMap
) -> ComplexArray | complex:
    """
    Complexified fundamental solution (i/4) H_0^(1)(k rho~).

    Both points are mapped through ``stretch_map`` and rho~ uses sqrt_branch,
    so the value equals phi_k wherever both points are physical.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    xt1, xt2 = stretch_map.stretch(xa[..., 0], xa[..., 1])
    yt1, yt2 = stretch_map.stretch(ya[..., 0], ya[..., 1])
    rho = _complex(complex_distance(xt1 - yt1, xt2 - yt2))
    if np.any(rho == 0):
        raise DomainError("phi_k_stretched", "x~ == y~")
    value = 0.25j * _complex(hankel1_0(k * rho))
    return complex(value) if value.ndim == 0 else value


def grad_phi_k(x: ArrayLike, y: ArrayLike, k: float) -> tuple[ComplexArray, ComplexArray]:
    """Gradient of phi_k with respect to the field point x."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    d1 = xa[..., 0] - ya[..., 0]
    d2 = xa[..., 1] - ya[..., 1]
    r = np.hypot(d1, d2)
    if np.any(r == 0):
        raise DomainError("grad_phi_k", "x == y")
    factor = -0.25j * k * _complex(hankel1_1(k * r)) / r
    return factor * d1, factor * d2


# Layer kernels on complexified coordinates.  Target coordinates (x1, x2),
# source coordinates (y1, y2) and the source "normal times speed" vector
# (n1, n2) = (dy2/du, -dy1/du) may all be complex and broadcast together.

def single_layer_kernel(k: float, x1, x2, y1, y2) -> ComplexArray:
    """Phi(x~, y~) = (i/4) H_0^(1)(k rho~)."""
    rho = _complex(complex_distance(_complex(x1) - y1, _complex(x2) - y2))
    return 0.25j * _complex(hankel1_0(k * rho))


def double_layer_kernel(k: float, x1, x2, y1, y2, n1, n2) -> ComplexArray:
    """grad_y Phi(x~, y~) . n = (ik/4) H_1^(1)(k rho~) ((x~ - y~) . n) / rho~."""
    d1 = _complex(x1) - y1
    d2 = _complex(x2) - y2
    rho = _complex(complex_distance(d1, d2))
    return 0.25j * k * _complex(hankel1_1(k * rho)) * (d1 * n1 + d2 * n2) / rho


def single_layer_gradient(k: float, x1, x2, y1, y2) -> tuple[ComplexArray, ComplexArray]:
    """Gradient of the single-layer kernel with respect to the target."""
    d1 = _complex(x1) - y1
    d2 = _complex(x2) - y2
    rho = _complex(complex_distance(d1, d2))
    factor = -0.25j * k * _complex(hankel1_1(k * rho)) / rho
    return factor * d1, factor * d2


def double_layer_gradient(
    k: float, x1, x2, y1, y2, n1, n2
) -> tuple[ComplexArray, ComplexArray]:
    """Gradient of the double-layer kernel with respect to the target."""
    d1 = _complex(x1) - y1
    d2 = _complex(x2) - y2
    rho = _complex(complex_distance(d1, d2))
    z = k * rho
    h0 = _complex(hankel1_0(z))
    h1 = _complex(hankel1_1(z))
    dn = d1 * n1 + d2 * n2
    radial = (z * h0 - 2.0 * h1) / rho**3 * dn
    tangential = h1 / rho
    scale = 0.25j * k
    return scale * (radial * d1 + tangential * n1), scale * (radial * d2 + tangential * n2)
