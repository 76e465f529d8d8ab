"""
Perfectly matched layer: absorbing profile and complex coordinate stretch.

Handles the smooth polynomial-rational profile sigma_j, the stretch
x~_j = x_j + i int_0^{x_j} sigma_j(t) dt and a piecewise-linear stretch used
to continue Green function samples into a layer.
"""

import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .contour_quad import gauss_legendre
from .models import PmlProfile


logger = logging.getLogger(__name__)

# Gauss–Legendre points for integrals of sigma across (part of) the ramp
_RAMP_ORDER = 32


def _ramp_shape(xbar: NDArray[np.float64]) -> NDArray[np.float64]:
    """2 f1^8 / (f1^8 + f2^8) on xbar in [-1, 0]."""
    f1 = 0.375 * xbar**3 + xbar / 8.0 + 0.5
    f2 = 1.0 - f1
    return 2.0 * f1**8 / (f1**8 + f2**8)


def sigma(profile: PmlProfile, axis: int, x: ArrayLike) -> NDArray[np.float64] | float:
    """
    Absorbing function sigma_j(x).

    Zero on [-L_j/2, L_j/2], the ramp 2 S f1^8 / (f1^8 + f2^8) over the layer
    thickness D_j with f1 = (3/8) xbar^3 + xbar/8 + 1/2, f2 = 1 - f1 and
    xbar = (|x| - L_j/2 - D_j) / D_j, and S beyond. Even in x.

    Args:
        profile: PML parameters.
        axis: 1 or 2.
        x: Coordinate(s).
    """
    half = profile.half_width(axis)
    depth = profile.thickness(axis)
    ax = np.abs(np.asarray(x, dtype=float))
    xbar = np.clip((ax - half - depth) / depth, -1.0, 0.0)
    value = np.where(ax <= half, 0.0, profile.S * _ramp_shape(xbar))
    return float(value) if value.ndim == 0 else value


class PmlStretch:
    """
    Complex stretch of both axes by a PmlProfile.

    The ramp integral of sigma is computed once per axis on a 32-point
    Gauss–Legendre rule and cached; points inside the ramp integrate the
    partial ramp on the same rule.
    """

    def __init__(self, profile: PmlProfile):
        """
        Initialize the stretch.

        Args:
            profile: Validated PML parameters.
        """
        profile.validate()
        self.profile = profile
        self._nodes, self._weights = gauss_legendre(_RAMP_ORDER)
        # Cache structure: {axis: int_{L/2}^{L/2 + D} sigma}
        self._ramp_totals: dict[int, float] = {}

    def ramp_total(self, axis: int) -> float:
        """Integral of sigma over the whole ramp of ``axis``."""
        if axis not in self._ramp_totals:
            half = self.profile.half_width(axis)
            total = float(self._partial(axis, np.array([half + self.profile.thickness(axis)]))[0])
            self._ramp_totals[axis] = total
            logger.debug(f"PML ramp integral on axis {axis}: {total:.15g}")
        return self._ramp_totals[axis]

    def _partial(self, axis: int, ax: NDArray[np.float64]) -> NDArray[np.float64]:
        """int_{L/2}^{ax} sigma for L/2 <= ax <= L/2 + D."""
        half = self.profile.half_width(axis)
        span = (ax - half)[:, None] / 2.0
        t = half + span * (self._nodes[None, :] + 1.0)
        return np.sum(self._weights[None, :] * np.asarray(sigma(self.profile, axis, t)), axis=1) * span[:, 0]

    def absorbed(self, axis: int, x: ArrayLike) -> NDArray[np.float64]:
        """Im(x~_j) = int_0^{x} sigma_j(t) dt (odd in x)."""
        xa = np.asarray(x, dtype=float)
        flat = np.abs(xa).ravel()
        half = self.profile.half_width(axis)
        outer = self.profile.outer(axis)
        out = np.zeros_like(flat)
        ramp = (flat > half) & (flat <= outer)
        if ramp.any():
            out[ramp] = self._partial(axis, flat[ramp])
        beyond = flat > outer
        if beyond.any():
            out[beyond] = self.ramp_total(axis) + self.profile.S * (flat[beyond] - outer)
        return np.sign(xa) * out.reshape(xa.shape)

    def stretch(self, x1: ArrayLike, x2: ArrayLike) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        """Stretched coordinates (x~1, x~2)."""
        a1 = np.asarray(x1, dtype=float)
        a2 = np.asarray(x2, dtype=float)
        return a1 + 1j * self.absorbed(1, a1), a2 + 1j * self.absorbed(2, a2)

    def jacobian(self, x1: ArrayLike, x2: ArrayLike) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        """Derivatives (1 + i sigma_1(x1), 1 + i sigma_2(x2))."""
        s1 = np.asarray(sigma(self.profile, 1, x1))
        s2 = np.asarray(sigma(self.profile, 2, x2))
        return 1.0 + 1j * s1, 1.0 + 1j * s2


class LinearStretch:
    """
    Piecewise-linear stretch x~_j = x_j + i c (|x_j| - a_j) sign(x_j) for |x_j| > a_j.

    With ``start2=None`` the second axis is left physical. A slope of zero
    gives the identity.
    """

    def __init__(self, start1: float, slope: float, start2: float | None = None):
        if start1 < 0 or (start2 is not None and start2 < 0):
            raise ValueError("stretch starting points must be nonnegative")
        self.start1 = float(start1)
        self.start2 = None if start2 is None else float(start2)
        self.slope = float(slope)

    def _axis(self, x: NDArray[np.float64], start: float | None) -> NDArray[np.complex128]:
        if start is None:
            return x + 0j
        excess = np.maximum(np.abs(x) - start, 0.0)
        return x + 1j * self.slope * np.sign(x) * excess

    def _derivative(self, x: NDArray[np.float64], start: float | None) -> NDArray[np.complex128]:
        if start is None:
            return np.ones_like(x, dtype=np.complex128)
        return np.where(np.abs(x) > start, 1.0 + 1j * self.slope, 1.0 + 0j)

    def stretch(self, x1: ArrayLike, x2: ArrayLike) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        a1 = np.asarray(x1, dtype=float)
        a2 = np.asarray(x2, dtype=float)
        return self._axis(a1, self.start1), self._axis(a2, self.start2)

    def jacobian(self, x1: ArrayLike, x2: ArrayLike) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        a1 = np.asarray(x1, dtype=float)
        a2 = np.asarray(x2, dtype=float)
        return self._derivative(a1, self.start1), self._derivative(a2, self.start2)
