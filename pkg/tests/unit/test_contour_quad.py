"""
Unit tests for contour_quad module.
"""

import numpy as np
import pytest
from scipy.special import expi

from stepscatter.contour_quad import (
    ContourPath,
    LineSegment,
    TailRay,
    build_L,
    gauss_legendre,
    integrate,
    integrate_pv,
    integrate_ray,
    integrate_tail_oscillatory,
)
from stepscatter.errors import ContourError, TailDirectionError


class TestGaussLegendre:
    """Test the cached Gauss–Legendre rule."""

    def test_weights_sum_to_two(self):
        """Test that the weights integrate 1 over [-1, 1]."""
        _, w = gauss_legendre(16)
        assert np.sum(w) == pytest.approx(2.0, rel=1e-14)

    def test_exact_for_polynomials(self):
        """Test exactness for x^10."""
        x, w = gauss_legendre(8)
        assert np.sum(w * x**10) == pytest.approx(2.0 / 11.0, rel=1e-13)

    def test_read_only(self):
        """Test that the cached arrays cannot be modified."""
        x, _ = gauss_legendre(4)
        with pytest.raises(ValueError):
            x[0] = 0.0


class TestIntegrate:
    """Test adaptive integration along paths."""

    def test_segment(self):
        """Test the integral of z^2 along [0, 1]."""
        path = ContourPath([LineSegment(0j, 1 + 0j)])
        result = integrate(lambda z: z**2, path, tol=1e-12)
        assert result.value == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_complex_segment(self):
        """Test path independence of an entire integrand."""
        straight = ContourPath([LineSegment(0j, 2 + 0j)])
        bent = ContourPath([LineSegment(0j, 1 + 1j), LineSegment(1 + 1j, 2 + 0j)])
        f = np.exp
        a = integrate(f, straight, tol=1e-12).value
        b = integrate(f, bent, tol=1e-12).value
        assert a == pytest.approx(np.exp(2.0) - 1.0, rel=1e-11)
        assert b == pytest.approx(a, rel=1e-10)

    def test_ray(self):
        """Test int_0^inf exp(-s) ds = 1."""
        result = integrate_ray(lambda z: np.exp(-z), 0j, 1 + 0j, tol=1e-12, decay_rate=1.0)
        assert result.value == pytest.approx(1.0, rel=1e-10)

    def test_tail_oscillatory(self):
        """Test int exp(i xi) dxi along the ray from 0 through i."""
        result = integrate_tail_oscillatory(lambda z: np.ones_like(z), 1.0, 0j, 1j, tol=1e-12)
        assert result.value == pytest.approx(1j, abs=1e-10)

    def test_tail_oscillatory_growing(self):
        """Test TailDirectionError when the exponential does not decay."""
        with pytest.raises(TailDirectionError):
            integrate_tail_oscillatory(lambda z: np.ones_like(z), 1.0, 0j, -1j)
        with pytest.raises(TailDirectionError):
            integrate_tail_oscillatory(lambda z: np.ones_like(z), 1.0, 0j, 1 + 0j)

    def test_principal_value(self):
        """Test PV int_{-1}^{2} exp(t) / t dt = Ei(2) - Ei(-1)."""
        path = ContourPath([LineSegment(-1 + 0j, 2 + 0j)])
        result = integrate_pv(lambda t: np.exp(t) / t, path, 0j, tol=1e-12)
        assert result.value == pytest.approx(expi(2.0) - expi(-1.0), rel=1e-9)

    def test_principal_value_off_path(self):
        """Test ContourError for a pole away from the path."""
        path = ContourPath([LineSegment(-1 + 0j, 2 + 0j)])
        with pytest.raises(ContourError):
            integrate_pv(lambda t: 1.0 / t, path, 0.5j)

    def test_empty_path(self):
        """Test that a path with nothing to integrate is rejected."""
        with pytest.raises(ContourError):
            integrate(lambda z: z, ContourPath([]))

    def test_bad_tolerance(self):
        """Test that a nonpositive tolerance is rejected."""
        with pytest.raises(ValueError):
            integrate(lambda z: z, ContourPath([LineSegment(0j, 1 + 0j)]), tol=0.0)

    def test_tail_direction_normalised(self):
        """Test that tail directions are stored as unit vectors."""
        assert abs(TailRay(0j, 3 + 4j).direction) == pytest.approx(1.0)


class TestStandardContour:
    """Test construction of the contour L."""

    def test_side_classification(self):
        """Test points above, on and below L."""
        k, h = 2.0 * np.pi / 1.1, 1.0
        L = build_L(k, h)
        on = L.point_at(0.3 * k)
        assert int(L.side(on)) == 0
        assert int(L.side(on + 0.5j)) == 1
        assert int(L.side(on - 0.5j)) == -1

    def test_separates_branch_points(self):
        """Test that +k lies above L and -k below."""
        k, h = 2.0 * np.pi / 1.1, 1.0
        L = build_L(k, h)
        assert int(L.side(k + 0j)) == 1
        assert int(L.side(-k + 0j)) == -1

    def test_invalid_parameters(self):
        """Test ContourError for nonpositive k."""
        with pytest.raises(ContourError):
            build_L(-1.0, 1.0)
