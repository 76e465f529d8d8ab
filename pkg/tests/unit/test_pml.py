"""
Unit tests for the PML profile and stretches.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from stepscatter.errors import GeometryError
from stepscatter.models import PmlProfile
from stepscatter.pml import LinearStretch, PmlStretch, sigma


class TestSigma:
    """Test the absorbing function."""

    def test_zero_inside_box(self):
        """Test sigma = 0 for |x| <= L/2."""
        profile = PmlProfile()
        assert sigma(profile, 1, 0.0) == 0.0
        assert sigma(profile, 1, 2.5) == 0.0

    def test_reaches_strength_at_outer_wall(self):
        """Test sigma = S at |x| = L/2 + D and beyond."""
        profile = PmlProfile(S=3.0)
        assert sigma(profile, 2, 4.5) == pytest.approx(3.0)
        assert sigma(profile, 2, 7.0) == pytest.approx(3.0)

    def test_midpoint(self):
        """Test the ramp value in the middle of the layer (f1 = 25/64)."""
        profile = PmlProfile()
        f1 = 25.0 / 64.0
        f2 = 1.0 - f1
        expected = 2.0 * 2.0 * f1**8 / (f1**8 + f2**8)
        assert sigma(profile, 1, 3.5) == pytest.approx(expected, rel=1e-14)

    def test_even(self):
        """Test sigma(-x) = sigma(x)."""
        profile = PmlProfile(D1=1.3)
        x = np.linspace(0.0, 5.0, 23)
        np.testing.assert_allclose(sigma(profile, 1, -x), sigma(profile, 1, x))

    def test_continuous_at_box_edge(self):
        """Test that the ramp starts from zero."""
        profile = PmlProfile()
        assert sigma(profile, 1, 2.5 + 1e-9) < 1e-12

    def test_invalid_profile(self):
        """Test GeometryError for a nonpositive thickness."""
        with pytest.raises(GeometryError):
            PmlStretch(PmlProfile(D1=0.0))


class TestPmlStretch:
    """Test the complex coordinate stretch."""

    def test_identity_inside(self):
        """Test x~ = x in the physical box."""
        stretch = PmlStretch(PmlProfile())
        t1, t2 = stretch.stretch(np.array([-2.0, 1.0]), np.array([0.5, -2.4]))
        np.testing.assert_array_equal(t1, [-2.0, 1.0])
        np.testing.assert_array_equal(t2, [0.5, -2.4])

    def test_ramp_integral(self):
        """Test the cached ramp integral against scipy quad."""
        profile = PmlProfile(D1=1.5, S=2.0)
        stretch = PmlStretch(profile)
        expected, _ = quad(lambda t: sigma(profile, 1, t), 2.5, 4.0, epsabs=1e-13)
        assert stretch.ramp_total(1) == pytest.approx(expected, rel=1e-10)

    def test_partial_ramp(self):
        """Test Im x~ at a point inside the layer."""
        profile = PmlProfile()
        stretch = PmlStretch(profile)
        expected, _ = quad(lambda t: sigma(profile, 2, t), 2.5, 3.2, epsabs=1e-13)
        assert float(stretch.absorbed(2, 3.2)) == pytest.approx(expected, rel=1e-10)

    def test_odd(self):
        """Test Im x~(-x) = -Im x~(x)."""
        stretch = PmlStretch(PmlProfile())
        x = np.array([3.0, 4.0, 6.0])
        np.testing.assert_allclose(stretch.absorbed(1, -x), -stretch.absorbed(1, x))

    def test_linear_beyond_wall(self):
        """Test Im x~ grows with slope S past the outer wall."""
        profile = PmlProfile(S=2.0)
        stretch = PmlStretch(profile)
        a = float(stretch.absorbed(1, 5.0))
        b = float(stretch.absorbed(1, 6.0))
        assert b - a == pytest.approx(2.0, rel=1e-12)

    def test_jacobian(self):
        """Test dx~/dx = 1 + i sigma."""
        profile = PmlProfile()
        stretch = PmlStretch(profile)
        j1, j2 = stretch.jacobian(np.array([3.5]), np.array([0.0]))
        assert complex(j1[0]) == pytest.approx(1.0 + 1j * sigma(profile, 1, 3.5))
        assert complex(j2[0]) == 1.0


class TestLinearStretch:
    """Test the piecewise-linear stretch used to continue G."""

    def test_values(self):
        """Test the stretch on both sides of the start."""
        stretch = LinearStretch(1.5, 3.0)
        t1, t2 = stretch.stretch(np.array([1.0, 2.0, -2.5]), np.array([0.3, 0.3, 0.3]))
        np.testing.assert_allclose(t1, [1.0, 2.0 + 1.5j, -2.5 - 3.0j])
        np.testing.assert_allclose(t2, [0.3, 0.3, 0.3])

    def test_zero_slope_is_identity(self):
        """Test that slope 0 leaves points physical."""
        t1, _ = LinearStretch(1.0, 0.0).stretch(np.array([4.0]), np.array([1.0]))
        assert complex(t1[0]) == 4.0

    def test_negative_start(self):
        """Test that a negative start is rejected."""
        with pytest.raises(ValueError):
            LinearStretch(-1.0, 1.0)
