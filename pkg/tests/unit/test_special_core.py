"""
Unit tests for special_core module.

Tests branch conventions, Hankel wrappers and layer kernels in isolation.
"""

import numpy as np
import pytest
from scipy.special import hankel1

from stepscatter.errors import DomainError
from stepscatter.pml import LinearStretch
from stepscatter.special_core import (
    double_layer_kernel,
    grad_phi_k,
    hankel1_0,
    hankel1_1,
    mu,
    mu_on_branch,
    phi_k,
    phi_k_stretched,
    single_layer_gradient,
    single_layer_kernel,
    sqrt_branch,
)


class TestBranches:
    """Test square-root branch conventions."""

    def test_sqrt_on_cut_takes_upper_limit(self):
        """Test that the negative real axis maps to +i sqrt|z|."""
        assert sqrt_branch(-4.0) == pytest.approx(2j)
        assert sqrt_branch(complex(-4.0, -0.0)) == pytest.approx(2j)

    def test_sqrt_has_nonnegative_real_part(self):
        """Test Re(sqrt) >= 0 across the plane."""
        z = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j, 3.0])
        assert np.all(np.real(sqrt_branch(z)) >= 0)

    def test_mu_evanescent(self):
        """Test mu(2k) = i sqrt(3) k."""
        k = 1.7
        assert mu(2 * k, k) == pytest.approx(1j * np.sqrt(3.0) * k)

    def test_mu_propagating(self):
        """Test mu(0) = k."""
        assert mu(0.0, 2.5) == pytest.approx(2.5)

    def test_upper_branch(self):
        """Test that the upper sheet has Im >= 0."""
        xi = np.array([0.5 - 0.3j, 2.0 + 0.1j, -3.0 - 0.2j])
        assert np.all(np.imag(mu_on_branch(xi, 1.0, "upper")) >= 0)

    def test_unknown_branch(self):
        """Test that an unknown sheet name is rejected."""
        with pytest.raises(ValueError):
            mu_on_branch(1.0, 1.0, "lower")


class TestHankel:
    """Test Hankel function wrappers."""

    @pytest.mark.parametrize("z", [0.3, 2.5, 17.0, 4.0 + 1.5j])
    def test_matches_scipy(self, z):
        """Test H0 and H1 against scipy.special.hankel1."""
        assert hankel1_0(z) == pytest.approx(complex(hankel1(0, z)), rel=1e-12)
        assert hankel1_1(z) == pytest.approx(complex(hankel1(1, z)), rel=1e-12)

    def test_deep_upper_half_plane_underflows(self):
        """Test that large Im z gives a small finite value."""
        value = hankel1_0(1.0 + 800j)
        assert np.isfinite(value)
        assert abs(value) < 1e-300

    def test_zero_argument(self):
        """Test DomainError at z = 0."""
        with pytest.raises(DomainError):
            hankel1_0(0.0)

    def test_lower_half_plane(self):
        """Test DomainError for Im z < 0."""
        with pytest.raises(DomainError):
            hankel1_1(1.0 - 0.5j)


class TestFundamentalSolution:
    """Test phi_k and the layer kernels."""

    def test_phi_k_value(self):
        """Test Phi = (i/4) H0(k r)."""
        k = 3.0
        value = phi_k(np.array([1.0, 2.0]), np.array([0.0, 0.0]), k)
        assert value == pytest.approx(0.25j * complex(hankel1(0, k * np.sqrt(5.0))))

    def test_phi_k_coincident(self):
        """Test DomainError for x == y."""
        with pytest.raises(DomainError):
            phi_k(np.array([0.5, 0.5]), np.array([0.5, 0.5]), 1.0)

    def test_grad_phi_k_finite_difference(self):
        """Test the analytic gradient against central differences."""
        k = 2.0
        x = np.array([0.7, -0.4])
        y = np.array([-0.2, 0.3])
        step = 1e-6
        g1, g2 = grad_phi_k(x, y, k)
        fd1 = (phi_k(x + [step, 0], y, k) - phi_k(x - [step, 0], y, k)) / (2 * step)
        fd2 = (phi_k(x + [0, step], y, k) - phi_k(x - [0, step], y, k)) / (2 * step)
        assert complex(g1) == pytest.approx(fd1, rel=1e-6)
        assert complex(g2) == pytest.approx(fd2, rel=1e-6)

    def test_stretched_equals_physical_inside(self):
        """Test that an identity region of the stretch leaves Phi unchanged."""
        stretch = LinearStretch(5.0, 2.0, 5.0)
        x = np.array([1.0, 0.5])
        y = np.array([-0.5, 1.5])
        assert phi_k_stretched(x, y, 2.0, stretch) == pytest.approx(phi_k(x, y, 2.0), rel=1e-14)

    def test_double_layer_is_source_normal_derivative(self):
        """Test the double-layer kernel against a difference in the source point."""
        k = 1.5
        x1, x2 = 0.9, 0.4
        y1, y2 = -0.3, -0.2
        n1, n2 = 0.6, 0.8
        step = 1e-6
        plus = single_layer_kernel(k, x1, x2, y1 + step * n1, y2 + step * n2)
        minus = single_layer_kernel(k, x1, x2, y1 - step * n1, y2 - step * n2)
        expected = (plus - minus) / (2 * step)
        assert complex(double_layer_kernel(k, x1, x2, y1, y2, n1, n2)) == pytest.approx(
            complex(expected), rel=1e-6
        )

    def test_single_layer_gradient_is_target_gradient(self):
        """Test the target gradient of the single-layer kernel."""
        k = 1.5
        y1, y2 = 0.1, -0.6
        x1, x2 = 1.2, 0.3
        step = 1e-6
        g1, g2 = single_layer_gradient(k, x1, x2, y1, y2)
        fd1 = (single_layer_kernel(k, x1 + step, x2, y1, y2)
               - single_layer_kernel(k, x1 - step, x2, y1, y2)) / (2 * step)
        fd2 = (single_layer_kernel(k, x1, x2 + step, y1, y2)
               - single_layer_kernel(k, x1, x2 - step, y1, y2)) / (2 * step)
        assert complex(g1) == pytest.approx(complex(fd1), rel=1e-6)
        assert complex(g2) == pytest.approx(complex(fd2), rel=1e-6)
