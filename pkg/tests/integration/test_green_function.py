"""
Integration tests for the Green function of the cracked half-plane with a step.

Tests agreement between representations, boundary values, reciprocity and
the waveguide mode data.
"""

import numpy as np
import pytest

from stepscatter.errors import DomainError, RegionError
from stepscatter.green_function import (
    far_field_G,
    field_region,
    g_in,
    green,
    green_pml_extended,
    modal_coeffs,
    modal_field,
    projection_coeffs,
    radiation_residual,
    strip_green_modal,
)
from stepscatter.models import SourceConfig, SourceRegion
from stepscatter.pml import LinearStretch
from stepscatter.wiener_hopf import FactorizationContext


class TestRegions:
    """Test field point classification."""

    @pytest.mark.parametrize(
        ("point", "region"),
        [
            ((0.5, 0.2), "upper"),
            ((0.5, 0.0), "upper"),
            ((-0.5, 0.0), "crack"),
            ((0.0, 0.0), "crack"),
            ((-0.5, -0.5), "strip"),
            ((0.3, -1.0), "floor"),
        ],
    )
    def test_field_region(self, point, region):
        """Test the region of representative points."""
        assert field_region(point, 1.0) == region

    def test_below_floor(self):
        """Test RegionError below x2 = -h."""
        with pytest.raises(RegionError):
            field_region((0.0, -1.2), 1.0)


class TestGreen:
    """Test G(x; x*) evaluation."""

    def test_zero_on_crack_and_floor(self, ctx, upper_source):
        """Test the Dirichlet condition on the crack and the floor."""
        assert green(ctx, upper_source, (-0.7, 0.0)).value == 0
        assert green(ctx, upper_source, (0.4, -1.0)).representation == "boundary"

    def test_source_point(self, ctx, upper_source):
        """Test DomainError at x = x*."""
        with pytest.raises(DomainError):
            green(ctx, upper_source, upper_source.point)

    def test_unknown_representation(self, ctx, upper_source):
        """Test ValueError for an unknown representation."""
        with pytest.raises(ValueError):
            green(ctx, upper_source, (1.0, 1.0), "fancy")

    def test_direct_vs_deformed_upper(self, ctx, upper_source):
        """Test path equivalence left of the step in the upper half-plane."""
        x = (-1.5, 0.8)
        direct = green(ctx, upper_source, x, "direct").value
        deformed = green(ctx, upper_source, x, "deformed")
        assert deformed.representation == "deformed"
        assert deformed.value == pytest.approx(direct, rel=1e-6)

    def test_direct_vs_modal_strip(self, ctx, upper_source):
        """Test the mode series against the direct integral in the strip."""
        x = (-1.5, -0.5)
        direct = green(ctx, upper_source, x, "direct").value
        modal = green(ctx, upper_source, x, "modal").value
        assert modal == pytest.approx(direct, rel=1e-6)

    def test_modal_outside_strip(self, ctx, upper_source):
        """Test RegionError for the modal form above the crack."""
        with pytest.raises(RegionError):
            green(ctx, upper_source, (-1.0, 0.5), "modal")

    def test_reciprocity_upper(self, ctx):
        """Test G(x; y) = G(y; x) for two points above the crack."""
        a = SourceConfig(0.3, 0.4, SourceRegion.UPPER_HALF_PLANE)
        b = SourceConfig(-0.8, 1.1, SourceRegion.UPPER_HALF_PLANE)
        ab = green(ctx, a, b.point, "direct").value
        ba = green(ctx, b, a.point, "direct").value
        assert ab == pytest.approx(ba, rel=1e-6)

    def test_reciprocity_across_aperture(self, ctx, strip_source):
        """Test reciprocity between the strip and the upper half-plane."""
        upper = SourceConfig(0.6, 0.5, SourceRegion.UPPER_HALF_PLANE)
        ab = green(ctx, upper, strip_source.point, "direct").value
        ba = green(ctx, strip_source, upper.point, "direct").value
        assert ab == pytest.approx(ba, rel=1e-6)

    def test_continuity_across_aperture(self, ctx, upper_source):
        """Test that G is continuous through the aperture x2 = 0, x1 > 0."""
        above = green(ctx, upper_source, (0.8, 1e-7), "direct").value
        below = green(ctx, upper_source, (0.8, -1e-7), "direct").value
        assert above == pytest.approx(below, rel=1e-5)

    def test_gradient_matches_difference(self, ctx, upper_source):
        """Test the spectral gradient against central differences."""
        x1, x2 = 0.9, 0.6
        step = 1e-5
        value = green(ctx, upper_source, (x1, x2), "direct", gradient=True)
        d1 = (green(ctx, upper_source, (x1 + step, x2), "direct").value
              - green(ctx, upper_source, (x1 - step, x2), "direct").value) / (2 * step)
        d2 = (green(ctx, upper_source, (x1, x2 + step), "direct").value
              - green(ctx, upper_source, (x1, x2 - step), "direct").value) / (2 * step)
        assert value.grad[0] == pytest.approx(d1, rel=1e-4)
        assert value.grad[1] == pytest.approx(d2, rel=1e-4)

    @pytest.mark.parametrize("x", [(0.9, 0.6), (-0.6, -0.5)])
    def test_helmholtz_residual(self, ctx, upper_source, x):
        """Test Laplacian G + k^2 G = 0 with a fourth-order difference stencil."""
        step = 0.02
        stencil = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}

        def value(dx1, dx2):
            return green(ctx, upper_source, (x[0] + dx1, x[1] + dx2), "direct").value

        center = value(0.0, 0.0)
        laplacian = sum(
            w * (value(j * step, 0.0) + value(0.0, j * step)) for j, w in stencil.items()
        ) / (12.0 * step**2)
        assert abs(laplacian + ctx.k**2 * center) < 1e-5 * ctx.k**2 * abs(center)


class TestIncidentField:
    """Test the incident part G_in."""

    def test_strip_spectral_vs_modal(self, ctx, strip_source):
        """Test the strip Green function in both forms."""
        x = (0.2, -0.3)
        spectral = g_in(ctx, strip_source, x, "spectral")
        modal = g_in(ctx, strip_source, x, "modal")
        assert spectral == pytest.approx(modal, rel=1e-6)

    def test_aperture_source_has_no_incident_part(self, ctx, aperture_source):
        """Test G_in = 0 for sources on the aperture."""
        assert g_in(ctx, aperture_source, (1.0, 0.5)) == 0

    def test_wrong_region(self, ctx, upper_source):
        """Test RegionError below the crack for an upper source."""
        with pytest.raises(RegionError):
            g_in(ctx, upper_source, (0.5, -0.5))

    def test_strip_green_symmetric(self, ctx):
        """Test reciprocity of the strip mode sum."""
        a = strip_green_modal((0.4, -0.2), (-0.3, -0.7), ctx.k, 1.0)
        b = strip_green_modal((-0.3, -0.7), (0.4, -0.2), ctx.k, 1.0)
        assert a == pytest.approx(b, rel=1e-12)

    def test_strip_green_same_abscissa(self, ctx):
        """Test DomainError when x1 = x1*."""
        with pytest.raises(DomainError):
            strip_green_modal((0.1, -0.2), (0.1, -0.7), ctx.k, 1.0)


class TestModes:
    """Test the waveguide modal coefficients."""

    def test_propagating_count(self, ctx, upper_source):
        """Test M = floor(kh / pi)."""
        data = modal_coeffs(ctx, upper_source)
        assert data.M == 1
        assert not data.cutoff_flag
        assert data.xi_m[0].imag == 0

    def test_coefficients_match_projection(self, ctx, upper_source):
        """Test c_m against the cross-section projection of G."""
        data = modal_coeffs(ctx, upper_source)
        projected = projection_coeffs(ctx, upper_source, -2.0)
        assert projected[0] == pytest.approx(data.c_m[0], rel=1e-5)

    def test_cutoff_mode_matches_projection(self, upper_source):
        """Test the double-pole mode c_M + s x1 against the projection when kh = pi."""
        cutoff_ctx = FactorizationContext(np.pi, 1.0)
        data = modal_coeffs(cutoff_ctx, upper_source)
        assert data.cutoff_flag and data.M == 1
        assert data.xi_m[0] == 0 and data.slope is not None
        for x1 in (-2.0, -3.5):
            projected = projection_coeffs(cutoff_ctx, upper_source, x1)[0]
            assert projected == pytest.approx(data.c_m[0] + data.slope * x1, rel=1e-5)

    def test_modal_field_matches_green(self, ctx, upper_source):
        """Test the mode series far to the left of the step."""
        x = (-5.5, -1.0 / 3.0)
        assert modal_field(ctx, upper_source, x) == pytest.approx(
            green(ctx, upper_source, x, "direct").value, abs=1e-6
        )

    def test_modal_field_region(self, ctx, upper_source):
        """Test RegionError right of the step."""
        with pytest.raises(RegionError):
            modal_field(ctx, upper_source, (0.5, -0.5))


class TestFarFieldAndExtension:
    """Test the far-field pattern and the PML continuation."""

    def test_far_field_angle_range(self, ctx, upper_source):
        """Test RegionError outside [0, pi]."""
        with pytest.raises(RegionError):
            far_field_G(ctx, upper_source, 4.0)

    def test_far_field_parts(self, ctx, upper_source):
        """Test that the total pattern adds the image pair."""
        total = far_field_G(ctx, upper_source, np.pi / 2, "total")
        scattered = far_field_G(ctx, upper_source, np.pi / 2, "scattered")
        assert np.isfinite(total) and np.isfinite(scattered)
        assert total != scattered

    def test_far_field_vanishes_at_grazing(self, ctx, aperture_source):
        """Test that the pattern vanishes at alpha = 0."""
        assert far_field_G(ctx, aperture_source, 0.0) == 0

    def test_extension_identity_region(self, ctx, upper_source):
        """Test that the continued G equals G where the stretch is trivial."""
        x = (1.0, 0.5)
        extended = green_pml_extended(ctx, upper_source, x, LinearStretch(1.5, 3.0), "total")
        assert extended == pytest.approx(green(ctx, upper_source, x).value, rel=1e-12)

    def test_extension_decays(self, ctx, upper_source):
        """Test that the continued scattered field decays in the layer."""
        stretch = LinearStretch(1.5, 3.0)
        inside = abs(green_pml_extended(ctx, upper_source, (1.4, 0.0), stretch))
        deep = abs(green_pml_extended(ctx, upper_source, (2.5, 0.0), stretch))
        assert deep < inside

    def test_extension_rejects_strip_source(self, ctx, strip_source):
        """Test RegionError for strip sources."""
        with pytest.raises(RegionError):
            green_pml_extended(ctx, strip_source, (1.0, 0.5), LinearStretch(1.5, 3.0))

    def test_radiation_residual_decays(self, ctx, upper_source):
        """Test that the outgoing residual decays along the vertical."""
        near = radiation_residual(ctx, upper_source, 10.0, np.pi / 2)
        far = radiation_residual(ctx, upper_source, 20.0, np.pi / 2)
        assert far.usrc < 0.6 * near.usrc
        assert far.tangential is not None and far.tangential < near.tangential

    def test_radiation_exponent(self, ctx, upper_source):
        """Test that the outgoing residual decays at least like r^-1.4."""
        radii = np.array([10.0, 20.0, 40.0])
        usrc = [radiation_residual(ctx, upper_source, r, np.pi / 2).usrc for r in radii]
        slope = np.polyfit(np.log(radii), np.log(usrc), 1)[0]
        assert slope <= -1.4

    def test_far_field_limit(self, ctx, upper_source):
        """Test that G sqrt(r) exp(-ikr) tends to the pattern like 1/r."""
        alpha = np.pi / 3
        pattern = far_field_G(ctx, upper_source, alpha)
        radii = [20.0, 40.0, 80.0]
        scaled = [
            green(ctx, upper_source, (r * np.cos(alpha), r * np.sin(alpha))).value
            * np.sqrt(r) * np.exp(-1j * ctx.k * r)
            for r in radii
        ]
        errors = [abs(v - pattern) / abs(pattern) for v in scaled]
        assert errors[1] < 0.6 * errors[0]
        assert errors[2] < 0.6 * errors[1]
        # eliminating the 1/r term leaves O(1/r^2)
        extrapolated = 2.0 * scaled[2] - scaled[1]
        assert abs(extrapolated - pattern) < 0.2 * errors[2] * abs(pattern)
