"""
Integration tests for ScatteringService.

Tests the service layer orchestrating contexts, solves and experiments.
"""

import math

import numpy as np
import pytest

from stepscatter.errors import GeometryError, RegionError
from stepscatter.models import ExperimentSpec, FarFieldPattern, GreenValue, SolveSummary
from stepscatter.pml_bie import evaluate_field, far_field_from_solution
from stepscatter.scattering_service import DEFAULT_FIELD_POINTS
from stepscatter.wiener_hopf import FactorizationContext

K_CHECK = 2.0 * math.pi / 1.1
WAVELENGTH_BIE = 1.6
NODES_BIE = 96


SOURCE = (0.3, 0.4)


class TestGreenFunctionService:
    """Test the Green function operations of the service."""

    def test_context_is_cached(self, service):
        """Test that contexts are built once per (k, h)."""
        assert service.context(K_CHECK, 1.0) is service.context(K_CHECK, 1.0)
        assert service.context(K_CHECK, 1.0) is not service.context(K_CHECK, 1.2)

    def test_green_eval(self, service):
        """Test evaluation in two representations."""
        direct = service.green_eval(K_CHECK, 1.0, SOURCE, [(-1.5, 0.8)], "direct")
        deformed = service.green_eval(K_CHECK, 1.0, SOURCE, [(-1.5, 0.8)], "deformed")
        assert isinstance(direct[0], GreenValue)
        assert deformed[0].value == pytest.approx(direct[0].value, rel=1e-6)

    def test_unknown_representation(self, service):
        """Test ValueError before any evaluation."""
        with pytest.raises(ValueError):
            service.green_eval(K_CHECK, 1.0, SOURCE, [(1.0, 1.0)], "series")

    def test_source_on_crack(self, service):
        """Test RegionError for a source on the crack."""
        with pytest.raises(RegionError):
            service.green_eval(K_CHECK, 1.0, (-0.5, 0.0), [(1.0, 1.0)])

    def test_far_field(self, service):
        """Test the far-field pattern at a few angles."""
        pattern = service.far_field(K_CHECK, 1.0, SOURCE, [0.5, 1.5, 2.5])
        assert isinstance(pattern, FarFieldPattern)
        assert len(pattern.values) == 3
        assert all(np.isfinite(v) for v in pattern.values)

    def test_modal(self, service):
        """Test that one mode propagates for kh = 2 pi / 1.1."""
        data = service.modal(K_CHECK, 1.0, SOURCE)
        assert data.M == 1

    def test_pml_extend(self, service):
        """Test the continued field in the physical region."""
        values = service.pml_extend(K_CHECK, 1.0, SOURCE, [(1.0, 0.0), (2.5, 0.0)])
        assert [v.representation for v in values] == ["pml_extended", "pml_extended"]
        assert abs(values[1].value) < abs(values[0].value)

    def test_wh_factors(self, service):
        """Test sampling of the factors along L."""
        samples = service.wh_factors(K_CHECK, 1.0, n=4)
        assert len(samples) == 4
        assert samples[0].xi.real == pytest.approx(-3.0 * K_CHECK)

    def test_wh_identities(self, service):
        """Test the identity residuals through the service."""
        report = service.wh_identities(K_CHECK, 1.0, SOURCE, n=20)
        assert report.product_residual < 1e-8


@pytest.mark.slow
class TestSolveService:
    """Test plane-wave solves through the service."""

    def test_solve_scattering(self, service, step_system):
        """Test that the service reproduces a direct solve."""
        summary = service.solve_scattering("step", math.pi / 3, WAVELENGTH_BIE, nodes=NODES_BIE)
        assert isinstance(summary, SolveSummary)
        assert summary.unknowns == step_system.unknowns
        assert summary.points == DEFAULT_FIELD_POINTS
        expected = evaluate_field(step_system, np.array(DEFAULT_FIELD_POINTS))
        np.testing.assert_allclose(summary.u_tot, expected, rtol=1e-10)

    def test_custom_needs_file(self, service):
        """Test GeometryError for the custom example without a file."""
        with pytest.raises(GeometryError):
            service.geometry("custom", 1.0, 4.0)

    def test_geometry_file(self, service, geometry_file):
        """Test that a geometry file overrides the example name."""
        geometry = service.geometry("custom", 1.0, 4.0, str(geometry_file))
        assert geometry.h == 1.5

    def test_solve_rounded_file(self, service, geometry_file):
        """Test a solve on the surface read from a file."""
        summary = service.solve_scattering(
            "custom", math.pi / 3, WAVELENGTH_BIE, geometry_file=str(geometry_file), nodes=NODES_BIE
        )
        assert summary.residual < 1e-10
        assert all(np.isfinite(v) for v in summary.u_tot)

    def test_solution_far_field_with_background(self, service):
        """Test that subtracting the step admits the reflection angle."""
        pattern = service.solution_far_field(
            "rounded_step", math.pi / 3, WAVELENGTH_BIE, [math.pi / 3, math.pi / 2], 2.0,
            h=1.0, nodes=NODES_BIE, subtract_step=True,
        )
        assert pattern.radius == 2.0
        assert all(np.isfinite(v) for v in pattern.values)
        assert all(abs(v) > 0 for v in pattern.values)

    def test_solution_far_field(self, service, step_system, k_bie):
        """Test that the service reproduces the arc integral of a direct solve."""
        angles = [math.pi / 2, 2 * math.pi / 3]
        pattern = service.solution_far_field("step", math.pi / 3, WAVELENGTH_BIE, angles, 2.0, nodes=NODES_BIE)
        expected = far_field_from_solution(step_system, FactorizationContext(k_bie, 1.0), 2.0, angles)
        np.testing.assert_allclose(pattern.values, expected, rtol=1e-10)


@pytest.mark.slow
class TestExperiments:
    """Test the convergence, cross-check and radiation experiments."""

    def test_convergence(self, service):
        """Test that E_rel decays exponentially over a D sweep."""
        spec = ExperimentSpec(values=[1.5, 0.5, 1.0], resolution=NODES_BIE, wavelength=WAVELENGTH_BIE)
        report = service.run_convergence(spec)
        assert [r.param for r in report.records] == [0.5, 1.0, 1.5]
        assert all(r.error is None for r in report.records)
        errors = [r.e_rel for r in report.records]
        assert errors[0] > errors[1] > errors[2] > 100 * report.floor
        assert errors[2] < 1e-2
        assert report.slope is not None and report.slope < -0.5
        assert report.floor < 1e-6
        assert report.parameters["interface_points"] > 0

    def test_reference_is_cached(self, service):
        """Test that sweeps of the same problem share one reference solve."""
        service.run_convergence(ExperimentSpec(values=[1.0], resolution=NODES_BIE, wavelength=WAVELENGTH_BIE))
        again = service.run_convergence(ExperimentSpec(values=[0.5], resolution=NODES_BIE, wavelength=WAVELENGTH_BIE))
        assert len(again.records) == 1
        assert len(service._references) == 1

    def test_convergence_rejects_reference(self, service):
        """Test GeometryError when the sweep contains the reference value."""
        with pytest.raises(GeometryError):
            service.run_convergence(ExperimentSpec(values=[2.0], resolution=32, wavelength=WAVELENGTH_BIE))

    def test_g1_crosscheck(self, service):
        """Test agreement on the aperture and decay in the layer."""
        table = service.run_g1_crosscheck(x1=[0.05, 0.3, 0.8, 1.2, 1.8, 2.2], nodes=128)
        assert len(table.rows) == 6
        assert table.parameters["nodes"] == 128
        assert table.parameters["crack_residual"] < 1e-10
        assert table.max_physical_discrepancy < 1e-4
        assert table.decay_slope is not None and table.decay_slope < 0

    def test_radiation_diagnostics(self, service):
        """Test the table layout on two radii."""
        table = service.run_radiation_diagnostics(
            K_CHECK, 1.0, (0.0, 0.4), radii=[5.0, 10.0], angles=[math.pi / 2], n_arc=8
        )
        assert len(table.residuals) == 2
        assert [r for r, _ in table.circle_integrals] == [5.0, 10.0]
        assert "strip" in table.usrc_exponents
        assert table.usrc_exponents[f"{math.pi / 2:.6g}"] < 0
