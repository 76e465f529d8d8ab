"""
High-level scattering service.

Orchestrates factorization contexts, Green function evaluation, the PML-BIE
solver and the reproduction experiments. This is the main business logic
layer behind the CLI and the MCP server.
"""

import logging
import math
import time
from typing import Any

import numpy as np

from .config import Config
from .contour_quad import gauss_legendre
from .errors import GeometryError, ScatteringError
from .geometry import SurfaceGeometry, example_geometry, load_geometry
from .green_function import (
    REPRESENTATIONS,
    far_field_G,
    g_in,
    green,
    green_pml_extended,
    modal_coeffs,
    radiation_residual,
    waveguide_residual,
)
from .models import (
    ConvergenceRecord,
    ConvergenceReport,
    CrossCheckRow,
    CrossCheckTable,
    ExperimentSpec,
    FactorSample,
    FarFieldPattern,
    GreenValue,
    IdentityReport,
    ModalData,
    PmlProfile,
    RadiationResidual,
    RadiationTable,
    SolveSummary,
    SourceConfig,
)
from .pml import LinearStretch
from .pml_bie import (
    BieSystem,
    assemble,
    assemble_crack,
    crack_scattered_field,
    evaluate_field,
    far_field_from_solution,
    interface_arclengths,
    solve,
    trace_on_interface,
)
from .wiener_hopf import FactorizationContext, identity_report


logger = logging.getLogger(__name__)

DEFAULT_FIELD_POINTS = [(-1.0, 1.0), (1.0, 1.0), (1.0, -0.5)]
# Records this far above the self-convergence floor enter the exponential fit
_FLOOR_MARGIN = 100.0


def _log_slope(x: list[float], y: list[float], log_x: bool = False) -> float | None:
    """Least-squares slope of log(y) against x (or log x); None below two points."""
    pairs = [(a, b) for a, b in zip(x, y) if np.isfinite(b) and b > 0]
    if len(pairs) < 2:
        return None
    xs = np.array([p[0] for p in pairs], dtype=float)
    ys = np.log(np.array([p[1] for p in pairs], dtype=float))
    if log_x:
        xs = np.log(xs)
    return float(np.polyfit(xs, ys, 1)[0])


def _relative_sup(values: np.ndarray, reference: np.ndarray) -> float:
    return float(np.max(np.abs(values - reference)) / np.max(np.abs(reference)))


class ScatteringService:
    """
    High-level scattering service.

    This is the main public API that combines:
    - Wiener–Hopf factorization contexts (cached per k, h, tolerance)
    - Green function evaluation in every representation
    - PML-BIE plane-wave solves (reference solutions cached per sweep)
    - The convergence, cross-check and radiation experiments

    All methods accept plain numbers and return typed models.
    """

    def __init__(self, config: Config):
        """
        Initialize the scattering service.

        Args:
            config: Configuration with tolerances and resolution.
        """
        self.config = config
        # Cache structure: {(k, h, tol): FactorizationContext}
        self._contexts: dict[tuple[float, float, float], FactorizationContext] = {}
        # Cache structure: {reference key: (system, arclengths, trace, floor)}
        self._references: dict[tuple, tuple[BieSystem, np.ndarray, np.ndarray, float]] = {}

        logger.info("=" * 60)
        logger.info("ScatteringService initialized")
        logger.info(f"Tolerance: {config.tolerance:g}")
        logger.info(f"Nodes per smooth segment: {config.nodes}")
        logger.info(f"Gauss order: {config.gauss_order}, grading exponent: {config.grading_exponent}")
        logger.info("=" * 60)

    # ------------------------------------------------------------------
    # Contexts and sources
    # ------------------------------------------------------------------

    def context(self, k: float, h: float) -> FactorizationContext:
        """Factorization context for (k, h), built once."""
        key = (float(k), float(h), float(self.config.tolerance))
        if key not in self._contexts:
            logger.debug(f"Building factorization context k={k}, h={h}")
            self._contexts[key] = FactorizationContext(
                k, h,
                tol=self.config.tolerance,
                xi_factor=self.config.xi_max_factor,
                gauss_order=self.config.gauss_order,
            )
        return self._contexts[key]

    @staticmethod
    def source(point: tuple[float, float], h: float) -> SourceConfig:
        """Source at ``point`` with the region derived from its coordinates."""
        return SourceConfig.at(float(point[0]), float(point[1]), h)

    # ------------------------------------------------------------------
    # Green function
    # ------------------------------------------------------------------

    def green_eval(
        self,
        k: float,
        h: float,
        src: tuple[float, float],
        points: list[tuple[float, float]],
        representation: str = "auto",
        gradient: bool = False,
    ) -> list[GreenValue]:
        """
        Evaluate G(x; x*) at field points.

        Raises:
            ValueError: For an unknown representation.
            ScatteringError: Propagated from the evaluation.
        """
        if representation not in REPRESENTATIONS:
            raise ValueError(f"Unknown representation '{representation}'")
        ctx = self.context(k, h)
        source = self.source(src, h)
        return [
            green(ctx, source, (float(p[0]), float(p[1])), representation, gradient,
                  self.config.auto_switch_wavelengths)
            for p in points
        ]

    def far_field(
        self, k: float, h: float, src: tuple[float, float], angles: list[float], part: str = "total"
    ) -> FarFieldPattern:
        """Far-field pattern of G for a point source."""
        ctx = self.context(k, h)
        source = self.source(src, h)
        values = [far_field_G(ctx, source, float(a), part) for a in angles]
        return FarFieldPattern([float(a) for a in angles], values)

    def modal(self, k: float, h: float, src: tuple[float, float], n_modes: int | None = None) -> ModalData:
        """Waveguide modal coefficients of G for x1 < 0."""
        return modal_coeffs(self.context(k, h), self.source(src, h), n_modes)

    def pml_extend(
        self,
        k: float,
        h: float,
        src: tuple[float, float],
        points: list[tuple[float, float]],
        start: float = 1.5,
        slope: float = 3.0,
        part: str = "scattered",
    ) -> list[GreenValue]:
        """G continued into the linear stretch x1~ = x1 + i slope (|x1| - start)."""
        ctx = self.context(k, h)
        source = self.source(src, h)
        stretch = LinearStretch(start, slope)
        return [
            GreenValue((float(p[0]), float(p[1])),
                       green_pml_extended(ctx, source, (float(p[0]), float(p[1])), stretch, part),
                       "pml_extended")
            for p in points
        ]

    # ------------------------------------------------------------------
    # Wiener–Hopf factors
    # ------------------------------------------------------------------

    def wh_factors(self, k: float, h: float, n: int = 50) -> list[FactorSample]:
        """K+ and K- at ``n`` points of L between Re xi = -3k and 3k."""
        ctx = self.context(k, h)
        xi = ctx.L.point_at(np.linspace(-3.0 * k, 3.0 * k, n))
        kp, km = ctx.k_parts(xi)
        return [FactorSample(complex(z), complex(p), complex(m)) for z, p, m in zip(xi, kp, km)]

    def wh_identities(self, k: float, h: float, src: tuple[float, float], n: int = 50) -> IdentityReport:
        """Residuals of the factorization identities at ``n`` nodes of L."""
        report = identity_report(self.context(k, h), self.source(src, h), n)
        logger.info(
            f"Identity residuals (k={k:g}, h={h:g}, n={n}): product {report.product_residual:.3e}, "
            f"split {report.split_residual:.3e}"
        )
        return report

    # ------------------------------------------------------------------
    # PML-BIE solves
    # ------------------------------------------------------------------

    def geometry(self, example: str, h: float, k: float, geometry_file: str | None = None) -> SurfaceGeometry:
        """
        Built-in or file geometry.

        Raises:
            GeometryError: For unknown examples or invalid files.
        """
        if geometry_file is not None:
            return load_geometry(geometry_file)
        if example == "custom":
            raise GeometryError("the custom example needs a geometry file")
        return example_geometry(example, h, k)

    def solve_system(
        self,
        geometry: SurfaceGeometry,
        profile: PmlProfile,
        theta: float,
        k: float,
        nodes: int | None = None,
    ) -> BieSystem:
        """Assemble and solve one plane-wave problem."""
        system = assemble(
            geometry, profile, theta, k,
            nodes or self.config.nodes, self.config.grading_exponent,
        )
        return solve(system)

    def solve_scattering(
        self,
        example: str = "step",
        theta: float = math.pi / 3,
        wavelength: float = 1.0,
        h: float = 1.0,
        profile: PmlProfile | None = None,
        points: list[tuple[float, float]] | None = None,
        geometry_file: str | None = None,
        nodes: int | None = None,
    ) -> SolveSummary:
        """
        Solve a plane-wave problem and sample u_tot.

        Args:
            example: ``step``, ``rounded_step``, ``step_with_inclusion`` or ``custom``.
            theta: Incident angle in (0, pi).
            wavelength: Wavelength (k = 2 pi / wavelength).
            h: Step height of the built-in examples.
            profile: PML parameters; defaults to L = 5, D = 2, S = 2.
            points: Physical field points.
            geometry_file: Geometry file for ``custom``.
            nodes: Nodes per smooth segment.
        """
        start = time.perf_counter()
        k = 2.0 * math.pi / wavelength
        geometry = self.geometry(example, h, k, geometry_file)
        system = self.solve_system(geometry, profile or PmlProfile(), theta, k, nodes)
        points = [(float(p[0]), float(p[1])) for p in (points or DEFAULT_FIELD_POINTS)]
        values = evaluate_field(system, np.array(points), "u_tot")
        return SolveSummary(
            geometry.name, float(theta), system.unknowns, float(system.residual),
            float(system.condition), points, [complex(v) for v in values],
            time.perf_counter() - start,
        )

    def solution_far_field(
        self,
        example: str,
        theta: float,
        wavelength: float,
        angles: list[float],
        radius: float,
        h: float = 1.0,
        profile: PmlProfile | None = None,
        geometry_file: str | None = None,
        nodes: int | None = None,
        subtract_step: bool = False,
    ) -> FarFieldPattern:
        """
        Far-field pattern of a solved problem from the field on an arc.

        With ``subtract_step`` the flat step of the same height and box is
        solved too and its total field subtracted, which admits every angle.
        """
        k = 2.0 * math.pi / wavelength
        profile = profile or PmlProfile()
        geometry = self.geometry(example, h, k, geometry_file)
        system = self.solve_system(geometry, profile, theta, k, nodes)
        background = None
        if subtract_step:
            background = self.solve_system(example_geometry("step", geometry.h, k), profile, theta, k, nodes)
        ctx = self.context(k, geometry.h)
        values = far_field_from_solution(system, ctx, radius, angles, background)
        return FarFieldPattern([float(a) for a in angles], [complex(v) for v in values], float(radius))

    # ------------------------------------------------------------------
    # Convergence sweeps
    # ------------------------------------------------------------------

    def _sweep_profile(self, spec: ExperimentSpec, value: float) -> PmlProfile:
        if spec.sweep == "D":
            return PmlProfile(spec.L1, spec.L2, value, value, spec.reference_S)
        return PmlProfile(spec.L1, spec.L2, spec.reference_D, spec.reference_D, value)

    def reference(self, spec: ExperimentSpec) -> tuple[BieSystem, np.ndarray, np.ndarray, float]:
        """
        Reference solution (D = reference_D, S = reference_S) of a sweep.

        Returns:
            (system, interface arc lengths, u_tot trace there, self-convergence
            floor estimated against a run with a quarter more nodes).
        """
        key = (
            spec.example, spec.geometry_file, spec.theta, spec.wavelength, spec.h,
            spec.resolution, spec.L1, spec.L2, spec.reference_D, spec.reference_S,
        )
        if key in self._references:
            logger.debug(f"Reusing reference solution for {spec.example}")
            return self._references[key]

        k = 2.0 * math.pi / spec.wavelength
        geometry = self.geometry(spec.example, spec.h, k, spec.geometry_file)
        profile = PmlProfile(spec.L1, spec.L2, spec.reference_D, spec.reference_D, spec.reference_S)
        system = self.solve_system(geometry, profile, spec.theta, k, spec.resolution)
        arclengths = interface_arclengths(system)
        trace = trace_on_interface(system, arclengths)

        finer = self.solve_system(geometry, profile, spec.theta, k, math.ceil(1.25 * spec.resolution))
        floor = _relative_sup(trace_on_interface(finer, arclengths), trace)
        logger.info(f"Reference for {geometry.name}: {arclengths.size} interface points, floor {floor:.3e}")

        self._references[key] = (system, arclengths, trace, floor)
        return self._references[key]

    def run_convergence(self, spec: ExperimentSpec) -> ConvergenceReport:
        """
        E_rel of u_tot on the physical pseudointerface against the reference.

        Failed sweep points are recorded with E_rel = nan and the error text.

        Raises:
            GeometryError: For an invalid spec.
            ScatteringError: If the reference solve fails.
        """
        spec.validate()
        _, arclengths, reference, floor = self.reference(spec)
        k = 2.0 * math.pi / spec.wavelength
        geometry = self.geometry(spec.example, spec.h, k, spec.geometry_file)

        records = []
        for value in sorted(spec.values):
            start = time.perf_counter()
            try:
                system = self.solve_system(
                    geometry, self._sweep_profile(spec, value), spec.theta, k, spec.resolution
                )
                e_rel = _relative_sup(trace_on_interface(system, arclengths), reference)
                records.append(ConvergenceRecord(float(value), e_rel, time.perf_counter() - start))
                logger.info(f"{spec.sweep}={value:.6g}: E_rel={e_rel:.3e}")
            except (ScatteringError, np.linalg.LinAlgError) as e:
                logger.warning(f"Sweep point {spec.sweep}={value:.6g} failed: {e}")
                records.append(
                    ConvergenceRecord(float(value), float("nan"), time.perf_counter() - start, str(e))
                )

        usable = [r for r in records if r.error is None and r.e_rel > _FLOOR_MARGIN * floor]
        slope = _log_slope([r.param for r in usable], [r.e_rel for r in usable])
        if slope is not None:
            slope /= math.log(10.0)
        parameters: dict[str, Any] = {
            "example": spec.example,
            "geometry_file": spec.geometry_file,
            "sweep": spec.sweep,
            "theta": spec.theta,
            "wavelength": spec.wavelength,
            "h": spec.h,
            "resolution": spec.resolution,
            "L1": spec.L1,
            "L2": spec.L2,
            "reference_D": spec.reference_D,
            "reference_S": spec.reference_S,
            "interface_points": int(arclengths.size),
        }
        return ConvergenceReport(parameters, records, slope, floor)

    # ------------------------------------------------------------------
    # Cross-check of the scattered Green function
    # ------------------------------------------------------------------

    def run_g1_crosscheck(
        self,
        k: float = 2.0 * math.pi / 1.1,
        h: float = 1.0,
        src: tuple[float, float] = (0.0, 0.4),
        x1: list[float] | None = None,
        start: float = 1.5,
        slope: float = 3.0,
        thickness: float = 2.0,
        nodes: int | None = None,
    ) -> CrossCheckTable:
        """
        G1 = G - G_in on x2 = 0, x1 > 0 from the crack BIE and from Wiener–Hopf.

        Args:
            k: Wavenumber.
            h: Step height.
            src: Source above the crack.
            x1: Sample abscissae; default 50 points in [0.05, 2.5].
            start: Where the linear stretch starts.
            slope: Stretch slope, x1~ = x1 + i slope (x1 - start).
            thickness: Length of the crack and floor beyond ``start``.
            nodes: Nodes per piece of the crack solve.
        """
        ctx = self.context(k, h)
        source = self.source(src, h)
        stretch = LinearStretch(start, slope)
        samples = np.asarray(x1 if x1 is not None else np.linspace(0.05, 2.5, 50), dtype=float)

        crack = assemble_crack(
            k, h, source, stretch, thickness, nodes or self.config.nodes, self.config.grading_exponent + 1
        )
        points = np.stack([samples, np.zeros_like(samples)], axis=1)
        bie = crack_scattered_field(crack, points)

        rows = []
        for x, b in zip(samples, bie):
            x = float(x)
            physical = complex(green(ctx, source, (x, 0.0)).value - g_in(ctx, source, (x, 0.0)))
            extended = green_pml_extended(ctx, source, (x, 0.0), stretch, "scattered")
            rows.append(CrossCheckRow(x, complex(b), physical, extended))

        inside = [r for r in rows if r.x1 < start]
        discrepancy = float("nan")
        if inside:
            scale = max(abs(r.wiener_hopf) for r in inside)
            discrepancy = max(abs(r.bie - r.wiener_hopf) for r in inside) / scale
        beyond = [r for r in rows if r.x1 > start]
        decay = _log_slope([r.x1 for r in beyond], [abs(r.extended) for r in beyond])
        logger.info(f"G1 cross-check: physical discrepancy {discrepancy:.3e}, decay slope {decay}")

        parameters = {
            "k": k, "h": h, "src_x1": source.x1, "src_x2": source.x2,
            "stretch_start": start, "stretch_slope": slope, "thickness": thickness,
            "nodes": nodes or self.config.nodes, "crack_residual": crack.residual,
        }
        return CrossCheckTable(parameters, rows, discrepancy, decay)

    # ------------------------------------------------------------------
    # Radiation diagnostics
    # ------------------------------------------------------------------

    def run_radiation_diagnostics(
        self,
        k: float = 2.0 * math.pi,
        h: float = 1.0,
        src: tuple[float, float] = (0.0, 0.4),
        radii: list[float] | None = None,
        angles: list[float] | None = None,
        n_arc: int = 32,
    ) -> RadiationTable:
        """
        Radiation residuals of G with fitted decay exponents.

        Tabulates |(d_r - ik) G| and |d_tau G| on rays, the strip residual
        |(d_x1 - ik) G| at (r, -h/2) and the circle integrals of |G|^2 over the
        upper semicircle.

        Args:
            k: Wavenumber.
            h: Step height.
            src: Source point.
            radii: Radii; default 10 to 100 wavelengths.
            angles: Ray angles in (0, pi); default five angles.
            n_arc: Gauss points of the circle integrals.
        """
        wavelength = 2.0 * math.pi / k
        radii = radii or list(np.geomspace(10.0, 100.0, 5) * wavelength)
        angles = angles or [math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3, 5 * math.pi / 6]
        ctx = self.context(k, h)
        source = self.source(src, h)

        residuals: list[RadiationResidual] = []
        usrc_exponents: dict[str, float] = {}
        tangential_exponents: dict[str, float] = {}
        for alpha in angles:
            rows = [radiation_residual(ctx, source, float(r), float(alpha)) for r in radii]
            residuals.extend(rows)
            key = f"{alpha:.6g}"
            fit = _log_slope([r.r for r in rows], [r.usrc for r in rows], log_x=True)
            if fit is not None:
                usrc_exponents[key] = fit
            fit = _log_slope([r.r for r in rows], [r.tangential or 0.0 for r in rows], log_x=True)
            if fit is not None:
                tangential_exponents[key] = fit

        strip = [waveguide_residual(ctx, source, float(r), -h / 2.0) for r in radii]
        fit = _log_slope(list(radii), strip, log_x=True)
        if fit is not None:
            usrc_exponents["strip"] = fit

        nodes, weights = gauss_legendre(n_arc)
        phi = np.pi / 2.0 * (np.asarray(nodes) + 1.0)
        circle = []
        for r in radii:
            values = np.array([
                green(ctx, source, (r * math.cos(p), r * math.sin(p))).value for p in phi
            ])
            circle.append((float(r), float(np.sum(np.asarray(weights) * np.pi / 2.0 * r * np.abs(values) ** 2))))

        parameters = {"k": k, "h": h, "src_x1": source.x1, "src_x2": source.x2, "n_arc": n_arc}
        return RadiationTable(parameters, residuals, usrc_exponents, tangential_exponents, circle)
