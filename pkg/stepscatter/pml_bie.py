"""
PML-truncated boundary integral solver for plane-wave scattering by a step.

The discontinuous wave u_d = u_tot - u_inc - u_ref (reflected plane wave of the
side) is computed in the two parts of the truncated domain separated by the
pseudointerface, the segment from the anchor point along the reflection
direction. On each part the stretched Green identity

    1/2 u(x) = int [Phi~(x, y) q(y) - d_n(y) Phi~(x, y) u(y)] ds(y)

holds at boundary nodes, with q the co-normal derivative. The surface carries
known Dirichlet data, the interface carries the unknown traces of the left
side, and the right-side traces follow from the plane-wave jumps. The outer
wall of the layer is not meshed.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import BarycentricInterpolator
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import zgecon

from .contour_quad import gauss_legendre
from .errors import GeometryError, RegionError, SingularSystemError
from .geometry import (
    CurveMesh,
    PieceMesh,
    SegmentPiece,
    SurfaceGeometry,
    inverse_grading,
)
from .green_function import far_field_G, far_field_source_gradient
from .models import PmlProfile, SourceConfig, SourceRegion
from .pml import LinearStretch, PmlStretch
from .special_core import (
    StretchMap,
    double_layer_gradient,
    double_layer_kernel,
    single_layer_gradient,
    single_layer_kernel,
)
from .wiener_hopf import FactorizationContext


logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
FloatArray = NDArray[np.float64]

# Panels closer than this many panel sizes get product quadrature
_NEAR_FACTOR = 1.5
# Share of each half of a self panel integrated with the tau^p substitution
_SELF_INNER = 0.125
# Self-panel offsets below this share of the panel use integrated displacements
_DISPLACEMENT_CUT = 1e-2
_DISPLACEMENT_ORDER = 8
_MAX_BISECTIONS = 48
_MIN_RCOND = 1e-14
# Far-field angles this close to the reflection angle are rejected for u_d input
_REFLECTION_EXCLUSION = np.radians(5.0)


@lru_cache(maxsize=None)
def _interpolator(order: int) -> BarycentricInterpolator:
    nodes, _ = gauss_legendre(order)
    return BarycentricInterpolator(np.asarray(nodes), np.eye(order))


@dataclass
class _Targets:
    """Physical target points with their stretched coordinates."""

    points: FloatArray
    xt1: ComplexArray
    xt2: ComplexArray

    @classmethod
    def of(cls, points: FloatArray, stretch: StretchMap) -> "_Targets":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        xt1, xt2 = stretch.stretch(points[:, 0], points[:, 1])
        return cls(points, np.asarray(xt1, dtype=np.complex128), np.asarray(xt2, dtype=np.complex128))

    @classmethod
    def stack(cls, parts: list["_Targets"]) -> "_Targets":
        return cls(
            np.concatenate([p.points for p in parts]),
            np.concatenate([p.xt1 for p in parts]),
            np.concatenate([p.xt2 for p in parts]),
        )


def _kernels(k: float, xt1, xt2, yt1, yt2, n1, n2, gradient: bool) -> list[tuple[ComplexArray, bool]]:
    """Kernel values paired with whether they act on a weighted (single-layer) density."""
    if gradient:
        s1, s2 = single_layer_gradient(k, xt1, xt2, yt1, yt2)
        d1, d2 = double_layer_gradient(k, xt1, xt2, yt1, yt2, n1, n2)
        return [(s1, True), (s2, True), (d1, False), (d2, False)]
    return [
        (single_layer_kernel(k, xt1, xt2, yt1, yt2), True),
        (double_layer_kernel(k, xt1, xt2, yt1, yt2, n1, n2), False),
    ]


class BoundaryLayer:
    """
    Nyström discretisation of the layer potentials on one group of curves.

    Single-layer densities are per unit physical arc length; on near panels the
    weighted density (density times |dy/dv|) is interpolated on the panel.
    Self panels use the substitution v - v* = +-a tau^p next to the node and
    dyadic Gauss panels beyond it; other near panels are bisected until the
    target is well separated from every piece.
    """

    def __init__(self, mesh: CurveMesh, stretch: StretchMap, near_order: int = 24, power: int = 6):
        self.mesh = mesh
        self.stretch = stretch
        self.near_order = near_order
        self.power = power
        y = mesh.points
        self.yt1, self.yt2 = (np.asarray(c, dtype=np.complex128) for c in stretch.stretch(y[:, 0], y[:, 1]))
        self.n1, self.n2 = self._normals(y, mesh.dydv)
        self.speed = mesh.speed
        self.node_v = np.concatenate([p.v for p in mesh.pieces]) if mesh.pieces else np.zeros(0)

    @property
    def size(self) -> int:
        return self.mesh.size

    def _normals(self, y: FloatArray, dydv: FloatArray) -> tuple[ComplexArray, ComplexArray]:
        """Complex normal times speed (J2 dy2/dv, -J1 dy1/dv)."""
        j1, j2 = self.stretch.jacobian(y[..., 0], y[..., 1])
        return j2 * dydv[..., 1], -j1 * dydv[..., 0]

    def unit_normals(self) -> FloatArray:
        """Physical outward unit normals (dy2, -dy1) / |dy|."""
        d = self.mesh.dydv
        return np.stack([d[:, 1], -d[:, 0]], axis=1) / self.speed[:, None]

    def _self_rule(self, a: float, b: float, v_star: float) -> tuple[FloatArray, FloatArray]:
        """Signed offsets from the node v* in [a, b] and their weights."""
        nodes, weights = gauss_legendre(self.near_order)
        tau = (np.asarray(nodes) + 1.0) / 2.0
        wt = np.asarray(weights) / 2.0
        offsets, out = [], []
        for length, sign in ((v_star - a, -1.0), (b - v_star, 1.0)):
            inner = length * _SELF_INNER
            offsets.append(sign * inner * tau**self.power)
            out.append(wt * self.power * inner * tau ** (self.power - 1))
            lo = inner
            while lo < length:
                hi = min(2.0 * lo, length)
                offsets.append(sign * (lo + (hi - lo) * tau))
                out.append(wt * (hi - lo))
                lo = hi
        return np.concatenate(offsets), np.concatenate(out)

    def _bisected_rule(self, pm: PieceMesh, a: float, b: float, target: FloatArray) -> tuple[FloatArray, FloatArray]:
        """Gauss nodes on sub-panels of [a, b], each well separated from the target."""
        nodes, weights = gauss_legendre(self.near_order)
        x, w = np.asarray(nodes), np.asarray(weights)
        pending = [(a, b, 0)]
        v_parts, w_parts = [], []
        while pending:
            lo, hi, depth = pending.pop()
            mid = (lo + hi) / 2.0
            ends = pm.geometry(np.array([lo, mid, hi]))[0]
            size = np.linalg.norm(ends[1] - ends[0]) + np.linalg.norm(ends[2] - ends[1])
            if depth >= _MAX_BISECTIONS or np.linalg.norm(target - ends[1]) > _NEAR_FACTOR * size:
                v_parts.append(mid + (hi - lo) / 2.0 * x)
                w_parts.append((hi - lo) / 2.0 * w)
            else:
                pending += [(lo, mid, depth + 1), (mid, hi, depth + 1)]
        return np.concatenate(v_parts), np.concatenate(w_parts)

    def _self_displacements(
        self, pm: PieceMesh, xt1: complex, xt2: complex, v_star: float, offsets: FloatArray,
        pts: FloatArray, width: float,
    ) -> tuple[ComplexArray, ComplexArray]:
        """
        x~ - y~ from a node to the points of its own panel.

        Short offsets integrate the stretched tangent J dy/dv from v*; the
        difference of absolute coordinates loses every digit there.
        """
        yt1, yt2 = self.stretch.stretch(pts[:, 0], pts[:, 1])
        d1 = np.asarray(xt1 - yt1, dtype=np.complex128)
        d2 = np.asarray(xt2 - yt2, dtype=np.complex128)
        short = np.abs(offsets) < _DISPLACEMENT_CUT * width
        if short.any():
            nodes, weights = gauss_legendre(_DISPLACEMENT_ORDER)
            step = offsets[short]
            s = v_star + step[:, None] * (np.asarray(nodes)[None, :] + 1.0) / 2.0
            y, dyds = pm.geometry(s.ravel())
            j1, j2 = self.stretch.jacobian(y[:, 0], y[:, 1])
            w = np.asarray(weights)[None, :] / 2.0 * step[:, None]
            d1[short] = -np.sum(w * (j1 * dyds[:, 0]).reshape(s.shape), axis=1)
            d2[short] = -np.sum(w * (j2 * dyds[:, 1]).reshape(s.shape), axis=1)
        return d1, d2

    def matrices(self, k: float, targets: _Targets, gradient: bool = False,
                 own_offset: int | None = None) -> list[ComplexArray]:
        """
        Discrete layer operators from this group's densities to the targets.

        Args:
            k: Wavenumber of the kernel.
            targets: Evaluation points.
            gradient: Return target gradients (S1, S2, D1, D2) instead of (S, D).
            own_offset: Row of the first target that is this group's own first node.

        Returns:
            Matrices of shape (n_targets, n_nodes); S acts on q, D on u.
        """
        xt1 = targets.xt1[:, None]
        xt2 = targets.xt2[:, None]
        # coincident pairs are always near; shift them off the singularity
        coincide = (xt1 == self.yt1[None, :]) & (xt2 == self.yt2[None, :])
        yt1 = np.where(coincide, self.yt1[None, :] + 1.0, self.yt1[None, :])
        with np.errstate(all="ignore"):
            values = _kernels(
                k, xt1, xt2, yt1, self.yt2[None, :],
                self.n1[None, :], self.n2[None, :], gradient,
            )
        mats = [
            np.asarray(v) * self.mesh.weights * (self.speed if weighted else 1.0)
            for v, weighted in values
        ]
        if self.size == 0 or targets.points.shape[0] == 0:
            return mats

        diff = targets.points[:, None, :] - self.mesh.panel_centers[None, :, :]
        near = np.hypot(diff[..., 0], diff[..., 1]) < _NEAR_FACTOR * self.mesh.panel_sizes[None, :]
        for i, p in zip(*np.nonzero(near)):
            piece_index, panel, sl = self.mesh.panels[p]
            pm = self.mesh.pieces[piece_index]
            a, b = float(pm.edges[panel]), float(pm.edges[panel + 1])
            node = i - own_offset if own_offset is not None else -1
            if sl.start <= node < sl.stop:
                v_star = float(self.node_v[node])
                offsets, sub_w = self._self_rule(a, b, v_star)
                sub_v = v_star + offsets
                pts, dydv = pm.geometry(sub_v)
                d1, d2 = self._self_displacements(
                    pm, targets.xt1[i], targets.xt2[i], v_star, offsets, pts, b - a
                )
            else:
                sub_v, sub_w = self._bisected_rule(pm, a, b, targets.points[i])
                pts, dydv = pm.geometry(sub_v)
                yt1, yt2 = self.stretch.stretch(pts[:, 0], pts[:, 1])
                d1 = np.asarray(targets.xt1[i] - yt1, dtype=np.complex128)
                d2 = np.asarray(targets.xt2[i] - yt2, dtype=np.complex128)
                # a target lying on the curve can meet a quadrature node
                hit = (d1 == 0) & (d2 == 0)
                if hit.any():
                    sub_w = np.where(hit, 0.0, sub_w)
                    d1 = np.where(hit, 1.0, d1)
            n1, n2 = self._normals(pts, dydv)
            vals = _kernels(k, d1, d2, 0.0, 0.0, n1, n2, gradient)
            interp = _interpolator(pm.order)((2.0 * sub_v - a - b) / (b - a))
            for m, (v, weighted) in zip(mats, vals):
                row = (sub_w * np.asarray(v)) @ interp
                m[i, sl] = row * self.speed[sl] if weighted else row
        return mats

    def resolution_check(self, k: float, label: str) -> None:
        """Warn when a panel spans more than two wavelengths."""
        if self.size and np.max(self.mesh.panel_sizes) * k / (2.0 * np.pi) > 2.0:
            logger.warning(
                f"Mesh on {label} is underresolved: largest panel spans "
                f"{np.max(self.mesh.panel_sizes) * k / (2.0 * np.pi):.2f} wavelengths"
            )


# ----------------------------------------------------------------------------
# Plane waves
# ----------------------------------------------------------------------------

def plane_waves(k: float, theta: float, h: float, x1, x2) -> dict[str, ComplexArray]:
    """
    Incident and reflected plane waves at (possibly complex) coordinates.

    u_inc = exp(ik(cos t x1 - sin t x2)); u_ref- = -exp(ik(cos t x1 + sin t x2))
    reflects off x2 = 0 and u_ref+ = exp(2ikh sin t) u_ref- off x2 = -h.
    """
    c, s = np.cos(theta), np.sin(theta)
    inc = np.exp(1j * k * (c * np.asarray(x1) - s * np.asarray(x2)))
    up = np.exp(1j * k * (c * np.asarray(x1) + s * np.asarray(x2)))
    return {
        "inc": inc,
        "minus": -up,
        "plus": -np.exp(2j * k * h * s) * up,
        "up": up,
    }


# ----------------------------------------------------------------------------
# Systems
# ----------------------------------------------------------------------------

@dataclass
class BieSystem:
    """Assembled (and, after ``solve``, solved) plane-wave scattering system."""

    geometry: SurfaceGeometry
    profile: PmlProfile
    theta: float
    k: float
    nodes: int
    anchor: FloatArray
    stretch: PmlStretch
    layers: dict[str, BoundaryLayer]
    inclusion_side: str | None
    layout: dict[str, slice]
    matrix: ComplexArray
    rhs: ComplexArray
    data: dict[str, ComplexArray] = field(default_factory=dict)
    solution: ComplexArray | None = None
    residual: float | None = None
    condition: float | None = None

    @property
    def unknowns(self) -> int:
        return self.matrix.shape[0]

    @property
    def normal(self) -> FloatArray:
        """Unit normal of the pseudointerface pointing to the right side."""
        return np.array([np.sin(self.theta), -np.cos(self.theta)])

    def part(self, name: str) -> ComplexArray:
        if self.solution is None:
            raise RegionError("system has not been solved")
        return self.solution[self.layout[name]]


def _interface_end(anchor: FloatArray, theta: float, profile: PmlProfile) -> FloatArray:
    """Point where the ray from the anchor leaves the truncation box."""
    c, s = np.cos(theta), np.sin(theta)
    a1, a2 = profile.outer(1), profile.outer(2)
    steps = [(a2 - anchor[1]) / s]
    if c > 1e-14:
        steps.append((a1 - anchor[0]) / c)
    elif c < -1e-14:
        steps.append((-a1 - anchor[0]) / c)
    return anchor + min(steps) * np.array([c, s])


def _side_of(system_anchor: FloatArray, normal: FloatArray, points: FloatArray) -> NDArray[np.bool_]:
    """True for points right of the pseudointerface line."""
    return (points - system_anchor) @ normal > 0


def assemble(
    geometry: SurfaceGeometry,
    profile: PmlProfile,
    theta: float,
    k: float,
    nodes: int = 200,
    grading_exponent: int = 3,
) -> BieSystem:
    """
    Assemble the PML-BIE system for incidence angle ``theta``.

    Unknowns, in order: q on the left surface, q on the right surface, u and q
    of the left side on the pseudointerface, then (phi, psi) = (u_tot, d_n u_tot)
    on the inclusion boundary when present.

    Args:
        geometry: Scattering surface (and inclusion).
        profile: PML box and absorbing profile.
        theta: Incident angle in (0, pi).
        k: Wavenumber.
        nodes: Nodes per smooth piece.
        grading_exponent: Algebraic grading toward piece ends.

    Raises:
        GeometryError: For inadmissible angles, surfaces or inclusion placement.
    """
    if not 0.0 < theta < np.pi:
        raise GeometryError(f"incident angle must lie in (0, pi), got {theta}")
    profile.validate()
    stretch = PmlStretch(profile)
    half1, half2 = profile.half_width(1), profile.half_width(2)
    minus_pieces, plus_pieces, anchor = geometry.split_at_anchor(theta, profile.outer(1))
    end = _interface_end(anchor, theta, profile)
    interface = SegmentPiece(tuple(float(c) for c in anchor), tuple(float(c) for c in end))
    normal = np.array([np.sin(theta), -np.cos(theta)])

    layers = {
        "gamma_minus": BoundaryLayer(CurveMesh.build(minus_pieces, nodes, grading_exponent), stretch),
        "gamma_plus": BoundaryLayer(CurveMesh.build(plus_pieces, nodes, grading_exponent), stretch),
        "interface": BoundaryLayer(CurveMesh.build([interface], nodes, grading_exponent), stretch),
    }
    inclusion_side = None
    if geometry.inclusion is not None:
        ring = geometry.inclusion.boundary.point(np.linspace(0.0, 1.0, 257))
        if np.any(np.abs(ring[:, 0]) >= half1) or np.any(np.abs(ring[:, 1]) >= half2):
            raise GeometryError("inclusion must lie inside the physical box")
        sides = _side_of(anchor, normal, ring)
        if sides.all():
            inclusion_side = "plus"
        elif not sides.any():
            inclusion_side = "minus"
        else:
            raise GeometryError("inclusion crosses the pseudointerface")
        layers["inclusion"] = BoundaryLayer(
            CurveMesh.build([geometry.inclusion.boundary], nodes, 0), stretch
        )
    for name, layer in layers.items():
        layer.resolution_check(k, name)

    sizes = {
        "q_minus": layers["gamma_minus"].size,
        "q_plus": layers["gamma_plus"].size,
        "u_interface": layers["interface"].size,
        "q_interface": layers["interface"].size,
    }
    if inclusion_side is not None:
        sizes["phi"] = layers["inclusion"].size
        sizes["psi"] = layers["inclusion"].size
    layout, offset = {}, 0
    for name, size in sizes.items():
        layout[name] = slice(offset, offset + size)
        offset += size
    n = offset
    matrix = np.zeros((n, n), dtype=np.complex128)
    rhs = np.zeros(n, dtype=np.complex128)

    h = geometry.h
    c, s = np.cos(theta), np.sin(theta)
    jump_factor = np.exp(2j * k * h * s) - 1.0
    lay_i = layers["interface"]
    waves_i = plane_waves(k, theta, h, lay_i.yt1, lay_i.yt2)
    data = {
        "jump_u": jump_factor * waves_i["up"],
        "jump_q": jump_factor * 1j * k * (c * lay_i.n1 + s * lay_i.n2) * waves_i["up"] / lay_i.speed,
    }
    for side in ("minus", "plus"):
        lay = layers[f"gamma_{side}"]
        waves = plane_waves(k, theta, h, lay.yt1, lay.yt2)
        data[f"f_{side}"] = -(waves["inc"] + waves[side])
    if inclusion_side is not None:
        lay_c = layers["inclusion"]
        pts = lay_c.mesh.points
        waves = plane_waves(k, theta, h, pts[:, 0], pts[:, 1])
        unit = lay_c.unit_normals()
        data["inc_u"] = waves["inc"] + waves[inclusion_side]
        data["inc_dn"] = 1j * k * (
            (c * unit[:, 0] - s * unit[:, 1]) * waves["inc"]
            + (c * unit[:, 0] + s * unit[:, 1]) * waves[inclusion_side]
        )

    row = 0
    for side, orientation in (("minus", 1.0), ("plus", -1.0)):
        surface = layers[f"gamma_{side}"]
        groups = [("surface", surface), ("interface", lay_i)]
        if inclusion_side == side:
            groups.append(("inclusion", layers["inclusion"]))
        parts = [_Targets.of(layer.mesh.points, stretch) for _, layer in groups]
        targets = _Targets.stack(parts)
        offsets = np.cumsum([0] + [layer.size for _, layer in groups])
        span = slice(row, row + int(offsets[-1]))
        block = np.zeros((int(offsets[-1]), n), dtype=np.complex128)
        known = np.zeros(int(offsets[-1]), dtype=np.complex128)
        local = {name: slice(int(offsets[j]), int(offsets[j + 1])) for j, (name, _) in enumerate(groups)}
        jq = data["jump_q"] if side == "plus" else np.zeros(lay_i.size, dtype=np.complex128)
        ju = data["jump_u"] if side == "plus" else np.zeros(lay_i.size, dtype=np.complex128)

        S, D = surface.matrices(k, targets, own_offset=0)
        block[:, layout[f"q_{side}"]] += S
        known += D @ data[f"f_{side}"]
        known[local["surface"]] += 0.5 * data[f"f_{side}"]

        S, D = lay_i.matrices(k, targets, own_offset=local["interface"].start)
        block[:, layout["q_interface"]] += orientation * S
        block[:, layout["u_interface"]] -= orientation * D
        known += orientation * (D @ ju - S @ jq)
        diag = np.arange(lay_i.size)
        block[local["interface"].start + diag, layout["u_interface"].start + diag] -= 0.5
        known[local["interface"]] += 0.5 * ju

        if inclusion_side == side:
            lay_c = layers["inclusion"]
            S, D = lay_c.matrices(k, targets, own_offset=local["inclusion"].start)
            block[:, layout["psi"]] -= S
            block[:, layout["phi"]] += D
            known += -(S @ data["inc_dn"]) + D @ data["inc_u"]
            diag = np.arange(lay_c.size)
            block[local["inclusion"].start + diag, layout["phi"].start + diag] -= 0.5
            known[local["inclusion"]] -= 0.5 * data["inc_u"]

        matrix[span] = block
        rhs[span] = known
        row = span.stop

    if inclusion_side is not None:
        lay_c = layers["inclusion"]
        k_obj = geometry.inclusion.k_obj
        S, D = lay_c.matrices(k_obj, _Targets.of(lay_c.mesh.points, stretch), own_offset=0)
        span = slice(row, row + lay_c.size)
        matrix[span, layout["psi"]] = S
        matrix[span, layout["phi"]] = -D - 0.5 * np.eye(lay_c.size)
        row = span.stop

    logger.info(
        f"Assembled {geometry.name} at theta={theta:.6g}, k={k:.6g}: {n} unknowns "
        f"(D1={profile.D1}, D2={profile.D2}, S={profile.S})"
    )
    return BieSystem(
        geometry, profile, float(theta), float(k), nodes, anchor, stretch, layers,
        inclusion_side, layout, matrix, rhs, data,
    )


def solve(system: BieSystem) -> BieSystem:
    """
    Dense LU solve with a 1-norm condition estimate.

    Raises:
        SingularSystemError: If the reciprocal condition estimate is below 1e-14.
    """
    lu, piv = lu_factor(system.matrix)
    anorm = float(np.linalg.norm(system.matrix, 1))
    rcond, _ = zgecon(lu, anorm, norm="1")
    if not rcond > _MIN_RCOND:
        raise SingularSystemError(float("inf") if rcond == 0 else 1.0 / float(rcond))
    x = lu_solve((lu, piv), system.rhs)
    scale = np.linalg.norm(system.rhs)
    system.solution = x
    system.residual = float(np.linalg.norm(system.matrix @ x - system.rhs) / (scale if scale else 1.0))
    system.condition = 1.0 / float(rcond)
    logger.debug(f"Solved {system.unknowns} unknowns: residual {system.residual:.3e}, "
                 f"condition {system.condition:.3e}")
    return system


# ----------------------------------------------------------------------------
# Field evaluation
# ----------------------------------------------------------------------------

def _check_points(system: BieSystem, points: FloatArray) -> None:
    half1, half2 = system.profile.half_width(1), system.profile.half_width(2)
    if np.any(np.abs(points[:, 0]) > half1) or np.any(np.abs(points[:, 1]) > half2):
        raise RegionError("field points must lie in the physical box")
    close = 0
    for layer in system.layers.values():
        if layer.size:
            diff = points[:, None, :] - layer.mesh.panel_centers[None, :, :]
            dist = np.hypot(diff[..., 0], diff[..., 1])
            close += int(np.sum(np.any(dist < 0.5 * layer.mesh.panel_sizes[None, :], axis=1)))
    if close:
        logger.warning(f"{close} evaluation point(s) lie within one panel of the boundary; "
                       "accuracy is degraded")


def _side_field(system: BieSystem, side: str, targets: _Targets, gradient: bool) -> list[ComplexArray]:
    """u_d (or its gradient components) from the Green identity of one side."""
    k = system.k
    lay_s = system.layers[f"gamma_{side}"]
    lay_i = system.layers["interface"]
    orientation = 1.0 if side == "minus" else -1.0
    q_i = system.part("q_interface") + (system.data["jump_q"] if side == "plus" else 0.0)
    u_i = system.part("u_interface") + (system.data["jump_u"] if side == "plus" else 0.0)

    mats = lay_s.matrices(k, targets, gradient)
    half = len(mats) // 2
    out = [mats[j] @ system.part(f"q_{side}") - mats[j + half] @ system.data[f"f_{side}"]
           for j in range(half)]
    mats = lay_i.matrices(k, targets, gradient)
    out = [o + orientation * (mats[j] @ q_i - mats[j + half] @ u_i) for j, o in enumerate(out)]
    if system.inclusion_side == side:
        lay_c = system.layers["inclusion"]
        mats = lay_c.matrices(k, targets, gradient)
        dn = system.part("psi") - system.data["inc_dn"]
        u = system.part("phi") - system.data["inc_u"]
        out = [o - mats[j] @ dn + mats[j + half] @ u for j, o in enumerate(out)]
    return out


def _interior_field(system: BieSystem, targets: _Targets, gradient: bool) -> list[ComplexArray]:
    lay_c = system.layers["inclusion"]
    mats = lay_c.matrices(system.geometry.inclusion.k_obj, targets, gradient)
    half = len(mats) // 2
    return [mats[j] @ system.part("psi") - mats[j + half] @ system.part("phi") for j in range(half)]


def _plane_terms(system: BieSystem, points: FloatArray, side: str, gradient: bool) -> list[ComplexArray]:
    """u_inc + u_ref of ``side`` and, with ``gradient``, its two derivatives."""
    waves = plane_waves(system.k, system.theta, system.geometry.h, points[:, 0], points[:, 1])
    inc, ref = waves["inc"], waves[side]
    terms = [inc + ref]
    if gradient:
        c, s = np.cos(system.theta), np.sin(system.theta)
        terms += [1j * system.k * c * (inc + ref), 1j * system.k * s * (ref - inc)]
    return terms


def _evaluate(system: BieSystem, points: FloatArray, what: str, gradient: bool) -> list[ComplexArray]:
    if what not in ("u_d", "u_tot"):
        raise ValueError(f"Unknown field '{what}'")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    _check_points(system, points)
    count = 3 if gradient else 1
    out = [np.zeros(points.shape[0], dtype=np.complex128) for _ in range(count)]
    right = _side_of(system.anchor, system.normal, points)
    inside = np.zeros(points.shape[0], dtype=bool)
    if system.geometry.inclusion is not None:
        inside = np.asarray(system.geometry.inclusion.boundary.contains(points), dtype=bool)

    for side, mask in (("minus", ~right & ~inside), ("plus", right & ~inside), (None, inside)):
        if not mask.any():
            continue
        sub = points[mask]
        targets = _Targets.of(sub, system.stretch)
        if side is None:
            # interior representation gives u_tot
            values = _interior_field(system, targets, False)
            if gradient:
                values += _interior_field(system, targets, True)[:2]
            if what == "u_d":
                plane = _plane_terms(system, sub, system.inclusion_side, gradient)
                values = [v - p for v, p in zip(values, plane)]
        else:
            values = _side_field(system, side, targets, False)
            if gradient:
                values += _side_field(system, side, targets, True)[:2]
            if what == "u_tot":
                plane = _plane_terms(system, sub, side, gradient)
                values = [v + p for v, p in zip(values, plane)]
        for j in range(count):
            out[j][mask] = values[j]
    return out


def evaluate_field(system: BieSystem, points, what: str = "u_tot") -> ComplexArray:
    """
    u_d or u_tot at physical points of the truncated domain.

    u_d comes from the Green identity of the side containing the point;
    u_tot = u_d + u_inc + u_ref of that side, and inside an inclusion the
    interior representation at k_obj.

    Raises:
        RegionError: For points outside the physical box or an unsolved system.
    """
    return _evaluate(system, points, what, gradient=False)[0]


def evaluate_gradient(system: BieSystem, points, what: str = "u_tot") -> tuple[ComplexArray, ComplexArray, ComplexArray]:
    """Field value and gradient (value, d1, d2) at physical points."""
    value, d1, d2 = _evaluate(system, points, what, gradient=True)
    return value, d1, d2


def interface_arclengths(system: BieSystem) -> FloatArray:
    """Arc lengths from the anchor of the interface nodes in the physical box."""
    pts = system.layers["interface"].mesh.points
    half1, half2 = system.profile.half_width(1), system.profile.half_width(2)
    inside = (np.abs(pts[:, 0]) <= half1) & (np.abs(pts[:, 1]) <= half2)
    return np.linalg.norm(pts[inside] - system.anchor, axis=1)


def trace_on_interface(system: BieSystem, arclengths) -> ComplexArray:
    """
    u_tot on the pseudointerface at given arc lengths from the anchor.

    The left-side trace is interpolated on its panel in the graded variable.
    """
    layer = system.layers["interface"]
    pm = layer.mesh.pieces[0]
    seg = pm.curve
    length = float(np.linalg.norm(seg.end - seg.start))
    s = np.asarray(arclengths, dtype=float)
    if np.any(s < 0) or np.any(s > length):
        raise RegionError(f"arc lengths must lie in [0, {length}]")
    v = inverse_grading(s / length, pm.exponent)
    panel = np.clip(np.searchsorted(pm.edges, v, side="right") - 1, 0, pm.n_panels - 1)
    u_left = system.part("u_interface")
    out = np.empty(s.size, dtype=np.complex128)
    for j, (vj, p) in enumerate(zip(v, panel)):
        a, b = pm.edges[p], pm.edges[p + 1]
        weights = _interpolator(pm.order)(np.array([(2.0 * vj - a - b) / (b - a)]))[0]
        out[j] = weights @ u_left[p * pm.order:(p + 1) * pm.order]
    points = seg.point(s / length)
    waves = plane_waves(system.k, system.theta, system.geometry.h, points[..., 0], points[..., 1])
    return out + waves["inc"] + waves["minus"]


def energy_flux(system: BieSystem, y: float, x_range: tuple[float, float], n: int = 64) -> float:
    """Vertical power flux Im int conj(u_d) d2 u_d dx1 through a horizontal segment."""
    nodes, weights = gauss_legendre(n)
    a, b = x_range
    x = (a + b) / 2.0 + (b - a) / 2.0 * np.asarray(nodes)
    points = np.stack([x, np.full_like(x, y)], axis=1)
    value, _, d2 = evaluate_gradient(system, points, "u_d")
    return float(np.imag(np.sum(np.asarray(weights) * (b - a) / 2.0 * np.conj(value) * d2)))


def far_field_from_solution(
    system: BieSystem,
    ctx: FactorizationContext,
    radius: float,
    angles,
    background: BieSystem | None = None,
    n_arc: int = 64,
) -> ComplexArray:
    """
    Far-field pattern from the field on the arc of radius R inside the domain.

    u_inf(alpha) = int_{Gamma_R} [u d_nu F(alpha; y) - d_nu u F(alpha; y)] ds(y)
    with F the far-field pattern of G for a source at y. Without a background
    system u = u_d, which is not radiating near the reflection angle; with one
    u = u_tot - u_tot of the background (same box and incidence).

    Raises:
        RegionError: For an arc outside the physical box, a mismatched context
            or (without background) angles within 5 degrees of the reflection angle.
    """
    if abs(ctx.k - system.k) > 1e-12 or abs(ctx.h - system.geometry.h) > 1e-12:
        raise RegionError("factorization context does not match the solved system")
    if radius >= min(system.profile.half_width(1), system.profile.half_width(2)):
        raise RegionError(f"arc radius {radius} leaves the physical box")
    if radius <= system.geometry.h:
        raise RegionError(f"arc radius {radius} must exceed the step height")
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if background is None and np.any(np.abs(angles - system.theta) < _REFLECTION_EXCLUSION):
        raise RegionError("far field of u_d is not uniform near the reflection angle")

    nodes, weights = gauss_legendre(n_arc)
    nodes, weights = np.asarray(nodes), np.asarray(weights)
    low = -np.arcsin(system.geometry.h / radius)
    phi = np.concatenate([np.pi / 2 * (nodes + 1.0), low / 2 * (1.0 - nodes)])
    dphi = np.concatenate([np.pi / 2 * weights, -low / 2 * weights])
    points = radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    what = "u_tot" if background is not None else "u_d"
    value, d1, d2 = evaluate_gradient(system, points, what)
    if background is not None:
        bg = evaluate_gradient(background, points, "u_tot")
        value, d1, d2 = value - bg[0], d1 - bg[1], d2 - bg[2]
    dn = np.cos(phi) * d1 + np.sin(phi) * d2
    ds = radius * dphi

    h = system.geometry.h
    out = np.zeros(angles.size, dtype=np.complex128)
    for j, alpha in enumerate(angles):
        total = 0j
        for p, u, du, w in zip(points, value, dn, ds):
            src = SourceConfig(float(p[0]), float(p[1]),
                               SourceRegion.UPPER_HALF_PLANE if p[1] > 0 else SourceRegion.WAVEGUIDE)
            src.validate(h)
            F = far_field_G(ctx, src, float(alpha))
            g1, g2 = far_field_source_gradient(ctx, src, float(alpha))
            dF = (g1 * p[0] + g2 * p[1]) / radius
            total += w * (u * dF - du * F)
        out[j] = total
    return out


# ----------------------------------------------------------------------------
# Point source in the cracked half-plane
# ----------------------------------------------------------------------------

@dataclass
class CrackSystem:
    """Single-layer solve for the scattered field of a point source above the crack."""

    k: float
    h: float
    src: SourceConfig
    stretch: LinearStretch
    layer: BoundaryLayer
    density: ComplexArray
    residual: float
    condition: float


def assemble_crack(
    k: float,
    h: float,
    src: SourceConfig,
    stretch: LinearStretch,
    thickness: float = 2.0,
    nodes: int = 200,
    grading_exponent: int = 4,
) -> CrackSystem:
    """
    Solve for w = G - Phi(.; x*) on the truncated crack and floor.

    w is a stretched single-layer potential with w = -Phi(x~; x*) on the
    crack (x2 = 0, x1 < 0) and on the floor x2 = -h; both lines end
    ``thickness`` beyond the start of the stretch. Pieces are split where the
    stretch starts so each is smooth.

    Raises:
        RegionError: For sources not above the crack.
        SingularSystemError: For an ill-conditioned system.
    """
    if src.region is not SourceRegion.UPPER_HALF_PLANE:
        raise RegionError("the crack solve takes sources above the crack")
    a = stretch.start1
    end = a + thickness
    pieces = [
        SegmentPiece((-end, 0.0), (-a, 0.0)),
        SegmentPiece((-a, 0.0), (0.0, 0.0)),
        SegmentPiece((-end, -h), (-a, -h)),
        SegmentPiece((-a, -h), (a, -h)),
        SegmentPiece((a, -h), (end, -h)),
    ]
    layer = BoundaryLayer(CurveMesh.build(pieces, nodes, grading_exponent), stretch)
    layer.resolution_check(k, "crack")
    targets = _Targets.of(layer.mesh.points, stretch)
    S, _ = layer.matrices(k, targets, own_offset=0)
    rhs = -single_layer_kernel(k, targets.xt1, targets.xt2, src.x1, src.x2)
    lu, piv = lu_factor(S)
    rcond, _ = zgecon(lu, float(np.linalg.norm(S, 1)), norm="1")
    if not rcond > _MIN_RCOND:
        raise SingularSystemError(float("inf") if rcond == 0 else 1.0 / float(rcond))
    density = lu_solve((lu, piv), rhs)
    residual = float(np.linalg.norm(S @ density - rhs) / np.linalg.norm(rhs))
    logger.debug(f"Crack solve: {layer.size} unknowns, residual {residual:.3e}")
    return CrackSystem(k, h, src, stretch, layer, density, residual, 1.0 / float(rcond))


def crack_scattered_field(system: CrackSystem, points) -> ComplexArray:
    """G1 = G - G_in above the crack: w(x~) + Phi(x~; x*_image)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(points[:, 1] < 0):
        raise RegionError("G1 is evaluated in the closed upper half-plane")
    targets = _Targets.of(points, system.stretch)
    S, _ = system.layer.matrices(system.k, targets)
    image = single_layer_kernel(system.k, targets.xt1, targets.xt2, system.src.x1, -system.src.x2)
    return S @ system.density + image
