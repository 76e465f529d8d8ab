"""
Scattering surfaces, penetrable inclusions and their Nyström meshes.

A surface is an ordered chain of smooth pieces (line segments and circular
arcs) running left to right from the plane x2 = 0 down to the floor x2 = -h;
outside the listed pieces it coincides with the step surface. The geometry
file grammar, one directive per line (``#`` starts a comment):

    step_height h
    segment x0 y0 x1 y1
    arc cx cy r a0 a1                  (angles in radians, a0 -> a1)
    inclusion k_obj drop cx cy R eps   (boundary c + R (1 + eps sin t)(cos t, sin t))
    inclusion k_obj ellipse cx cy a b
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .contour_quad import gauss_legendre
from .errors import GeometryError


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

# Matching tolerance for piece endpoints and crossings
_TOL = 1e-10
EXAMPLES = ("step", "rounded_step", "step_with_inclusion")


# ----------------------------------------------------------------------------
# Curves
# ----------------------------------------------------------------------------

class Curve(ABC):
    """Smooth parametrised curve t in [0, 1] -> R^2."""

    @abstractmethod
    def point(self, t: FloatArray) -> FloatArray:
        """Points, shape (..., 2)."""

    @abstractmethod
    def derivative(self, t: FloatArray) -> FloatArray:
        """dy/dt, shape (..., 2)."""

    @property
    def start(self) -> FloatArray:
        return self.point(np.array(0.0))

    @property
    def end(self) -> FloatArray:
        return self.point(np.array(1.0))

    def length(self) -> float:
        nodes, weights = gauss_legendre(32)
        speed = np.linalg.norm(self.derivative((nodes + 1.0) / 2.0), axis=-1)
        return float(np.sum(weights * speed) / 2.0)


class CurvePiece(Curve):
    """Open piece of the scattering surface."""

    @abstractmethod
    def split(self, t: float) -> tuple["CurvePiece", "CurvePiece"]:
        """The parts [0, t] and [t, 1]."""

    @abstractmethod
    def line_crossings(self, direction: FloatArray) -> list[float]:
        """Parameters where the piece meets the line through the origin along ``direction``."""


@dataclass(frozen=True)
class SegmentPiece(CurvePiece):
    a: tuple[float, float]
    b: tuple[float, float]

    def point(self, t: FloatArray) -> FloatArray:
        t = np.asarray(t, dtype=float)[..., None]
        return np.asarray(self.a) + t * (np.asarray(self.b) - np.asarray(self.a))

    def derivative(self, t: FloatArray) -> FloatArray:
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.b) - np.asarray(self.a), t.shape + (2,)).copy()

    def split(self, t: float) -> tuple["SegmentPiece", "SegmentPiece"]:
        mid = tuple(float(c) for c in self.point(np.array(t)))
        return SegmentPiece(self.a, mid), SegmentPiece(mid, self.b)

    def line_crossings(self, direction: FloatArray) -> list[float]:
        a = np.asarray(self.a)
        d = np.asarray(self.b) - a
        denom = direction[0] * d[1] - direction[1] * d[0]
        if abs(denom) < _TOL:
            return []
        t = -(direction[0] * a[1] - direction[1] * a[0]) / denom
        return [float(np.clip(t, 0.0, 1.0))] if -_TOL <= t <= 1.0 + _TOL else []


@dataclass(frozen=True)
class ArcPiece(CurvePiece):
    """Circular arc c + r (cos phi, sin phi), phi from a0 to a1."""

    center: tuple[float, float]
    radius: float
    a0: float
    a1: float

    def _angle(self, t: FloatArray) -> FloatArray:
        return self.a0 + (self.a1 - self.a0) * np.asarray(t, dtype=float)

    def point(self, t: FloatArray) -> FloatArray:
        phi = self._angle(t)
        return np.stack(
            [self.center[0] + self.radius * np.cos(phi), self.center[1] + self.radius * np.sin(phi)],
            axis=-1,
        )

    def derivative(self, t: FloatArray) -> FloatArray:
        phi = self._angle(t)
        scale = self.radius * (self.a1 - self.a0)
        return np.stack([-scale * np.sin(phi), scale * np.cos(phi)], axis=-1)

    def split(self, t: float) -> tuple["ArcPiece", "ArcPiece"]:
        mid = float(self._angle(t))
        return ArcPiece(self.center, self.radius, self.a0, mid), ArcPiece(self.center, self.radius, mid, self.a1)

    def line_crossings(self, direction: FloatArray) -> list[float]:
        cross = direction[0] * self.center[1] - direction[1] * self.center[0]
        ratio = -cross / self.radius
        if abs(ratio) > 1.0:
            return []
        psi = np.arctan2(direction[1], direction[0])
        base = np.arcsin(ratio)
        found = []
        for phi in (psi + base, psi + np.pi - base):
            for turn in range(-2, 3):
                t = (phi + 2.0 * np.pi * turn - self.a0) / (self.a1 - self.a0)
                if -_TOL <= t <= 1.0 + _TOL:
                    found.append(float(np.clip(t, 0.0, 1.0)))
        return sorted(set(found))


class ClosedCurve(Curve):
    """Closed star-shaped curve traversed counterclockwise."""

    @abstractmethod
    def contains(self, x: FloatArray) -> NDArray[np.bool_]:
        """Whether points lie strictly inside."""


@dataclass(frozen=True)
class DropCurve(ClosedCurve):
    """c + R (1 + eps sin s)(cos s, sin s), s = 2 pi t."""

    center: tuple[float, float]
    radius: float
    eps: float

    def _r(self, s: FloatArray) -> FloatArray:
        return self.radius * (1.0 + self.eps * np.sin(s))

    def point(self, t: FloatArray) -> FloatArray:
        s = 2.0 * np.pi * np.asarray(t, dtype=float)
        r = self._r(s)
        return np.stack([self.center[0] + r * np.cos(s), self.center[1] + r * np.sin(s)], axis=-1)

    def derivative(self, t: FloatArray) -> FloatArray:
        s = 2.0 * np.pi * np.asarray(t, dtype=float)
        r = self._r(s)
        dr = self.radius * self.eps * np.cos(s)
        return 2.0 * np.pi * np.stack(
            [dr * np.cos(s) - r * np.sin(s), dr * np.sin(s) + r * np.cos(s)], axis=-1
        )

    def contains(self, x: FloatArray) -> NDArray[np.bool_]:
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        return np.hypot(d[..., 0], d[..., 1]) < self._r(np.arctan2(d[..., 1], d[..., 0]))


@dataclass(frozen=True)
class EllipseCurve(ClosedCurve):
    center: tuple[float, float]
    a: float
    b: float

    def point(self, t: FloatArray) -> FloatArray:
        s = 2.0 * np.pi * np.asarray(t, dtype=float)
        return np.stack([self.center[0] + self.a * np.cos(s), self.center[1] + self.b * np.sin(s)], axis=-1)

    def derivative(self, t: FloatArray) -> FloatArray:
        s = 2.0 * np.pi * np.asarray(t, dtype=float)
        return 2.0 * np.pi * np.stack([-self.a * np.sin(s), self.b * np.cos(s)], axis=-1)

    def contains(self, x: FloatArray) -> NDArray[np.bool_]:
        d = np.asarray(x, dtype=float) - np.asarray(self.center)
        return (d[..., 0] / self.a) ** 2 + (d[..., 1] / self.b) ** 2 < 1.0


@dataclass(frozen=True)
class PenetrableInclusion:
    """Obstacle of wavenumber ``k_obj`` bounded by a closed curve."""

    boundary: ClosedCurve
    k_obj: float


@dataclass(frozen=True)
class Corner:
    point: tuple[float, float]
    interior_angle: float


# ----------------------------------------------------------------------------
# Surfaces
# ----------------------------------------------------------------------------

@dataclass
class SurfaceGeometry:
    """
    Scattering surface as a left-to-right chain of pieces.

    The chain must start on x2 = 0 and end on x2 = -h; the flat parts beyond
    it are added by ``truncated``.
    """

    pieces: list[CurvePiece]
    h: float
    inclusion: PenetrableInclusion | None = None
    name: str = "custom"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """
        Check connectivity, the end heights and x2-monotone admissibility.

        Raises:
            GeometryError: If any check fails.
        """
        if not self.h > 0:
            raise GeometryError(f"step height must be positive, got {self.h}")
        if not self.pieces:
            raise GeometryError("surface has no pieces")
        if abs(self.pieces[0].start[1]) > _TOL:
            raise GeometryError("surface must start on x2 = 0")
        if abs(self.pieces[-1].end[1] + self.h) > _TOL:
            raise GeometryError(f"surface must end on x2 = -h = {-self.h}")
        for left, right in zip(self.pieces, self.pieces[1:]):
            if np.linalg.norm(left.end - right.start) > _TOL:
                raise GeometryError(f"pieces do not connect at {tuple(left.end)}")
        samples = np.concatenate([p.point(np.linspace(0.0, 1.0, 65)) for p in self.pieces])
        if np.any(np.diff(samples[:, 0]) < -_TOL):
            raise GeometryError("surface is not a graph over x1 (x2-monotone admissibility fails)")
        if self.inclusion is not None:
            ring = self.inclusion.boundary.point(np.linspace(0.0, 1.0, 129))
            if np.min(ring[:, 1]) <= max(0.0, float(np.max(samples[:, 1]))):
                raise GeometryError("inclusion must lie above the surface")
            if not self.inclusion.k_obj > 0:
                raise GeometryError("inclusion wavenumber must be positive")

    @property
    def extent(self) -> tuple[float, float]:
        """Horizontal range covered by the listed pieces."""
        return float(self.pieces[0].start[0]), float(self.pieces[-1].end[0])

    def truncated(self, half_width: float) -> list[CurvePiece]:
        """Pieces completed by the flat parts out to x1 = -half_width and x1 = half_width."""
        left, right = self.extent
        if left < -half_width + _TOL or right > half_width - _TOL:
            raise GeometryError(f"surface perturbation exceeds the box half-width {half_width}")
        return (
            [SegmentPiece((-half_width, 0.0), (left, 0.0))]
            + list(self.pieces)
            + [SegmentPiece((right, -self.h), (half_width, -self.h))]
        )

    def corners(self, half_width: float | None = None) -> list[Corner]:
        """Junctions where the tangent turns, with the interior angle of the domain."""
        chain = self.pieces if half_width is None else self.truncated(half_width)
        found = []
        for left, right in zip(chain, chain[1:]):
            t_in = left.derivative(np.array(1.0))
            t_out = right.derivative(np.array(0.0))
            turn = np.arctan2(t_in[0] * t_out[1] - t_in[1] * t_out[0], t_in @ t_out)
            if abs(turn) > 1e-9:
                found.append(Corner(tuple(float(c) for c in left.end), float(np.pi - turn)))
        return found

    def anchor(self, theta: float, half_width: float) -> tuple[FloatArray, int, float]:
        """
        Topmost crossing of the surface with the line through the origin along
        the reflection direction (cos theta, sin theta).

        Returns:
            (point, piece index in the truncated chain, parameter on that piece).
        """
        chain = self.truncated(half_width)
        direction = np.array([np.cos(theta), np.sin(theta)])
        best: tuple[FloatArray, int, float] | None = None
        for index, piece in enumerate(chain):
            for t in piece.line_crossings(direction):
                p = piece.point(np.array(t))
                if best is None or p[1] > best[0][1] + _TOL:
                    best = (p, index, t)
        if best is None:
            raise GeometryError(f"reflection line at theta={theta} misses the surface")
        return best

    def split_at_anchor(
        self, theta: float, half_width: float
    ) -> tuple[list[CurvePiece], list[CurvePiece], FloatArray]:
        """Truncated chain split into the parts left and right of the pseudointerface."""
        point, index, t = self.anchor(theta, half_width)
        chain = self.truncated(half_width)
        if t >= 1.0 - _TOL:
            return chain[: index + 1], chain[index + 1:], point
        if t <= _TOL:
            return chain[:index], chain[index:], point
        before, after = chain[index].split(t)
        return chain[:index] + [before], [after] + chain[index + 1:], point


def step_geometry(h: float = 1.0) -> SurfaceGeometry:
    """The step itself: a vertical face from (0, 0) down to (0, -h)."""
    return SurfaceGeometry([SegmentPiece((0.0, 0.0), (0.0, -h))], h, name="step")


def rounded_step_geometry(h: float = 1.0) -> SurfaceGeometry:
    """Step with both corners rounded by quarter circles of radius 1/2."""
    if h < 1.0:
        raise GeometryError(f"rounded step needs h >= 1, got {h}")
    pieces: list[CurvePiece] = [ArcPiece((-0.5, -0.5), 0.5, np.pi / 2, 0.0)]
    if h > 1.0:
        pieces.append(SegmentPiece((0.0, -0.5), (0.0, -h + 0.5)))
    pieces.append(ArcPiece((0.5, -h + 0.5), 0.5, np.pi, 1.5 * np.pi))
    return SurfaceGeometry(pieces, h, name="rounded_step")


def inclusion_geometry(h: float, k: float) -> SurfaceGeometry:
    """Step plus a drop-shaped penetrable object of wavenumber 2k."""
    drop = DropCurve((-1.2, 1.2), 0.4, 0.3)
    return SurfaceGeometry(
        [SegmentPiece((0.0, 0.0), (0.0, -h))], h, PenetrableInclusion(drop, 2.0 * k),
        name="step_with_inclusion",
    )


def example_geometry(name: str, h: float, k: float) -> SurfaceGeometry:
    """Built-in geometries by name."""
    if name == "step":
        return step_geometry(h)
    if name == "rounded_step":
        return rounded_step_geometry(h)
    if name == "step_with_inclusion":
        return inclusion_geometry(h, k)
    raise GeometryError(f"unknown example '{name}' (expected one of {', '.join(EXAMPLES)})")


def _numbers(tokens: list[str], count: int, lineno: int) -> list[float]:
    if len(tokens) != count:
        raise GeometryError(f"expected {count} numbers, got {len(tokens)}", line=lineno)
    try:
        return [float(tok) for tok in tokens]
    except ValueError as e:
        raise GeometryError(f"invalid number: {e}", line=lineno) from e


def parse_geometry(text: str, name: str = "custom") -> SurfaceGeometry:
    """
    Parse the geometry grammar described in the module docstring.

    Raises:
        GeometryError: On grammar errors (with the line number) or invalid geometry.
    """
    h: float | None = None
    pieces: list[CurvePiece] = []
    inclusion: PenetrableInclusion | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        keyword, args = tokens[0], tokens[1:]
        if keyword == "step_height":
            (h,) = _numbers(args, 1, lineno)
        elif keyword == "segment":
            x0, y0, x1, y1 = _numbers(args, 4, lineno)
            pieces.append(SegmentPiece((x0, y0), (x1, y1)))
        elif keyword == "arc":
            cx, cy, r, a0, a1 = _numbers(args, 5, lineno)
            pieces.append(ArcPiece((cx, cy), r, a0, a1))
        elif keyword == "inclusion":
            if len(args) < 2:
                raise GeometryError("inclusion needs a wavenumber and a curve", line=lineno)
            (k_obj,) = _numbers(args[:1], 1, lineno)
            shape, values = args[1], args[2:]
            if shape == "drop":
                cx, cy, radius, eps = _numbers(values, 4, lineno)
                curve: ClosedCurve = DropCurve((cx, cy), radius, eps)
            elif shape == "ellipse":
                cx, cy, a, b = _numbers(values, 4, lineno)
                curve = EllipseCurve((cx, cy), a, b)
            else:
                raise GeometryError(f"unknown inclusion shape '{shape}'", line=lineno)
            inclusion = PenetrableInclusion(curve, k_obj)
        else:
            raise GeometryError(f"unknown directive '{keyword}'", line=lineno)
    if h is None:
        raise GeometryError("missing step_height")
    if not pieces:
        pieces = [SegmentPiece((0.0, 0.0), (0.0, -h))]
    return SurfaceGeometry(pieces, h, inclusion, name=name)


def load_geometry(path: str | Path) -> SurfaceGeometry:
    """Read a geometry file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise GeometryError(f"cannot read geometry file {path}: {e}") from e
    return parse_geometry(text, name=path.stem)


# ----------------------------------------------------------------------------
# Nyström meshes
# ----------------------------------------------------------------------------

def grading(v: FloatArray, p: int) -> FloatArray:
    """Two-sided algebraic grading w(v) = v^p / (v^p + (1 - v)^p); identity for p = 0."""
    if p == 0:
        return np.asarray(v, dtype=float)
    return v**p / (v**p + (1.0 - v) ** p)


def grading_derivative(v: FloatArray, p: int) -> FloatArray:
    if p == 0:
        return np.ones_like(np.asarray(v, dtype=float))
    return p * v ** (p - 1) * (1.0 - v) ** (p - 1) / (v**p + (1.0 - v) ** p) ** 2


def inverse_grading(t: FloatArray, p: int) -> FloatArray:
    t = np.asarray(t, dtype=float)
    if p == 0:
        return t
    with np.errstate(divide="ignore"):
        r = np.where(t >= 1.0, np.inf, (t / np.maximum(1.0 - t, 1e-300)) ** (1.0 / p))
    return np.where(np.isinf(r), 1.0, r / (1.0 + r))


@dataclass
class PieceMesh:
    """Composite Gauss–Legendre panels on one curve, in the graded variable v."""

    curve: Curve
    n_panels: int
    order: int
    exponent: int
    edges: FloatArray = field(init=False)
    v: FloatArray = field(init=False)
    weights: FloatArray = field(init=False)
    points: FloatArray = field(init=False)
    dydv: FloatArray = field(init=False)

    def __post_init__(self) -> None:
        nodes, weights = gauss_legendre(self.order)
        self.edges = np.linspace(0.0, 1.0, self.n_panels + 1)
        half = np.diff(self.edges) / 2.0
        mid = (self.edges[:-1] + self.edges[1:]) / 2.0
        self.v = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        self.weights = (half[:, None] * weights[None, :]).ravel()
        self.points, self.dydv = self.geometry(self.v)

    def geometry(self, v: FloatArray) -> tuple[FloatArray, FloatArray]:
        """Points and dy/dv at graded-variable values."""
        t = grading(v, self.exponent)
        return self.curve.point(t), self.curve.derivative(t) * grading_derivative(v, self.exponent)[..., None]

    @property
    def size(self) -> int:
        return self.v.size

    def panel_lengths(self) -> FloatArray:
        speed = np.linalg.norm(self.dydv, axis=1).reshape(self.n_panels, self.order)
        return np.sum(speed * self.weights.reshape(self.n_panels, self.order), axis=1)


@dataclass
class CurveMesh:
    """Nodes of a group of curves with per-panel bookkeeping for near-field quadrature."""

    pieces: list[PieceMesh]
    points: FloatArray = field(init=False)
    dydv: FloatArray = field(init=False)
    weights: FloatArray = field(init=False)
    panels: list[tuple[int, int, slice]] = field(init=False)
    panel_centers: FloatArray = field(init=False)
    panel_sizes: FloatArray = field(init=False)

    def __post_init__(self) -> None:
        empty = np.zeros((0, 2))
        self.points = np.concatenate([p.points for p in self.pieces]) if self.pieces else empty
        self.dydv = np.concatenate([p.dydv for p in self.pieces]) if self.pieces else empty
        self.weights = np.concatenate([p.weights for p in self.pieces]) if self.pieces else np.zeros(0)
        self.panels = []
        centers, sizes = [], []
        offset = 0
        for index, piece in enumerate(self.pieces):
            lengths = piece.panel_lengths()
            for panel in range(piece.n_panels):
                sl = slice(offset + panel * piece.order, offset + (panel + 1) * piece.order)
                self.panels.append((index, panel, sl))
                mid = (piece.edges[panel] + piece.edges[panel + 1]) / 2.0
                centers.append(piece.geometry(np.array(mid))[0])
                sizes.append(lengths[panel])
            offset += piece.size
        self.panel_centers = np.array(centers) if centers else empty
        self.panel_sizes = np.array(sizes)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def speed(self) -> FloatArray:
        return np.linalg.norm(self.dydv, axis=1)

    @classmethod
    def build(cls, curves: list[Curve], nodes_per_piece: int, exponent: int, order: int = 16) -> "CurveMesh":
        """
        Mesh each curve with ``nodes_per_piece`` nodes (rounded up to whole panels).

        Args:
            curves: Curves of the group.
            nodes_per_piece: Target node count per smooth piece.
            exponent: Grading exponent (0 for closed curves).
            order: Gauss–Legendre points per panel.
        """
        n_panels = max(1, -(-nodes_per_piece // order))
        return cls([PieceMesh(c, n_panels, order, exponent) for c in curves])
