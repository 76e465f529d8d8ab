"""
Spectral contours and the quadrature engines that run on them.

Provides the indented contour L and the deformed paths, an adaptive
Gauss-Legendre integrator for complex paths, principal-value and
semi-infinite ray integrators, and ``PanelRule``: a fixed composite rule with a
Cauchy-integral engine for densities known at its nodes.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import legendre

from .errors import ContourError, QuadratureError, TailDirectionError
from .models import QuadResult
from .special_core import mu


logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

# Rows of the Cauchy kernel evaluated at once
_CHUNK = 256


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


# ----------------------------------------------------------------------------
# Path segments
# ----------------------------------------------------------------------------

class PathSegment(ABC):
    """Smooth oriented map s in [0, 1] -> complex."""

    @abstractmethod
    def point(self, s: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def derivative(self, s: np.ndarray) -> np.ndarray: ...

    @property
    def start(self) -> complex:
        return complex(self.point(np.array(0.0)))

    @property
    def end(self) -> complex:
        return complex(self.point(np.array(1.0)))


@dataclass(frozen=True)
class LineSegment(PathSegment):
    """Straight segment from a to b."""

    a: complex
    b: complex

    def point(self, s: np.ndarray) -> np.ndarray:
        return self.a + (self.b - self.a) * np.asarray(s, dtype=float)

    def derivative(self, s: np.ndarray) -> np.ndarray:
        return np.full(np.shape(s), self.b - self.a, dtype=np.complex128)

    @property
    def length(self) -> float:
        return abs(self.b - self.a)


@dataclass(frozen=True)
class MappedSegment(PathSegment):
    """Segment given by an explicit map and its derivative, e.g. xi = -k + k s^2."""

    fn: Callable[[np.ndarray], np.ndarray]
    dfn: Callable[[np.ndarray], np.ndarray]

    def point(self, s: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(s, dtype=float)), dtype=np.complex128)

    def derivative(self, s: np.ndarray) -> np.ndarray:
        return np.asarray(self.dfn(np.asarray(s, dtype=float)), dtype=np.complex128)


@dataclass(frozen=True)
class TailRay:
    """Semi-infinite ray start + s * direction, s >= 0, integrated outward."""

    start: complex
    direction: complex
    decay_rate: float | None = None

    def __post_init__(self) -> None:
        if self.direction == 0:
            raise ContourError("tail direction must be nonzero")
        object.__setattr__(self, "direction", self.direction / abs(self.direction))


def segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point (M,) to each straight segment [a_p, b_p] (P,) -> (M, P)."""
    p = np.asarray(points, dtype=np.complex128).reshape(-1, 1)
    d = (b - a).reshape(1, -1)
    t = np.real((p - a) * np.conj(d)) / np.maximum(np.abs(d) ** 2, 1e-300)
    t = np.clip(t, 0.0, 1.0)
    return np.abs(p - (a + t * d))


# ----------------------------------------------------------------------------
# Contour paths
# ----------------------------------------------------------------------------

@dataclass
class ContourPath:
    """
    Oriented piecewise-smooth path in the spectral plane.

    ``segments`` cover the finite part in order. The left tail is traversed
    inward (from infinity toward the first segment), the right tail outward.
    For ``L_standard`` paths ``vertices`` describe the polyline, which is read
    as the graph of a function of Re(xi) continued horizontally past both ends.
    """

    segments: list[PathSegment]
    kind: str = "ray"
    indent: float = 0.0
    left_tail: TailRay | None = None
    right_tail: TailRay | None = None
    vertices: np.ndarray | None = None
    shift: float = 0.0
    xi_max: float | None = None
    special_points: tuple[complex, ...] = ()
    margin: float | None = None
    k: float | None = None
    h: float | None = None

    def tails(self) -> list[tuple[TailRay, int]]:
        """Tails with the sign their outward integral contributes to the path."""
        out = []
        if self.left_tail is not None:
            out.append((self.left_tail, -1))
        if self.right_tail is not None:
            out.append((self.right_tail, 1))
        return out

    def height(self, x: np.ndarray) -> np.ndarray:
        """Imaginary part of the path above Re(xi) = x (standard contour only)."""
        if self.vertices is None:
            raise ContourError("side classification needs a graph-like contour")
        return np.interp(np.asarray(x, dtype=float), self.vertices.real, self.vertices.imag)

    def side(self, xi: np.ndarray | complex) -> np.ndarray:
        """
        Classify points against the (horizontally continued) path.

        Returns:
            +1 above (C+), 0 on the path, -1 below (C-), elementwise.
        """
        z = np.asarray(xi, dtype=np.complex128)
        gap = z.imag - self.height(z.real)
        on = np.abs(gap) <= 1e-12 * (1.0 + np.abs(z))
        return np.where(on, 0, np.sign(gap)).astype(int)

    def point_at(self, x: np.ndarray | float) -> np.ndarray:
        """Point of the path with real part x."""
        xr = np.asarray(x, dtype=float)
        return xr + 1j * self.height(xr)


def _l_special_points(k: float, h: float, evanescent: int = 4) -> tuple[complex, ...]:
    """Branch points and zeros of 1 - exp(2 i mu h) near the real axis."""
    points: list[complex] = [k, -k]
    m = 1
    extra = 0
    while extra < evanescent:
        mu_m = m * np.pi / h
        if mu_m <= k:
            xi_m = np.sqrt(k * k - mu_m * mu_m)
            points += [xi_m, -xi_m]
        else:
            beta = np.sqrt(mu_m * mu_m - k * k)
            points += [1j * beta, -1j * beta]
            extra += 1
        m += 1
    return tuple(complex(p) for p in points)


def _symbol_margin(k: float, h: float, segments: Sequence[LineSegment], samples: int) -> float:
    """min |1 - exp(2 i mu h)| over samples along the segments."""
    worst = np.inf
    for seg in segments:
        s = np.linspace(0.0, 1.0, samples)
        xi = seg.point(s)
        worst = min(worst, float(np.min(np.abs(-np.expm1(2j * np.asarray(mu(xi, k)) * h)))))
    return worst


def build_L(
    k: float,
    h: float,
    indent: float | None = None,
    xi_max: float | None = None,
    xi_factor: float = 40.0,
    min_margin: float = 1e-8,
) -> ContourPath:
    """
    Build the indented contour L.

    The polyline runs -Xi + i d -> -d + i d -> d - i d -> Xi - i d (d = indent),
    through the origin, with horizontal tails beyond +/-Xi. When exp(2ikh) = 1
    the zero at the origin is avoided by shifting the path left by d/2.

    The horizontal tails carry the factorization itself, whose log-symbol
    decays like exp(-2 h |xi|) along them. Integrals with oscillatory factors
    replace them by rays turned away from the real axis: the Green function
    tails pick from +/-45 degrees per field point and the source densities use
    50 to 80 degree rays per source.

    Args:
        k: Wavenumber.
        h: Step height.
        indent: Indentation; defaults to min(k/8, pi/(4h)).
        xi_max: Truncation abscissa; defaults to max(xi_factor * k, 20/h).
        xi_factor: Multiple of k used for the default truncation.
        min_margin: Smallest admissible |1 - exp(2 i mu h)| along the path.

    Returns:
        Validated ContourPath of kind ``L_standard``.

    Raises:
        ContourError: For invalid parameters or when the margin check fails.
    """
    if not (k > 0 and h > 0):
        raise ContourError(f"k and h must be positive (k={k}, h={h})")
    d = indent if indent is not None else min(k / 8.0, np.pi / (4.0 * h))
    if not 0.0 < d < k / 4.0:
        raise ContourError(f"indent must lie in (0, k/4), got {d}")
    xi_end = xi_max if xi_max is not None else max(xi_factor * k, 20.0 / h)
    if xi_end <= 2 * d + k:
        raise ContourError(f"truncation {xi_end} too small for k={k}")

    special = _l_special_points(k, h)
    shift = 0.0
    if abs(np.exp(2j * k * h) - 1.0) < 1e-12:
        shift = -d / 2.0
        logger.debug(f"exp(2ikh) = 1: shifting L left by {d / 2:.3e}")

    for attempt in range(2):
        vertices = np.array(
            [-xi_end + 1j * d, -d + shift + 1j * d, d + shift - 1j * d, xi_end - 1j * d],
            dtype=np.complex128,
        )
        segments = [LineSegment(complex(a), complex(b)) for a, b in zip(vertices[:-1], vertices[1:])]
        margin = _symbol_margin(k, h, segments, 4001)
        if margin >= min_margin:
            break
        if attempt == 0 and shift == 0.0:
            shift = -d / 2.0
            logger.debug(f"Margin {margin:.3e} too small, retrying with a left shift")
            continue
        raise ContourError("1 - exp(2i mu h) vanishes on the contour", margin=margin)

    path = ContourPath(
        segments=segments,
        kind="L_standard",
        indent=d,
        left_tail=TailRay(complex(vertices[0]), -1.0),
        right_tail=TailRay(complex(vertices[-1]), 1.0),
        vertices=vertices,
        shift=shift,
        xi_max=xi_end,
        special_points=special,
        margin=margin,
        k=k,
        h=h,
    )
    logger.debug(f"Built L: indent={d:.4g}, Xi={xi_end:.4g}, shift={shift:.3g}, margin={margin:.3e}")
    return path


def build_P(k: float, decay_rate: float | None = None) -> ContourPath:
    """Path -k -> 0 (as xi = -k + k s^2) -> -i inf."""
    seg = MappedSegment(lambda s: -k + k * s * s + 0j, lambda s: 2.0 * k * s + 0j)
    return ContourPath([seg], kind="ray", right_tail=TailRay(0j, -1j, decay_rate), k=k)


def build_Q(k: float, decay_rate: float | None = None) -> ContourPath:
    """Path k -> 0 (as xi = k - k s^2) -> +i inf."""
    seg = MappedSegment(lambda s: k - k * s * s + 0j, lambda s: -2.0 * k * s + 0j)
    return ContourPath([seg], kind="ray", right_tail=TailRay(0j, 1j, decay_rate), k=k)


# ----------------------------------------------------------------------------
# Adaptive integration
# ----------------------------------------------------------------------------

def _panel_sums(
    integrands: Sequence[Integrand],
    segments: Sequence[PathSegment],
    seg_idx: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    order: int,
) -> tuple[np.ndarray, int]:
    """GL sums per panel, shape (panels, components)."""
    x, w = gauss_legendre(order)
    out: np.ndarray | None = None
    count = 0
    for j in np.unique(seg_idx):
        sel = seg_idx == j
        half = (hi[sel] - lo[sel]) / 2.0
        s = ((lo[sel] + hi[sel]) / 2.0)[:, None] + half[:, None] * x
        seg = segments[j]
        xi = seg.point(s)
        values = np.asarray(integrands[j](xi.ravel()), dtype=np.complex128)
        if values.ndim < 2:
            values = np.broadcast_to(values, (xi.size,))[:, None]
        values = values.reshape(s.shape + values.shape[-1:]) * seg.derivative(s)[..., None]
        if out is None:
            out = np.empty((len(seg_idx), values.shape[-1]), dtype=np.complex128)
        out[sel] = (values * w[:, None]).sum(axis=1) * half[:, None]
        count += s.size
    assert out is not None
    return out, count


def _adaptive(
    integrands: Sequence[Integrand],
    segments: Sequence[PathSegment],
    tol: float,
    order: int,
    max_depth: int,
    initial_panels: int,
) -> tuple[np.ndarray, float, int]:
    """Bisection on parameter panels; panel error = max |2 halves - whole|."""
    nseg = len(segments)
    edges = np.linspace(0.0, 1.0, initial_panels + 1)
    seg_idx = np.repeat(np.arange(nseg), initial_panels)
    lo = np.tile(edges[:-1], nseg)
    hi = np.tile(edges[1:], nseg)
    depth = np.zeros(len(lo), dtype=int)
    coarse, n_evals = _panel_sums(integrands, segments, seg_idx, lo, hi, order)

    value = np.zeros(coarse.shape[1], dtype=np.complex128)
    err_total = 0.0
    while True:
        mid = (lo + hi) / 2.0
        left, n1 = _panel_sums(integrands, segments, seg_idx, lo, mid, order)
        right, n2 = _panel_sums(integrands, segments, seg_idx, mid, hi, order)
        n_evals += n1 + n2
        fine = left + right
        err = np.abs(fine - coarse).max(axis=1)
        estimate = value + fine.sum(axis=0)
        if not np.all(np.isfinite(estimate)):
            raise QuadratureError(complex(estimate[0]), np.inf, n_evals, tol)
        budget = tol * max(1.0, float(np.abs(estimate).max()))
        done = err <= budget * (hi - lo) / nseg
        value += fine[done].sum(axis=0)
        err_total += float(err[done].sum())
        if done.all():
            return value, err_total, n_evals
        rest = ~done
        if (depth[rest] >= max_depth).any():
            raise QuadratureError(
                complex(estimate[0]), err_total + float(err[rest].sum()), n_evals, tol
            )
        seg_idx = np.concatenate([seg_idx[rest], seg_idx[rest]])
        lo, hi = np.concatenate([lo[rest], mid[rest]]), np.concatenate([mid[rest], hi[rest]])
        coarse = np.concatenate([left[rest], right[rest]])
        depth = np.concatenate([depth[rest], depth[rest]]) + 1


def _ray(
    f: Integrand,
    start: complex,
    direction: complex,
    tol: float,
    decay_rate: float | None,
    order: int,
    max_depth: int,
    max_panels: int,
) -> tuple[np.ndarray, float, int]:
    d = direction / abs(direction)
    base = 1.0 / decay_rate if decay_rate else 1.0
    length = base
    s0 = 0.0
    total: np.ndarray | None = None
    err = 0.0
    n_evals = 0
    quiet = 0
    for _ in range(max_panels):
        seg = LineSegment(start + s0 * d, start + (s0 + length) * d)
        part, part_err, part_n = _adaptive([f], [seg], tol / 4.0, order, max_depth, 1)
        total = part if total is None else total + part
        err += part_err
        n_evals += part_n
        if np.abs(part).max() <= 1e-2 * tol * max(1.0, float(np.abs(total).max())):
            quiet += 1
            if quiet >= 2:
                return total, err, n_evals
        else:
            quiet = 0
        s0 += length
        length = min(2.0 * length, 16.0 * base) if decay_rate else 2.0 * length
    assert total is not None
    raise QuadratureError(complex(total[0]), float(np.abs(part).max()), n_evals, tol)


def _result(value: np.ndarray, err: float, n_evals: int) -> QuadResult:
    return QuadResult(complex(value[0]) if value.size == 1 else value, err, n_evals)


def integrate_ray(
    f: Integrand,
    start: complex,
    direction: complex,
    tol: float = 1e-10,
    decay_rate: float | None = None,
    order: int = 16,
    max_depth: int = 40,
    max_panels: int = 80,
) -> QuadResult:
    """
    Integrate f along start + s * direction, s in [0, inf).

    Panels grow geometrically from 1/decay_rate (or 1); integration stops once
    two consecutive panels contribute below tol/100 of the running total.

    Raises:
        QuadratureError: If the tail has not died out after ``max_panels`` panels.
    """
    return _result(*_ray(f, start, direction, tol, decay_rate, order, max_depth, max_panels))


def integrate(
    f: Integrand,
    path: ContourPath,
    tol: float = 1e-10,
    order: int = 16,
    max_depth: int = 40,
    initial_panels: int = 8,
) -> QuadResult:
    """
    Adaptive integral of a vectorised integrand along a ContourPath.

    The finite segments share one error budget tol * max(1, |value|); each
    tail is integrated by ``integrate_ray`` with its own decay rate. An
    integrand returning shape (N, c) is integrated componentwise and the
    result value is then an array of length c.

    Raises:
        QuadratureError: When a panel exceeds ``max_depth`` bisections.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    value: np.ndarray | None = None
    err = 0.0
    n_evals = 0
    if path.segments:
        value, err, n_evals = _adaptive(
            [f] * len(path.segments), path.segments, tol, order, max_depth, initial_panels
        )
    for tail, sign in path.tails():
        part, part_err, part_n = _ray(
            f, tail.start, tail.direction, tol, tail.decay_rate, order, max_depth, 80
        )
        value = sign * part if value is None else value + sign * part
        err += part_err
        n_evals += part_n
    if value is None:
        raise ContourError("path has neither segments nor tails")
    return _result(value, err, n_evals)


def _locate_on_segments(path: ContourPath, pole: complex) -> tuple[int, float]:
    for j, seg in enumerate(path.segments):
        if not isinstance(seg, LineSegment):
            continue
        d = seg.b - seg.a
        s = float(np.real((pole - seg.a) * np.conj(d)) / abs(d) ** 2)
        if -1e-12 <= s <= 1 + 1e-12 and abs(seg.a + s * d - pole) <= 1e-10 * (1 + abs(pole)):
            return j, min(max(s, 0.0), 1.0)
    raise ContourError(f"pole {pole} is not on a straight segment of the path")


def integrate_pv(
    f: Integrand,
    path: ContourPath,
    pole: complex,
    tol: float = 1e-10,
    order: int = 16,
    max_depth: int = 40,
) -> QuadResult:
    """
    Principal value of the integral of f, which has a simple pole on the path.

    The residue-like limit f* = lim (t - pole) f(t) is estimated from two
    symmetric samples; f* / (t - pole) is subtracted on the local segment
    (split at the pole) and its principal value ln|B - pole| - ln|A - pole| added
    back analytically.

    Raises:
        ContourError: If the pole is not on a straight segment of the path.
    """
    j, s = _locate_on_segments(path, pole)
    segments = list(path.segments)
    seg = segments[j]
    assert isinstance(seg, LineSegment)
    left_end = seg.a
    right_end = seg.b
    left_index = right_index = j
    if s <= 1e-12 and j > 0:
        left_index = j - 1
        left_end = segments[j - 1].start
    if s >= 1 - 1e-12 and j + 1 < len(segments):
        right_index = j + 1
        right_end = segments[j + 1].end
    if abs(left_end - pole) == 0 or abs(right_end - pole) == 0:
        raise ContourError(f"pole {pole} sits at an end of the path")

    scale = min(abs(left_end - pole), abs(right_end - pole))
    eps = 1e-6 * scale
    u_right = (right_end - pole) / abs(right_end - pole)
    u_left = (left_end - pole) / abs(left_end - pole)
    samples = np.array([pole + eps * u_right, pole + eps * u_left])
    residue = complex(np.mean(np.asarray(f(samples)) * (samples - pole)))

    def regular(t: np.ndarray) -> np.ndarray:
        return np.asarray(f(t), dtype=np.complex128) - residue / (t - pole)

    local = [LineSegment(left_end, pole), LineSegment(pole, right_end)]
    new_segments = segments[:left_index] + local + segments[right_index + 1:]
    integrands: list[Integrand] = [f] * left_index + [regular, regular] + [f] * (
        len(segments) - right_index - 1
    )
    regular_value, err, n_evals = _adaptive(integrands, new_segments, tol, order, max_depth, 8)
    value = complex(regular_value[0]) + residue * (
        np.log(abs(right_end - pole)) - np.log(abs(left_end - pole))
    )
    n_evals += 2
    for tail, sign in path.tails():
        part = integrate_ray(f, tail.start, tail.direction, tol, tail.decay_rate, order, max_depth)
        value += sign * part.value
        err += part.err_estimate
        n_evals += part.n_evals
    return QuadResult(complex(value), err, n_evals)


def integrate_tail_oscillatory(
    f: Integrand,
    phase_rate: complex,
    start: complex,
    direction: complex,
    tol: float = 1e-10,
) -> QuadResult:
    """
    Integrate f(xi) exp(i * phase_rate * xi) along a ray where the exponential decays.

    Raises:
        TailDirectionError: If Re(i * phase_rate * direction) >= 0.
    """
    rate = complex(phase_rate)
    d = complex(direction) / abs(direction)
    growth = (1j * rate * d).real
    if growth >= 0:
        raise TailDirectionError(rate, d)

    def g(xi: np.ndarray) -> np.ndarray:
        return np.asarray(f(xi), dtype=np.complex128) * np.exp(1j * rate * xi)

    return integrate_ray(g, start, d, tol, decay_rate=-growth)


# ----------------------------------------------------------------------------
# Fixed composite rule with a Cauchy engine
# ----------------------------------------------------------------------------

def refine_panels(
    vertices: Sequence[complex],
    special_points: Sequence[complex] = (),
    max_length: float | Callable[[np.ndarray], np.ndarray] = np.inf,
    ratio: float = 0.5,
    min_length: float = 1e-9,
    split: int = 3,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Straight panels along a polyline, split until short enough.

    A panel is split into ``split`` equal parts while it is longer than
    ``max_length`` (a number or a function of the panel midpoints) or than
    ``ratio`` times its distance to the nearest special point.

    Returns:
        Panel start and end points, in path order.
    """
    v = np.asarray(vertices, dtype=np.complex128)
    a, b = v[:-1].copy(), v[1:].copy()
    sp = np.asarray(special_points, dtype=np.complex128)
    for _ in range(80):
        length = np.abs(b - a)
        limit = max_length((a + b) / 2.0) if callable(max_length) else np.full(len(a), max_length)
        if sp.size:
            limit = np.minimum(limit, ratio * segment_distance(sp, a, b).min(axis=0))
        bad = (length > limit) & (length > min_length)
        if not bad.any():
            break
        count = np.where(bad, split, 1)
        a_rep, b_rep, c_rep = np.repeat(a, count), np.repeat(b, count), np.repeat(count, count)
        offsets = np.arange(c_rep.size) - np.repeat(np.cumsum(count) - count, count)
        a, b = a_rep + (b_rep - a_rep) * offsets / c_rep, a_rep + (b_rep - a_rep) * (offsets + 1) / c_rep
    return a, b


@dataclass(frozen=True)
class TailSector:
    """Sector swept when a horizontal tail at ``apex`` is rotated to ``direction``."""

    apex: complex
    horizontal: float
    direction: complex

    @property
    def sign(self) -> int:
        return int(np.sign(self.direction.imag))


@dataclass
class PanelRule:
    """
    Composite Gauss-Legendre rule on straight panels.

    Attributes:
        a, b: Panel end points (P,), in path order.
        order: Nodes per panel.
        sectors: Rotated-tail sectors, for callers correcting Cauchy values back
            to the horizontally continued contour.
    """

    a: np.ndarray
    b: np.ndarray
    order: int = 16
    sectors: list[TailSector] = field(default_factory=list)

    def __post_init__(self) -> None:
        x, w = gauss_legendre(self.order)
        self.a = np.asarray(self.a, dtype=np.complex128)
        self.b = np.asarray(self.b, dtype=np.complex128)
        half = (self.b - self.a) / 2.0
        self.nodes = ((self.a + self.b) / 2.0)[:, None] + half[:, None] * x
        self.weights = half[:, None] * w
        self.lengths = np.abs(self.b - self.a)
        self._reference = x
        self._vinv = np.linalg.inv(legendre.legvander(x, self.order - 1))
        deriv = np.zeros((self.order, self.order))
        for j in range(self.order):
            e = np.zeros(self.order)
            e[j] = 1.0
            dj = legendre.legder(e)
            deriv[: dj.size, j] = dj
        self._deriv = deriv

    @property
    def n_panels(self) -> int:
        return len(self.a)

    @property
    def size(self) -> int:
        return self.nodes.size

    def local_coordinate(self, xi: np.ndarray, panel: np.ndarray) -> np.ndarray:
        """Map points to the reference interval of the given panels."""
        return (2.0 * xi - self.a[panel] - self.b[panel]) / (self.b[panel] - self.a[panel])

    def interpolate(
        self, values: np.ndarray, panel: np.ndarray, xi: np.ndarray, derivative: bool = False
    ) -> np.ndarray:
        """
        Evaluate the per-panel Legendre interpolant of nodal ``values``.

        Args:
            values: Nodal data, shape (P, order).
            panel: Panel index per target.
            xi: Targets (any complex points; extrapolation is allowed).
            derivative: Return d/dxi of the interpolant instead.
        """
        coeffs = values[panel] @ self._vinv.T
        u = self.local_coordinate(xi, panel)
        if derivative:
            coeffs = coeffs @ self._deriv.T
            scale = 2.0 / (self.b[panel] - self.a[panel])
        else:
            scale = 1.0
        basis = legendre.legvander(u, self.order - 1)
        return np.sum(basis * coeffs, axis=1) * scale

    def locate(self, xi: np.ndarray) -> np.ndarray:
        """Index of the panel each point lies on, or -1."""
        z = np.asarray(xi, dtype=np.complex128).ravel()
        found = np.full(z.size, -1, dtype=int)
        for lo in range(0, z.size, _CHUNK):
            dist = segment_distance(z[lo:lo + _CHUNK], self.a, self.b)
            on = dist <= 1e-10 * self.lengths
            hit = on.any(axis=1)
            found[lo:lo + _CHUNK][hit] = np.argmax(on[hit], axis=1)
        return found

    def cauchy(self, values: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """
        (1/2 pi i) times the integral of a(t)/(t - xi) over the rule's panels.

        Targets within one panel length of a panel get that panel's
        contribution through interpolant subtraction plus the exact integral of
        1/(t - xi) over the straight panel. Targets lying on a panel receive the
        principal value; a target on a node uses the interpolant derivative there.

        Args:
            values: Density at the nodes, shape (P, order).
            targets: Evaluation points (any shape).

        Returns:
            Cauchy integral values, shaped like ``targets``.
        """
        z = np.asarray(targets, dtype=np.complex128)
        flat = z.ravel()
        out = np.empty(flat.size, dtype=np.complex128)
        t = self.nodes.ravel()
        w = self.weights.ravel()
        a_flat = values.ravel()
        P, n = self.nodes.shape
        for lo in range(0, flat.size, _CHUNK):
            xi = flat[lo:lo + _CHUNK]
            diff = t[None, :] - xi[:, None]
            coincident = np.abs(diff) <= 1e-13 * (1.0 + np.abs(xi[:, None]))
            kernel = np.where(coincident, 0.0, w[None, :] / np.where(coincident, 1.0, diff))
            total = kernel @ a_flat
            panel_kernel = kernel.reshape(len(xi), P, n).sum(axis=2)

            dist = segment_distance(xi, self.a, self.b)
            rows, cols = np.nonzero(dist < self.lengths[None, :])
            if rows.size:
                xr = xi[rows]
                on = dist[rows, cols] <= 1e-10 * self.lengths[cols]
                da = self.a[cols] - xr
                db = self.b[cols] - xr
                with np.errstate(divide="ignore"):
                    log_pv = np.where(np.abs(db) > 0, np.log(np.abs(db)), 0.0) - np.where(
                        np.abs(da) > 0, np.log(np.abs(da)), 0.0
                    )
                log_off = np.log(np.where(on, 1.0, db / np.where(da == 0, 1.0, da)))
                log_term = np.where(on, log_pv, log_off)
                p = self.interpolate(values, cols, xr)
                correction = p * (log_term - panel_kernel[rows, cols])
                node_hits = coincident.reshape(len(xi), P, n)[rows, cols]
                hit = node_hits.any(axis=1)
                if hit.any():
                    dp = self.interpolate(values, cols[hit], xr[hit], derivative=True)
                    q = np.argmax(node_hits[hit], axis=1)
                    correction[hit] += self.weights[cols[hit], q] * dp
                np.add.at(total, rows, correction)
            out[lo:lo + _CHUNK] = total
        out /= 2j * np.pi
        return out.reshape(z.shape)

    def sector_coefficients(self, targets: np.ndarray) -> np.ndarray:
        """
        Multiples of the density to add to ``cauchy`` values so that they refer
        to the contour with horizontal tails.

        Strictly inside a swept sector the coefficient is the sector sign; on
        the horizontal ray bounding it, half of it.
        """
        z = np.asarray(targets, dtype=np.complex128)
        coeff = np.zeros(z.shape)
        for sector in self.sectors:
            rel = (z - sector.apex) / sector.horizontal
            phi = np.angle(rel)
            psi = np.angle(sector.direction / sector.horizontal)
            if psi == 0:
                continue
            far = np.abs(rel) > 1e-12 * (1.0 + abs(sector.apex))
            on_ray = far & (np.abs(phi) <= 1e-12) & (rel.real > 0)
            inside = far & (np.sign(phi) == np.sign(psi)) & (np.abs(phi) > 1e-12) & (
                np.abs(phi) < abs(psi)
            )
            coeff = coeff + sector.sign * (inside + 0.5 * on_ray)
        return coeff
