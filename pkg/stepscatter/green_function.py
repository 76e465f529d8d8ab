"""
Green function of the cracked half-plane above a step.

G(x; x*) solves the Helmholtz equation in the upper half-plane joined to the
strip -h < x2 < 0 through the aperture x2 = 0, x1 > 0, and vanishes on the
crack (x2 = 0, x1 <= 0) and on the floor x2 = -h. It is assembled from the
spectral amplitude f+ of the Wiener-Hopf layer:

    upper half-plane:  G = G_in + (1/2 pi) int_L f+(xi) exp(i mu x2 - i xi x1) dxi
    strip:             G = G_in + (1/2 pi) int_L f+(xi) R(xi, x2) exp(-i xi x1) dxi

with R the strip transfer factor. G_in is the image pair for sources above
the crack and the strip Green function for sources in the strip. Away from
the origin the integrals are deformed onto hairpins around the branch cuts,
or replaced by the residue series of the waveguide modes.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .contour_quad import (
    ContourPath,
    LineSegment,
    TailRay,
    build_P,
    build_Q,
    gauss_legendre,
    integrate,
)
from .errors import ContourError, DomainError, RegionError
from .models import GreenValue, ModalData, RadiationResidual, SourceConfig, SourceRegion
from .special_core import (
    StretchMap,
    grad_phi_k,
    mu,
    mu_continued,
    mu_on_branch,
    phi_k,
    single_layer_gradient,
    single_layer_kernel,
    sqrt_branch,
    sqrt_k_plus,
)
from .wiener_hopf import FactorizationContext


logger = logging.getLogger(__name__)

REPRESENTATIONS = ("auto", "direct", "deformed", "modal")

# Tail angles tried from the ends of L, steepest first
_TAIL_ANGLES = np.radians([45.0, 40.0, 35.0, 30.0, 25.0, 20.0, 15.0, 10.0, 5.0, 2.0])
# A tail is cut once the integrand has decayed by this many e-folds
_CUT_DECAY = 30.0
# Largest exponent a single factor may reach before the cut
_MAX_GROWTH = 500.0
# Evanescent modes are summed until exp(-beta_m |x1|) < e^-36
_MODAL_DECAY = 36.0
_MAX_MODES = 400
# Cauchy-circle differentiation of f+ at the cutoff mode
_CIRCLE_POINTS = 32

Exponent = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray | None]]


def _stack(columns: list[np.ndarray], gradient: bool) -> np.ndarray:
    if gradient:
        return np.stack(columns, axis=-1) / (2.0 * np.pi)
    return columns[0][:, None] / (2.0 * np.pi)


def _triple(value: complex | np.ndarray) -> np.ndarray:
    """Quadrature output as (value, d1, d2), padding missing derivatives with zero."""
    out = np.zeros(3, dtype=np.complex128)
    flat = np.atleast_1d(np.asarray(value, dtype=np.complex128))
    out[: flat.size] = flat
    return out


# ----------------------------------------------------------------------------
# Regions and modes
# ----------------------------------------------------------------------------

def field_region(x: tuple[float, float], h: float) -> str:
    """
    Classify a field point.

    Returns:
        ``upper`` (x2 > 0, or the aperture x2 = 0 with x1 > 0), ``crack``
        (x2 = 0, x1 <= 0), ``strip`` (-h < x2 < 0) or ``floor`` (x2 = -h).

    Raises:
        RegionError: Below the floor.
    """
    x1, x2 = float(x[0]), float(x[1])
    if x2 > 0 or (x2 == 0 and x1 > 0):
        return "upper"
    if x2 == 0:
        return "crack"
    if x2 == -h:
        return "floor"
    if -h < x2 < 0:
        return "strip"
    raise RegionError(f"field point ({x1}, {x2}) lies below the floor x2 = -{h}")


def modal_numbers(k: float, h: float, n_modes: int | None = None) -> tuple[int, np.ndarray, np.ndarray]:
    """
    Waveguide mode data of the strip.

    Args:
        k: Wavenumber.
        h: Strip height.
        n_modes: Number of modes to list; defaults to the propagating ones.

    Returns:
        (M, mu_m, xi_m) with M = max{m : m pi / h <= k}, mu_m = m pi / h and
        xi_m = sqrt_branch(k^2 - mu_m^2), i.e. i beta_m for evanescent modes.
    """
    M = int(np.floor(k * h / np.pi + 1e-12))
    count = M if n_modes is None else n_modes
    mu_m = np.arange(1, count + 1) * np.pi / h
    xi_m = np.asarray(sqrt_branch(k * k - mu_m * mu_m + 0j), dtype=np.complex128)
    return M, mu_m, xi_m


def _has_cutoff(k: float, h: float) -> bool:
    M, _, xi_m = modal_numbers(k, h)
    return M >= 1 and abs(xi_m[M - 1]) < 1e-10 * k


def _mode_count(k: float, h: float, distance: float) -> int:
    """Modes needed for exp(-beta_m distance) to drop below e^-36."""
    if distance <= 0:
        return _MAX_MODES
    needed = int(np.ceil(h / np.pi * np.hypot(k, _MODAL_DECAY / distance))) + 1
    if needed > _MAX_MODES:
        logger.warning(
            f"Modal series at distance {distance:.3e} needs {needed} modes; "
            f"truncating at {_MAX_MODES}"
        )
    return min(needed, _MAX_MODES)


# ----------------------------------------------------------------------------
# Tail selection
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class _Ray:
    start: complex
    direction: complex
    rate: float
    swing: bool = False


def _ray_rate(ctx: FactorizationContext, exponent: Exponent, start: complex,
              direction: complex) -> float | None:
    """
    Exponential rate of the integrand far out along a ray.

    ``exponent`` returns the field exponent and, optionally, the exponent of
    the explicit source factor exp(i xi x1* + i mu |x2*|), which only enters
    below L. Rays along which that factor alone would overflow are rejected.
    """
    scale = 10.0 * float(ctx.L.xi_max)
    z = start + direction * scale * np.array([1.0, 2.0])
    field, source = exponent(z)
    rate = float(field[1].real - field[0].real) / scale
    if source is None or ctx.L.side(z[1]) >= 0:
        return rate
    growth = float(source[1].real - source[0].real) / scale
    worst = max(rate, rate + growth)
    if worst < 0 and growth > 0 and growth * _CUT_DECAY / -worst > _MAX_GROWTH:
        return None
    return worst


def _choose_rays(ctx: FactorizationContext, exponent: Exponent, allow_swing: bool) -> tuple[_Ray, _Ray]:
    """
    Pick the left and right tails of L with the fastest decay.

    Candidates leave the ends of L at up to 45 degrees above or below the
    horizontal. With ``allow_swing`` a half of L may instead be swung onto the
    imaginary axis (right half down, left half up), which is admissible for
    integrands without poles off L.

    Raises:
        ContourError: If no candidate decays.
    """
    v = ctx.L.vertices
    z0 = complex(ctx.L.point_at(0.0))
    rays = []
    for apex, horizontal, swing_direction in ((complex(v[0]), -1.0, 1j), (complex(v[-1]), 1.0, -1j)):
        options = [
            _Ray(apex, horizontal * np.cos(angle) + 1j * sign * np.sin(angle), 0.0)
            for angle in _TAIL_ANGLES
            for sign in (1.0, -1.0)
        ]
        if allow_swing:
            options.append(_Ray(z0, swing_direction, 0.0, swing=True))
        best: _Ray | None = None
        for option in options:
            rate = _ray_rate(ctx, exponent, option.start, option.direction)
            if rate is not None and (best is None or rate < best.rate):
                best = _Ray(option.start, option.direction, rate, option.swing)
        if best is None or best.rate > -1e-9:
            raise ContourError("no decaying tail direction for this field point")
        rays.append(best)
    return rays[0], rays[1]


def _ray_path(ctx: FactorizationContext, left: _Ray, right: _Ray) -> ContourPath:
    """L with the chosen tails, split at its crossing of the imaginary axis."""
    v = ctx.L.vertices
    z0 = complex(ctx.L.point_at(0.0))
    segments = []
    if not left.swing:
        segments += [ctx.L.segments[0], LineSegment(complex(v[1]), z0)]
    if not right.swing:
        segments += [LineSegment(z0, complex(v[2])), ctx.L.segments[2]]
    return ContourPath(
        segments,
        kind="ray",
        left_tail=TailRay(left.start, left.direction, -left.rate),
        right_tail=TailRay(right.start, right.direction, -right.rate),
        k=ctx.k,
        h=ctx.h,
    )


def _source_depth(src: SourceConfig) -> float:
    return abs(src.x2)


def _field_exponent(ctx: FactorizationContext, src: SourceConfig, x1: complex, y: complex) -> Exponent:
    """Exponents of exp(-i xi x1 + i mu y) and of the source factor."""
    k = ctx.k
    depth = _source_depth(src)

    def exponent(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = np.asarray(mu_continued(z, k))
        return -1j * z * x1 + 1j * m * y, 1j * z * src.x1 + 1j * m * depth

    return exponent


# ----------------------------------------------------------------------------
# Incident part
# ----------------------------------------------------------------------------

def _image_pair(k: float, src: SourceConfig, x1: complex, x2: complex) -> np.ndarray:
    """Phi(x; x*) - Phi(x; x*_image) and its gradient, complex coordinates allowed."""
    if np.iscomplexobj(x1) or np.iscomplexobj(x2):
        value = (single_layer_kernel(k, x1, x2, src.x1, src.x2)
                 - single_layer_kernel(k, x1, x2, src.x1, -src.x2))
        g1a, g2a = single_layer_gradient(k, x1, x2, src.x1, src.x2)
        g1b, g2b = single_layer_gradient(k, x1, x2, src.x1, -src.x2)
    else:
        x = (float(x1), float(x2))
        value = phi_k(x, src.point, k) - phi_k(x, (src.x1, -src.x2), k)
        g1a, g2a = grad_phi_k(x, src.point, k)
        g1b, g2b = grad_phi_k(x, (src.x1, -src.x2), k)
    return np.array([complex(value), complex(g1a - g1b), complex(g2a - g2b)])


def _strip_modal(k: float, h: float, x1: float, x2: float, y1: float, y2: float,
                 n_modes: int | None) -> np.ndarray:
    """Mode sum of the strip Green function and its gradient in x."""
    delta = x1 - y1
    if delta == 0:
        raise DomainError("strip_green_modal", "x1 == x1*")
    if _has_cutoff(k, h):
        raise DomainError("strip_green_modal", f"cutoff frequency kh/pi = {k * h / np.pi}")
    count = n_modes if n_modes is not None else _mode_count(k, h, abs(delta))
    _, mu_m, xi_m = modal_numbers(k, h, count)
    wave = np.exp(1j * xi_m * abs(delta))
    s_src = np.sin(mu_m * y2)
    value = np.sum(1j / (h * xi_m) * np.sin(mu_m * x2) * s_src * wave)
    d1 = np.sum(-np.sign(delta) / h * np.sin(mu_m * x2) * s_src * wave)
    d2 = np.sum(1j / (h * xi_m) * mu_m * np.cos(mu_m * x2) * s_src * wave)
    return np.array([value, d1, d2], dtype=np.complex128)


def strip_green_modal(
    x: tuple[float, float], x_src: tuple[float, float], k: float, h: float,
    n_modes: int | None = None,
) -> complex:
    """
    Green function of the Dirichlet strip -h < x2 < 0 as a waveguide mode sum.

    sum_m i / (h xi_m) sin(mu_m x2) sin(mu_m x2*) exp(i xi_m |x1 - x1*|),
    evanescent modes included (xi_m = i beta_m).

    Args:
        x: Field point.
        x_src: Source point.
        k: Wavenumber.
        h: Strip height.
        n_modes: Number of modes; by default enough for e^-36 truncation.

    Raises:
        DomainError: For x1 = x1* or at a cutoff frequency.
    """
    return complex(_strip_modal(k, h, x[0], x[1], x_src[0], x_src[1], n_modes)[0])


def _strip_spectral(ctx: FactorizationContext, src: SourceConfig, x1: float, x2: float,
                    gradient: bool) -> np.ndarray:
    """Strip Green function as a spectral integral over L."""
    k, h = ctx.k, ctx.h
    d1 = x1 - src.x1
    d2 = abs(x2 - src.x2)
    lower, upper = min(x2, src.x2), max(x2, src.x2)
    p, q = lower + h, -upper
    x2_is_lower = x2 <= src.x2

    def exponent(z: np.ndarray) -> tuple[np.ndarray, None]:
        m = np.asarray(mu_on_branch(z, k, "upper"))
        return -1j * z * d1 + 1j * m * d2, None

    left, right = _choose_rays(ctx, exponent, allow_swing=False)
    path = _ray_path(ctx, left, right)

    def integrand(z: np.ndarray) -> np.ndarray:
        m = np.asarray(mu_on_branch(z, k, "upper"))
        ep = np.exp(2j * m * p)
        eq = np.exp(2j * m * q)
        common = 0.5j / m * np.exp(1j * m * d2 - 1j * z * d1) / -np.expm1(2j * m * h)
        value = common * (1 - ep) * (1 - eq)
        if not gradient:
            return _stack([value], False)
        if x2_is_lower:
            dv2 = common * (-1j * m) * (1 + ep) * (1 - eq)
        else:
            dv2 = common * (1 - ep) * (1j * m) * (1 + eq)
        return _stack([value, -1j * z * value, dv2], True)

    return _triple(integrate(integrand, path, ctx.tol).value)


def _incident(ctx: FactorizationContext, src: SourceConfig, x1, x2, region: str,
              gradient: bool, method: str = "auto") -> np.ndarray:
    """G_in and its gradient; zero outside the source's own region."""
    if src.region is SourceRegion.UPPER_HALF_PLANE and region == "upper":
        return _image_pair(ctx.k, src, x1, x2)
    if src.region is SourceRegion.WAVEGUIDE and region in ("strip", "crack", "floor"):
        if np.iscomplexobj(x1):
            raise RegionError("the strip Green function is not extended to complex x1")
        x1, x2 = float(x1), float(x2)
        distance = abs(x1 - src.x1)
        if method == "modal" or (method == "auto" and distance >= ctx.h / 2):
            return _strip_modal(ctx.k, ctx.h, x1, x2, src.x1, src.x2, None)
        if _has_cutoff(ctx.k, ctx.h):
            raise DomainError("g_in", f"cutoff frequency kh/pi = {ctx.k * ctx.h / np.pi}")
        if distance == 0 and x2 == src.x2:
            raise DomainError("g_in", "x == x*")
        return _strip_spectral(ctx, src, x1, x2, gradient)
    return np.zeros(3, dtype=np.complex128)


def g_in(ctx: FactorizationContext, src: SourceConfig, x: tuple[float, float],
         method: str = "auto") -> complex:
    """
    Incident part of G.

    The image pair Phi(x; x*) - Phi(x; x*_image) for sources above the crack,
    the strip Green function for sources in the strip (spectral integral near
    the source, mode sum farther than h/2), zero for aperture sources.

    Args:
        ctx: Factorization context.
        src: Source.
        x: Field point in the source's region (closure).
        method: ``auto``, ``spectral`` or ``modal`` (strip sources only).

    Raises:
        RegionError: If x is outside the source's region.
        DomainError: At x = x*.
    """
    x1, x2 = float(x[0]), float(x[1])
    if src.region is SourceRegion.UPPER_HALF_PLANE and x2 < 0:
        raise RegionError(f"G_in of an upper source is defined for x2 >= 0, got {x2}")
    if src.region is SourceRegion.WAVEGUIDE and not -ctx.h <= x2 <= 0:
        raise RegionError(f"G_in of a strip source is defined for -h <= x2 <= 0, got {x2}")
    if (x1, x2) == src.point:
        raise DomainError("g_in", "x == x*")
    region = "upper" if x2 >= 0 and src.region is SourceRegion.UPPER_HALF_PLANE else "strip"
    return complex(_incident(ctx, src, x1, x2, region, False, method)[0])


# ----------------------------------------------------------------------------
# Spectral representations
# ----------------------------------------------------------------------------

def _direct_upper(ctx: FactorizationContext, src: SourceConfig, x1, x2, gradient: bool,
                  allow_swing: bool = True) -> np.ndarray:
    """G1 = (1/2 pi) int f+ exp(i mu x2 - i xi x1) over L with decaying tails."""
    k = ctx.k
    left, right = _choose_rays(ctx, _field_exponent(ctx, src, x1, x2), allow_swing)
    path = _ray_path(ctx, left, right)

    def integrand(z: np.ndarray) -> np.ndarray:
        f = np.asarray(ctx.f_hat(src, z, "value", branch="continued"))
        m = np.asarray(mu_continued(z, k))
        value = f * np.exp(1j * m * x2 - 1j * z * x1)
        if not gradient:
            return _stack([value], False)
        return _stack([value, -1j * z * value, 1j * m * value], True)

    return _triple(integrate(integrand, path, ctx.tol).value)


def _direct_upper_swapped(ctx: FactorizationContext, src: SourceConfig, x1: float,
                          gradient: bool) -> np.ndarray:
    """
    G at an aperture point x = (x1, 0) left of an aperture source, by reciprocity.

    G(x; x*) = G(x*; x): the roles are exchanged so that the explicit source
    factor decays along the tails; the gradient in x becomes the source
    derivative of f+.
    """
    k = ctx.k
    swapped = SourceConfig(x1, 0.0, SourceRegion.GAMMA_PLUS)
    left, right = _choose_rays(ctx, _field_exponent(ctx, swapped, src.x1, 0.0), True)
    path = _ray_path(ctx, left, right)

    def integrand(z: np.ndarray) -> np.ndarray:
        phase = np.exp(-1j * z * src.x1)
        columns = [np.asarray(ctx.f_hat(swapped, z, "value", branch="continued")) * phase]
        if gradient:
            for which in ("x1", "x2"):
                columns.append(np.asarray(ctx.f_hat(swapped, z, which, branch="continued")) * phase)
        return _stack(columns, gradient)

    return _triple(integrate(integrand, path, ctx.tol).value)


def _direct_strip(ctx: FactorizationContext, src: SourceConfig, x1, x2: float,
                  gradient: bool) -> np.ndarray:
    """G2 = (1/2 pi) int f+ R(xi, x2) exp(-i xi x1) over L."""
    k, h = ctx.k, ctx.h
    left, right = _choose_rays(ctx, _field_exponent(ctx, src, x1, -x2), allow_swing=False)
    path = _ray_path(ctx, left, right)
    p = x2 + h

    def integrand(z: np.ndarray) -> np.ndarray:
        f = np.asarray(ctx.f_hat(src, z, "value", branch="continued"))
        m = np.asarray(mu_on_branch(z, k, "upper"))
        ep = np.exp(2j * m * p)
        common = f * np.exp(-1j * m * x2 - 1j * z * x1) / -np.expm1(2j * m * h)
        value = common * (1 - ep)
        if not gradient:
            return _stack([value], False)
        return _stack([value, -1j * z * value, -1j * m * common * (1 + ep)], True)

    return _triple(integrate(integrand, path, ctx.tol).value)


def _deformed_P(ctx: FactorizationContext, src: SourceConfig, x1: float, x2: float,
                gradient: bool) -> np.ndarray:
    """
    G1 for x1 > 0 on the hairpin around -k -> 0 -> -i inf.

    (1/2 pi) int_P [f+ exp(i mu x2) - f+_crossed exp(-i mu x2)] exp(-i xi x1),
    principal branches.
    """
    k = ctx.k
    path = build_P(k, decay_rate=x1 - max(src.x1, 0.0))

    def integrand(z: np.ndarray) -> np.ndarray:
        f = np.asarray(ctx.f_hat(src, z, "value"))
        fc = np.asarray(ctx.f_hat_crossed(src, z, "value", strict=False))
        m = np.asarray(mu(z, k))
        phase = np.exp(-1j * z * x1)
        up = f * np.exp(1j * m * x2) * phase
        down = fc * np.exp(-1j * m * x2) * phase
        value = up - down
        if not gradient:
            return _stack([value], False)
        return _stack([value, -1j * z * value, 1j * m * (up + down)], True)

    return _triple(integrate(integrand, path, ctx.tol).value)


def _deformed_Q(ctx: FactorizationContext, src: SourceConfig, x1: float, x2: float,
                gradient: bool) -> np.ndarray:
    """G1 for x1 < 0: (1/2 pi) int_Q f+ (exp(-i mu x2) - exp(i mu x2)) exp(-i xi x1)."""
    k = ctx.k
    path = build_Q(k, decay_rate=-x1)

    def integrand(z: np.ndarray) -> np.ndarray:
        f = np.asarray(ctx.f_hat(src, z, "value"))
        m = np.asarray(mu(z, k))
        phase = f * np.exp(-1j * z * x1)
        down = np.exp(-1j * m * x2)
        up = np.exp(1j * m * x2)
        value = phase * (down - up)
        if not gradient:
            return _stack([value], False)
        return _stack([value, -1j * z * value, -1j * m * phase * (down + up)], True)

    return _triple(integrate(integrand, path, ctx.tol).value)


def _deformed_strip(ctx: FactorizationContext, src: SourceConfig, x1, x2: float,
                    gradient: bool) -> np.ndarray:
    """
    G in the strip for x1 > 0 and sources above the strip.

    Phi(x; x*) - Phi(x'; x*) + (1/2 pi) int_P 2i sin(mu h) sin(mu (x2 + h))
    H-(xi) exp(-i xi x1) / (sqrt(k + xi) K-(xi)) dxi with x' = (x1, -x2 - 2h).
    """
    k, h = ctx.k, ctx.h
    decay = float(np.real(x1))
    path = build_P(k, decay_rate=decay)
    p = x2 + h

    def integrand(z: np.ndarray) -> np.ndarray:
        parts = ctx.k_parts(z)
        _, hm = ctx.h_parts(src, z, "value", parts)
        m = np.asarray(mu(z, k))
        root = np.asarray(sqrt_k_plus(z, k))
        common = 2j * np.sin(m * h) * hm * np.exp(-1j * z * x1) / (root * parts[1])
        value = common * np.sin(m * p)
        if not gradient:
            return _stack([value], False)
        return _stack([value, -1j * z * value, common * m * np.cos(m * p)], True)

    spectral = _triple(integrate(integrand, path, ctx.tol).value)
    mirror = -x2 - 2.0 * h
    if np.iscomplexobj(x1):
        free = single_layer_kernel(k, x1, x2, src.x1, src.x2)
        image = single_layer_kernel(k, x1, mirror, src.x1, src.x2)
        g1a, g2a = single_layer_gradient(k, x1, x2, src.x1, src.x2)
        g1b, g2b = single_layer_gradient(k, x1, mirror, src.x1, src.x2)
    else:
        free = phi_k((x1, x2), src.point, k)
        image = phi_k((x1, mirror), src.point, k)
        g1a, g2a = grad_phi_k((x1, x2), src.point, k)
        g1b, g2b = grad_phi_k((x1, mirror), src.point, k)
    explicit = np.array([complex(free - image), complex(g1a - g1b), complex(g2a + g2b)])
    return spectral + explicit


# ----------------------------------------------------------------------------
# Modal expansion
# ----------------------------------------------------------------------------

def _f_hat_derivative_at_zero(ctx: FactorizationContext, src: SourceConfig) -> complex:
    """d f+/d xi at 0 from the trapezoid rule on the circle |xi| = k/4."""
    r = ctx.k / 4.0
    theta = 2.0 * np.pi * np.arange(_CIRCLE_POINTS) / _CIRCLE_POINTS
    values = np.asarray(ctx.f_hat(src, r * np.exp(1j * theta)))
    return complex(np.mean(values * np.exp(-1j * theta)) / r)


def modal_coeffs(ctx: FactorizationContext, src: SourceConfig, n_modes: int | None = None) -> ModalData:
    """
    Coefficients of G2 = sum_m c_m sin(mu_m x2) exp(-i xi_m x1) in the strip for x1 < 0.

    c_m = mu_m f+(xi_m) / (i h xi_m). When xi_M = 0 the mode is a double pole;
    it contributes (c_M + s x1) sin(mu_M x2) with c_M = -(2ik/h) f+'(0) and
    s = -(2k/h) f+(0).

    Args:
        ctx: Factorization context.
        src: Source.
        n_modes: Modes to compute; defaults to the propagating ones.
    """
    k, h = ctx.k, ctx.h
    src.validate(h)
    M, mu_m, xi_m = modal_numbers(k, h, n_modes)
    cutoff = _has_cutoff(k, h)
    coeffs = np.zeros(len(mu_m), dtype=np.complex128)
    slope = None
    regular = np.ones(len(mu_m), dtype=bool)
    if cutoff and len(mu_m) >= M:
        regular[M - 1] = False
        xi_m[M - 1] = 0.0
        f0 = complex(ctx.f_hat(src, 0.0 + 0j))
        coeffs[M - 1] = -2j * k / h * _f_hat_derivative_at_zero(ctx, src)
        slope = -2.0 * k / h * f0
    if regular.any():
        f = np.asarray(ctx.f_hat(src, xi_m[regular]))
        coeffs[regular] = mu_m[regular] * f / (1j * h * xi_m[regular])
    logger.debug(f"Modal coefficients for ({src.x1}, {src.x2}): M={M}, cutoff={cutoff}")
    return ModalData(
        M=M,
        mu_m=[float(v) for v in mu_m],
        xi_m=[complex(v) for v in xi_m],
        c_m=[complex(v) for v in coeffs],
        cutoff_flag=cutoff,
        slope=slope,
    )


def _modal_sum(ctx: FactorizationContext, src: SourceConfig, x1, x2: float,
               n_modes: int | None) -> np.ndarray:
    k, h = ctx.k, ctx.h
    count = n_modes if n_modes is not None else _mode_count(k, h, -float(np.real(x1)))
    data = modal_coeffs(ctx, src, max(count, modal_numbers(k, h)[0]))
    mu_m = np.array(data.mu_m)
    xi_m = np.array(data.xi_m)
    c_m = np.array(data.c_m)
    amplitude = c_m.copy()
    d_amplitude = -1j * xi_m * c_m
    if data.cutoff_flag:
        j = data.M - 1
        amplitude[j] = c_m[j] + data.slope * x1
        d_amplitude[j] = data.slope
    wave = np.exp(-1j * xi_m * x1)
    s = np.sin(mu_m * x2)
    value = np.sum(amplitude * s * wave)
    d1 = np.sum(d_amplitude * s * wave)
    d2 = np.sum(amplitude * mu_m * np.cos(mu_m * x2) * wave)
    return np.array([value, d1, d2], dtype=np.complex128)


def modal_field(ctx: FactorizationContext, src: SourceConfig, x: tuple[float, float],
                n_modes: int | None = None) -> complex:
    """
    Residue series of G2 at a strip point with x1 < 0.

    Propagating and evanescent modes are summed; by default until the
    evanescent terms have decayed below e^-36.
    """
    x1, x2 = float(x[0]), float(x[1])
    if not (x1 < 0 and -ctx.h < x2 < 0):
        raise RegionError(f"the modal series holds in the strip for x1 < 0, got ({x1}, {x2})")
    return complex(_modal_sum(ctx, src, x1, x2, n_modes)[0])


def projection_coeffs(ctx: FactorizationContext, src: SourceConfig, x1: float,
                      n_quad: int = 32) -> np.ndarray:
    """
    Cross-section projection (2/h) int G2(x1, x2) sin(mu_m x2) dx2 * exp(i xi_m x1).

    G2 is the spectral part of G (G minus G_in) from the direct integral, so
    the result checks ``modal_coeffs`` independently, up to evanescent terms
    at the chosen x1. For a cutoff mode the projection equals c_M + s x1.
    """
    k, h = ctx.k, ctx.h
    _, mu_m, xi_m = modal_numbers(k, h)
    nodes, weights = gauss_legendre(n_quad)
    x2 = -h / 2.0 * (nodes + 1.0)
    w = weights * h / 2.0
    values = np.array([_direct_strip(ctx, src, x1, float(t), False)[0] for t in x2])
    return np.array([
        2.0 / h * np.sum(w * values * np.sin(m * x2)) * np.exp(1j * xi * x1)
        for m, xi in zip(mu_m, xi_m)
    ])


# ----------------------------------------------------------------------------
# Assembly
# ----------------------------------------------------------------------------

def _resolve(ctx: FactorizationContext, src: SourceConfig, x1: float, region: str,
             representation: str, switch_wavelengths: float) -> str:
    """Map the requested representation to the concrete evaluator name."""
    wavelength = 2.0 * np.pi / ctx.k
    reach = x1 - max(src.x1, 0.0)
    p_usable = reach > 0 and max(src.x1, 0.0) * _CUT_DECAY / reach < _MAX_GROWTH

    if representation == "direct":
        return "direct"
    if representation == "modal":
        if region != "strip" or not x1 < 0:
            raise RegionError("the modal representation holds in the strip for x1 < 0")
        return "modal"
    if representation == "auto" and abs(x1) <= switch_wavelengths * wavelength:
        return "direct"

    if region == "upper":
        if x1 < 0:
            return "deformed_Q"
        if x1 > 0 and p_usable and (
            representation == "deformed" or reach >= switch_wavelengths * wavelength / 2
        ):
            return "deformed_P"
        if representation == "deformed":
            raise RegionError(
                f"the deformed representation needs x1 > max(x1*, 0), got x1={x1}, x1*={src.x1}"
            )
        return "direct"
    # strip
    if x1 < 0:
        return "modal"
    if x1 > 0 and src.region is not SourceRegion.WAVEGUIDE:
        return "deformed_strip"
    if representation == "deformed" and x1 == 0:
        raise RegionError("no deformed representation on x1 = 0")
    return "direct"


def _scattered(ctx: FactorizationContext, src: SourceConfig, x1, x2, region: str,
               evaluator: str, gradient: bool) -> np.ndarray:
    if evaluator == "deformed_P":
        return _deformed_P(ctx, src, x1, x2, gradient)
    if evaluator == "deformed_Q":
        return _deformed_Q(ctx, src, x1, x2, gradient)
    if evaluator == "deformed_strip":
        return _deformed_strip(ctx, src, x1, x2, gradient)
    if evaluator == "modal":
        return _modal_sum(ctx, src, x1, x2, None)
    if region == "strip":
        return _direct_strip(ctx, src, x1, x2, gradient)
    return _direct_upper(ctx, src, x1, x2, gradient)


def green(
    ctx: FactorizationContext,
    src: SourceConfig,
    x: tuple[float, float],
    representation: str = "auto",
    gradient: bool = False,
    switch_wavelengths: float = 2.0,
) -> GreenValue:
    """
    Evaluate G(x; x*).

    Args:
        ctx: Factorization context for (k, h).
        src: Source configuration.
        x: Field point in the closure of the domain.
        representation: ``direct`` (integral over L), ``deformed`` (hairpin
            paths, the strip mode series for x1 < 0), ``modal`` (strip, x1 < 0)
            or ``auto``: direct for |x1| <= switch_wavelengths * lambda, the
            deformed form otherwise.
        gradient: Also return (dG/dx1, dG/dx2), by spectral differentiation.
        switch_wavelengths: Threshold of the automatic switch.

    Returns:
        GreenValue; zero with no gradient on the crack and the floor.

    Raises:
        DomainError: At x = x*.
        RegionError: Below the floor, or for an inapplicable representation.
        QuadratureError: If a contour integral does not converge.
    """
    if representation not in REPRESENTATIONS:
        raise ValueError(f"Unknown representation '{representation}'")
    src.validate(ctx.h)
    x1, x2 = float(x[0]), float(x[1])
    if (x1, x2) == src.point:
        raise DomainError("green", "x == x*")
    region = field_region((x1, x2), ctx.h)
    if region in ("crack", "floor"):
        return GreenValue((x1, x2), 0j, "boundary", None)

    evaluator = _resolve(ctx, src, x1, region, representation, switch_wavelengths)
    swap = (
        evaluator == "direct"
        and region == "upper"
        and x2 == 0
        and src.region is SourceRegion.GAMMA_PLUS
        and x1 < src.x1
    )
    if swap:
        values = _direct_upper_swapped(ctx, src, x1, gradient)
    else:
        values = _scattered(ctx, src, x1, x2, region, evaluator, gradient)
        values = values + _incident(ctx, src, x1, x2, region, gradient)
    logger.debug(f"G at ({x1}, {x2}) for source ({src.x1}, {src.x2}) via {evaluator}")
    label = "deformed" if evaluator.startswith("deformed") else evaluator
    grad = (complex(values[1]), complex(values[2])) if gradient else None
    return GreenValue((x1, x2), complex(values[0]), label, grad)


# ----------------------------------------------------------------------------
# Far field
# ----------------------------------------------------------------------------

def _image_far_field(k: float, src: SourceConfig, alpha: float) -> np.ndarray:
    """Far field of the image pair and its source gradient."""
    if src.region is not SourceRegion.UPPER_HALF_PLANE:
        return np.zeros(3, dtype=np.complex128)
    c, s = np.cos(alpha), np.sin(alpha)
    base = np.exp(0.25j * np.pi) / (2.0 * np.sqrt(2.0 * np.pi * k)) * np.exp(-1j * k * c * src.x1)
    value = -2j * base * np.sin(k * s * src.x2)
    return np.array([value, -1j * k * c * value, -2j * base * k * s * np.cos(k * s * src.x2)])


def _spectral_far_field(ctx: FactorizationContext, src: SourceConfig, alpha: float,
                        which: str = "value") -> complex:
    k = ctx.k
    xi = -k * np.cos(alpha)
    if np.sin(alpha) == 0 or xi <= -k:
        return 0j
    f = complex(ctx.f_hat(src, xi + 0j, which))
    return complex(np.sqrt(k) * np.sin(alpha) * f / np.sqrt(2j * np.pi))


def far_field_G(ctx: FactorizationContext, src: SourceConfig, alpha: float,
                part: str = "total") -> complex:
    """
    Half-plane far-field pattern of G: G ~ exp(ikr)/sqrt(r) F(alpha).

    The scattered part is (2 pi i)^(-1/2) sqrt(k) sin(alpha) f+(-k cos alpha);
    ``part="total"`` adds the far field of the image pair for sources above
    the crack.

    Args:
        ctx: Factorization context.
        src: Source.
        alpha: Observation angle in [0, pi].
        part: ``total`` or ``scattered``.
    """
    if not 0.0 <= alpha <= np.pi:
        raise RegionError(f"observation angle must lie in [0, pi], got {alpha}")
    if part not in ("total", "scattered"):
        raise ValueError(f"Unknown part '{part}'")
    value = _spectral_far_field(ctx, src, alpha)
    if part == "total":
        value += complex(_image_far_field(ctx.k, src, alpha)[0])
    return value


def far_field_source_gradient(ctx: FactorizationContext, src: SourceConfig, alpha: float,
                              part: str = "total") -> tuple[complex, complex]:
    """Gradient of F(alpha; x*) with respect to the source point."""
    d1 = _spectral_far_field(ctx, src, alpha, "x1")
    d2 = _spectral_far_field(ctx, src, alpha, "x2")
    if part == "total":
        image = _image_far_field(ctx.k, src, alpha)
        d1 += complex(image[1])
        d2 += complex(image[2])
    return d1, d2


# ----------------------------------------------------------------------------
# PML extension
# ----------------------------------------------------------------------------

def green_pml_extended(
    ctx: FactorizationContext,
    src: SourceConfig,
    x: tuple[float, float],
    stretch_map: StretchMap,
    part: str = "scattered",
) -> complex:
    """
    G continued to the complex-stretched coordinates of a PML point.

    The upper-half-plane integral is taken with complex (x1~, x2~) along tails
    chosen for decay in the stretched variables; strip points use the
    hairpin form (x1 > 0) or the mode series (x1 < 0) with complex x1~. Where
    the stretch is the identity the value equals ``green``.

    Args:
        ctx: Factorization context.
        src: Source above the strip (upper half-plane or aperture).
        x: Physical point.
        stretch_map: Complex coordinate stretch.
        part: ``scattered`` (G minus the image pair) or ``total``.

    Raises:
        RegionError: For strip sources.
    """
    if part not in ("total", "scattered"):
        raise ValueError(f"Unknown part '{part}'")
    if src.region is SourceRegion.WAVEGUIDE:
        raise RegionError("the PML extension is available for sources above the strip")
    x1, x2 = float(x[0]), float(x[1])
    region = field_region((x1, x2), ctx.h)
    if region in ("crack", "floor"):
        return 0j
    t1, t2 = stretch_map.stretch(x1, x2)
    xt1, xt2 = complex(t1), complex(t2)
    if xt1.imag == 0 and xt2.imag == 0:
        value = green(ctx, src, (x1, x2)).value
        if part == "scattered" and region == "upper":
            value -= g_in(ctx, src, (x1, x2)) if src.region is SourceRegion.UPPER_HALF_PLANE else 0j
        return value

    if region == "upper":
        values = _direct_upper(ctx, src, xt1, xt2, False)
        if part == "total":
            values = values + _incident(ctx, src, xt1, xt2, region, False)
        return complex(values[0])
    if x1 > 0:
        return complex(_deformed_strip(ctx, src, xt1, x2, False)[0])
    return complex(_modal_sum(ctx, src, xt1, x2, None)[0])


# ----------------------------------------------------------------------------
# Radiation diagnostics
# ----------------------------------------------------------------------------

def radiation_residual(ctx: FactorizationContext, src: SourceConfig, r: float,
                       alpha: float) -> RadiationResidual:
    """
    |(d_r - ik) G| and |d_tau G| at x = r (cos alpha, sin alpha).

    Both decay like r^(-3/2); the tangential residual is None on the crack.
    """
    x = (r * np.cos(alpha), r * np.sin(alpha))
    if alpha == np.pi:
        x = (-r, 0.0)
    value = green(ctx, src, x, gradient=True)
    if value.grad is None:
        return RadiationResidual(r, alpha, 0.0, None)
    g1, g2 = value.grad
    radial = np.cos(alpha) * g1 + np.sin(alpha) * g2
    tangential = -np.sin(alpha) * g1 + np.cos(alpha) * g2
    return RadiationResidual(
        r, alpha, float(abs(radial - 1j * ctx.k * value.value)), float(abs(tangential))
    )


def waveguide_residual(ctx: FactorizationContext, src: SourceConfig, x1: float, x2: float) -> float:
    """|(d_x1 - ik) G| at a strip point far to the right."""
    value = green(ctx, src, (x1, x2), gradient=True)
    if value.grad is None:
        return 0.0
    return float(abs(value.grad[0] - 1j * ctx.k * value.value))
