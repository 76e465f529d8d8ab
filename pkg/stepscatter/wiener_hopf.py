"""
Wiener-Hopf factorization layer.

Kernel factors K+/K- of 1 - exp(2 i mu h) along the contour L, the additive
split H+/H- of the source densities for the three source configurations, and
the spectral amplitude f+ with its crossed-branch continuation and source-point
derivatives.

Conventions: a(xi) = H+(xi) + H-(xi) with H+ = C[a] above L and H- = -C[a]
below it, C being the Cauchy integral (1/2 pi i) int_L a(t)/(t - xi) dt. The
density is a(xi) = -exp(i xi x1*) E^(xi) K-(xi) / sqrt(k - xi), where
E^ = exp(i mu x2*) above the crack, 1 on the aperture and
(exp(-i mu x2*) - exp(i mu (2h + x2*))) / (1 - exp(2 i mu h)) in the strip.
"""

import logging
import threading
from dataclasses import dataclass

import numpy as np

from .contour_quad import (
    ContourPath,
    PanelRule,
    TailSector,
    build_L,
    integrate,
    integrate_pv,
    refine_panels,
)
from .errors import BranchCutError, RegionError, ContourError
from .models import IdentityReport, SourceConfig, SourceRegion
from .special_core import mu, mu_continued, sqrt_k_minus, sqrt_k_plus


logger = logging.getLogger(__name__)

# Rotated density tails stay inside this window, measured from the horizontal,
# so they never coincide with the 45 degree tails of the Green-function integrals.
_TAIL_MIN_ANGLE = np.radians(50.0)
_TAIL_MAX_ANGLE = np.radians(80.0)
# e-folds of decay after which a density tail is cut
_TAIL_DECAY = 50.0
# Phase advance allowed per panel for exp(i t x1*) type factors
_PHASE_PER_PANEL = 5.0
# Distance from L at which the factor product is sampled in identity_report
_PRODUCT_OFFSET = 1e-6

_WHICH = ("value", "x1", "x2")


def _one_minus_symbol(m: np.ndarray, h: float) -> np.ndarray:
    return -np.expm1(2j * m * h)


def _as_flat(xi: np.ndarray | complex) -> np.ndarray:
    return np.atleast_1d(np.asarray(xi, dtype=np.complex128)).ravel()


def _reshape(values: np.ndarray, like: np.ndarray | complex) -> np.ndarray | complex:
    if np.ndim(like) == 0:
        return complex(values[0])
    return values.reshape(np.shape(like))


@dataclass
class SourceFactorization:
    """Cauchy rule and nodal densities for one source point."""

    source: SourceConfig
    rule: PanelRule
    density: np.ndarray
    d_x1: np.ndarray
    d_x2: np.ndarray

    def values(self, which: str) -> np.ndarray:
        return {"value": self.density, "x1": self.d_x1, "x2": self.d_x2}[which]


class FactorizationContext:
    """
    K+/K- on a validated contour L for one (k, h), plus per-source splits.

    Construction computes Log(1 - exp(2 i mu h)) with a continuous branch at the
    nodes of a refined panel rule on L and its principal-value Cauchy integral
    there. After construction the context is read-only apart from the
    per-source cache, which is filled under a lock.
    """

    def __init__(
        self,
        k: float,
        h: float,
        tol: float = 1e-10,
        indent: float | None = None,
        xi_factor: float = 40.0,
        gauss_order: int = 16,
    ):
        """
        Build the factorization context.

        Args:
            k: Wavenumber (> 0).
            h: Step height (> 0).
            tol: Quadrature tolerance for downstream integrals.
            indent: Contour indentation; default min(k/8, pi/(4h)).
            xi_factor: Truncation of L in multiples of k.
            gauss_order: Nodes per panel of the Cauchy rules.

        Raises:
            ContourError: If L cannot be validated or the symbol winds along L.
        """
        self.k = float(k)
        self.h = float(h)
        self.tol = float(tol)
        self.gauss_order = gauss_order
        self.L: ContourPath = build_L(self.k, self.h, indent, xi_factor=xi_factor)
        self._sources: dict[tuple[float, float, str], SourceFactorization] = {}
        self._lock = threading.Lock()

        # exp(2 i mu h) has decayed below e^-60 past this abscissa
        self.symbol_extent = min(float(self.L.xi_max), self.k + 30.0 / self.h)
        vertices = np.array(self.L.vertices, dtype=np.complex128)
        vertices[0] = -self.symbol_extent + 1j * vertices[0].imag
        vertices[-1] = self.symbol_extent + 1j * vertices[-1].imag
        a, b = refine_panels(vertices, self.L.special_points, max_length=2.0 / self.h)
        self.rule = PanelRule(a, b, gauss_order)
        self._log_symbol = self._continuous_log_symbol()
        logger.debug(
            f"Factorization context k={self.k}, h={self.h}: "
            f"{self.rule.n_panels} panels, {self.rule.size} nodes"
        )

    def _continuous_log_symbol(self) -> np.ndarray:
        nodes = self.rule.nodes.ravel()
        symbol = _one_minus_symbol(np.asarray(mu(nodes, self.k)), self.h)
        phase = np.unwrap(np.angle(symbol))
        winding = phase[-1] - np.angle(symbol[-1])
        if abs(winding) > np.pi / 2:
            raise ContourError(
                f"1 - exp(2i mu h) winds by {winding / (2 * np.pi):.2f} turns along L"
            )
        return (np.log(np.abs(symbol)) + 1j * phase).reshape(self.rule.nodes.shape)

    # ------------------------------------------------------------------
    # K+ and K-
    # ------------------------------------------------------------------

    def _log_symbol_on_path(self, z: np.ndarray) -> np.ndarray:
        """Log of the symbol on L, on the branch tracked at the rule nodes."""
        principal = np.log(_one_minus_symbol(np.asarray(mu(z, self.k)), self.h))
        panel = self.rule.locate(z)
        inside = panel >= 0
        if inside.any():
            tracked = self.rule.interpolate(self._log_symbol, panel[inside], z[inside])
            turns = np.round((tracked - principal[inside]).imag / (2 * np.pi))
            principal[inside] += 2j * np.pi * turns
        return principal

    def k_parts(self, xi: np.ndarray | complex) -> tuple[np.ndarray, np.ndarray]:
        """
        K+ and K- at arbitrary points, continued across L where needed.

        On L both come from the Plemelj limits; above L K+ = exp(C[F]) and
        K- = (1 - exp(2 i mu h)) / K+; below L the roles swap. Off L the
        continued branch of mu is used.
        """
        z = _as_flat(xi)
        side = self.L.side(z)
        cauchy = self.rule.cauchy(self._log_symbol, z)
        kp = np.empty_like(z)
        km = np.empty_like(z)

        on = side == 0
        if on.any():
            half_log = self._log_symbol_on_path(z[on]) / 2.0
            kp[on] = np.exp(half_log + cauchy[on])
            km[on] = np.exp(half_log - cauchy[on])
        off = ~on
        if off.any():
            symbol = _one_minus_symbol(np.asarray(mu_continued(z[off], self.k)), self.h)
            above = side[off] > 0
            c = cauchy[off]
            kp[off] = np.where(above, np.exp(c), symbol * np.exp(c))
            km[off] = np.where(above, symbol * np.exp(-c), np.exp(-c))
        return kp, km

    def k_plus_any(self, xi: np.ndarray | complex) -> np.ndarray | complex:
        return _reshape(self.k_parts(xi)[0], xi)

    def k_minus_any(self, xi: np.ndarray | complex) -> np.ndarray | complex:
        return _reshape(self.k_parts(xi)[1], xi)

    # ------------------------------------------------------------------
    # Source densities
    # ------------------------------------------------------------------

    def _density_terms(self, src: SourceConfig, t: np.ndarray, which: str) -> tuple[np.ndarray, bool]:
        """
        Source factor of the density and whether it multiplies K- (True) or
        divides K+ (False).
        """
        k, h = self.k, self.h
        m = np.asarray(mu_continued(t, k))
        base = -np.exp(1j * t * src.x1) / np.asarray(sqrt_k_minus(t, k, continued=True))
        if which == "x1":
            base = base * 1j * t
        if src.region is SourceRegion.WAVEGUIDE:
            if which == "x2":
                numerator = -1j * m * (np.exp(-1j * m * src.x2) + np.exp(1j * m * (2 * h + src.x2)))
            else:
                numerator = np.exp(-1j * m * src.x2) - np.exp(1j * m * (2 * h + src.x2))
            return base * numerator, False
        factor = np.exp(1j * m * src.x2) if src.region is SourceRegion.UPPER_HALF_PLANE else 1.0
        if which == "x2":
            factor = 1j * m * factor
        return base * factor, True

    def density_at(self, src: SourceConfig, xi: np.ndarray | complex, which: str = "value",
                   k_parts: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
        """Density a(xi; x*) (or its source derivative), continued off L."""
        z = _as_flat(xi)
        kp, km = k_parts if k_parts is not None else self.k_parts(z)
        terms, uses_minus = self._density_terms(src, z, which)
        return terms * km if uses_minus else terms / kp

    def _source_rule(self, src: SourceConfig) -> PanelRule:
        k, h = self.k, self.h
        scale = abs(src.x1) + abs(src.x2)
        phase_cap = _PHASE_PER_PANEL / scale if scale > 0 else np.inf
        extent = self.symbol_extent

        def cap(mid: np.ndarray) -> np.ndarray:
            inner = np.abs(mid.real) <= extent
            outer = np.minimum(phase_cap, np.maximum(2.0 / h, 0.1 * np.abs(mid)))
            return np.where(inner, min(2.0 / h, phase_cap), outer)

        a, b = refine_panels(self.L.vertices, self.L.special_points, max_length=cap)

        # Decay exp(Re(rho * t)) of the density far out on either side
        depth = abs(src.x2)
        rho_left = depth + 1j * src.x1
        rho_right = -depth + 1j * src.x1
        up = 1.0 if src.x1 >= 0 else -1.0
        first = min(2.0 / h, phase_cap)
        sectors = []
        tail_panels = []
        for apex, horizontal, rho in (
            (complex(self.L.vertices[0]), -1.0, rho_left),
            (complex(self.L.vertices[-1]), 1.0, rho_right),
        ):
            best = -np.conj(rho) / abs(rho)
            angle = np.clip(np.arctan2(abs(best.imag), abs(best.real)), _TAIL_MIN_ANGLE, _TAIL_MAX_ANGLE)
            direction = horizontal * np.cos(angle) + 1j * up * np.sin(angle)
            decay = -(rho * direction).real
            sectors.append(TailSector(apex, horizontal, complex(direction)))
            starts, ends = [], []
            s, length = 0.0, first
            while decay * s < _TAIL_DECAY:
                starts.append(apex + s * direction)
                ends.append(apex + (s + length) * direction)
                s += length
                length = min(1.5 * length, max(phase_cap, first))
            tail_panels.append((np.array(starts), np.array(ends)))

        (left_a, left_b), (right_a, right_b) = tail_panels
        # The left tail is traversed inward
        all_a = np.concatenate([left_b[::-1], a, right_a])
        all_b = np.concatenate([left_a[::-1], b, right_b])
        return PanelRule(all_a, all_b, self.gauss_order, sectors)

    def source_factorization(self, src: SourceConfig, cache: bool = True) -> SourceFactorization:
        """
        Cauchy rule and nodal densities for ``src`` (memoised per source).

        Args:
            src: Source configuration, validated against h.
            cache: Store the result on the context.
        """
        key = (src.x1, src.x2, src.region.value)
        with self._lock:
            found = self._sources.get(key)
        if found is not None:
            return found

        src.validate(self.h)
        rule = self._source_rule(src)
        nodes = rule.nodes.ravel()
        parts = self.k_parts(nodes)
        shape = rule.nodes.shape
        densities = [self.density_at(src, nodes, which, parts).reshape(shape) for which in _WHICH]
        fac = SourceFactorization(src, rule, *densities)
        logger.debug(f"Source factorization at ({src.x1}, {src.x2}): {rule.size} nodes")
        if cache:
            with self._lock:
                self._sources.setdefault(key, fac)
        return fac

    def h_parts(
        self, src: SourceConfig, xi: np.ndarray | complex, which: str = "value",
        k_parts: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """
        H+ and H- at arbitrary points (Plemelj limits on L, continuation off L).

        Args:
            src: Source configuration.
            xi: Spectral points.
            which: ``value`` or the source derivative ``x1`` / ``x2``.
            k_parts: Precomputed K+/K- at ``xi``.
        """
        z = _as_flat(xi)
        fac = self.source_factorization(src)
        parts = k_parts if k_parts is not None else self.k_parts(z)
        a = self.density_at(src, z, which, parts)
        c = fac.rule.cauchy(fac.values(which), z)
        coeff = fac.rule.sector_coefficients(z)
        c = c + coeff * np.where(coeff != 0, a, 0.0)
        side = self.L.side(z)
        hp = np.where(side > 0, c, np.where(side < 0, a + c, 0.5 * a + c))
        hm = np.where(side > 0, a - c, np.where(side < 0, -c, 0.5 * a - c))
        return hp, hm

    def h_plus_any(self, src: SourceConfig, xi: np.ndarray | complex) -> np.ndarray | complex:
        return _reshape(self.h_parts(src, xi)[0], xi)

    def h_minus_any(self, src: SourceConfig, xi: np.ndarray | complex) -> np.ndarray | complex:
        return _reshape(self.h_parts(src, xi)[1], xi)

    # ------------------------------------------------------------------
    # Spectral amplitude
    # ------------------------------------------------------------------

    def _source_term(self, src: SourceConfig, z: np.ndarray, m: np.ndarray, which: str) -> np.ndarray:
        """exp(i xi x1*) E(mu) or its source derivative."""
        h = self.h
        phase = np.exp(1j * z * src.x1)
        if src.region is SourceRegion.WAVEGUIDE:
            down = np.exp(-1j * m * src.x2)
            up = np.exp(1j * m * (2 * h + src.x2))
            e = -1j * m * (down + up) if which == "x2" else down - up
        else:
            e = _one_minus_symbol(m, h)
            if src.region is SourceRegion.UPPER_HALF_PLANE:
                e = e * np.exp(1j * m * src.x2)
            if which == "x2":
                e = 1j * m * e
        if which == "x1":
            e = 1j * z * e
        return phase * e

    def _branches(self, z: np.ndarray, branch: str) -> tuple[np.ndarray, np.ndarray]:
        if branch == "continued":
            return np.asarray(mu_continued(z, self.k)), np.asarray(sqrt_k_plus(z, self.k, continued=True))
        return np.asarray(mu(z, self.k)), np.asarray(sqrt_k_plus(z, self.k))

    def f_hat_forms(
        self, src: SourceConfig, xi: np.ndarray | complex, which: str = "value",
        branch: str = "principal",
    ) -> tuple[np.ndarray, np.ndarray]:
        """
        Both expressions of f+ at the given points: H+ K+ / (2i sqrt(k+xi)) and
        -exp(i xi x1*) E / (2i mu) - H- (1 - exp(2 i mu h)) / (2i sqrt(k+xi) K-).
        """
        z = _as_flat(xi)
        parts = self.k_parts(z)
        kp, km = parts
        hp, hm = self.h_parts(src, z, which, parts)
        m, root = self._branches(z, branch)
        with np.errstate(divide="ignore", invalid="ignore"):
            first = hp * kp / (2j * root)
            second = (
                -self._source_term(src, z, m, which) / (2j * m)
                - hm * _one_minus_symbol(m, self.h) / (2j * root * km)
            )
        return first, second

    def f_hat(
        self, src: SourceConfig, xi: np.ndarray | complex, which: str = "value",
        branch: str = "principal",
    ) -> np.ndarray | complex:
        """
        f+(xi; x*) (or a source derivative) on the requested sheet.

        With ``branch="principal"`` the cut is (-inf, -k] and points on it are
        rejected; ``continued`` gives the analytic continuation from L across
        that ray (cut moved to the vertical ray below -k).

        Raises:
            BranchCutError: For principal evaluation on (-inf, -k].
        """
        z = _as_flat(xi)
        if branch == "principal":
            on_cut = (z.imag == 0) & (z.real <= -self.k)
            if on_cut.any():
                raise BranchCutError(complex(z[on_cut][0]), "(-inf, -k]")
        side = self.L.side(z)
        out = np.empty_like(z)
        upper = side >= 0
        if upper.any():
            out[upper] = self.f_hat_forms(src, z[upper], which, branch)[0]
        if (~upper).any():
            out[~upper] = self.f_hat_forms(src, z[~upper], which, branch)[1]
        return _reshape(out, xi)

    def f_hat_crossed(
        self, src: SourceConfig, xi: np.ndarray | complex, which: str = "value",
        strict: bool = True,
    ) -> np.ndarray | complex:
        """
        f+ continued across the cut (-inf, -k]: the second form with mu -> -mu
        and sqrt(k+xi) -> -sqrt(k+xi).

        With ``strict=False`` points above L are accepted and H- is taken from
        its continuation there (deformed paths touch L near the origin).

        Raises:
            RegionError: For points above L in strict mode.
        """
        z = _as_flat(xi)
        if strict and np.any(self.L.side(z) > 0):
            raise RegionError("the crossed continuation is defined on L and below it")
        parts = self.k_parts(z)
        _, hm = self.h_parts(src, z, which, parts)
        m, root = self._branches(z, "principal")
        value = (
            self._source_term(src, z, -m, which) / (2j * m)
            + hm * _one_minus_symbol(-m, self.h) / (2j * root * parts[1])
        )
        return _reshape(value, xi)


# ----------------------------------------------------------------------------
# Public operations
# ----------------------------------------------------------------------------

def _check_side(ctx: FactorizationContext, xi: np.ndarray | complex, side: str) -> None:
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got '{side}'")
    wrong = -1 if side == "plus" else 1
    if np.any(ctx.L.side(_as_flat(xi)) == wrong):
        raise RegionError(f"{side} factor requested on the opposite side of L")


def K_pm(ctx: FactorizationContext, xi: np.ndarray | complex, side: str) -> np.ndarray | complex:
    """
    K+ or K- at points on L or strictly on their own side of it.

    Raises:
        RegionError: For points on the opposite side.
    """
    _check_side(ctx, xi, side)
    kp, km = ctx.k_parts(xi)
    return _reshape(kp if side == "plus" else km, xi)


def H_pm(
    ctx: FactorizationContext, src: SourceConfig, xi: np.ndarray | complex, side: str
) -> np.ndarray | complex:
    """H+ or H- for ``src`` at points on L or strictly on their own side of it."""
    _check_side(ctx, xi, side)
    hp, hm = ctx.h_parts(src, xi)
    return _reshape(hp if side == "plus" else hm, xi)


def f_hat_plus(ctx: FactorizationContext, src: SourceConfig, xi: np.ndarray | complex) -> np.ndarray | complex:
    """Spectral amplitude f+(xi; x*) on C minus (-inf, -k]."""
    return ctx.f_hat(src, xi)


def f_hat_plus_crossed(
    ctx: FactorizationContext, src: SourceConfig, xi: np.ndarray | complex
) -> np.ndarray | complex:
    """Crossed-branch amplitude used on deformed paths below the cut."""
    return ctx.f_hat_crossed(src, xi)


def df_hat_plus_dsource(
    ctx: FactorizationContext,
    src: SourceConfig,
    xi: np.ndarray | complex,
    direction: tuple[float, float],
) -> np.ndarray | complex:
    """
    Directional derivative of f+(xi; x*) with respect to the source point.

    The x*-dependence of the density is differentiated under the Cauchy
    integral, so no finite differences are involved.
    """
    terms = [
        weight * np.asarray(ctx.f_hat(src, xi, which))
        for weight, which in ((direction[0], "x1"), (direction[1], "x2"))
        if weight
    ]
    total = sum(terms) if terms else np.zeros(np.shape(xi), dtype=np.complex128)
    return complex(total) if np.ndim(xi) == 0 else np.asarray(total)


def reference_k_pm(ctx: FactorizationContext, xi: complex, side: str, tol: float = 1e-10) -> complex:
    """
    K+ or K- from scratch by adaptive (principal-value) quadrature on L.

    Independent of the panel rule of the context; used as a test oracle.
    """
    k, h = ctx.k, ctx.h
    z = complex(xi)

    def log_symbol(t: np.ndarray) -> np.ndarray:
        return np.log(_one_minus_symbol(np.asarray(mu(t, k)), h))

    where = int(ctx.L.side(z))
    if where == 0:
        pv = integrate_pv(log_symbol, ctx.L, z, tol).value / (2j * np.pi)
        half = complex(log_symbol(np.array([z]))[0]) / 2.0
        return complex(np.exp(half + pv if side == "plus" else half - pv))
    cauchy = integrate(lambda t: log_symbol(t) / (t - z), ctx.L, tol).value / (2j * np.pi)
    if side == "plus" and where > 0:
        return complex(np.exp(cauchy))
    if side == "minus" and where < 0:
        return complex(np.exp(-cauchy))
    raise RegionError(f"{side} factor requested on the opposite side of L")


def identity_report(ctx: FactorizationContext, src: SourceConfig, n_nodes: int = 200) -> IdentityReport:
    """
    Residuals of the factorization identities at ``n_nodes`` points of L.

    product: |K+(xi + i d) K-(xi - i d) - (1 - exp(2 i mu h))| relative to the
    symbol, extrapolated to d = 0 from d = 1e-6 and 2e-6 (on L the two
    factors share the half-log of the symbol, so their product is exact there);
    split: |H+(xi + i eta) + H-(xi - i eta) - a(xi)| relative to max |a|;
    two_form: difference of the two expressions of f+ relative to max |f+|;
    plemelj: |H+ on L - H+(xi + i eta)| relative to max |a|.
    """
    k = ctx.k
    x = np.linspace(-3 * k, 3 * k, n_nodes) + 0.137 * 6 * k / max(n_nodes, 1)
    xi = ctx.L.point_at(x)
    symbol = _one_minus_symbol(np.asarray(mu(xi, k)), ctx.h)

    def log_ratio(offset: float) -> np.ndarray:
        kp, _ = ctx.k_parts(xi + 1j * offset)
        _, km = ctx.k_parts(xi - 1j * offset)
        return np.log(kp * km / symbol)

    extrapolated = 2.0 * log_ratio(_PRODUCT_OFFSET) - log_ratio(2.0 * _PRODUCT_OFFSET)
    product = float(np.max(np.abs(np.expm1(extrapolated))))

    eta = 1e-8 * np.maximum(1.0, np.abs(xi))
    a = ctx.density_at(src, xi)
    scale = float(np.max(np.abs(a)))
    hp_on, _ = ctx.h_parts(src, xi)
    hp_up, _ = ctx.h_parts(src, xi + 1j * eta)
    _, hm_down = ctx.h_parts(src, xi - 1j * eta)
    split = float(np.max(np.abs(hp_up + hm_down - a))) / scale
    plemelj = float(np.max(np.abs(hp_on - hp_up))) / scale

    first, second = ctx.f_hat_forms(src, xi)
    two_form = float(np.max(np.abs(first - second)) / np.max(np.abs(first)))
    report = IdentityReport(n_nodes, product, split, two_form, plemelj)
    logger.info(
        f"Identities at {n_nodes} nodes: product={product:.2e}, split={split:.2e}, "
        f"two-form={two_form:.2e}, plemelj={plemelj:.2e}"
    )
    return report
