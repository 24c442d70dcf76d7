"""Closed-form covariance machinery for fractional Brownian motion.

Deterministic building blocks: the covariance R(s, t), the finitely additive
signed measure it induces on half-open rectangles, the Volterra kernel whose
autoconvolution reproduces R, and executable checks of the three structural
facts the rest of the package relies on: disjoint increments are negatively
correlated, the rectangle mass is bounded by the shorter side raised to 2H,
and the two-dimensional r-variation of R stays under (5T)^(2H).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import gamma as _gamma

from . import variation

__all__ = [
    "DomainError",
    "QuadratureError",
    "HurstParams",
    "Rect",
    "FbmCovariance",
    "RectBoundReport",
    "NegativityReport",
    "sample_rects",
    "sample_disjoint_quads",
    "interval_case",
]


class DomainError(ValueError):
    """Argument lies outside the kernel's domain."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature stopped short of the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved relative tolerance {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True)
class HurstParams:
    """Hurst exponent H and horizon T, plus the derived variation indices.

    With ``strict=True`` (the default) construction requires 1/3 < H < 1/2,
    the regime in which every bound checked by this package is proven.
    ``strict=False`` admits 0 < H <= 1/2 for diagnostics; H = 1/2 is the
    Brownian oracle used by closed-form variance checks.
    """

    H: float
    T: float = 1.0
    strict: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.H) and math.isfinite(self.T)):
            raise ValueError("H and T must be finite")
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.strict:
            if not (1.0 / 3.0 < self.H < 0.5):
                raise ValueError(
                    f"strict mode requires 1/3 < H < 1/2, got H={self.H}; "
                    "pass strict=False for diagnostic use"
                )
        elif not (0.0 < self.H <= 0.5):
            raise ValueError(f"diagnostic mode requires 0 < H <= 1/2, got H={self.H}")

    @property
    def r(self) -> float:
        """Variation index 1/(2H) of the covariance; exceeds 1 when H < 1/2."""
        return 1.0 / (2.0 * self.H)

    @property
    def p_window(self) -> tuple[float, float]:
        """Open interval (1/H, 1/(1-2H)) of admissible path variation orders."""
        if self.H >= 0.5:
            raise DomainError("p window is defined only for H < 1/2")
        lo, hi = 1.0 / self.H, 1.0 / (1.0 - 2.0 * self.H)
        if lo >= hi:
            raise DomainError(f"p window is empty for H={self.H} (needs H > 1/3)")
        return lo, hi

    @property
    def p(self) -> float:
        """Midpoint of the p window; the default path variation order."""
        lo, hi = self.p_window
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Rect:
    """Half-open rectangle (a, b] x (c, d] inside the first quadrant."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (0.0 <= self.a < self.b and 0.0 <= self.c < self.d):
            raise DomainError(
                f"need 0 <= a < b and 0 <= c < d, got ({self.a}, {self.b}] x ({self.c}, {self.d}]"
            )


def interval_case(rect: Rect) -> str:
    """Classify the two side intervals as 'nested', 'overlap', or 'disjoint'."""
    a, b, c, d = rect.a, rect.b, rect.c, rect.d
    if b <= c or d <= a:
        return "disjoint"
    if (a <= c and d <= b) or (c <= a and b <= d):
        return "nested"
    return "overlap"


def _pow_2h(x, two_h: float):
    """x**two_h for x >= 0 with 0**two_h = 0.

    Bases below 1e-300 go through the log domain, where the pow path would
    degrade into the subnormal range; everything else uses native pow, which
    carries about one ulp instead of the |log x| ulps of exp(a log x).
    """
    x = np.asarray(x, dtype=float)
    out = np.power(np.where(x > 0.0, x, 1.0), two_h)
    tiny = (x > 0.0) & (x < 1e-300)
    if np.any(tiny):
        out = np.where(tiny, np.exp(two_h * np.log(np.where(tiny, x, 1.0))), out)
    return np.where(x > 0.0, out, 0.0)


@lru_cache(maxsize=64)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class RectBoundReport:
    """Outcome of checking |mu(rect)| <= min(width, height)^(2H) on a family."""

    checked: int
    violations: int
    worst_margin: float
    worst_rect: Rect | None
    by_case: dict[str, dict[str, float]]
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class NegativityReport:
    """Outcome of checking mu < 0 on rectangles built from disjoint intervals."""

    checked: int
    violations: int
    worst: float  # largest mu seen; negative means every check passed

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class FbmCovariance:
    """Evaluator for R(s, t), the rectangle measure, and the Volterra kernel."""

    params: HurstParams
    quad_rel_tol: float = 1e-10
    quad_max_nodes: int = 4096

    @cached_property
    def volterra_normalizer(self) -> float:
        """Normalizing constant making the kernel autoconvolution equal R."""
        H = self.params.H
        num = 2.0 * H * _gamma(1.5 - H)
        den = _gamma(H + 0.5) * _gamma(2.0 - 2.0 * H)
        return math.sqrt(num / den)

    def _check_times(self, *arrays) -> None:
        T = self.params.T
        for arr in arrays:
            if np.any(arr < 0.0) or np.any(arr > T):
                raise DomainError(f"time arguments must lie in [0, {T}]")

    def cov(self, s, t):
        """R(s, t) = (s^2H + t^2H - |t - s|^2H) / 2, broadcast over inputs."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        self._check_times(s, t)
        th = 2.0 * self.params.H
        out = 0.5 * (_pow_2h(s, th) + _pow_2h(t, th) - _pow_2h(np.abs(t - s), th))
        return float(out) if out.ndim == 0 else out

    def cov_matrix(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return self.cov(times[:, None], times[None, :])

    def _mu(self, a, b, c, d):
        th = 2.0 * self.params.H
        return 0.5 * (
            _pow_2h(np.abs(d - a), th)
            + _pow_2h(np.abs(c - b), th)
            - _pow_2h(np.abs(d - b), th)
            - _pow_2h(np.abs(c - a), th)
        )

    def rect_measure(self, rect: Rect) -> float:
        """Signed mass of (a, b] x (c, d]: the covariance of the two increments."""
        if rect.b > self.params.T or rect.d > self.params.T:
            raise DomainError(f"rectangle exceeds the horizon T={self.params.T}")
        return float(self._mu(rect.a, rect.b, rect.c, rect.d))

    def rect_grid(self, s_nodes: np.ndarray, t_nodes: np.ndarray) -> np.ndarray:
        """Cell masses over a grid: entry (i, j) is mu((s_i, s_i+1] x (t_j, t_j+1])."""
        s = np.asarray(s_nodes, dtype=float)
        t = np.asarray(t_nodes, dtype=float)
        self._check_times(s, t)
        if np.any(np.diff(s) <= 0) or np.any(np.diff(t) <= 0):
            raise DomainError("grid nodes must be strictly increasing")
        return self._mu(s[:-1, None], s[1:, None], t[None, :-1], t[None, 1:])

    def _volterra_inner_scaled(self, ratio: float, nodes: int) -> float:
        # J(W) = int_1^W (w-1)^(H-1/2) w^(H-3/2) dw as a function of W = t/s.
        # On [1, min(W, 2)] substitute v = (w-1)^(H+1/2); on [2, W] substitute
        # w = 1/z then y = z^(1-2H). Both transformed integrands are bounded,
        # so the value is stable for ratios all the way up to t/s ~ 1e300.
        H = self.params.H
        beta = H + 0.5
        x, w8 = _gauss_legendre(nodes)
        vmax = (min(ratio, 2.0) - 1.0) ** beta
        v = 0.5 * vmax * (x + 1.0)
        total = 0.5 * vmax * float(w8 @ (1.0 + v ** (1.0 / beta)) ** (H - 1.5)) / beta
        if ratio > 2.0:
            g = 1.0 - 2.0 * H
            lo, hi = ratio**-g, 0.5**g
            y = 0.5 * ((hi - lo) * x + (hi + lo))
            total += 0.5 * (hi - lo) * float(w8 @ (1.0 - y ** (1.0 / g)) ** (H - 0.5)) / g
        return total

    def _volterra_inner(self, t: float, s: float) -> float:
        # int_s^t (u-s)^(H-1/2) u^(H-3/2) du = s^(2H-1) J(t/s)
        H = self.params.H
        prev = None
        err = math.inf
        nodes = 64
        while nodes <= self.quad_max_nodes:
            val = self._volterra_inner_scaled(t / s, nodes)
            if prev is not None:
                err = abs(val - prev) / max(abs(val), 1e-300)
                if err <= self.quad_rel_tol:
                    return s ** (2.0 * H - 1.0) * val
            prev = val
            nodes *= 2
        raise QuadratureError("Volterra inner integral did not converge", err)

    def volterra(self, t: float, s: float) -> float:
        """Kernel K(t, s) with int_0^(s^t) K(t, u) K(s, u) du = R(s, t).

        Diverges like (t - s)^(H - 1/2) as s approaches t from below.
        """
        if not (0.0 < s < t <= self.params.T):
            raise DomainError(f"need 0 < s < t <= T, got s={s}, t={t}")
        H = self.params.H
        first = (t / s) ** (H - 0.5) * (t - s) ** (H - 0.5)
        if H == 0.5:  # the correction term carries an exact zero factor
            return self.volterra_normalizer * first
        inner = self._volterra_inner(t, s)
        return self.volterra_normalizer * (first - (H - 0.5) * s ** (0.5 - H) * inner)

    def verify_rect_bound(self, rects: list[Rect], tolerance: float = 1e-12) -> RectBoundReport:
        """Check |mu(rect)| <= min(side lengths)^(2H) + tolerance for each rect."""
        th = 2.0 * self.params.H
        worst_margin = math.inf
        worst_rect = None
        violations = 0
        by_case: dict[str, dict[str, float]] = {
            name: {"count": 0, "worst_margin": math.inf} for name in ("nested", "overlap", "disjoint")
        }
        for rect in rects:
            mu = self.rect_measure(rect)
            bound = float(min(_pow_2h(rect.b - rect.a, th), _pow_2h(rect.d - rect.c, th)))
            margin = bound - abs(mu)
            case = interval_case(rect)
            stats = by_case[case]
            stats["count"] += 1
            stats["worst_margin"] = min(stats["worst_margin"], margin)
            if margin < worst_margin:
                worst_margin = margin
                worst_rect = rect
            if margin < -tolerance:
                violations += 1
        for stats in by_case.values():
            if stats["count"] == 0:
                stats["worst_margin"] = math.nan
        return RectBoundReport(
            checked=len(rects),
            violations=violations,
            worst_margin=worst_margin,
            worst_rect=worst_rect,
            by_case=by_case,
            tolerance=tolerance,
        )

    def verify_negativity(self, quads: np.ndarray) -> NegativityReport:
        """Check mu((a, b] x (c, d]) < 0 for rows (a, b, c, d) with a < b < c < d."""
        quads = np.asarray(quads, dtype=float)
        if quads.ndim != 2 or quads.shape[1] != 4:
            raise ValueError("quads must be an (n, 4) array")
        a, b, c, d = quads.T
        if not np.all((a < b) & (b < c) & (c < d)):
            raise DomainError("rows must satisfy a < b < c < d")
        self._check_times(a, d)
        mu = self._mu(a, b, c, d)
        return NegativityReport(
            checked=len(mu),
            violations=int(np.count_nonzero(mu >= 0.0)),
            worst=float(mu.max()) if len(mu) else math.nan,
        )

    def variation_2d(self, grid: np.ndarray, mode: str = "exact") -> float:
        """2D r-variation of R over subpartition pairs of the given grid.

        Modes mirror :func:`fbmlab.variation.pvar2d_cells`: ``exact`` enumerates
        every subpartition pair (at most 9 grid points per axis), ``grid-only``
        scores the full grid, ``heuristic`` runs alternating coordinate ascent.
        """
        grid = np.asarray(grid, dtype=float)
        if grid[0] != 0.0 or grid[-1] != self.params.T:
            raise DomainError("grid must start at 0 and end at T")
        cells = self.rect_grid(grid, grid)
        return variation.pvar2d_cells(cells, self.params.r, mode=mode)

    def variation_2d_bound(self) -> float:
        """Proven ceiling (5T)^(2H) for the 2D r-variation of R."""
        return (5.0 * self.params.T) ** (2.0 * self.params.H)


def _uniform(g: Generator, count: int) -> np.ndarray:
    return (g.integers(0, 1 << 53, size=count).astype(np.float64) + 0.5) / float(1 << 53)


def sample_rects(params: HurstParams, count: int, seed: int) -> list[Rect]:
    """Random rectangles in (0, T]^2, mixing the three interval configurations."""
    g = Generator(Philox(key=[np.uint64(seed), np.uint64(0)]))
    T = params.T
    out: list[Rect] = []
    while len(out) < count:
        draw = np.sort(_uniform(g, 4).reshape(2, 2) * T, axis=1)
        (a, b), (c, d) = draw
        if a < b and c < d:
            out.append(Rect(a, b, c, d))
    return out


def sample_disjoint_quads(params: HurstParams, count: int, seed: int) -> np.ndarray:
    """(count, 4) rows a < b < c < d drawn uniformly in [0, T]."""
    g = Generator(Philox(key=[np.uint64(seed), np.uint64(1)]))
    rows = np.sort(_uniform(g, 4 * count).reshape(count, 4) * params.T, axis=1)
    ok = (rows[:, 0] < rows[:, 1]) & (rows[:, 1] < rows[:, 2]) & (rows[:, 2] < rows[:, 3])
    rows = rows[ok]
    while len(rows) < count:
        extra = np.sort(_uniform(g, 4).reshape(1, 4) * params.T, axis=1)
        if extra[0, 0] < extra[0, 1] < extra[0, 2] < extra[0, 3]:
            rows = np.vstack([rows, extra])
    return rows[:count]
