import math

import numpy as np
import pytest

from fbmlab import (
    DomainError,
    FbmCovariance,
    HurstParams,
    QuadratureError,
    Rect,
    interval_case,
    sample_disjoint_quads,
    sample_rects,
)

# 1/2 * (1 - 2 * 0.5**0.8), recomputed with mpmath at 50 digits
MU_HALF_SPLIT = -0.074349177498517481376700502073964985
# 5**0.8
VAR2D_CEILING_H04 = 3.6238983183884783


class TestHurstParams:
    def test_strict_range(self):
        with pytest.raises(ValueError):
            HurstParams(0.3)
        with pytest.raises(ValueError):
            HurstParams(0.5)
        HurstParams(0.4)

    def test_diagnostic_range(self):
        HurstParams(0.5, strict=False)
        HurstParams(0.2, strict=False)
        with pytest.raises(ValueError):
            HurstParams(0.6, strict=False)
        with pytest.raises(ValueError):
            HurstParams(0.0, strict=False)

    def test_derived_indices(self):
        p = HurstParams(0.4)
        assert p.r == pytest.approx(1.25)
        assert p.r > 1.0
        lo, hi = p.p_window
        assert lo == pytest.approx(2.5)
        assert hi == pytest.approx(5.0)
        assert lo < p.p < hi

    def test_p_window_needs_h_below_half(self):
        p = HurstParams(0.5, strict=False)
        with pytest.raises(DomainError):
            _ = p.p_window


class TestCov:
    def test_diagonal_is_power_law(self, kernel):
        assert kernel.cov(1.0, 1.0) == 1.0
        s = 0.37
        assert kernel.cov(s, s) == pytest.approx(s**0.8, rel=1e-15)

    def test_zero_row(self, kernel):
        assert kernel.cov(0.0, 0.7) == 0.0
        assert kernel.cov(0.7, 0.0) == 0.0

    def test_half_point(self, kernel):
        # |t - s| = s makes the s terms cancel, leaving t^(2H) / 2
        assert kernel.cov(0.5, 1.0) == pytest.approx(0.5, rel=1e-14)

    def test_symmetry_exact(self, kernel, rng):
        for _ in range(200):
            s, t = rng.random(2)
            assert kernel.cov(s, t) == kernel.cov(t, s)

    def test_domain_error(self, kernel):
        with pytest.raises(DomainError):
            kernel.cov(-0.1, 0.5)
        with pytest.raises(DomainError):
            kernel.cov(0.5, 1.5)

    def test_subnormal_base_survives(self):
        k = FbmCovariance(HurstParams(0.35))
        tiny = 1e-305
        val = k.cov(tiny, tiny)
        assert 0.0 < val < 1e-200
        assert k.cov(0.0, 0.0) == 0.0


class TestRectMeasure:
    def test_frozen_split_value(self, kernel):
        mu = kernel.rect_measure(Rect(0.0, 0.5, 0.5, 1.0))
        assert mu == pytest.approx(MU_HALF_SPLIT, rel=1e-14)

    def test_disjoint_is_negative(self, kernel):
        assert kernel.rect_measure(Rect(0.1, 0.2, 0.6, 0.9)) < 0.0

    def test_square_recovers_diagonal(self, kernel):
        t = 0.73
        assert kernel.rect_measure(Rect(0.0, t, 0.0, t)) == pytest.approx(
            kernel.cov(t, t), rel=1e-15
        )

    def test_matches_cov_differences_within_ulps(self, kernel, rng):
        for _ in range(500):
            a, b = np.sort(rng.random(2))
            c, d = np.sort(rng.random(2))
            if a == b or c == d:
                continue
            mu = kernel.rect_measure(Rect(a, b, c, d))
            via_cov = (
                kernel.cov(b, d) - kernel.cov(a, d) - kernel.cov(b, c) + kernel.cov(a, c)
            )
            tol = 4 * np.spacing(max(abs(mu), abs(via_cov), 1e-6))
            assert abs(mu - via_cov) <= tol

    def test_additive_in_first_interval(self, kernel, rng):
        for _ in range(300):
            a, b_mid, b = np.sort(rng.random(3))
            c, d = np.sort(rng.random(2))
            if len({a, b_mid, b}) < 3 or c == d:
                continue
            whole = kernel.rect_measure(Rect(a, b, c, d))
            parts = kernel.rect_measure(Rect(a, b_mid, c, d)) + kernel.rect_measure(
                Rect(b_mid, b, c, d)
            )
            assert whole == pytest.approx(parts, abs=1e-12)

    def test_invalid_rect(self):
        with pytest.raises(DomainError):
            Rect(0.5, 0.5, 0.1, 0.2)
        with pytest.raises(DomainError):
            Rect(-0.1, 0.5, 0.1, 0.2)

    def test_negativity_property_100k(self, params, kernel):
        quads = sample_disjoint_quads(params, 100_000, seed=101)
        rep = kernel.verify_negativity(quads)
        assert rep.passed
        assert rep.worst < 0.0

    def test_bound_property_random_rects(self, params, kernel):
        rects = sample_rects(params, 10_000, seed=202)
        rep = kernel.verify_rect_bound(rects)
        assert rep.passed
        assert all(rep.by_case[c]["count"] > 0 for c in ("nested", "overlap", "disjoint"))

    def test_bound_nested_case_uses_short_side(self):
        k = FbmCovariance(HurstParams(0.35))
        rect = Rect(0.1, 0.9, 0.3, 0.5)  # (c, d) nested in (a, b)
        assert interval_case(rect) == "nested"
        mu = abs(k.rect_measure(rect))
        assert mu <= (rect.d - rect.c) ** 0.7 + 1e-12

    def test_bound_degenerate_thin_rect(self, kernel):
        rect = Rect(0.2, 0.6, 0.4, 0.4 + 1e-9)
        assert abs(kernel.rect_measure(rect)) <= (1e-9) ** 0.8 + 1e-12


class TestConcavityToolbox:
    def test_subadditive_power(self, rng):
        h = 0.4
        x, y = rng.random((2, 100_000))
        assert np.all((x + y) ** (2 * h) - x ** (2 * h) <= y ** (2 * h) + 1e-12)

    def test_superadditive_inverse_power(self, rng):
        h = 0.4
        x, y = rng.random((2, 100_000))
        r = 1.0 / (2 * h)
        assert np.all(x**r + y**r <= (x + y) ** r + 1e-12)


class TestVolterra:
    def test_identity_reproduces_cov(self, kernel):
        from scipy.integrate import quad

        for s, t in [(0.3, 0.3), (0.2, 0.9), (0.6, 0.8)]:
            val, _ = quad(
                lambda u: kernel.volterra(t, u) * kernel.volterra(s, u),
                0.0,
                min(s, t),
                limit=200,
                epsabs=1e-12,
                epsrel=1e-8,
            )
            assert val == pytest.approx(kernel.cov(s, t), rel=1e-5)

    def test_divergence_approaching_diagonal(self, kernel):
        t = 0.8
        vals = [kernel.volterra(t, t - gap) for gap in (1e-2, 1e-4, 1e-6)]
        assert vals[0] < vals[1] < vals[2]

    def test_brownian_kernel_is_constant(self):
        k = FbmCovariance(HurstParams(0.5, strict=False))
        assert k.volterra(0.9, 0.2) == pytest.approx(k.volterra(0.5, 0.4), rel=1e-12)
        assert k.volterra(0.9, 0.2) == pytest.approx(1.0, rel=1e-12)

    def test_domain_errors(self, kernel):
        with pytest.raises(DomainError):
            kernel.volterra(0.5, 0.5)
        with pytest.raises(DomainError):
            kernel.volterra(0.5, 0.7)
        with pytest.raises(DomainError):
            kernel.volterra(0.5, 0.0)

    def test_nonconvergence_carries_achieved_tolerance(self, params):
        k = FbmCovariance(params, quad_rel_tol=1e-10, quad_max_nodes=64)
        with pytest.raises(QuadratureError) as err:
            k.volterra(1.0, 1e-6)
        assert math.isfinite(err.value.achieved)
        assert err.value.achieved > 0.0


class TestVariation2d:
    def test_single_cell_is_diagonal_power(self, kernel, params):
        grid = np.array([0.0, params.T])
        val = kernel.variation_2d(grid, mode="exact")
        assert val == pytest.approx(params.T ** (2 * params.H), rel=1e-14)

    def test_exact_within_proven_bounds(self, kernel, params):
        grid = np.linspace(0.0, params.T, 8)
        val = kernel.variation_2d(grid, mode="exact")
        assert params.T ** (2 * params.H) <= val <= VAR2D_CEILING_H04

    def test_mode_ordering(self, kernel, params):
        grid = np.linspace(0.0, params.T, 8)
        exact = kernel.variation_2d(grid, mode="exact")
        heur = kernel.variation_2d(grid, mode="heuristic")
        gridonly = kernel.variation_2d(grid, mode="grid-only")
        assert gridonly <= heur + 1e-12
        assert heur <= exact + 1e-12

    def test_ceiling_across_strict_range(self):
        for h in (0.35, 0.40, 0.45):
            k = FbmCovariance(HurstParams(h))
            grid = np.linspace(0.0, 1.0, 8)
            assert k.variation_2d(grid, mode="exact") <= (5.0) ** (2 * h) + 1e-12

    def test_refinement_is_monotone(self, kernel, params):
        vals = [
            kernel.variation_2d(np.linspace(0.0, params.T, n), mode="exact")
            for n in (3, 5, 9)
        ]
        assert vals[0] <= vals[1] + 1e-12 <= vals[2] + 2e-12

    def test_grid_must_span_horizon(self, kernel):
        with pytest.raises(DomainError):
            kernel.variation_2d(np.array([0.0, 0.5]))
