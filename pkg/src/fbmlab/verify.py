"""Executable verification suite behind `fbmlab verify-all`.

Each function exercises one group of checks at configurable sample sizes and
returns a JSON-ready dict with a `passed` flag; the CLI persists these as
artifacts, and the acceptance tests run them at the contract sample sizes.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.random import Generator, Philox
from scipy.integrate import quad
from scipy.stats import kstest, ks_2samp

from . import variation
from .area import area_convergence, levy_area, levy_area_batch
from .cameron_martin import CMElement, kernel_integral
from .covariance import (
    FbmCovariance,
    HurstParams,
    sample_disjoint_quads,
    sample_rects,
)
from .density import kde, sample_y, smoothness_probe
from .malliavin import (
    area_derivative,
    area_form,
    area_gradient,
    malliavin_batch,
    spectral_diagnostic,
    tail_diagnostic,
)
from .sampling import GridPath, dyadic_times, sample_fbm
from .young import young_integral_2d

__all__ = [
    "appendix_report",
    "covariance_report",
    "area_report",
    "variation_report",
    "cameron_martin_report",
    "malliavin_suite_report",
    "integrability_report",
    "density_report",
    "run_all",
]


def appendix_report(
    params: HurstParams,
    negativity_samples: int = 100_000,
    bound_samples: int = 10_000,
    grid_n: int = 8,
    seed: int = 0,
) -> dict:
    """Negativity on disjoint rectangles, the rectangle bound, and the 2D
    r-variation of R against its proven ceiling, on one kernel."""
    kernel = FbmCovariance(params)
    neg = kernel.verify_negativity(sample_disjoint_quads(params, negativity_samples, seed))
    bound = kernel.verify_rect_bound(sample_rects(params, bound_samples, seed + 1))
    grid = np.linspace(0.0, params.T, grid_n)
    mode = "exact" if grid_n <= variation.EXACT_2D_LIMIT else "heuristic"
    value = kernel.variation_2d(grid, mode=mode)
    lower = params.T ** (2 * params.H)
    upper = kernel.variation_2d_bound()
    var_ok = lower <= value + 1e-12 and value <= upper + 1e-12
    return {
        "H": params.H,
        "T": params.T,
        "lemma_a1": {
            "checked": neg.checked,
            "violations": neg.violations,
            "worst": neg.worst,
        },
        "lemma_a2": {
            "checked": bound.checked,
            "violations": bound.violations,
            "worst": bound.worst_margin,
            "tolerance": bound.tolerance,
            "by_case": bound.by_case,
        },
        "thm_a3": {
            "value": value,
            "bound": upper,
            "lower": lower,
            "mode": mode,
            "grid_n": grid_n,
        },
        "passed": neg.passed and bound.passed and var_ok,
    }


def covariance_report(
    params: HurstParams,
    level: int = 6,
    count: int = 100_000,
    seed: int = 0,
    method: str = "cholesky",
    threads: int = 1,
) -> dict:
    """Empirical path covariance against R, entrywise in MC standard errors."""
    kernel = FbmCovariance(params)
    batch = sample_fbm(params, level, count, seed, method=method, threads=threads)
    target = kernel.cov_matrix(batch.times)
    worst_z = 0.0
    exact_zero_ok = True
    for comp in (0, 1):
        x = batch.values[:, comp, :]
        emp = (x.T @ x) / count
        se = np.sqrt(
            (np.outer(np.diag(target), np.diag(target)) + target**2) / count
        )
        diff = np.abs(emp - target)
        live = se > 0
        worst_z = max(worst_z, float((diff[live] / se[live]).max()))
        exact_zero_ok = exact_zero_ok and bool(np.all(diff[~live] == 0.0))
    var_T = float(batch.values[:, 0, -1].var())
    var_target = params.T ** (2 * params.H)
    var_se = var_target * math.sqrt(2.0 / (count - 1))
    var_z = abs(var_T - var_target) / var_se
    cross = float(np.mean(batch.values[:, 0, -1] * batch.values[:, 1, -1]))
    cross_se = var_target / math.sqrt(count)
    cross_z = abs(cross) / cross_se
    passed = worst_z <= 3.0 and exact_zero_ok and var_z <= 3.0 and cross_z <= 3.0
    return {
        "level": level,
        "count": count,
        "method": method,
        "worst_entry_z": worst_z,
        "var_T": var_T,
        "var_target": var_target,
        "var_z": var_z,
        "cross_covariance_z": cross_z,
        "passed": passed,
    }


def area_report(
    params: HurstParams,
    seed: int = 0,
    brownian_level: int = 12,
    brownian_count: int = 10_000,
    convergence_count: int = 500,
    threads: int = 1,
) -> dict:
    """Deterministic area oracles plus the Brownian variance diagnostic."""
    square = GridPath(
        times=[0.0, 0.25, 0.5, 0.75, 1.0],
        values=[[0.0, 1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0, 0.0]],
    )
    square_err = abs(levy_area(square) - 1.0)

    n = 1 << 12
    t = np.linspace(0.0, 2.0 * math.pi, n + 1)
    circle = GridPath(times=t, values=[np.cos(t) - 1.0, np.sin(t)])
    circle_err = abs(levy_area(circle) - math.pi)

    brownian = HurstParams(0.5, params.T, strict=False)
    batch = sample_fbm(brownian, brownian_level, brownian_count, seed, method="circulant", threads=threads)
    var_a = float(levy_area_batch(batch.values).var())
    var_target = params.T**2 / 4.0
    var_rel = abs(var_a - var_target) / var_target

    conv = area_convergence(params, 4, 12, convergence_count, seed + 1, threads=threads)
    monotone = bool(np.all(np.diff(conv.mean_sq_diff) < 0))

    passed = square_err <= 1e-12 and circle_err <= 1e-5 and var_rel <= 0.05 and monotone
    return {
        "square_error": square_err,
        "circle_error": circle_err,
        "brownian_var": var_a,
        "brownian_var_target": var_target,
        "brownian_var_rel_err": var_rel,
        "brownian_level": brownian_level,
        "brownian_count": brownian_count,
        "convergence_mean_sq_diff": conv.mean_sq_diff,
        "convergence_slope": conv.slope,
        "convergence_monotone": monotone,
        "passed": passed,
    }


def variation_report(
    params: HurstParams,
    trials: int = 1000,
    projection_paths: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> dict:
    """Dynamic programming against brute force, plus the projection bound."""
    g = Generator(Philox(key=[np.uint64(seed), np.uint64(2)]))
    worst_gap = 0.0
    for _ in range(trials):
        n = int(g.integers(4, 19))
        p = float(1.0 + 3.0 * g.random())
        vals = np.cumsum(g.standard_normal(n))
        vals -= vals[0]
        worst_gap = max(worst_gap, abs(variation.pvar_exact(vals, p) - variation.pvar_bruteforce(vals, p)))
    monotone_vals = np.array([0.0, 0.2, 0.5, 1.0])
    monotone_err = abs(variation.pvar_exact(monotone_vals, 3.0) - 1.0)

    p = params.p
    fine_level, coarse_level = 7, 4
    batch = sample_fbm(params, fine_level, projection_paths, seed + 3, threads=threads)
    stride = 1 << (fine_level - coarse_level)
    factor = 3.0 ** (p - 1.0)
    bound_ok = True
    worst_ratio = 0.0
    for i in range(projection_paths):
        full = variation.pvar_exact(batch.values[i].T, p)
        proj = variation.pvar_exact(batch.values[i, :, ::stride].T, p)
        ratio = proj / max(full, 1e-300)
        worst_ratio = max(worst_ratio, ratio)
        bound_ok = bound_ok and proj <= factor * full + 1e-12
    passed = worst_gap <= 1e-12 and monotone_err <= 1e-15 and bound_ok
    return {
        "dp_vs_bruteforce_trials": trials,
        "dp_vs_bruteforce_worst_gap": worst_gap,
        "monotone_error": monotone_err,
        "projection_paths": projection_paths,
        "projection_p": p,
        "projection_bound_factor": factor,
        "projection_worst_ratio": worst_ratio,
        "projection_bound_ok": bound_ok,
        "passed": passed,
    }


def _volterra_identity_worst(kernel: FbmCovariance, grid_n: int = 5) -> float:
    T = kernel.params.T
    pts = np.linspace(T / grid_n, T, grid_n)
    worst = 0.0
    for s in pts:
        for t in pts:
            top = min(s, t)
            val, _ = quad(
                lambda u: kernel.volterra(t, u) * kernel.volterra(s, u),
                0.0,
                top,
                limit=200,
                epsabs=1e-12,
                epsrel=1e-8,
            )
            worst = max(worst, abs(val - kernel.cov(s, t)) / kernel.cov(s, t))
    return worst


def cameron_martin_report(
    params: HurstParams,
    level: int = 8,
    kh_grid: int = 5,
    seed: int = 0,
) -> dict:
    """Reproducing identity, the norm/2D-Young match, and the Volterra check."""
    kernel = FbmCovariance(params)
    g = Generator(Philox(key=[np.uint64(seed), np.uint64(3)]))
    T = params.T

    repro_worst = 0.0
    for _ in range(32):
        s, t = T * g.random(2)
        lhs = CMElement(kernel, [s], [0], [1.0]).inner(CMElement(kernel, [t], [0], [1.0]))
        repro_worst = max(repro_worst, abs(lhs - kernel.cov(s, t)))

    times = dyadic_times(T, level)
    alpha = times.copy()
    element = kernel_integral(kernel, alpha, times)
    norm_sq = element.inner(element)
    fnodes = np.outer(alpha, alpha)
    cells = kernel.rect_grid(times, times)
    young_val = young_integral_2d(fnodes, cells)
    norm_rel = abs(norm_sq - young_val) / abs(young_val)

    const = kernel_integral(kernel, np.ones_like(times), times)
    const_err = abs(const.norm() - T ** params.H)

    kh_worst = _volterra_identity_worst(kernel, kh_grid)

    passed = repro_worst <= 1e-12 and norm_rel <= 1e-10 and const_err <= 1e-12 and kh_worst <= 1e-3
    return {
        "reproducing_worst_abs": repro_worst,
        "norm_vs_young_rel": norm_rel,
        "constant_norm_error": const_err,
        "volterra_identity_worst_rel": kh_worst,
        "volterra_grid": kh_grid,
        "level": level,
        "passed": passed,
    }


def _random_cm_element(kernel: FbmCovariance, g: Generator, atoms: int = 4) -> CMElement:
    T = kernel.params.T
    times = T * (0.05 + 0.95 * g.random(atoms))
    comps = g.integers(0, 2, size=atoms)
    coefs = g.standard_normal(atoms)
    return CMElement(kernel, times, comps, coefs)


def malliavin_suite_report(
    params: HurstParams,
    level: int = 8,
    count: int = 1000,
    duality_pairs: int = 100,
    seed: int = 0,
    threads: int = 1,
) -> dict:
    """Duality, determinant identity, positivity, Gateaux, and boundedness."""
    kernel = FbmCovariance(params)
    T = params.T
    times = dyadic_times(T, level)
    g = Generator(Philox(key=[np.uint64(seed), np.uint64(4)]))

    duality_worst = 0.0
    for _ in range(duality_pairs):
        h = _random_cm_element(kernel, g)
        k = _random_cm_element(kernel, g)
        h_path = GridPath(times=times, values=h.eval(times))
        k_path = GridPath(times=times, values=k.eval(times))
        q_val = area_form(h_path, k_path)
        dual = area_gradient(h_path, kernel).inner(k)
        duality_worst = max(duality_worst, abs(q_val - dual) / max(abs(q_val), 1e-12))

    batch = sample_fbm(params, level, count, seed + 5, threads=threads)
    cols = malliavin_batch(batch, kernel)
    det_rel = np.abs(cols.det_gamma - cols.phi) / np.maximum(np.abs(cols.phi), 1e-300)
    det_worst = float(det_rel.max())
    phi_min = float(cols.phi.min())

    # Cauchy-Schwarz per component: |(Qw)^i(T)|^2 <= T^(2H) |(Qw)^i|^2
    cs_ok = True
    for i in range(min(count, 64)):
        grad = area_gradient(batch.path(i), kernel)
        for c in (0, 1):
            part = CMElement(
                kernel,
                grad.times[grad.comps == c],
                grad.comps[grad.comps == c],
                grad.coefs[grad.comps == c],
            )
            lhs = float(part.eval(np.float64(T))[c]) ** 2
            cs_ok = cs_ok and lhs <= T ** (2 * params.H) * part.inner(part) + 1e-10

    eps = 1e-5
    gateaux_worst = 0.0
    for i in range(8):
        omega = batch.path(i)
        h = _random_cm_element(kernel, g)
        h_vals = h.eval(times)
        plus = GridPath(times=times, values=omega.values + eps * h_vals)
        minus = GridPath(times=times, values=omega.values - eps * h_vals)
        central = (levy_area(plus) - levy_area(minus)) / (2.0 * eps)
        direct = area_derivative(omega, GridPath(times=times, values=h_vals))
        gateaux_worst = max(gateaux_worst, abs(central - direct))

    p = params.p
    factor = T ** (2 * params.H) / 4.0 + 2.0 * (5.0 * T) ** (2 * params.H)
    bound_ok = True
    bound_worst = 0.0
    for i in range(count):
        pv = variation.pvar_exact(batch.values[i].T, p)
        ratio = cols.qnorm2[i] / (factor * pv**2)
        bound_worst = max(bound_worst, ratio)
        bound_ok = bound_ok and ratio <= 1.0 + 1e-12

    passed = (
        duality_worst <= 1e-6
        and det_worst <= 1e-10
        and phi_min >= -1e-10
        and cs_ok
        and gateaux_worst <= 1e-8
        and bound_ok
    )
    return {
        "level": level,
        "count": count,
        "duality_pairs": duality_pairs,
        "duality_worst_rel": duality_worst,
        "det_vs_phi_worst_rel": det_worst,
        "phi_min": phi_min,
        "cauchy_schwarz_ok": cs_ok,
        "gateaux_worst_abs": gateaux_worst,
        "boundedness_factor": factor,
        "boundedness_worst_ratio": bound_worst,
        "boundedness_ok": bound_ok,
        "passed": passed,
    }


def integrability_report(
    params: HurstParams,
    level: int = 8,
    count: int = 10_000,
    seed: int = 0,
    s_grid=(10.0, 100.0, 1000.0, 10_000.0),
    spectral_grids=(8, 16, 32),
    threads: int = 1,
) -> dict:
    """Small-ball tail slope plus spectrum growth and trace stability."""
    tail = tail_diagnostic(params, level, count, seed, s_grid, threads=threads)
    reports = [spectral_diagnostic(params, n) for n in spectral_grids]
    counts = [r.positive_count for r in reports]
    counts_increasing = all(a < b for a, b in zip(counts, counts[1:]))
    psd_ok = all(r.min_eigenvalue >= -1e-8 for r in reports)
    trace_rel = abs(reports[-1].trace - reports[-2].trace) / abs(reports[-1].trace)
    passed = tail.slope <= -1.0 and counts_increasing and psd_ok and trace_rel <= 0.10
    return {
        "tail_s_grid": list(tail.s_grid),
        "tail_log_mean_exp": list(tail.log_mean_exp),
        "tail_slope": tail.slope,
        "tail_excluded": tail.excluded,
        "inv_moments": tail.inv_moments,
        "inv_moments_stable": tail.stable,
        "spectral_grids": list(spectral_grids),
        "positive_counts": counts,
        "positive_counts_increasing": counts_increasing,
        "traces": [r.trace for r in reports],
        "trace_rel_change": trace_rel,
        "psd_ok": psd_ok,
        "passed": passed,
    }


def density_report(
    params: HurstParams,
    level: int = 8,
    ks_count: int = 10_000,
    kde_count: int = 100_000,
    grid_n: int = 21,
    seed: int = 0,
    threads: int = 1,
) -> dict:
    """Marginal laws, area symmetry, KDE mass, and the smoothness probe."""
    samples = sample_y(params, level, kde_count, seed, threads=threads)
    sigma = params.T ** params.H
    ks_b = kstest(samples[:ks_count, 0], "norm", args=(0.0, sigma))
    half = ks_count // 2
    ks_sym = ks_2samp(samples[:half, 2], -samples[half : 2 * half, 2])

    estimate = kde(samples, grid_n=grid_n)
    mass = estimate.mass()
    probe = smoothness_probe(estimate)

    mass_ok = 0.9 <= mass <= 1.05 and estimate.captured_fraction >= 0.95
    passed = bool(
        ks_b.pvalue > 0.01 and ks_sym.pvalue > 0.01 and mass_ok and probe.all_finite
    )
    return {
        "level": level,
        "ks_count": ks_count,
        "kde_count": kde_count,
        "grid_n": grid_n,
        "ks_b1_pvalue": float(ks_b.pvalue),
        "sign_flip_pvalue": float(ks_sym.pvalue),
        "kde_mass": mass,
        "captured_fraction": estimate.captured_fraction,
        "probe_all_finite": probe.all_finite,
        "probe_max_gradient": probe.max_gradient,
        "probe_mixed_partial_rel_err": probe.mixed_partial_rel_err,
        "passed": passed,
    }


def run_all(
    params: HurstParams,
    seed: int = 0,
    quick: bool = False,
    threads: int = 1,
) -> dict:
    """Every check group at full or reduced sample sizes; see the CLI."""
    scale = 10 if quick else 1
    reports = {
        "appendix": appendix_report(
            params,
            negativity_samples=100_000 // scale,
            bound_samples=10_000 // scale,
            seed=seed,
        ),
        "covariance": covariance_report(
            params, count=100_000 // scale, seed=seed, threads=threads
        ),
        "area": area_report(
            params,
            seed=seed,
            brownian_count=10_000 if not quick else 4_000,
            convergence_count=500 // (2 if quick else 1),
            threads=threads,
        ),
        "variation": variation_report(
            params,
            trials=1000 // scale,
            projection_paths=1000 // scale,
            seed=seed,
            threads=threads,
        ),
        "cameron_martin": cameron_martin_report(
            params, kh_grid=3 if quick else 5, seed=seed
        ),
        "malliavin": malliavin_suite_report(
            params,
            count=1000 // (5 if quick else 1),
            duality_pairs=100 // (5 if quick else 1),
            seed=seed,
            threads=threads,
        ),
        "integrability": integrability_report(
            params, count=10_000 // scale, seed=seed, threads=threads
        ),
        "density": density_report(
            params,
            ks_count=10_000 // scale,
            kde_count=100_000 // scale,
            seed=seed,
            threads=threads,
        ),
    }
    reports["summary"] = {
        "H": params.H,
        "T": params.T,
        "seed": seed,
        "quick": quick,
        "checks": {name: rep["passed"] for name, rep in reports.items()},
        "passed": all(rep["passed"] for rep in reports.values()),
    }
    return reports
