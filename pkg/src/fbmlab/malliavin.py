"""The area's derivative operator and the covariance matrix it generates.

For a planar path w with quarter turn w~ = (w2, -w1), the symmetric form
q(h, k) = (int h . dk~ + int k . dh~) / 2 has the Levy area as half its
diagonal. Its Riesz representative maps a path to the kernel combination

    Q w = R(T, .) w~(T) / 2 - int_0^T w~(t) R(dt, .),

and the 3x3 covariance matrix of (path endpoint, area) is assembled from
T^(2H), Q w evaluated at T, and the Gram norm of Q w. The determinant has
the closed form phi = T^(4H) |Qw|_gram^2 - T^(2H) |Qw(T)|^2, nonnegative by
Cauchy-Schwarz; diagnostics below gather evidence that 1/phi has moments of
every order (small-ball tail decay, spectrum of the restricted form, and
moment stability of the area itself).

The integral in Q uses the same grid as the path it is applied to. That
choice makes the discrete duality <Qh, k> = q(h, k) an algebraic identity
(checked to roundoff) instead of a quadrature approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.special import logsumexp

from .area import levy_area_batch
from .cameron_martin import CMElement
from .covariance import FbmCovariance, HurstParams
from .sampling import GridPath, SampleBatch, dyadic_times, sample_fbm
from .young import young_integral

__all__ = [
    "quarter_turn",
    "area_form",
    "area_derivative",
    "area_gradient",
    "MalliavinReport",
    "malliavin_report",
    "MalliavinBatch",
    "malliavin_batch",
    "TailReport",
    "tail_diagnostic",
    "SpectralReport",
    "spectral_diagnostic",
    "MomentReport",
    "moment_diagnostic",
]

PHI_FLOOR_FACTOR = 1e-14  # times T^(4H); smaller phi values sit at discretization noise


def quarter_turn(values: np.ndarray) -> np.ndarray:
    """(x, y) -> (y, -x) on a (..., 2, n) stack; applying it twice negates."""
    values = np.asarray(values, dtype=float)
    return np.stack([values[..., 1, :], -values[..., 0, :]], axis=-2)


def _require_shared_grid(h: GridPath, k: GridPath) -> None:
    if h.times.shape != k.times.shape or np.any(h.times != k.times):
        raise ValueError("paths must share a grid")
    if h.dim != 2 or k.dim != 2:
        raise ValueError("the form needs 2-component paths")


def area_form(h: GridPath, k: GridPath) -> float:
    """Symmetric form q(h, k) via midpoint Young sums on the shared grid."""
    _require_shared_grid(h, k)
    kt = quarter_turn(k.values)
    ht = quarter_turn(h.values)
    h_dk = sum(young_integral(h.values[c], kt[c]) for c in (0, 1))
    k_dh = sum(young_integral(k.values[c], ht[c]) for c in (0, 1))
    return 0.5 * (h_dk + k_dh)


def area_derivative(omega: GridPath, h: GridPath) -> float:
    """Directional derivative of the Levy area at `omega` along `h`.

    The area is quadratic, so this equals the symmetric form q(omega, h),
    and central differences recover it exactly up to roundoff.
    """
    return area_form(omega, h)


def _gradient_coefs(values: np.ndarray) -> np.ndarray:
    # Node coefficients of both components of Q applied to a (..., 2, n+1)
    # stack of path values, discretized on the path's own grid (midpoint rule).
    tilde = quarter_turn(values)
    mids = 0.5 * (tilde[..., :-1] + tilde[..., 1:])
    w = np.zeros(values.shape)
    w[..., 0] = mids[..., 0]
    w[..., 1:-1] = mids[..., 1:] - mids[..., :-1]
    w[..., -1] = -mids[..., -1] + 0.5 * tilde[..., -1]
    return w


def area_gradient(path: GridPath, kernel: FbmCovariance) -> CMElement:
    """The kernel combination Q applied to `path`, one component per row."""
    if path.dim != 2:
        raise ValueError("the gradient needs a 2-component path")
    if path.times[-1] != kernel.params.T:
        raise ValueError("path horizon and kernel horizon differ")
    w = _gradient_coefs(path.values)
    n = len(path.times)
    return CMElement(
        kernel=kernel,
        times=np.tile(path.times, 2),
        comps=np.repeat(np.array([0, 1], dtype=np.int8), n),
        coefs=w.reshape(-1),
    )


def _det3(m: np.ndarray) -> float:
    # cofactor expansion along the first row; no pivoting, bit-reproducible
    return float(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


@dataclass(frozen=True)
class MalliavinReport:
    """Covariance matrix of (endpoint, area) for one driving path.

    `det_gamma` comes from cofactor expansion of the assembled matrix,
    `phi` from the closed form; they agree to roundoff and phi is
    nonnegative up to roundoff.
    """

    gamma: np.ndarray  # (3, 3)
    q_at_T: np.ndarray  # (2,)
    qnorm2: float
    phi: float
    det_gamma: float


def _assemble(t2h: float, q_at_T: np.ndarray, qnorm2: float) -> np.ndarray:
    gamma = np.zeros((3, 3))
    gamma[0, 0] = gamma[1, 1] = t2h
    gamma[:2, 2] = q_at_T
    gamma[2, :2] = q_at_T
    gamma[2, 2] = qnorm2
    return gamma


def malliavin_report(path: GridPath, kernel: FbmCovariance) -> MalliavinReport:
    """Assemble the 3x3 matrix, its determinant, and the closed form for one path."""
    H, T = kernel.params.H, kernel.params.T
    grad = area_gradient(path, kernel)
    qnorm2 = grad.inner(grad)
    q_at_T = grad.eval(np.float64(T))
    t2h = T ** (2 * H)
    gamma = _assemble(t2h, q_at_T, qnorm2)
    phi = T ** (4 * H) * qnorm2 - t2h * float(q_at_T @ q_at_T)
    return MalliavinReport(
        gamma=gamma, q_at_T=q_at_T, qnorm2=qnorm2, phi=phi, det_gamma=_det3(gamma)
    )


@dataclass(frozen=True)
class MalliavinBatch:
    """Columnar per-sample reports for a whole sample batch."""

    params: HurstParams
    level: int
    seed: int
    q_at_T: np.ndarray  # (N, 2)
    qnorm2: np.ndarray  # (N,)
    phi: np.ndarray  # (N,)
    det_gamma: np.ndarray  # (N,)

    @property
    def count(self) -> int:
        return len(self.phi)


def _batch_columns(values: np.ndarray, times: np.ndarray, kernel: FbmCovariance):
    # One shared Gram matrix over the grid serves every sample; per-sample
    # work is two matrix-vector products.
    H, T = kernel.params.H, kernel.params.T
    K = kernel.cov_matrix(times)
    w = _gradient_coefs(values)
    a = w @ K
    qnorm2 = np.einsum("sci,sci->s", a, w)
    q_at_T = a[..., -1]
    t2h = T ** (2 * H)
    phi = T ** (4 * H) * qnorm2 - t2h * (q_at_T**2).sum(axis=-1)
    g = np.zeros((len(qnorm2), 3, 3))
    g[:, 0, 0] = g[:, 1, 1] = t2h
    g[:, :2, 2] = q_at_T
    g[:, 2, :2] = q_at_T
    g[:, 2, 2] = qnorm2
    det = (
        g[:, 0, 0] * (g[:, 1, 1] * g[:, 2, 2] - g[:, 1, 2] * g[:, 2, 1])
        - g[:, 0, 1] * (g[:, 1, 0] * g[:, 2, 2] - g[:, 1, 2] * g[:, 2, 0])
        + g[:, 0, 2] * (g[:, 1, 0] * g[:, 2, 1] - g[:, 1, 1] * g[:, 2, 0])
    )
    return q_at_T, qnorm2, phi, det


def malliavin_batch(batch: SampleBatch, kernel: FbmCovariance | None = None) -> MalliavinBatch:
    kernel = kernel or FbmCovariance(batch.params)
    q_at_T, qnorm2, phi, det = _batch_columns(batch.values, batch.times, kernel)
    return MalliavinBatch(
        params=batch.params,
        level=batch.level,
        seed=batch.seed,
        q_at_T=q_at_T,
        qnorm2=qnorm2,
        phi=phi,
        det_gamma=det,
    )


@dataclass(frozen=True)
class TailReport:
    """Small-ball evidence: E[exp(-s phi)] decay and inverse moments of phi."""

    s_grid: np.ndarray
    log_mean_exp: np.ndarray  # natural log, computed by log-sum-exp
    slope: float  # fitted d log E / d log s
    inv_moments: dict[int, float]
    inv_moments_half: dict[int, float]
    stable: dict[int, bool]
    excluded: int
    count: int


def tail_diagnostic(
    params: HurstParams,
    level: int,
    count: int,
    seed: int,
    s_grid,
    method: str = "cholesky",
    threads: int = 1,
    stability_tol: float = 0.2,
) -> TailReport:
    """Monte Carlo decay of E[exp(-s phi)] and inverse-moment stability.

    The mean of exp(-s phi) underflows for large s, so it is produced in log
    space. Samples with phi below PHI_FLOOR_FACTOR * T^(4H) are excluded
    from the inverse moments and counted separately; at that size the value
    reflects discretization noise rather than the sampled law.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid <= 0) or np.any(np.diff(s_grid) <= 0):
        raise ValueError("s_grid must be positive and increasing")
    batch = sample_fbm(params, level, count, seed, method=method, threads=threads)
    phi = malliavin_batch(batch).phi
    log_mean = np.array([logsumexp(-s * phi) - math.log(count) for s in s_grid])
    slope = float(np.polyfit(np.log(s_grid), log_mean, 1)[0])

    floor = PHI_FLOOR_FACTOR * params.T ** (4 * params.H)
    ok = phi >= floor
    excluded = int(count - ok.sum())
    kept = phi[ok]
    half = kept[: max(1, len(kept) // 2)]
    inv_moments = {j: float(np.mean(kept ** (-j))) for j in (1, 2)}
    inv_half = {j: float(np.mean(half ** (-j))) for j in (1, 2)}
    stable = {
        j: abs(inv_moments[j] - inv_half[j]) <= stability_tol * abs(inv_moments[j])
        for j in (1, 2)
    }
    return TailReport(
        s_grid=s_grid,
        log_mean_exp=log_mean,
        slope=slope,
        inv_moments=inv_moments,
        inv_moments_half=inv_half,
        stable=stable,
        excluded=excluded,
        count=count,
    )


@dataclass(frozen=True)
class SpectralReport:
    """Spectrum of the determinant form restricted to a kernel-section span."""

    grid_n: int
    eval_level: int
    eigenvalues: np.ndarray  # descending, in the Gram geometry
    trace: float
    positive_count: int
    min_eigenvalue: float
    threshold: float = 1e-10


def spectral_diagnostic(
    params: HurstParams,
    grid_n: int,
    eval_level: int = 8,
    kernel: FbmCovariance | None = None,
) -> SpectralReport:
    """Eigenvalues of the phi form on span{R(t_i, .) e_c : i <= grid_n, c = 1, 2}.

    Atom times are k T / grid_n for k = 1 .. grid_n (time 0 is the zero
    section); each atom path is evaluated on one shared dyadic grid, so
    reports at different grid_n are compressions of a single operator and
    their traces increase toward its trace. Eigenvalues are taken in the
    Gram geometry (generalized problem against the atom Gram matrix) after
    symmetrizing away roundoff asymmetry.
    """
    if grid_n < 1 or grid_n > 64:
        raise ValueError("grid_n must lie in [1, 64]")
    kernel = kernel or FbmCovariance(params)
    H, T = params.H, params.T
    tg = dyadic_times(T, eval_level)
    atom_times = np.arange(1, grid_n + 1) * (T / grid_n)

    n_atoms = 2 * grid_n
    paths = np.zeros((n_atoms, 2, len(tg)))
    sections = kernel.cov(atom_times[:, None], tg[None, :])
    paths[0::2, 0, :] = sections
    paths[1::2, 1, :] = sections

    gram_block = kernel.cov(atom_times[:, None], atom_times[None, :])
    gram = np.zeros((n_atoms, n_atoms))
    gram[0::2, 0::2] = gram_block
    gram[1::2, 1::2] = gram_block

    K = kernel.cov_matrix(tg)
    w = _gradient_coefs(paths)
    a = w @ K
    inner = np.einsum("aci,bci->ab", a, w)
    ev_T = a[..., -1]
    m = T ** (4 * H) * inner - T ** (2 * H) * (ev_T @ ev_T.T)
    m = 0.5 * (m + m.T)

    vals = eigh(m, gram, eigvals_only=True)[::-1]
    return SpectralReport(
        grid_n=grid_n,
        eval_level=eval_level,
        eigenvalues=vals,
        trace=float(vals.sum()),
        positive_count=int((vals > 1e-10).sum()),
        min_eigenvalue=float(vals.min()),
    )


@dataclass(frozen=True)
class MomentReport:
    """Empirical absolute moments of the area with jackknife error bars."""

    orders: np.ndarray
    moments: np.ndarray
    jackknife_se: np.ndarray
    relative_se: np.ndarray
    flagged: np.ndarray  # relative error bar too wide to trust the estimate
    kurtosis_ratio: float
    count: int


def moment_diagnostic(
    params: HurstParams,
    level: int,
    count: int,
    seed: int,
    j_max: int = 4,
    method: str = "cholesky",
    threads: int = 1,
    flag_rel_se: float = 0.5,
) -> MomentReport:
    """E|A|^j for j = 1 .. j_max with leave-one-out error bars.

    Every order should come out finite with stable bars; widening bars at
    high order are flagged rather than asserted away.
    """
    if not 1 <= j_max <= 8:
        raise ValueError("j_max must lie in [1, 8]")
    batch = sample_fbm(params, level, count, seed, method=method, threads=threads)
    a = np.abs(levy_area_batch(batch.values))
    orders = np.arange(1, j_max + 1)
    moments = np.empty(len(orders))
    se = np.empty(len(orders))
    for idx, j in enumerate(orders):
        x = a ** float(j)
        total = x.sum()
        loo = (total - x) / (count - 1)
        moments[idx] = total / count
        se[idx] = math.sqrt((count - 1) / count * ((loo - loo.mean()) ** 2).sum())
    rel = se / np.abs(moments)
    m2 = float(np.mean(a**2))
    m4 = float(np.mean(a**4))
    return MomentReport(
        orders=orders,
        moments=moments,
        jackknife_se=se,
        relative_se=rel,
        flagged=rel > flag_rel_se,
        kurtosis_ratio=m4 / m2**2,
        count=count,
    )
