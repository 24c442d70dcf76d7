"""Finite kernel combinations with the reproducing-kernel Gram calculus.

An element is a finite sum of kernel sections R(t_i, .) carried by one of the
two path components. All inner products reduce to covariance evaluations
through <R(s, .), R(t, .)> = R(s, t) within a component and 0 across
components, so the Gram calculus is exact given exact R; nothing here is
discretized beyond the atoms themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import FbmCovariance

__all__ = ["KernelMismatchError", "CMElement", "kernel_section", "kernel_integral", "kernel_integral_norm"]


class KernelMismatchError(ValueError):
    """Operands live over different covariance kernels."""


@dataclass(frozen=True)
class CMElement:
    """Sum of coefficients times kernel sections, tagged by component.

    Atoms are consolidated on construction: entries with identical
    (time, component) merge by exact time match, atoms at time 0 drop (the
    section R(0, .) vanishes identically), and exact-zero coefficients drop.
    """

    kernel: FbmCovariance
    times: np.ndarray
    comps: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        comps = np.asarray(self.comps, dtype=np.int8).ravel()
        coefs = np.asarray(self.coefs, dtype=float).ravel()
        if not (len(times) == len(comps) == len(coefs)):
            raise ValueError("times, comps, and coefs must have equal length")
        if np.any((comps != 0) & (comps != 1)):
            raise ValueError("components must be 0 or 1")
        T = self.kernel.params.T
        if np.any(times < 0) or np.any(times > T):
            raise ValueError(f"atom times must lie in [0, {T}]")
        keep = times > 0.0
        times, comps, coefs = times[keep], comps[keep], coefs[keep]
        order = np.lexsort((times, comps))
        times, comps, coefs = times[order], comps[order], coefs[order]
        if len(times):
            new = np.empty(len(times), dtype=bool)
            new[0] = True
            new[1:] = (times[1:] != times[:-1]) | (comps[1:] != comps[:-1])
            group = np.cumsum(new) - 1
            coefs = np.bincount(group, weights=coefs)
            times, comps = times[new], comps[new]
            nz = coefs != 0.0
            times, comps, coefs = times[nz], comps[nz], coefs[nz]
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "comps", comps)
        object.__setattr__(self, "coefs", coefs)

    def _require_same_kernel(self, other: "CMElement") -> None:
        if self.kernel.params != other.kernel.params:
            raise KernelMismatchError(
                f"kernel parameters differ: {self.kernel.params} vs {other.kernel.params}"
            )

    def inner(self, other: "CMElement") -> float:
        """Gram inner product, summed per matching component."""
        self._require_same_kernel(other)
        total = 0.0
        for c in (0, 1):
            a = self.comps == c
            b = other.comps == c
            if a.any() and b.any():
                gram = self.kernel.cov(self.times[a][:, None], other.times[b][None, :])
                total += float(self.coefs[a] @ gram @ other.coefs[b])
        return total

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))

    def eval(self, s) -> np.ndarray:
        """Value at time s, one entry per component; equals the inner product
        against the kernel section at s (the reproducing property)."""
        s = np.asarray(s, dtype=float)
        out = np.zeros((2,) + s.shape)
        for c in (0, 1):
            mask = self.comps == c
            if mask.any():
                out[c] = self.coefs[mask] @ self.kernel.cov(self.times[mask][:, None], s[None, ...])
        return out

    def __add__(self, other: "CMElement") -> "CMElement":
        self._require_same_kernel(other)
        return CMElement(
            kernel=self.kernel,
            times=np.concatenate([self.times, other.times]),
            comps=np.concatenate([self.comps, other.comps]),
            coefs=np.concatenate([self.coefs, other.coefs]),
        )

    def __sub__(self, other: "CMElement") -> "CMElement":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "CMElement":
        return CMElement(self.kernel, self.times, self.comps, self.coefs * float(scalar))

    __rmul__ = __mul__


def kernel_section(kernel: FbmCovariance, t: float, comp: int) -> CMElement:
    """The element R(t, .) carried by one component."""
    return CMElement(kernel, np.array([t]), np.array([comp]), np.array([1.0]))


def _interval_weights(alpha: np.ndarray, rule: str) -> np.ndarray:
    if rule == "midpoint":
        return 0.5 * (alpha[:-1] + alpha[1:])
    if rule == "left":
        return alpha[:-1]
    raise ValueError(f"rule must be 'left' or 'midpoint', got {rule!r}")


def kernel_integral(
    kernel: FbmCovariance,
    alpha: np.ndarray,
    times: np.ndarray,
    comp: int = 0,
    rule: str = "midpoint",
) -> CMElement:
    """Discretized integral of alpha against the kernel in its first slot.

    Returns sum_i alpha(c_i) [R(t_i, .) - R(t_{i-1}, .)] with c_i per `rule`,
    consolidated to one atom per grid node. Dyadic refinement of the grid
    produces a Cauchy sequence in the Gram norm.
    """
    alpha = np.asarray(alpha, dtype=float)
    times = np.asarray(times, dtype=float)
    if alpha.shape != times.shape or alpha.ndim != 1:
        raise ValueError("alpha and times must be 1D arrays of equal length")
    w = _interval_weights(alpha, rule)
    coefs = np.zeros(len(times))
    coefs[0] = -w[0]
    coefs[1:-1] = w[:-1] - w[1:]
    coefs[-1] = w[-1]
    return CMElement(kernel, times, np.full(len(times), comp, dtype=np.int8), coefs)


def kernel_integral_norm(
    kernel: FbmCovariance,
    alpha: np.ndarray,
    times: np.ndarray,
    comp: int = 0,
    rule: str = "midpoint",
) -> float:
    """Gram norm of :func:`kernel_integral` on the same grid."""
    return kernel_integral(kernel, alpha, times, comp=comp, rule=rule).norm()
