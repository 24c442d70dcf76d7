"""Exact p-variation of discrete paths and of grid functions in two dimensions.

The one-dimensional value is the maximum over all subpartitions of the grid
(endpoints forced) of the p-th root of the summed p-th powers of increments.
For a piecewise-linear path sampled at its own breakpoints this equals the
true p-variation, since optimal partition points sit at kinks.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "SizeError",
    "pvar_exact",
    "pvar_bruteforce",
    "pvar2d",
    "pvar2d_cells",
]

BRUTEFORCE_LIMIT = 18
EXACT_2D_LIMIT = 9  # grid points per axis


class SizeError(ValueError):
    """Exhaustive enumeration was requested on a grid that is too large."""


def _as_points(values) -> np.ndarray:
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.ndim != 2:
        raise ValueError("values must be a 1D array or an (n, d) array of points")
    return vals


def pvar_exact(values, p: float, return_partition: bool = False):
    """Maximal V_p over subpartitions via O(n^2) dynamic programming.

    `values` holds the path on its grid, either scalar (n,) or vector (n, d)
    with Euclidean increment norms. Ties break toward the earlier index, so
    the returned partition is deterministic even when the argmax is not
    unique.
    """
    if p < 1.0:
        raise ValueError(f"p must be at least 1, got {p}")
    vals = _as_points(values)
    n = len(vals)
    if n < 2:
        return (0.0, [0]) if return_partition else 0.0
    best = np.empty(n)
    best[0] = 0.0
    prev = np.zeros(n, dtype=np.intp)
    for j in range(1, n):
        d = np.linalg.norm(vals[:j] - vals[j], axis=1)
        cand = best[:j] + d**p
        k = int(np.argmax(cand))
        best[j] = cand[k]
        prev[j] = k
    value = float(best[-1] ** (1.0 / p))
    if not return_partition:
        return value
    idx = [n - 1]
    while idx[-1] != 0:
        idx.append(int(prev[idx[-1]]))
    return value, idx[::-1]


@lru_cache(maxsize=BRUTEFORCE_LIMIT + 1)
def _mask_segments(n: int):
    # Every subpartition of an n-point grid keeps both endpoints and any
    # subset of the n-2 interior points; masks enumerate those subsets.
    k = n - 2
    m = 1 << k
    bits = np.ones((m, n), dtype=bool)
    if k:
        masks = np.arange(m, dtype=np.uint32)
        bits[:, 1:-1] = (masks[:, None] >> np.arange(k, dtype=np.uint32)[None, :]) & 1
    rows, cols = np.nonzero(bits)
    same = rows[:-1] == rows[1:]
    return rows[:-1][same], cols[:-1][same], cols[1:][same], m, bits


def pvar_bruteforce(values, p: float, return_partition: bool = False):
    """Exhaustive V_p maximum over all 2^(n-2) subpartitions; n <= 18."""
    if p < 1.0:
        raise ValueError(f"p must be at least 1, got {p}")
    vals = _as_points(values)
    n = len(vals)
    if n > BRUTEFORCE_LIMIT:
        raise SizeError(f"brute force limited to {BRUTEFORCE_LIMIT} points, got {n}")
    if n < 2:
        return (0.0, [0]) if return_partition else 0.0
    mask_id, i_idx, j_idx, m, bits = _mask_segments(n)
    seg = np.linalg.norm(vals[j_idx] - vals[i_idx], axis=1) ** p
    sums = np.bincount(mask_id, weights=seg, minlength=m)
    top = int(np.argmax(sums))
    value = float(sums[top] ** (1.0 / p))
    if not return_partition:
        return value
    return value, list(np.nonzero(bits[top])[0])


def _boundary_subsets(n_nodes: int) -> list[np.ndarray]:
    interior = n_nodes - 2
    out = []
    for mask in range(1 << interior):
        keep = [0]
        keep.extend(i + 1 for i in range(interior) if (mask >> i) & 1)
        keep.append(n_nodes - 1)
        out.append(np.asarray(keep, dtype=np.intp))
    return out


def _score(blocks: np.ndarray, p: float) -> float:
    return float((np.abs(blocks) ** p).sum())


def pvar2d_cells(cells, p: float, mode: str = "exact") -> float:
    """2D V_p over subpartition pairs, from the grid's cell increments.

    `cells` is the (n-1, m-1) matrix of rectangle increments of the grid
    function over adjacent cells; coarser blocks are sums of cells. Modes:

    - ``exact``: enumerate all subpartition pairs (axes limited to 9 nodes);
      this is the reference value.
    - ``grid-only``: score the full grid, a lower bound for ``exact``.
    - ``heuristic``: alternating coordinate ascent from the full grid; always
      between ``grid-only`` and ``exact``.
    """
    if p < 1.0:
        raise ValueError(f"p must be at least 1, got {p}")
    cells = np.asarray(cells, dtype=float)
    if cells.ndim != 2:
        raise ValueError("cells must be a 2D array")
    ns, nt = cells.shape[0] + 1, cells.shape[1] + 1

    if mode == "grid-only":
        return _score(cells, p) ** (1.0 / p)

    if mode == "exact":
        if ns > EXACT_2D_LIMIT or nt > EXACT_2D_LIMIT:
            raise SizeError(
                f"exact mode limited to {EXACT_2D_LIMIT} grid points per axis, got {ns} x {nt}"
            )
        best = 0.0
        t_subsets = _boundary_subsets(nt)
        for bs in _boundary_subsets(ns):
            rows = np.add.reduceat(cells, bs[:-1], axis=0)
            for bt in t_subsets:
                blocks = np.add.reduceat(rows, bt[:-1], axis=1)
                best = max(best, _score(blocks, p))
        return best ** (1.0 / p)

    if mode == "heuristic":
        return _ascend(cells, p) ** (1.0 / p)

    raise ValueError(f"unknown mode {mode!r}; expected exact, grid-only, or heuristic")


def _best_axis_partition(collapsed: np.ndarray, p: float) -> tuple[np.ndarray, float]:
    # collapsed: (n_cells, n_blocks) cell sums along the frozen axis. Choose
    # boundaries on the free axis maximizing sum of |block|^p; additive over
    # intervals, so the 1D subpartition DP applies with interval weights.
    n = collapsed.shape[0] + 1
    prefix = np.zeros((n, collapsed.shape[1]))
    np.cumsum(collapsed, axis=0, out=prefix[1:])
    best = np.full(n, -np.inf)
    best[0] = 0.0
    prev = np.zeros(n, dtype=np.intp)
    for j in range(1, n):
        w = (np.abs(prefix[j] - prefix[:j]) ** p).sum(axis=1)
        cand = best[:j] + w
        k = int(np.argmax(cand))
        best[j] = cand[k]
        prev[j] = k
    idx = [n - 1]
    while idx[-1] != 0:
        idx.append(int(prev[idx[-1]]))
    return np.asarray(idx[::-1], dtype=np.intp), float(best[-1])


def _ascend(cells: np.ndarray, p: float, max_rounds: int = 100) -> float:
    ns, nt = cells.shape[0] + 1, cells.shape[1] + 1
    bs = np.arange(ns, dtype=np.intp)
    bt = np.arange(nt, dtype=np.intp)
    value = _score(cells, p)
    for _ in range(max_rounds):
        cols = np.add.reduceat(cells, bt[:-1], axis=1)
        bs, v1 = _best_axis_partition(cols, p)
        rows = np.add.reduceat(cells, bs[:-1], axis=0).T
        bt, v2 = _best_axis_partition(rows, p)
        if v2 <= value * (1.0 + 1e-12):
            return max(value, v2)
        value = v2
    return value


def pvar2d(nodes, p: float, mode: str = "exact") -> float:
    """2D V_p of a grid function given by its node values (n, m)."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 2:
        raise ValueError("nodes must be a 2D array of grid values")
    cells = np.diff(np.diff(nodes, axis=0), axis=1)
    return pvar2d_cells(cells, p, mode=mode)
