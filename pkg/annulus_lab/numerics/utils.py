from __future__ import annotations

"""Tiện ích số dùng chung: sai phân hữu hạn, Simpson thích nghi theo lô, gom cụm điểm."""

import logging
from typing import Callable, List

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .tolerances import TOLERANCES

LOGGER = logging.getLogger(__name__)


def fd_steps(points: np.ndarray) -> np.ndarray:
    """h = max(fd_min_step, fd_rel_step·|x|) per point."""
    norm = np.hypot(points[..., 0], points[..., 1])
    return np.maximum(TOLERANCES.fd_min_step, TOLERANCES.fd_rel_step * norm)


def fd_jacobian(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray) -> np.ndarray:
    """4th-order central-difference Jacobian of a vector function, shape (..., 2, 2)."""
    h = fd_steps(points)[..., None]
    columns = []
    for axis in range(2):
        unit = np.zeros(2)
        unit[axis] = 1.0
        step = h * unit
        diff = (-fn(points + 2 * step) + 8 * fn(points + step) - 8 * fn(points - step) + fn(points - 2 * step))
        columns.append(diff / (12 * h))
    return np.stack(columns, axis=-1)


def fd_gradient(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray) -> np.ndarray:
    """4th-order central-difference gradient of a scalar function, shape (..., 2)."""
    h = fd_steps(points)
    parts = []
    for axis in range(2):
        unit = np.zeros(2)
        unit[axis] = 1.0
        step = h[..., None] * unit
        diff = -fn(points + 2 * step) + 8 * fn(points + step) - 8 * fn(points - step) + fn(points - 2 * step)
        parts.append(diff / (12 * h))
    return np.stack(parts, axis=-1)


def adaptive_simpson(
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float | None = None,
    max_depth: int | None = None,
) -> np.ndarray:
    """
    Integrate many independent segments at once.

    `fn(t, seg)` evaluates the integrand of segment `seg[k]` at parameter `t[k]`.
    Each segment gets absolute tolerance `tol`; intervals are halved (with the
    tolerance halved too) until the Richardson estimate is within 15·tol.
    """
    tol = TOLERANCES.simpson_tol if tol is None else tol
    max_depth = TOLERANCES.simpson_max_depth if max_depth is None else max_depth
    lo = np.asarray(lo, dtype=float).ravel()
    hi = np.asarray(hi, dtype=float).ravel()
    totals = np.zeros(lo.size)
    if lo.size == 0:
        return totals

    seg = np.arange(lo.size)
    a, b = lo, hi
    mid = 0.5 * (a + b)
    fa, fm, fb = fn(a, seg), fn(mid, seg), fn(b, seg)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    eps = np.full(lo.size, tol)
    depth = np.zeros(lo.size, dtype=int)
    truncated = 0

    while seg.size:
        mid = 0.5 * (a + b)
        lm, rm = 0.5 * (a + mid), 0.5 * (mid + b)
        flm, frm = fn(lm, seg), fn(rm, seg)
        left = (mid - a) / 6.0 * (fa + 4 * flm + fm)
        right = (b - mid) / 6.0 * (fm + 4 * frm + fb)
        err = left + right - whole
        converged = np.abs(err) <= 15 * eps
        exhausted = depth >= max_depth
        done = converged | exhausted
        truncated += int(np.count_nonzero(exhausted & ~converged))
        np.add.at(totals, seg[done], (left + right + err / 15.0)[done])

        keep = ~done
        if not np.any(keep):
            break
        seg = np.concatenate([seg[keep], seg[keep]])
        a, b = np.concatenate([a[keep], mid[keep]]), np.concatenate([mid[keep], b[keep]])
        fa, fm, fb = (
            np.concatenate([fa[keep], fm[keep]]),
            np.concatenate([flm[keep], frm[keep]]),
            np.concatenate([fm[keep], fb[keep]]),
        )
        whole = np.concatenate([left[keep], right[keep]])
        eps = np.concatenate([eps[keep], eps[keep]]) / 2.0
        depth = np.concatenate([depth[keep], depth[keep]]) + 1

    if truncated:
        LOGGER.warning("Adaptive Simpson hit max depth on %d interval(s)", truncated)
    return totals


def cluster_points(points: np.ndarray, link: float) -> List[np.ndarray]:
    """Single-linkage clusters of points closer than `link`; returns index arrays."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if points.shape[0] == 0:
        return []
    pairs = np.asarray(cKDTree(points).query_pairs(link, output_type="ndarray"), dtype=int).reshape(-1, 2)
    n = points.shape[0]
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    count, labels = connected_components(graph, directed=False)
    return [np.flatnonzero(labels == k) for k in range(count)]


def label_periodic(mask: np.ndarray) -> List[np.ndarray]:
    """
    8-connected components of a boolean (n_r, n_theta) mask, periodic in θ.

    Returns a list of (k, 2) arrays of node indices.
    """
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return []
    first, last = labels[:, 0], labels[:, -1]
    rows = []
    cols = []
    n_r = mask.shape[0]
    for i in range(n_r):
        for di in (-1, 0, 1):
            j = i + di
            if 0 <= j < n_r and last[i] and first[j]:
                rows.append(last[i] - 1)
                cols.append(first[j] - 1)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(count, count))
    _, merged = connected_components(graph, directed=False)
    components = []
    for group in np.unique(merged):
        members = np.flatnonzero(merged == group) + 1
        components.append(np.argwhere(np.isin(labels, members)))
    return components


def loglog_slope(x: np.ndarray, y: np.ndarray, floor: float = 1e-300) -> float:
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.maximum(np.abs(np.asarray(y, dtype=float)), floor)
    if x.size < 2:
        return 0.0
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
