from __future__ import annotations

"""
Hàm dòng u dựng lại trên lưới cực, chẩn đoán trên từng đường tròn, phân loại
tập điểm dừng và báo cáo suy giảm thông lượng tại gốc / vô cực.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import minimize_scalar

from .flows import VectorField
from .geometry import AnnularDomain, DomainError, OutOfBandError, PolarGrid, circle_samples, polar_components, polar_grid
from .tolerances import TOLERANCES, Tolerances
from .utils import adaptive_simpson, cluster_points, loglog_slope

LOGGER = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_SPLINE_PAD = 3


class MultivaluedStreamError(ValueError):
    """Signed flux through the base circle is not zero, so u cannot be single-valued."""

    def __init__(self, circulation: float, tolerance: float) -> None:
        super().__init__(
            f"signed flux {circulation:.6e} exceeds {tolerance:.3e}; the stream function would be multivalued"
        )
        self.circulation = circulation
        self.tolerance = tolerance


class InterpolationError(DomainError):
    """Interpolation requested outside the radial extent of a stream grid."""


# ---------------------------------------------------------------------------
# Circle fluxes
# ---------------------------------------------------------------------------


def _circle_components(field: VectorField, r: float, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if n < 64:
        raise ValueError(f"need at least 64 circle samples, got {n}")
    field.domain.require_radius(r)
    points = circle_samples(r, n)
    v_r, v_t = polar_components(points, field.velocity(points))
    return points, v_r, v_t


def flux_abs_on_circle(field: VectorField, r: float, n: int = 256) -> float:
    """Periodic trapezoid value of ∮_{C_r} |v·e_r| ds."""
    _, v_r, _ = _circle_components(field, r, n)
    return float(TWO_PI * r * np.mean(np.abs(v_r)))


def signed_flux_on_circle(field: VectorField, r: float, n: int = 256) -> float:
    _, v_r, _ = _circle_components(field, r, n)
    return float(TWO_PI * r * np.mean(v_r))


def speed_integral_on_circle(field: VectorField, r: float, n: int = 256) -> float:
    _, v_r, v_t = _circle_components(field, r, n)
    return float(TWO_PI * r * np.mean(np.hypot(v_r, v_t)))


# ---------------------------------------------------------------------------
# Stream grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, eq=False)
class StreamGrid:
    """
    Samples of u on a polar grid, with a bicubic interpolant periodic in θ.

    `discrepancy` is the max node difference between the two leg orders used
    to integrate u (0 when the values came from a closed form).
    """

    grid: PolarGrid
    values: np.ndarray
    base_point: Tuple[float, float]
    base_value: float
    discrepancy: float = 0.0
    _spline: RectBivariateSpline = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_r, self.grid.n_theta):
            raise ValueError(f"values shape {values.shape} does not match grid {(self.grid.n_r, self.grid.n_theta)}")
        object.__setattr__(self, "values", values)
        angles = self.grid.angles
        pad = _SPLINE_PAD
        ext_angles = np.concatenate([angles[-pad:] - TWO_PI, angles, angles[:pad] + TWO_PI])
        ext_values = np.concatenate([values[:, -pad:], values, values[:, :pad]], axis=1)
        object.__setattr__(self, "_spline", RectBivariateSpline(self.grid.radii, ext_angles, ext_values, kx=3, ky=3))

    @classmethod
    def from_values(cls, grid: PolarGrid, values: np.ndarray) -> "StreamGrid":
        values = np.asarray(values, dtype=float)
        return cls(grid, values, (float(grid.radii[0]), 0.0), float(values[0, 0]))

    @property
    def radii(self) -> np.ndarray:
        return self.grid.radii

    @property
    def angles(self) -> np.ndarray:
        return self.grid.angles

    def _polar(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(points, dtype=float)
        r = np.hypot(pts[..., 0], pts[..., 1])
        lo, hi = self.radii[0], self.radii[-1]
        slack = 1e-9 * hi
        bad = (r < lo - slack) | (r > hi + slack)
        if np.any(bad):
            raise InterpolationError(
                f"radius {float(np.atleast_1d(r[bad])[0]):.6g} outside grid extent [{lo:.6g}, {hi:.6g}]"
            )
        theta = np.mod(np.arctan2(pts[..., 1], pts[..., 0]), TWO_PI)
        return np.clip(r, lo, hi), theta

    def value(self, points: np.ndarray) -> np.ndarray:
        r, theta = self._polar(points)
        return self._spline.ev(r, theta)

    __call__ = value

    def polar_gradient(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        r, theta = self._polar(points)
        return self._spline.ev(r, theta, dx=1), self._spline.ev(r, theta, dy=1)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        u_r, u_t = self.polar_gradient(pts)
        r = np.hypot(pts[..., 0], pts[..., 1])
        c, s = pts[..., 0] / r, pts[..., 1] / r
        return np.stack([u_r * c - u_t * s / r, u_r * s + u_t * c / r], axis=-1)

    def velocity(self, points: np.ndarray) -> np.ndarray:
        grad = self.gradient(points)
        return np.stack([-grad[..., 1], grad[..., 0]], axis=-1)

    def node_derivatives(self) -> Tuple[np.ndarray, np.ndarray]:
        """(∂u/∂r, ∂u/∂θ) at nodes: 3-point non-uniform radial stencils, periodic central in θ."""
        u = self.values
        r = self.radii
        u_r = np.empty_like(u)
        h1 = (r[1:-1] - r[:-2])[:, None]
        h2 = (r[2:] - r[1:-1])[:, None]
        u_r[1:-1] = (h1 * h1 * u[2:] - h2 * h2 * u[:-2] + (h2 * h2 - h1 * h1) * u[1:-1]) / (h1 * h2 * (h1 + h2))
        # one-sided second order at the edge rows
        for row, (i0, i1, i2) in ((0, (0, 1, 2)), (-1, (-1, -2, -3))):
            d1 = r[i1] - r[i0]
            d2 = r[i2] - r[i0]
            u_r[row] = (
                -(d1 + d2) / (d1 * d2) * u[i0] + d2 / (d1 * (d2 - d1)) * u[i1] - d1 / (d2 * (d2 - d1)) * u[i2]
            )
        u_t = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2 * self.grid.dtheta)
        return u_r, u_t

    def node_speed(self) -> np.ndarray:
        """|∇u| at nodes from the node stencils."""
        u_r, u_t = self.node_derivatives()
        return np.hypot(u_r, u_t / self.radii[:, None])

    def node_laplacian(self) -> np.ndarray:
        """Polar 5-point Δu at interior rows; edge rows are NaN."""
        u = self.values
        r = self.radii
        lap = np.full_like(u, np.nan)
        h1 = (r[1:-1] - r[:-2])[:, None]
        h2 = (r[2:] - r[1:-1])[:, None]
        mid = r[1:-1][:, None]
        u_rr = 2.0 * ((u[2:] - u[1:-1]) / h2 - (u[1:-1] - u[:-2]) / h1) / (h1 + h2)
        u_r = (h1 * h1 * u[2:] - h2 * h2 * u[:-2] + (h2 * h2 - h1 * h1) * u[1:-1]) / (h1 * h2 * (h1 + h2))
        inner = u[1:-1]
        u_tt = (np.roll(inner, -1, axis=1) - 2 * inner + np.roll(inner, 1, axis=1)) / self.grid.dtheta**2
        lap[1:-1] = u_rr + u_r / mid + u_tt / (mid * mid)
        return lap

    def periodic_values(self) -> np.ndarray:
        """Values with the θ=0 column repeated at θ=2π."""
        return np.concatenate([self.values, self.values[:, :1]], axis=1)

    def negated(self) -> "StreamGrid":
        return replace(self, values=-self.values, base_value=-self.base_value)

    def shifted(self, constant: float) -> "StreamGrid":
        return replace(self, values=self.values + constant, base_value=self.base_value + constant)

    def node_rows(self) -> List[Dict[str, float]]:
        rows = []
        for i, r in enumerate(self.radii):
            for j, theta in enumerate(self.angles):
                rows.append({"r": float(r), "theta": float(theta), "u": float(self.values[i, j])})
        return rows


def _leg_integrals(
    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lines: np.ndarray,
    breaks: np.ndarray,
    tol: float,
) -> np.ndarray:
    """Cumulative integrals along each line between consecutive breakpoints, shape (n_lines, n_breaks)."""
    n_int = breaks.size - 1
    seg_count = lines.size * n_int
    interval = np.tile(np.arange(n_int), lines.size)
    line_of = np.repeat(np.arange(lines.size), n_int)

    def fn(t: np.ndarray, seg: np.ndarray) -> np.ndarray:
        return integrand(t, lines[line_of[seg]])

    pieces = adaptive_simpson(fn, breaks[interval], breaks[interval + 1], tol=tol)
    pieces = pieces.reshape(lines.size, n_int) if seg_count else np.zeros((lines.size, 0))
    return np.concatenate([np.zeros((lines.size, 1)), np.cumsum(pieces, axis=1)], axis=1)


def stream_on_grid(
    field: VectorField,
    grid: PolarGrid,
    base: Sequence[float] | None = None,
    base_value: float = 0.0,
    *,
    n_flux: int = 256,
    tolerances: Tolerances = TOLERANCES,
) -> StreamGrid:
    """
    Integrate u with ∂u/∂r = v·e_θ and ∂u/∂θ = −r v·e_r from `base`.

    Two leg orders are computed (radial then angular, angular then radial); the
    returned values are their mean and `discrepancy` their max node difference.
    """
    if base is None:
        base = (float(grid.radii[0]), 0.0)
    x0 = np.asarray(base, dtype=float)
    r0 = float(np.hypot(*x0))
    th0 = float(np.mod(np.arctan2(x0[1], x0[0]), TWO_PI))
    if not grid.radii[0] - 1e-12 * grid.radii[-1] <= r0 <= grid.radii[-1] * (1 + 1e-12):
        raise OutOfBandError(r0, (float(grid.radii[0]), float(grid.radii[-1])))

    circulation = signed_flux_on_circle(field, r0, n_flux)
    threshold = tolerances.flux_rel_tol * (1.0 + speed_integral_on_circle(field, r0, n_flux))
    if abs(circulation) > threshold:
        raise MultivaluedStreamError(circulation, threshold)

    speeds = field.speed(grid.points())
    tol = tolerances.simpson_tol * max(1.0, float(np.max(speeds)))

    def d_radial(t: np.ndarray, phi: np.ndarray) -> np.ndarray:
        e_r = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        e_t = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        v = field.velocity(t[:, None] * e_r)
        return np.sum(v * e_t, axis=-1)

    def d_angular(t: np.ndarray, rho: np.ndarray) -> np.ndarray:
        e_r = np.stack([np.cos(t), np.sin(t)], axis=-1)
        v = field.velocity(rho[:, None] * e_r)
        return -rho * np.sum(v * e_r, axis=-1)

    r_breaks = np.unique(np.concatenate([grid.radii, [r0]]))
    t_breaks = np.unique(np.concatenate([grid.angles, [th0, TWO_PI]]))
    ri = np.searchsorted(r_breaks, grid.radii)
    r0i = int(np.searchsorted(r_breaks, r0))
    tj = np.searchsorted(t_breaks, grid.angles)
    t0j = int(np.searchsorted(t_breaks, th0))

    # radial then angular
    radial_a = _leg_integrals(d_radial, np.array([th0]), r_breaks, tol)[0]
    angular_a = _leg_integrals(d_angular, grid.radii, t_breaks, tol)
    values_a = (radial_a[ri] - radial_a[r0i])[:, None] + angular_a[:, tj] - angular_a[:, [t0j]]

    # angular then radial
    angular_b = _leg_integrals(d_angular, np.array([r0]), t_breaks, tol)[0]
    radial_b = _leg_integrals(d_radial, grid.angles, r_breaks, tol)
    values_b = (angular_b[tj] - angular_b[t0j])[None, :] + (radial_b[:, ri] - radial_b[:, [r0i]]).T

    discrepancy = float(np.max(np.abs(values_a - values_b)))
    LOGGER.debug("Stream reconstruction for %s: leg discrepancy %.3e", field.name, discrepancy)
    values = base_value + 0.5 * (values_a + values_b)
    return StreamGrid(grid, values, (float(x0[0]), float(x0[1])), float(base_value), discrepancy)


def stream_from_field(
    field: VectorField,
    grid: PolarGrid,
    base: Sequence[float] | None = None,
    *,
    tolerances: Tolerances = TOLERANCES,
) -> StreamGrid:
    """Closed-form u when the field carries one, else the integrated reconstruction."""
    if field.stream_fn is not None:
        values = field.stream(grid.points())
        sg = StreamGrid.from_values(grid, values)
        return sg
    return stream_on_grid(field, grid, base, tolerances=tolerances)


def circle_oscillation(sg: StreamGrid, r: float) -> float:
    """max − min of interpolated u on C_r, sampled at 4·n_theta angles."""
    lo, hi = sg.radii[0], sg.radii[-1]
    if r < lo - 1e-12 * hi or r > hi * (1 + 1e-12):
        raise OutOfBandError(r, (float(lo), float(hi)))
    values = sg.value(circle_samples(r, 4 * sg.grid.n_theta))
    return float(np.ptp(values))


# ---------------------------------------------------------------------------
# Stagnation
# ---------------------------------------------------------------------------

STAGNATION_CLASSES = (
    "empty",
    "proper-subset-inner",
    "proper-subset-outer",
    "both-boundaries",
    "full-circle",
    "interior-present",
    "degenerate",
)


@dataclass(frozen=True, slots=True)
class StagnationReport:
    interior_points: Tuple[Tuple[float, float], ...]
    interior_rings: Tuple[float, ...]
    boundary_inner_points: Tuple[Tuple[float, float], ...]
    boundary_outer_points: Tuple[Tuple[float, float], ...]
    boundary_inner_fraction: float
    boundary_outer_fraction: float
    classification: str
    tol_speed: float
    degenerate: bool = False

    @property
    def hypothesis_holds(self) -> bool:
        """Stagnation set empty or a proper subset of one boundary circle."""
        return self.classification in ("empty", "proper-subset-inner", "proper-subset-outer")

    @property
    def unique_interior_point(self) -> bool:
        return (
            len(self.interior_points) == 1
            and not self.interior_rings
            and not self.boundary_inner_points
            and not self.boundary_outer_points
            and self.boundary_inner_fraction == 0.0
            and self.boundary_outer_fraction == 0.0
        )

    def as_dict(self) -> Dict[str, Any]:
        return {
            "classification": self.classification,
            "interior_points": [list(p) for p in self.interior_points],
            "interior_rings": list(self.interior_rings),
            "boundary_inner_points": [list(p) for p in self.boundary_inner_points],
            "boundary_outer_points": [list(p) for p in self.boundary_outer_points],
            "boundary_inner_fraction": self.boundary_inner_fraction,
            "boundary_outer_fraction": self.boundary_outer_fraction,
            "tol_speed": self.tol_speed,
            "degenerate": self.degenerate,
        }


def _newton_zero(field: VectorField, points: np.ndarray, iterations: int = 60) -> np.ndarray:
    x = np.array(points, dtype=float, copy=True)
    for _ in range(iterations):
        v = field.velocity(x)
        step = np.einsum("nij,nj->ni", np.linalg.pinv(field.jacobian(x)), v)
        x = x - step
        if np.all(np.abs(step) <= 1e-14 * np.maximum(1.0, np.abs(x))):
            break
    return x


def _local_minima(speeds: np.ndarray) -> np.ndarray:
    """Interior-row nodes whose speed is ≤ all 8 neighbours (θ periodic)."""
    inner = speeds[1:-1]
    neighbours = []
    for di in (-1, 0, 1):
        rows = speeds[1 + di : speeds.shape[0] - 1 + di]
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            neighbours.append(np.roll(rows, -dj, axis=1))
    floor = np.min(np.stack(neighbours), axis=0)
    scale = max(float(np.max(speeds)), 1e-300)
    mask = np.zeros_like(speeds, dtype=bool)
    mask[1:-1] = inner <= floor + 1e-12 * scale
    return mask


def _circle_stagnation(
    field: VectorField,
    r: float,
    tol_speed: float,
    n: int,
    full_coverage: float,
) -> Tuple[List[Tuple[float, float]], float]:
    theta = TWO_PI * np.arange(n) / n
    pts = circle_samples(r, n)
    speed = field.speed(pts)
    coverage = float(np.count_nonzero(speed <= tol_speed)) / n
    if coverage >= full_coverage:
        return [], coverage

    def speed2(t: float) -> float:
        p = np.array([r * math.cos(t), r * math.sin(t)])
        v = field.velocity(p)
        return float(v[0] ** 2 + v[1] ** 2)

    found: List[float] = []
    prev, nxt = np.roll(speed, 1), np.roll(speed, -1)
    for k in np.flatnonzero((speed <= prev) & (speed <= nxt)):
        lo, hi = theta[k] - TWO_PI / n, theta[k] + TWO_PI / n
        res = minimize_scalar(speed2, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if math.sqrt(max(res.fun, 0.0)) <= tol_speed:
            found.append(float(np.mod(res.x, TWO_PI)))
    points = np.array([[r * math.cos(t), r * math.sin(t)] for t in found]).reshape(-1, 2)
    clusters = cluster_points(points, 3 * TWO_PI * r / n)
    merged = []
    for members in clusters:
        centre = points[members].mean(axis=0)
        centre *= r / max(np.hypot(*centre), 1e-300)
        merged.append((float(centre[0]), float(centre[1])))
    return sorted(merged), coverage


def _boundary_state(points: Sequence[Tuple[float, float]], coverage: float, full_coverage: float) -> str:
    if coverage >= full_coverage:
        return "full"
    if points or coverage > 0:
        return "partial"
    return "none"


def _stagnation_rings(
    field: VectorField,
    grid: PolarGrid,
    speeds: np.ndarray,
    tol_speed: float,
    full_coverage: float,
) -> Tuple[List[float], np.ndarray]:
    """
    Vòng dừng trong miền, tìm trước khi chạy Newton (Jacobian suy biến dọc vòng).

    Một hàng lưới là ứng viên khi tốc độ đạt cực tiểu theo r tại gần như mọi góc;
    bán kính được tinh chỉnh bằng cực tiểu 1 chiều của max |v| trên đường tròn.
    Trả về (bán kính các vòng, mặt nạ node đã thuộc về vòng).
    """
    radii = grid.radii
    n_circle = 4 * grid.n_theta
    consumed = np.zeros(speeds.shape, dtype=bool)
    rings: List[float] = []

    def ring_speed(r: float) -> float:
        return float(np.max(field.speed(circle_samples(r, n_circle))))

    for i in range(1, speeds.shape[0] - 1):
        row = speeds[i]
        radial_min = (row <= speeds[i - 1]) & (row <= speeds[i + 1])
        if np.count_nonzero(radial_min) < full_coverage * row.size:
            continue
        res = minimize_scalar(
            ring_speed,
            bounds=(float(radii[i - 1]), float(radii[i + 1])),
            method="bounded",
            options={"xatol": 1e-13 * float(radii[-1])},
        )
        r_ring = float(res.x)
        covered = np.count_nonzero(field.speed(circle_samples(r_ring, n_circle)) <= tol_speed) / n_circle
        if covered < full_coverage:
            continue
        consumed[i - 1 : i + 2] = True
        if not rings or abs(r_ring - rings[-1]) > 1e-9 * float(radii[-1]):
            rings.append(r_ring)
    return rings, consumed


def classify_stagnation(
    field: VectorField,
    domain: AnnularDomain | None = None,
    tol_speed: float | None = None,
    *,
    n_r: int = 65,
    n_theta: int = 256,
    tolerances: Tolerances = TOLERANCES,
) -> StagnationReport:
    """
    Locate {|v| ≤ tol_speed} on a dense audit grid of the band and on the real boundary circles.

    Whole stagnation circles are found row by row first. The remaining interior
    candidates are discrete speed minima refined by Newton on v = 0; boundary
    candidates are refined along the circle. A boundary circle covered on at
    least `full_circle_coverage` of its angles counts as a full circle.
    """
    domain = domain or field.domain
    full_coverage = tolerances.full_circle_coverage
    grid = polar_grid(domain, n_r, n_theta)
    nodes = grid.points()
    speeds = field.speed(nodes)
    median = float(np.median(speeds))
    if tol_speed is None:
        tol_speed = tolerances.speed_rel_tol * median
    if median == 0.0 and float(np.max(speeds)) == 0.0:
        LOGGER.info("Field %s vanishes on the audit grid; stagnation report is degenerate", field.name)
        return StagnationReport((), (), (), (), 1.0, 1.0, "degenerate", 0.0, degenerate=True)

    lo, hi = domain.band
    edge = 1e-9 * hi
    rings, consumed = _stagnation_rings(field, grid, speeds, tol_speed, full_coverage)
    candidates = nodes[_local_minima(speeds) & ~consumed]
    interior: List[np.ndarray] = []
    if candidates.size:
        refined = _newton_zero(field, candidates)
        radii = np.hypot(refined[:, 0], refined[:, 1])
        idx = np.flatnonzero(np.isfinite(radii) & (radii > lo + edge) & (radii < hi - edge))
        if idx.size:
            idx = idx[field.speed(refined[idx]) <= tol_speed]
        if rings and idx.size:
            # Newton can slide onto a ring that was already recorded
            near_ring = np.min(np.abs(radii[idx, None] - np.asarray(rings)[None, :]), axis=1) <= 2 * grid.max_spacing
            idx = idx[~near_ring]
        interior.extend(refined[idx])

    if domain.punctured:
        # a zero at (or converging to) the puncture is an interior stagnation point of B_b
        row = speeds[0]
        seed = nodes[0, int(np.argmin(row))][None, :]
        zero = _newton_zero(field, seed, iterations=200)[0]
        rp = float(np.hypot(*zero))
        if np.isfinite(rp) and rp < lo and float(field.speed(zero)) <= tol_speed:
            interior.append(zero)

    points = np.array(interior, dtype=float).reshape(-1, 2)
    interior_points: List[Tuple[float, float]] = []
    for members in cluster_points(points, 3 * grid.max_spacing):
        members_pts = points[members]
        centre = members_pts.mean(axis=0)
        # keep the member nearest the centroid so a curved cluster stays on the stagnation set
        nearest = members_pts[int(np.argmin(np.hypot(*(members_pts - centre).T)))]
        interior_points.append((float(nearest[0]), float(nearest[1])))

    n_circle = 4 * n_theta
    inner_pts: List[Tuple[float, float]] = []
    outer_pts: List[Tuple[float, float]] = []
    inner_cov = outer_cov = 0.0
    if domain.has_inner_boundary:
        inner_pts, inner_cov = _circle_stagnation(field, domain.inner_radius, tol_speed, n_circle, full_coverage)
    if domain.has_outer_boundary:
        outer_pts, outer_cov = _circle_stagnation(field, domain.outer_radius, tol_speed, n_circle, full_coverage)
    inner_state = _boundary_state(inner_pts, inner_cov, full_coverage)
    outer_state = _boundary_state(outer_pts, outer_cov, full_coverage)

    if interior_points:
        classification = "interior-present"
    elif rings:
        classification = "full-circle"
    elif "full" in (inner_state, outer_state):
        classification = "full-circle"
    elif inner_state == "partial" and outer_state == "partial":
        classification = "both-boundaries"
    elif inner_state == "partial":
        classification = "proper-subset-inner"
    elif outer_state == "partial":
        classification = "proper-subset-outer"
    else:
        classification = "empty"

    LOGGER.debug(
        "Stagnation of %s: %s (%d interior, %d rings, inner %.3f, outer %.3f)",
        field.name,
        classification,
        len(interior_points),
        len(rings),
        inner_cov,
        outer_cov,
    )
    return StagnationReport(
        tuple(sorted(interior_points)),
        tuple(sorted(rings)),
        tuple(inner_pts),
        tuple(outer_pts),
        inner_cov,
        outer_cov,
        classification,
        float(tol_speed),
    )


# ---------------------------------------------------------------------------
# Decay at the origin and at infinity
# ---------------------------------------------------------------------------

PASS = "PASS"
FAIL = "FAIL"
_SLOPE_MARGIN = 0.1


@dataclass(frozen=True, slots=True)
class DecayRow:
    radius: float
    sup_r_vr: float
    flux_abs: float


@dataclass(frozen=True, slots=True)
class DecayReport:
    """
    Finite-radius trend of r·sup|v·e_r| (decay at infinity) and ∮|v·e_r| (decay at the origin).

    Verdicts are observations on the sampled radii, not limits.
    """

    rows: Tuple[DecayRow, ...]
    slope_sup: float
    slope_flux: float
    zero_tol: float
    infinity_verdict: str
    origin_verdict: str

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "radius": row.radius,
                "sup_r_vr": row.sup_r_vr,
                "flux_abs": row.flux_abs,
                "infinity_verdict": self.infinity_verdict,
                "origin_verdict": self.origin_verdict,
            }
            for row in self.rows
        ]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "rows": self.to_rows(),
            "slope_sup": self.slope_sup,
            "slope_flux": self.slope_flux,
            "zero_tol": self.zero_tol,
            "infinity_verdict": self.infinity_verdict,
            "origin_verdict": self.origin_verdict,
        }


def radial_decay_report(field: VectorField, radii: Sequence[float], n: int = 256) -> DecayReport:
    radii = np.sort(np.asarray(list(radii), dtype=float))
    if radii.size == 0:
        raise ValueError("radial_decay_report needs at least one radius")
    rows = []
    scale = 0.0
    for r in radii:
        points, v_r, v_t = _circle_components(field, float(r), n)
        rows.append(DecayRow(float(r), float(r * np.max(np.abs(v_r))), float(TWO_PI * r * np.mean(np.abs(v_r)))))
        scale = max(scale, float(r * np.max(np.hypot(v_r, v_t))))
    zero_tol = 1e-9 * (1.0 + scale)
    sup = np.array([row.sup_r_vr for row in rows])
    flux = np.array([row.flux_abs for row in rows])
    slope_sup = loglog_slope(radii, sup)
    slope_flux = loglog_slope(radii, flux)

    # o(1/|x|) at infinity: r·sup|v·e_r| must vanish or decrease with r
    if np.all(sup <= zero_tol) or slope_sup < -_SLOPE_MARGIN:
        infinity = PASS
    else:
        infinity = FAIL
    # ∮_{C_ε}|v·e_r| → 0: flux must vanish or decrease as ε decreases
    if np.all(flux <= zero_tol) or slope_flux > _SLOPE_MARGIN:
        origin = PASS
    else:
        origin = FAIL
    return DecayReport(tuple(rows), slope_sup, slope_flux, zero_tol, infinity, origin)
