from __future__ import annotations

"""
Miền hình vành khuyên, lưới cực, đường tròn và đa giác Jordan.

Mọi module khác đều dựa trên lớp hình học này:
- `AnnularDomain` mô tả Ω_{a,b} cùng dải cắt hữu hạn [trunc_inner, trunc_outer].
- `PolarGrid` là lưới (r, θ) trên dải cắt.
- `JordanPolygon` + `winding_number` dùng để kiểm tra "bao quanh gốc toạ độ".
"""

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

INFINITY = math.inf
# Default truncation factors for unbounded / punctured domains.
_OUTER_TRUNCATION_FACTOR = 100.0
_INNER_TRUNCATION_DIVISOR = 1000.0
_GEOMETRIC_SPACING_RATIO = 10.0


class DomainError(ValueError):
    """Invalid domain, grid or circle construction."""


class OutOfBandError(DomainError):
    """A query point or circle falls outside the truncated band."""

    def __init__(self, radius: float, band: Tuple[float, float]) -> None:
        super().__init__(f"radius {radius:.6g} outside band [{band[0]:.6g}, {band[1]:.6g}]")
        self.radius = radius
        self.band = band


class BoundaryAmbiguityError(ValueError):
    """Point lies on a polygon edge, so its winding number is undefined."""

    def __init__(self, distance: float) -> None:
        super().__init__(f"point lies on the polygon boundary (nearest edge at {distance:.3e})")
        self.distance = distance


class DegeneratePolygonError(ValueError):
    """Polygon with fewer than three distinct vertices or zero area."""


@dataclass(frozen=True, slots=True)
class AnnularDomain:
    """Ω_{a,b} = {a < |x| < b} with the finite band used for sampling."""

    inner_radius: float
    outer_radius: float
    trunc_inner: float
    trunc_outer: float

    @property
    def punctured(self) -> bool:
        return self.inner_radius == 0.0

    @property
    def exterior(self) -> bool:
        return math.isinf(self.outer_radius)

    @property
    def band(self) -> Tuple[float, float]:
        return (self.trunc_inner, self.trunc_outer)

    @property
    def has_inner_boundary(self) -> bool:
        """True when C_a is a real boundary circle (not a puncture truncation)."""
        return self.inner_radius > 0.0

    @property
    def has_outer_boundary(self) -> bool:
        return not self.exterior

    def contains(self, x: Sequence[float]) -> bool:
        r = math.hypot(float(x[0]), float(x[1]))
        return self.inner_radius < r < self.outer_radius

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        r = np.hypot(points[..., 0], points[..., 1])
        return (r > self.inner_radius) & (r < self.outer_radius)

    def in_band(self, x: Sequence[float] | np.ndarray, margin: float = 0.0) -> np.ndarray | bool:
        points = np.asarray(x, dtype=float)
        r = np.hypot(points[..., 0], points[..., 1])
        slack = 1e-12 * self.trunc_outer
        result = (r - margin >= self.trunc_inner - slack) & (r + margin <= self.trunc_outer + slack)
        if points.ndim == 1:
            return bool(result)
        return result

    def require_radius(self, r: float, margin: float = 0.0) -> None:
        slack = 1e-12 * self.trunc_outer
        if r - margin < self.trunc_inner - slack or r + margin > self.trunc_outer + slack:
            raise OutOfBandError(r, self.band)

    def describe(self) -> dict:
        return {
            "a": self.inner_radius,
            "b": "inf" if self.exterior else self.outer_radius,
            "trunc_inner": self.trunc_inner,
            "trunc_outer": self.trunc_outer,
        }


def make_annulus(
    a: float,
    b: float = INFINITY,
    trunc: Tuple[float, float] | None = None,
    *,
    trunc_inner: float | None = None,
    trunc_outer: float | None = None,
) -> AnnularDomain:
    """Build Ω_{a,b}; b may be `INFINITY`, a may be 0 for a punctured domain."""
    a = float(a)
    b = float(b)
    if not math.isfinite(a) or a < 0:
        raise DomainError(f"inner radius must be finite and non-negative, got {a}")
    if not b > a:
        raise DomainError(f"outer radius must exceed inner radius, got a={a}, b={b}")
    if trunc is not None:
        if trunc_inner is not None or trunc_outer is not None:
            raise DomainError("pass either trunc=(inner, outer) or the keyword truncations, not both")
        trunc_inner, trunc_outer = trunc

    if trunc_outer is None:
        trunc_outer = min(b, _OUTER_TRUNCATION_FACTOR * max(a, 1.0))
    if trunc_inner is None:
        trunc_inner = max(a, trunc_outer / _INNER_TRUNCATION_DIVISOR)
    trunc_inner = float(trunc_inner)
    trunc_outer = float(trunc_outer)

    if not math.isfinite(trunc_outer) or trunc_outer > b:
        raise DomainError(f"trunc_outer={trunc_outer} must be finite and at most b={b}")
    if trunc_inner < a or trunc_inner <= 0:
        raise DomainError(f"trunc_inner={trunc_inner} must be positive and at least a={a}")
    if not trunc_inner < trunc_outer:
        raise DomainError(f"degenerate band [{trunc_inner}, {trunc_outer}]")
    return AnnularDomain(a, b, trunc_inner, trunc_outer)


@dataclass(frozen=True, slots=True, eq=False)
class PolarGrid:
    """Tensor grid radii × angles; node (i, j) is radii[i] (cos angles[j], sin angles[j])."""

    domain: AnnularDomain
    radii: np.ndarray
    angles: np.ndarray

    @property
    def n_r(self) -> int:
        return int(self.radii.size)

    @property
    def n_theta(self) -> int:
        return int(self.angles.size)

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.n_theta

    @property
    def geometric(self) -> bool:
        ratios = self.radii[1:] / self.radii[:-1]
        return bool(self.n_r > 2 and np.allclose(ratios, ratios[0], rtol=1e-10)
                    and not np.allclose(np.diff(self.radii), self.radii[1] - self.radii[0], rtol=1e-10))

    @property
    def max_spacing(self) -> float:
        """Largest node spacing, radial or angular (arc length at the outer row)."""
        return float(max(np.max(np.diff(self.radii)), self.radii[-1] * self.dtheta))

    def points(self) -> np.ndarray:
        rr, tt = np.meshgrid(self.radii, self.angles, indexing="ij")
        return np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1)

    def local_step(self, i: int) -> float:
        lo = max(i - 1, 0)
        hi = min(i + 1, self.n_r - 1)
        dr = (self.radii[hi] - self.radii[lo]) / max(hi - lo, 1)
        return float(max(dr, self.radii[i] * self.dtheta))

    @classmethod
    def from_radii(cls, domain: AnnularDomain, radii: Iterable[float], n_theta: int) -> "PolarGrid":
        radii = np.asarray(list(radii), dtype=float)
        if radii.ndim != 1 or radii.size < 4:
            raise DomainError("a polar grid needs at least 4 radii")
        if n_theta < 8:
            raise DomainError(f"n_theta must be >= 8, got {n_theta}")
        if np.any(np.diff(radii) <= 0):
            raise DomainError("grid radii must be strictly increasing")
        angles = 2.0 * math.pi * np.arange(n_theta) / n_theta
        return cls(domain, radii, angles)


def polar_grid(domain: AnnularDomain, n_r: int, n_theta: int) -> PolarGrid:
    """Grid over [trunc_inner, trunc_outer] × [0, 2π); geometric radii when the band ratio exceeds 10."""
    if n_r < 4:
        raise DomainError(f"n_r must be >= 4, got {n_r}")
    if n_theta < 8:
        raise DomainError(f"n_theta must be >= 8, got {n_theta}")
    lo, hi = domain.trunc_inner, domain.trunc_outer
    if not hi > lo:
        raise DomainError(f"degenerate band [{lo}, {hi}]")
    if hi / lo > _GEOMETRIC_SPACING_RATIO:
        radii = np.geomspace(lo, hi, n_r)
    else:
        radii = np.linspace(lo, hi, n_r)
    radii[0], radii[-1] = lo, hi
    return PolarGrid.from_radii(domain, radii, n_theta)


def circle_samples(r: float, n: int) -> np.ndarray:
    if not r > 0:
        raise DomainError(f"circle radius must be positive, got {r}")
    if n < 3:
        raise DomainError(f"need at least 3 circle samples, got {n}")
    theta = 2.0 * math.pi * np.arange(n) / n
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


@dataclass(frozen=True, slots=True, eq=False)
class JordanPolygon:
    """Closed polygon; `vertices` never repeats the first point at the end."""

    vertices: np.ndarray
    orientation: int

    @property
    def n(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def signed_area(self) -> float:
        return _shoelace(self.vertices)

    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def midpoints(self) -> np.ndarray:
        start, end = self.edges()
        return 0.5 * (start + end)

    def vertex_normals(self) -> np.ndarray:
        """Outward unit normals at vertices (bisector of the adjacent edge normals)."""
        start, end = self.edges()
        tangent = end - start
        tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
        # Right-hand normal points outward for a CCW polygon.
        edge_normal = self.orientation * np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)
        normals = edge_normal + np.roll(edge_normal, 1, axis=0)
        return normals / np.linalg.norm(normals, axis=1, keepdims=True)

    def reversed(self) -> "JordanPolygon":
        return JordanPolygon(self.vertices[::-1].copy(), -self.orientation)

    def rolled(self, shift: int) -> "JordanPolygon":
        return JordanPolygon(np.roll(self.vertices, shift, axis=0), self.orientation)

    def scale(self) -> float:
        return float(np.max(np.ptp(self.vertices, axis=0)))

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Unsigned distance from each point to the nearest edge."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        start, end = self.edges()
        seg = end - start
        rel = pts[:, None, :] - start[None, :, :]
        t = np.clip(np.einsum("mnk,nk->mn", rel, seg) / np.einsum("nk,nk->n", seg, seg), 0.0, 1.0)
        nearest = start[None, :, :] + t[..., None] * seg[None, :, :]
        return np.min(np.linalg.norm(pts[:, None, :] - nearest, axis=-1), axis=1)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        """Positive inside, negative outside, zero on the boundary."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dist = self.boundary_distance(pts)
        inside = _winding_numbers(self.vertices, pts) != 0
        return np.where(inside, dist, -dist)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Strict interior membership; boundary points count as outside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tol = 1e-12 * max(self.scale(), 1.0)
        return (_winding_numbers(self.vertices, pts) != 0) & (self.boundary_distance(pts) > tol)

    def in_closure(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tol = 1e-12 * max(self.scale(), 1.0)
        return (_winding_numbers(self.vertices, pts) != 0) | (self.boundary_distance(pts) <= tol)


def _shoelace(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def make_polygon(points: Sequence[Sequence[float]] | np.ndarray) -> JordanPolygon:
    vertices = np.asarray(points, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise DegeneratePolygonError("polygon vertices must be an (n, 2) array")
    if vertices.shape[0] > 1 and np.allclose(vertices[0], vertices[-1], rtol=0.0, atol=1e-14):
        vertices = vertices[:-1]
    if vertices.shape[0] < 3:
        raise DegeneratePolygonError("polygon needs at least 3 vertices")
    area = _shoelace(vertices)
    scale = float(np.max(np.ptp(vertices, axis=0)))
    if not abs(area) > 1e-14 * max(scale, 1.0) ** 2:
        raise DegeneratePolygonError("polygon has zero area")
    return JordanPolygon(vertices.copy(), 1 if area > 0 else -1)


def circle_polygon(radius: float, n: int = 256, center: Tuple[float, float] = (0.0, 0.0)) -> JordanPolygon:
    return make_polygon(circle_samples(radius, n) + np.asarray(center, dtype=float))


def ellipse_polygon(
    semi_major: float,
    semi_minor: float,
    n: int = 256,
    center: Tuple[float, float] = (0.0, 0.0),
) -> JordanPolygon:
    theta = 2.0 * math.pi * np.arange(n) / n
    pts = np.stack([semi_major * np.cos(theta), semi_minor * np.sin(theta)], axis=-1)
    return make_polygon(pts + np.asarray(center, dtype=float))


def _is_left(start: np.ndarray, end: np.ndarray, points: np.ndarray) -> np.ndarray:
    """>0 when the point is left of the directed edge start->end."""
    return (end[None, :, 0] - start[None, :, 0]) * (points[:, None, 1] - start[None, :, 1]) - (
        points[:, None, 0] - start[None, :, 0]
    ) * (end[None, :, 1] - start[None, :, 1])


def _winding_numbers(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    start = vertices
    end = np.roll(vertices, -1, axis=0)
    y = points[:, 1][:, None]
    left = _is_left(start, end, points)
    upward = (start[None, :, 1] <= y) & (end[None, :, 1] > y) & (left > 0)
    downward = (start[None, :, 1] > y) & (end[None, :, 1] <= y) & (left < 0)
    return np.sum(upward, axis=1) - np.sum(downward, axis=1)


def winding_number(poly: JordanPolygon, x: Sequence[float], tol: float | None = None) -> int:
    """Signed winding of `poly` about `x`: ±1 inside a simple curve, 0 outside."""
    point = np.asarray(x, dtype=float).reshape(1, 2)
    if tol is None:
        tol = 1e-12 * max(poly.scale(), 1.0)
    distance = float(poly.boundary_distance(point)[0])
    if distance <= tol:
        raise BoundaryAmbiguityError(distance)
    return int(_winding_numbers(poly.vertices, point)[0])


def winding_numbers(poly: JordanPolygon, points: np.ndarray) -> np.ndarray:
    """Vectorised winding numbers; points on the boundary are not flagged."""
    return _winding_numbers(poly.vertices, np.atleast_2d(np.asarray(points, dtype=float)))


def polar_components(points: np.ndarray, vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(v·e_r, v·e_θ) for vectors attached at points."""
    theta = np.arctan2(points[..., 1], points[..., 0])
    c, s = np.cos(theta), np.sin(theta)
    v_r = vectors[..., 0] * c + vectors[..., 1] * s
    v_t = -vectors[..., 0] * s + vectors[..., 1] * c
    return v_r, v_t
