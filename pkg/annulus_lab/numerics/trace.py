from __future__ import annotations

"""
Đường dòng ẋ = v(x), đường gradient ẋ = ±∇u(x), bản đồ đơn điệu dọc theo chúng,
trích hàm xoáy f(τ) và phần dư nửa tuyến tính Δu + f(u).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .flows import VectorField
from .geometry import JordanPolygon, make_polygon
from .profiles import VorticityProfile, make_vorticity_profile
from .stream import StreamGrid
from .tolerances import TOLERANCES

LOGGER = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class StagnantSeedError(ValueError):
    def __init__(self, seed: Sequence[float], speed: float) -> None:
        super().__init__(f"seed {tuple(float(c) for c in seed)} is stagnant (|v| = {speed:.3e})")
        self.seed = tuple(float(c) for c in seed)
        self.speed = speed


class PrematureStagnationError(RuntimeError):
    """Gradient curve stalled at an interior critical point of u."""

    def __init__(self, location: Sequence[float]) -> None:
        super().__init__(f"gradient curve stalled at interior point {tuple(round(float(c), 10) for c in location)}")
        self.location = (float(location[0]), float(location[1]))


class OrbitEscapeError(RuntimeError):
    def __init__(self, position: Sequence[float]) -> None:
        super().__init__(f"orbit left the truncated band at {tuple(float(c) for c in position)}")
        self.position = (float(position[0]), float(position[1]))


class ChartError(ValueError):
    def __init__(self, index: int) -> None:
        super().__init__(f"u samples are not strictly monotone at index {index}")
        self.index = index


@dataclass(frozen=True, slots=True)
class TracerOptions:
    rtol: float = TOLERANCES.tracer_rtol
    atol: float = TOLERANCES.tracer_atol
    max_step_fraction: float = TOLERANCES.tracer_max_step_fraction
    max_steps: int = TOLERANCES.tracer_max_steps
    closure_rel_tol: float = TOLERANCES.closure_rel_tol
    winding_residual_tol: float = TOLERANCES.winding_residual_tol
    # arc-length cap for gradient curves, as a fraction of the band width
    max_arc_fraction: float = 0.002
    stagnation_tol: float = 1e-12


def _event(fn: Callable[[float, np.ndarray], float], terminal: bool, direction: int) -> Callable:
    fn.terminal = terminal
    fn.direction = direction
    return fn


def _band_events(field: VectorField) -> List[Callable]:
    lo, hi = field.domain.band
    slack = 1e-9 * hi
    inner = _event(lambda t, y: math.hypot(y[0], y[1]) - (lo - slack), True, -1)
    outer = _event(lambda t, y: math.hypot(y[0], y[1]) - (hi + slack), True, 1)
    return [inner, outer]


# ---------------------------------------------------------------------------
# Streamlines
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, eq=False)
class Streamline:
    seed: Tuple[float, float]
    polyline: np.ndarray
    times: np.ndarray
    closed: bool
    period: float | None
    winding: int
    winding_residual: float
    suspect: bool
    r_min: float
    r_max: float
    length: float
    u_drift: float | None
    omega_drift: float | None
    termination: str
    u_values: np.ndarray | None = None
    omega_values: np.ndarray | None = None

    @property
    def width(self) -> float:
        return self.r_max - self.r_min

    def to_polygon(self) -> JordanPolygon:
        if not self.closed:
            raise ValueError("only closed streamlines define a Jordan polygon")
        return make_polygon(self.polyline)

    def to_rows(self) -> List[Dict[str, float]]:
        rows = []
        for k, (t, point) in enumerate(zip(self.times, self.polyline)):
            rows.append(
                {
                    "t": float(t),
                    "x": float(point[0]),
                    "y": float(point[1]),
                    "u": float(self.u_values[k]) if self.u_values is not None else math.nan,
                    "omega": float(self.omega_values[k]) if self.omega_values is not None else math.nan,
                }
            )
        return rows

    def summary(self) -> Dict[str, Any]:
        return {
            "seed": list(self.seed),
            "closed": self.closed,
            "period": self.period,
            "winding": self.winding,
            "winding_residual": self.winding_residual,
            "suspect": self.suspect,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "length": self.length,
            "u_drift": self.u_drift,
            "omega_drift": self.omega_drift,
            "termination": self.termination,
            "vertices": int(self.polyline.shape[0]),
        }


def _winding(points: np.ndarray) -> Tuple[int, float]:
    angles = np.unwrap(np.arctan2(points[:, 1], points[:, 0]))
    swept = (angles[-1] - angles[0]) / TWO_PI
    winding = int(round(swept))
    return winding, abs(swept - winding)


def trace_streamline(field: VectorField, x0: Sequence[float], opts: TracerOptions | None = None) -> Streamline:
    """
    Integrate ẋ = v(x) from x0 until the orbit re-crosses the section through x0 normal to v(x0).

    Crossings before the orbit has moved 1e3 closure tolerances away are ignored; the first
    later crossing within a tenth of the orbit extent decides closure.
    """
    opts = opts or TracerOptions()
    seed = np.asarray(x0, dtype=float)
    v0 = field.velocity(seed)
    speed0 = float(np.hypot(*v0))
    if not speed0 > opts.stagnation_tol * max(1.0, float(np.hypot(*seed))):
        raise StagnantSeedError(seed, speed0)
    normal = v0 / speed0
    scale = float(np.hypot(*seed))
    guard_distance = 1e3 * opts.closure_rel_tol * max(scale, 1e-12)

    section = _event(lambda t, y: float(np.dot(y - seed, normal)), False, 1)
    events = [section] + _band_events(field)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return field.velocity(y)

    times: List[float] = [0.0]
    points: List[np.ndarray] = [seed.copy()]
    t, y = 0.0, seed.copy()
    t_guard: float | None = None
    max_distance = 0.0
    chunk = 0.25 * TWO_PI * max(scale, 1e-12) / speed0
    closure: Tuple[float, np.ndarray] | None = None
    termination = "step-limit"
    steps = 0

    while steps < opts.max_steps:
        r = float(np.hypot(*y))
        speed = float(np.hypot(*field.velocity(y)))
        max_step = opts.max_step_fraction * r / max(speed, 1e-300)
        sol = solve_ivp(
            rhs, (t, t + chunk), y, method="RK45", rtol=opts.rtol, atol=opts.atol, max_step=max_step, events=events
        )
        if sol.status == -1:
            raise RuntimeError(f"streamline integration failed: {sol.message}")
        new_t = sol.t[1:]
        new_y = sol.y[:, 1:].T
        if sol.t_events[1].size or sol.t_events[2].size:
            raise OrbitEscapeError(sol.y[:, -1])

        distances = np.linalg.norm(new_y - seed, axis=1)
        if t_guard is None:
            far = np.flatnonzero(distances > guard_distance)
            if far.size:
                t_guard = float(new_t[far[0]])
        if distances.size:
            max_distance = max(max_distance, float(np.max(distances)))

        if t_guard is not None:
            for te, ye in zip(sol.t_events[0], sol.y_events[0]):
                if te > t_guard and np.linalg.norm(ye - seed) <= 0.1 * max_distance:
                    closure = (float(te), np.asarray(ye, dtype=float))
                    break
        if closure is not None:
            keep = new_t < closure[0]
            times.extend(new_t[keep].tolist())
            points.extend(new_y[keep])
            times.append(closure[0])
            points.append(closure[1])
            break
        times.extend(new_t.tolist())
        points.extend(new_y)
        steps += new_t.size
        t, y = float(sol.t[-1]), sol.y[:, -1].copy()

    polyline = np.asarray(points, dtype=float)
    time_arr = np.asarray(times, dtype=float)
    length = float(np.sum(np.linalg.norm(np.diff(polyline, axis=0), axis=1)))
    closed = False
    period = None
    if closure is not None:
        gap = float(np.linalg.norm(closure[1] - seed))
        closed = gap <= opts.closure_rel_tol * max(length, 1e-300)
        termination = "closed" if closed else "not-closed"
        if closed:
            period = closure[0]
            polyline[-1] = seed
    winding, residual = _winding(polyline)
    suspect = closed and residual >= opts.winding_residual_tol
    if suspect:
        LOGGER.warning("Streamline from %s: winding residual %.3e is suspect", tuple(seed), residual)

    radii = np.hypot(polyline[:, 0], polyline[:, 1])
    u_values = u_drift = None
    if field.stream_fn is not None:
        u_values = field.stream(polyline)
        u_drift = float(np.max(np.abs(u_values - field.stream(seed))))
    omega_values = field.vorticity(polyline)
    omega_drift = float(np.max(np.abs(omega_values - omega_values[0])))
    LOGGER.debug(
        "Streamline from %s: %s after %d vertices, period=%s, winding=%d",
        tuple(seed),
        termination,
        polyline.shape[0],
        period,
        winding,
    )
    return Streamline(
        seed=(float(seed[0]), float(seed[1])),
        polyline=polyline,
        times=time_arr,
        closed=closed,
        period=period,
        winding=winding,
        winding_residual=residual,
        suspect=suspect,
        r_min=float(np.min(radii)),
        r_max=float(np.max(radii)),
        length=length,
        u_drift=u_drift,
        omega_drift=omega_drift,
        termination=termination,
        u_values=u_values,
        omega_values=omega_values,
    )


# ---------------------------------------------------------------------------
# Gradient curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, eq=False)
class GradientCurve:
    """Orbit of ẋ = direction·∇u, with u recorded from Σ|∇u|² dt; u increases along the arrays."""

    seed: Tuple[float, float]
    polyline: np.ndarray
    u_values: np.ndarray
    times: np.ndarray
    termination: str
    start_termination: str | None = None

    @property
    def u_range(self) -> Tuple[float, float]:
        return float(self.u_values[0]), float(self.u_values[-1])

    def end_radius(self) -> float:
        return float(np.hypot(*self.polyline[-1]))

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {"t": float(t), "x": float(p[0]), "y": float(p[1]), "u": float(u)}
            for t, p, u in zip(self.times, self.polyline, self.u_values)
        ]


def _grad_u(field: VectorField, x: np.ndarray) -> np.ndarray:
    v = field.velocity(x)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def _stall_termination(field: VectorField, position: np.ndarray) -> str:
    domain = field.domain
    r = float(np.hypot(*position))
    near = 1e-3 * max(domain.trunc_outer - domain.trunc_inner, 1e-12)
    if domain.has_inner_boundary and abs(r - domain.inner_radius) <= near:
        return "hit-inner"
    if domain.has_outer_boundary and abs(r - domain.outer_radius) <= near:
        return "hit-outer"
    if domain.punctured and r <= max(10 * domain.trunc_inner, 0.01 * domain.trunc_outer):
        return "hit-truncation"
    raise PrematureStagnationError(position)


def _edge_termination(field: VectorField, inner: bool) -> str:
    domain = field.domain
    if inner:
        return "hit-inner" if domain.has_inner_boundary and domain.trunc_inner == domain.inner_radius else "hit-truncation"
    return "hit-outer" if domain.has_outer_boundary and domain.trunc_outer == domain.outer_radius else "hit-truncation"


def trace_gradient_curve(
    field: VectorField,
    x0: Sequence[float],
    direction: int = 1,
    opts: TracerOptions | None = None,
    stop_level: float | None = None,
    u0: float | None = None,
) -> GradientCurve:
    """
    Follow ẋ = direction·∇u with ∇u = (v₂, −v₁) until the band edge, a stall or `stop_level`.

    The returned arrays run in the order of increasing u, so a backward curve is reversed.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    opts = opts or TracerOptions()
    seed = np.asarray(x0, dtype=float)
    g0 = float(np.hypot(*_grad_u(field, seed)))
    if not g0 > opts.stagnation_tol * max(1.0, float(np.hypot(*seed))):
        raise StagnantSeedError(seed, g0)
    if u0 is None:
        u0 = float(field.stream(seed)) if field.stream_fn is not None else 0.0

    stall_level = 1e-6 * g0
    events = _band_events(field)
    events.append(_event(lambda t, y: float(np.hypot(*_grad_u(field, y[:2]))) - stall_level, True, -1))
    if stop_level is not None:
        events.append(_event(lambda t, y: y[2] - stop_level, True, 0))

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        g = _grad_u(field, y[:2])
        return np.array([direction * g[0], direction * g[1], direction * (g[0] ** 2 + g[1] ** 2)])

    lo, hi = field.domain.band
    max_arc = opts.max_arc_fraction * (hi - lo)
    y = np.array([seed[0], seed[1], u0])
    t = 0.0
    times: List[float] = [0.0]
    states: List[np.ndarray] = [y.copy()]
    termination = "step-limit"
    steps = 0
    while steps < opts.max_steps:
        r = float(np.hypot(y[0], y[1]))
        g = float(np.hypot(*_grad_u(field, y[:2])))
        max_step = min(opts.max_step_fraction * r, max_arc) / max(g, 1e-300)
        chunk = 200 * max_step
        sol = solve_ivp(
            rhs, (t, t + chunk), y, method="RK45", rtol=opts.rtol, atol=opts.atol, max_step=max_step, events=events
        )
        if sol.status == -1:
            raise RuntimeError(f"gradient curve integration failed: {sol.message}")
        times.extend(sol.t[1:].tolist())
        states.extend(sol.y[:, 1:].T)
        steps += sol.t.size - 1
        t, y = float(sol.t[-1]), sol.y[:, -1].copy()
        if sol.status == 1:
            if sol.t_events[0].size:
                termination = _edge_termination(field, inner=True)
            elif sol.t_events[1].size:
                termination = _edge_termination(field, inner=False)
            elif sol.t_events[2].size:
                termination = _stall_termination(field, y[:2])
            else:
                termination = "stop-level"
            break

    data = np.asarray(states, dtype=float)
    time_arr = np.asarray(times, dtype=float)
    if direction < 0:
        data = data[::-1]
        time_arr = -time_arr[::-1]
    # drop vertices where u failed to advance (roundoff at stalls)
    keep = np.concatenate([[True], np.diff(data[:, 2]) > 0])
    keep &= np.maximum.accumulate(data[:, 2]) == data[:, 2]
    data, time_arr = data[keep], time_arr[keep]
    LOGGER.debug("Gradient curve from %s: %s after %d vertices", tuple(seed), termination, data.shape[0])
    return GradientCurve(
        seed=(float(seed[0]), float(seed[1])),
        polyline=data[:, :2],
        u_values=data[:, 2],
        times=time_arr,
        termination=termination,
    )


def trace_full_gradient_curve(field: VectorField, x0: Sequence[float], opts: TracerOptions | None = None) -> GradientCurve:
    """Backward and forward gradient curves through x0 joined into one curve spanning the u range."""
    backward = trace_gradient_curve(field, x0, -1, opts)
    forward = trace_gradient_curve(field, x0, 1, opts)
    return GradientCurve(
        seed=forward.seed,
        polyline=np.concatenate([backward.polyline[:-1], forward.polyline]),
        u_values=np.concatenate([backward.u_values[:-1], forward.u_values]),
        times=np.concatenate([backward.times[:-1], forward.times]),
        termination=forward.termination,
        start_termination=backward.termination,
    )


# ---------------------------------------------------------------------------
# Charts and vorticity profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, eq=False)
class Chart:
    """Monotone piecewise-cubic g: t ↦ u along a curve, with its inverse."""

    times: np.ndarray
    values: np.ndarray
    _forward: PchipInterpolator = field(init=False, repr=False)
    _inverse: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_forward", PchipInterpolator(self.times, self.values, extrapolate=False))
        if self.values[-1] > self.values[0]:
            inverse = PchipInterpolator(self.values, self.times, extrapolate=False)
        else:
            inverse = PchipInterpolator(self.values[::-1], self.times[::-1], extrapolate=False)
        object.__setattr__(self, "_inverse", inverse)

    def g(self, t: float | np.ndarray) -> np.ndarray | float:
        out = self._forward(t)
        return float(out) if np.ndim(out) == 0 else out

    def g_inv(self, u: float | np.ndarray) -> np.ndarray | float:
        out = self._inverse(u)
        return float(out) if np.ndim(out) == 0 else out


def _first_violation(values: np.ndarray) -> int | None:
    steps = np.diff(values)
    if steps.size == 0:
        return 0
    sign = np.sign(steps[0])
    if sign == 0:
        return 1
    bad = np.flatnonzero(np.sign(steps) != sign)
    return int(bad[0]) + 1 if bad.size else None


def build_chart(curve: GradientCurve | Tuple[np.ndarray, np.ndarray]) -> Chart:
    if isinstance(curve, GradientCurve):
        times, values = curve.times, curve.u_values
    else:
        times, values = curve
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    index = _first_violation(times)
    if index is not None:
        raise ChartError(index)
    index = _first_violation(values)
    if index is not None:
        raise ChartError(index)
    if times[-1] < times[0]:
        times, values = times[::-1], values[::-1]
    return Chart(times.copy(), values.copy())


def _lipschitz(tau: np.ndarray, f: np.ndarray, lo_frac: float, hi_frac: float) -> float:
    span = tau[-1] - tau[0]
    mid = 0.5 * (tau[1:] + tau[:-1])
    rel = (mid - tau[0]) / span
    slopes = np.abs(np.diff(f) / np.diff(tau))
    band = (rel >= lo_frac) & (rel <= hi_frac)
    return float(np.max(slopes[band])) if np.any(band) else 0.0


def _densify(field: VectorField, curve: GradientCurve, n_levels: int = 4096, max_pieces: int = 64) -> Tuple[np.ndarray, np.ndarray]:
    """
    Chèn thêm điểm giữa các đỉnh của đường gradient khi trường có u dạng đóng.

    Mỗi đoạn được chia sao cho bước theo u không quá span / n_levels; τ của điểm
    chèn lấy đúng u(x) nên cặp (τ, −ω(x)) luôn nhất quán. Chỉ giữ các điểm làm τ
    đơn điệu ngặt.
    """
    points, tau = curve.polyline, curve.u_values
    if field.stream_fn is None or points.shape[0] < 2:
        return points, tau
    step = abs(float(tau[-1] - tau[0])) / n_levels
    if step == 0.0:
        return points, tau
    pieces = [points[:1]]
    for start, end, t0, t1 in zip(points[:-1], points[1:], tau[:-1], tau[1:]):
        k = int(min(max_pieces, max(1, math.ceil(abs(float(t1 - t0)) / step))))
        s = np.arange(1, k + 1, dtype=float) / k
        pieces.append(start + s[:, None] * (end - start))
    dense = np.concatenate(pieces)
    values = np.asarray(field.stream(dense), dtype=float)
    signed = values * (1.0 if tau[-1] > tau[0] else -1.0)
    keep = np.concatenate([[True], signed[1:] > np.maximum.accumulate(signed)[:-1]])
    return dense[keep], values[keep]


def extract_vorticity_profile(field: VectorField, curve: GradientCurve) -> VorticityProfile:
    """f(τ) = −ω along the curve, indexed by u; vertices are densified when u is known in closed form."""
    build_chart(curve)
    points, tau = _densify(field, curve)
    f = -field.vorticity(points)
    low = _lipschitz(tau, f, 0.0, 0.1)
    high = _lipschitz(tau, f, 0.9, 1.0)
    mid = _lipschitz(tau, f, 0.45, 0.55)
    LOGGER.debug("Vorticity profile of %s: Lipschitz low=%.3g mid=%.3g high=%.3g", field.name, low, mid, high)
    return make_vorticity_profile(
        tau,
        f,
        lipschitz_low=low,
        lipschitz_high=high,
        lipschitz_mid=mid,
        source=f"extracted:{field.name}",
    )


@dataclass(frozen=True, slots=True)
class SemilinearResidual:
    max: float
    p99: float
    clamped: int
    nodes: int

    def as_dict(self) -> Dict[str, float | int]:
        return {"max": self.max, "p99": self.p99, "clamped": self.clamped, "nodes": self.nodes}


ProfileLike = Union[VorticityProfile, Callable[[np.ndarray], np.ndarray]]


def profile_values(profile: ProfileLike, u: np.ndarray, margin: float) -> Tuple[np.ndarray, int]:
    """f(u) from a tabulated profile (clamped within `margin`) or from an exact callable."""
    if isinstance(profile, VorticityProfile):
        values = np.asarray(profile.f_at(u, margin=margin))
        clamped = profile.clamped_count(u)
        if clamped:
            LOGGER.warning("%d node values clamped into the profile range", clamped)
        return values, clamped
    return np.broadcast_to(np.asarray(profile(u), dtype=float), np.shape(u)), 0


def semilinear_residual(
    sg: StreamGrid,
    profile: ProfileLike,
    margin: float = 0.02,
    weight: np.ndarray | None = None,
) -> SemilinearResidual:
    """|Δ_h u + weight·f(u)| over interior nodes; values within `margin` of the profile range are clamped."""
    lap = sg.node_laplacian()[1:-1]
    u = sg.values[1:-1]
    f, clamped = profile_values(profile, u, margin)
    if weight is not None:
        f = f * np.asarray(weight)[1:-1, None]
    residual = np.abs(lap + f)
    return SemilinearResidual(
        max=float(np.max(residual)),
        p99=float(np.percentile(residual, 99)),
        clamped=clamped,
        nodes=int(residual.size),
    )


# ---------------------------------------------------------------------------
# Level curves
# ---------------------------------------------------------------------------


def level_seed(field: VectorField, level: float, opts: TracerOptions | None = None) -> np.ndarray:
    """A point of {u = level}: on the θ=0 ray when u is known, else along a gradient curve."""
    lo, hi = field.domain.band
    if field.stream_fn is not None:

        def gap(r: float) -> float:
            return float(field.stream(np.array([r, 0.0]))) - level

        r = brentq(gap, lo, hi, xtol=1e-14 * hi, rtol=4 * np.finfo(float).eps)
        return np.array([r, 0.0])
    start = np.array([0.5 * (lo + hi), 0.0])
    u_start = 0.0
    direction = 1 if level > u_start else -1
    curve = trace_gradient_curve(field, start, direction, opts, stop_level=level, u0=u_start)
    if curve.termination != "stop-level":
        raise ValueError(f"level {level} not reached along the gradient curve ({curve.termination})")
    end = curve.polyline[-1] if direction > 0 else curve.polyline[0]
    return np.asarray(end, dtype=float)


def level_polygon(field: VectorField, level: float, opts: TracerOptions | None = None) -> Tuple[JordanPolygon, Streamline]:
    """Closed streamline {u = level} as a Jordan polygon."""
    line = trace_streamline(field, level_seed(field, level, opts), opts)
    if not line.closed:
        raise ValueError(f"streamline at level {level} did not close ({line.termination})")
    return line.to_polygon(), line
