from __future__ import annotations

"""
Trường vận tốc phẳng và danh mục các dòng chảy Euler dừng tường minh.

Mỗi dòng trong danh mục được dựng từ hàm dòng u (v = ∇⊥u = (−∂u/∂x₂, ∂u/∂x₁))
cùng các đạo hàm cực của nó, nên Jacobian, xoáy và áp suất đều có dạng giải tích.
Hàm xoáy f luôn theo quy ước Δu + f(u) = 0, tức là f = −ω.
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, NamedTuple, Tuple

import numpy as np

from .expression import parse_expression
from .geometry import INFINITY, AnnularDomain, OutOfBandError, PolarGrid, make_annulus
from .profiles import VorticityProfile
from .utils import fd_gradient, fd_jacobian, fd_steps

LOGGER = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]


class UnknownFlowError(KeyError):
    pass


class MissingParameterError(ValueError):
    pass


class MissingPressureError(ValueError):
    def __init__(self, name: str) -> None:
        super().__init__(
            f"field '{name}' has no pressure attached; build one with bernoulli_pressure() "
            "from an extracted vorticity profile and attach it with with_pressure()"
        )


@dataclass(frozen=True, slots=True, eq=False)
class VectorField:
    """Planar velocity field, evaluated on arrays of points with shape (..., 2)."""

    name: str
    kind: str  # catalog | expression | grid
    domain: AnnularDomain
    velocity_fn: ArrayFn
    jacobian_fn: ArrayFn | None = None
    pressure_fn: ArrayFn | None = None
    pressure_gradient_fn: ArrayFn | None = None
    stream_fn: ArrayFn | None = None
    # f with Δu + f(u) = 0, when the flow is known to have one.
    vorticity_function: Callable[[np.ndarray], np.ndarray] | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @property
    def has_pressure(self) -> bool:
        return self.pressure_fn is not None or self.pressure_gradient_fn is not None

    @property
    def fixed_circles(self) -> Tuple[float, ...]:
        return tuple(self.metadata.get("fixed_circles", ()))

    def velocity(self, points: np.ndarray | Iterable[float]) -> np.ndarray:
        return np.asarray(self.velocity_fn(np.asarray(points, dtype=float)), dtype=float)

    __call__ = velocity

    def speed(self, points: np.ndarray) -> np.ndarray:
        v = self.velocity(points)
        return np.hypot(v[..., 0], v[..., 1])

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.jacobian_fn is not None:
            return self.jacobian_fn(pts)
        return fd_jacobian(self.velocity_fn, pts)

    def vorticity(self, points: np.ndarray) -> np.ndarray:
        jac = self.jacobian(points)
        return jac[..., 1, 0] - jac[..., 0, 1]

    def divergence(self, points: np.ndarray) -> np.ndarray:
        jac = self.jacobian(points)
        return jac[..., 0, 0] + jac[..., 1, 1]

    def stream(self, points: np.ndarray) -> np.ndarray:
        if self.stream_fn is None:
            raise ValueError(f"field '{self.name}' has no closed-form stream function")
        return self.stream_fn(np.asarray(points, dtype=float))

    def pressure(self, points: np.ndarray) -> np.ndarray:
        if self.pressure_fn is None:
            raise MissingPressureError(self.name)
        return self.pressure_fn(np.asarray(points, dtype=float))

    def pressure_gradient(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.pressure_gradient_fn is not None:
            return self.pressure_gradient_fn(pts)
        if self.pressure_fn is not None:
            return fd_gradient(self.pressure_fn, pts)
        raise MissingPressureError(self.name)

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "kind": self.kind, "params": dict(self.params), "domain": self.domain.describe()}


# ---------------------------------------------------------------------------
# Pointwise operators
# ---------------------------------------------------------------------------


def _as_points(x: Iterable[float] | np.ndarray) -> Tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != 2:
        raise ValueError(f"points must have a trailing dimension of 2, got shape {pts.shape}")
    return pts, pts.ndim == 1


def _require_band(field: VectorField, pts: np.ndarray, differencing: bool) -> None:
    radii = np.atleast_1d(np.hypot(pts[..., 0], pts[..., 1]))
    margin = 2.0 * np.atleast_1d(fd_steps(pts)) if differencing else np.zeros_like(radii)
    lo, hi = field.domain.band
    slack = 1e-12 * hi
    bad = (radii - margin < lo - slack) | (radii + margin > hi + slack)
    if np.any(bad):
        raise OutOfBandError(float(radii[bad][0]), field.domain.band)


def _scalar_or_array(values: np.ndarray, single: bool) -> np.ndarray | float:
    return float(values) if single else values


def vorticity_at(field: VectorField, x: Iterable[float] | np.ndarray) -> np.ndarray | float:
    """ω = ∂v₂/∂x₁ − ∂v₁/∂x₂; analytic when a Jacobian is attached, else 4th-order FD."""
    pts, single = _as_points(x)
    _require_band(field, pts, field.jacobian_fn is None)
    return _scalar_or_array(field.vorticity(pts), single)


def divergence_at(field: VectorField, x: Iterable[float] | np.ndarray) -> np.ndarray | float:
    pts, single = _as_points(x)
    _require_band(field, pts, field.jacobian_fn is None)
    return _scalar_or_array(field.divergence(pts), single)


def euler_residual(field: VectorField, x: Iterable[float] | np.ndarray) -> np.ndarray:
    """(v·∇)v + ∇p at x."""
    if not field.has_pressure:
        raise MissingPressureError(field.name)
    pts, _ = _as_points(x)
    _require_band(field, pts, field.jacobian_fn is None or field.pressure_gradient_fn is None)
    v = field.velocity(pts)
    jac = field.jacobian(pts)
    return np.einsum("...ij,...j->...i", jac, v) + field.pressure_gradient(pts)


def vorticity_transport_at(field: VectorField, x: Iterable[float] | np.ndarray) -> np.ndarray | float:
    """v·∇ω, with ∇ω by central differences of the (analytic or FD) vorticity."""
    pts, single = _as_points(x)
    _require_band(field, pts, True)
    grad = fd_gradient(field.vorticity, pts)
    v = field.velocity(pts)
    return _scalar_or_array(np.sum(v * grad, axis=-1), single)


def euler_residual_relative(field: VectorField, x: Iterable[float] | np.ndarray) -> np.ndarray:
    """|(v·∇)v + ∇p| per point, divided by max(1, |v|²/r, |∇p|)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    residual = np.linalg.norm(euler_residual(field, pts), axis=-1)
    r = np.hypot(pts[..., 0], pts[..., 1])
    speed = field.speed(pts)
    grad_p = np.linalg.norm(field.pressure_gradient(pts), axis=-1)
    scale = np.maximum(np.maximum(1.0, speed * speed / r), grad_p)
    return residual / scale


def vorticity_transport_relative(field: VectorField, x: Iterable[float] | np.ndarray) -> np.ndarray:
    """|v·∇ω| per point, divided by max(1, |v|·|Dv|/r) (the size of v·∇ω for an O(1) relative change of ω)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    transport = np.abs(np.atleast_1d(vorticity_transport_at(field, pts)))
    r = np.hypot(pts[..., 0], pts[..., 1])
    jac_norm = np.linalg.norm(field.jacobian(pts), axis=(-2, -1))
    scale = np.maximum(1.0, field.speed(pts) * jac_norm / r)
    return transport / scale


def bernoulli_pressure(
    u_value: float | np.ndarray,
    speed: float | np.ndarray,
    profile: VorticityProfile,
) -> np.ndarray | float:
    """p = −|v|²/2 − F(u) with F' = f anchored at the low end of the profile range."""
    values = np.asarray(u_value, dtype=float)
    out = -0.5 * np.asarray(speed, dtype=float) ** 2 - np.asarray(profile.F_at(values))
    return float(out) if np.ndim(out) == 0 else out


def with_pressure(field: VectorField, pressure_fn: ArrayFn, gradient_fn: ArrayFn | None = None) -> VectorField:
    return replace(field, pressure_fn=pressure_fn, pressure_gradient_fn=gradient_fn)


# ---------------------------------------------------------------------------
# Fields built from a polar stream function
# ---------------------------------------------------------------------------


class PolarDerivatives(NamedTuple):
    u: np.ndarray
    u_r: np.ndarray
    u_t: np.ndarray
    u_rr: np.ndarray
    u_rt: np.ndarray
    u_tt: np.ndarray


class CartesianDerivatives(NamedTuple):
    u: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    uxx: np.ndarray
    uxy: np.ndarray
    uyy: np.ndarray


StreamDerivativesFn = Callable[[np.ndarray, np.ndarray], PolarDerivatives]


def _cartesian(derivs: StreamDerivativesFn, points: np.ndarray) -> CartesianDerivatives:
    x, y = points[..., 0], points[..., 1]
    r = np.hypot(x, y)
    d = derivs(r, np.arctan2(y, x))
    c, s = x / r, y / r
    ux = d.u_r * c - d.u_t * s / r
    uy = d.u_r * s + d.u_t * c / r
    r2 = r * r
    uxx = c * c * d.u_rr - 2 * s * c * d.u_rt / r + s * s * d.u_tt / r2 + s * s * d.u_r / r + 2 * s * c * d.u_t / r2
    uyy = s * s * d.u_rr + 2 * s * c * d.u_rt / r + c * c * d.u_tt / r2 + c * c * d.u_r / r - 2 * s * c * d.u_t / r2
    uxy = (
        s * c * d.u_rr
        + (c * c - s * s) * d.u_rt / r
        - s * c * d.u_tt / r2
        - s * c * d.u_r / r
        - (c * c - s * s) * d.u_t / r2
    )
    return CartesianDerivatives(d.u, ux, uy, uxx, uxy, uyy)


def _radial_derivs(U: ArrayFn, dU: ArrayFn, d2U: ArrayFn) -> StreamDerivativesFn:
    def derivs(r: np.ndarray, theta: np.ndarray) -> PolarDerivatives:
        zero = np.zeros_like(r)
        return PolarDerivatives(U(r), dU(r), zero, d2U(r), zero, zero)

    return derivs


def _cos_mode_derivs(P: ArrayFn, dP: ArrayFn, d2P: ArrayFn) -> StreamDerivativesFn:
    """u = P(r) cos θ."""

    def derivs(r: np.ndarray, theta: np.ndarray) -> PolarDerivatives:
        c, s = np.cos(theta), np.sin(theta)
        p, dp = P(r), dP(r)
        return PolarDerivatives(p * c, dp * c, -p * s, d2P(r) * c, -dp * s, -p * c)

    return derivs


def _sum_derivs(*parts: StreamDerivativesFn) -> StreamDerivativesFn:
    def derivs(r: np.ndarray, theta: np.ndarray) -> PolarDerivatives:
        items = [part(r, theta) for part in parts]
        return PolarDerivatives(*(sum(values) for values in zip(*items)))

    return derivs


def _radial_pressure(p: ArrayFn, dp: ArrayFn) -> Tuple[ArrayFn, ArrayFn]:
    def pressure(points: np.ndarray) -> np.ndarray:
        return p(np.hypot(points[..., 0], points[..., 1]))

    def gradient(points: np.ndarray) -> np.ndarray:
        r = np.hypot(points[..., 0], points[..., 1])
        return (dp(r) / r)[..., None] * points

    return pressure, gradient


def stream_field(
    name: str,
    domain: AnnularDomain,
    derivs: StreamDerivativesFn,
    *,
    pressure: Tuple[ArrayFn, ArrayFn] | None = None,
    vorticity_function: Callable[[np.ndarray], np.ndarray] | None = None,
    params: Mapping[str, float] | None = None,
    metadata: Mapping[str, Any] | None = None,
    kind: str = "catalog",
) -> VectorField:
    """Build v = ∇⊥u with analytic Jacobian from the polar derivatives of u."""

    def velocity(points: np.ndarray) -> np.ndarray:
        d = _cartesian(derivs, points)
        return np.stack([-d.uy, d.ux], axis=-1)

    def jacobian(points: np.ndarray) -> np.ndarray:
        d = _cartesian(derivs, points)
        row1 = np.stack([-d.uxy, -d.uyy], axis=-1)
        row2 = np.stack([d.uxx, d.uxy], axis=-1)
        return np.stack([row1, row2], axis=-2)

    def stream(points: np.ndarray) -> np.ndarray:
        x, y = points[..., 0], points[..., 1]
        return derivs(np.hypot(x, y), np.arctan2(y, x)).u

    pressure_fn, gradient_fn = pressure if pressure is not None else (None, None)
    return VectorField(
        name=name,
        kind=kind,
        domain=domain,
        velocity_fn=velocity,
        jacobian_fn=jacobian,
        pressure_fn=pressure_fn,
        pressure_gradient_fn=gradient_fn,
        stream_fn=stream,
        vorticity_function=vorticity_function,
        params=dict(params or {}),
        metadata=dict(metadata or {}),
    )


def _bernoulli_gradient(derivs: StreamDerivativesFn, f: Callable[[np.ndarray], np.ndarray]) -> ArrayFn:
    """∇p for p = −|v|²/2 − F(u): ∇p = −Jᵀv − f(u)∇u, evaluated analytically."""

    def gradient(points: np.ndarray) -> np.ndarray:
        d = _cartesian(derivs, points)
        v1, v2 = -d.uy, d.ux
        # Jᵀv with J = [[−uxy, −uyy], [uxx, uxy]]
        jtv_x = -d.uxy * v1 + d.uxx * v2
        jtv_y = -d.uyy * v1 + d.uxy * v2
        fu = f(d.u)
        return np.stack([-jtv_x - fu * d.ux, -jtv_y - fu * d.uy], axis=-1)

    return gradient


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


def _param(params: Mapping[str, float], key: str, default: float | None = None, *, positive: bool = True) -> float:
    if key not in params or params[key] is None:
        if default is None:
            raise MissingParameterError(f"missing required parameter '{key}'")
        return float(default)
    value = float(params[key])
    if positive and not value > 0:
        raise ValueError(f"parameter '{key}' must be positive, got {value}")
    return value


def _domain(params: Mapping[str, float], a: float, b: float) -> AnnularDomain:
    return make_annulus(
        a,
        b,
        trunc_inner=params.get("trunc_inner"),
        trunc_outer=params.get("trunc_outer"),
    )


def _const(value: float) -> ArrayFn:
    return lambda s: np.full(np.shape(s), value, dtype=float)


def _circular_config(params: Mapping[str, float]) -> VectorField:
    """V(r) = α r + β / r; α=1, β=0 is the rigid rotation."""
    alpha = _param(params, "alpha", 1.0, positive=False)
    beta = _param(params, "beta", 0.0, positive=False)
    a = _param(params, "a", 1.0, positive=False)
    b = _param(params, "b", 2.0)
    derivs = _radial_derivs(
        lambda r: alpha * r * r / 2 + beta * np.log(r),
        lambda r: alpha * r + beta / r,
        lambda r: alpha - beta / (r * r),
    )
    pressure = _radial_pressure(
        lambda r: alpha**2 * r * r / 2 + 2 * alpha * beta * np.log(r) - beta**2 / (2 * r * r),
        lambda r: (alpha * r + beta / r) ** 2 / r,
    )
    fixed = tuple(x for x in (a, b) if 0 < x < INFINITY)
    meta: Dict[str, Any] = {"fixed_circles": fixed, "circular": True}
    if alpha * beta < 0:
        meta["stagnation_radius"] = math.sqrt(-beta / alpha)
    return stream_field(
        "circular",
        _domain(params, a, b),
        derivs,
        pressure=pressure,
        vorticity_function=_const(-2.0 * alpha),
        params={"alpha": alpha, "beta": beta, "a": a, "b": b},
        metadata=meta,
    )


def _rigid_config(params: Mapping[str, float]) -> VectorField:
    a = _param(params, "a", 1.0)
    b = _param(params, "b", 2.0)
    derivs = _radial_derivs(lambda r: r * r / 2, lambda r: r, lambda r: np.ones_like(r))
    return stream_field(
        "rigid",
        _domain(params, a, b),
        derivs,
        pressure=_radial_pressure(lambda r: r * r / 2, lambda r: r),
        vorticity_function=_const(-2.0),
        params={"a": a, "b": b},
        metadata={"fixed_circles": (a, b), "circular": True},
    )


def _log_config(params: Mapping[str, float]) -> VectorField:
    a = _param(params, "a", 0.0, positive=False)
    b = _param(params, "b", 1.0)
    derivs = _radial_derivs(np.log, lambda r: 1 / r, lambda r: -1 / (r * r))
    fixed = tuple(x for x in (a, b) if x > 0)
    return stream_field(
        "log",
        _domain(params, a, b),
        derivs,
        pressure=_radial_pressure(lambda r: -1 / (2 * r * r), lambda r: 1 / r**3),
        vorticity_function=_const(0.0),
        params={"a": a, "b": b},
        metadata={"fixed_circles": fixed, "circular": True},
    )


def _inverse_square_config(params: Mapping[str, float]) -> VectorField:
    a = _param(params, "a", 1.0)
    b = _param(params, "b", INFINITY)
    derivs = _radial_derivs(lambda r: -1 / r, lambda r: 1 / (r * r), lambda r: -2 / r**3)
    # p' = V²/r = r⁻⁵
    pressure = _radial_pressure(lambda r: -1 / (4 * r**4), lambda r: 1 / r**5)
    fixed = (a,) if math.isinf(b) else (a, b)
    return stream_field(
        "inverse_square",
        _domain(params, a, b),
        derivs,
        pressure=pressure,
        vorticity_function=lambda s: -np.asarray(s) ** 3,
        params={"a": a, "b": b},
        metadata={"fixed_circles": fixed, "circular": True},
    )


def _quartic_config(params: Mapping[str, float]) -> VectorField:
    R = _param(params, "R")
    R4 = R**4
    derivs = _radial_derivs(lambda r: R4 - r**4, lambda r: -4 * r**3, lambda r: -12 * r * r)
    return stream_field(
        "quartic",
        _domain(params, 0.0, R),
        derivs,
        pressure=_radial_pressure(lambda r: 8.0 / 3.0 * r**6, lambda r: 16 * r**5),
        vorticity_function=lambda s: 16 * np.sqrt(np.maximum(R4 - np.asarray(s), 0.0)),
        params={"R": R},
        metadata={"fixed_circles": (R,), "circular": True},
    )


def _shifted_config(params: Mapping[str, float]) -> VectorField:
    a = _param(params, "a")
    b = _param(params, "b", 2 * a)
    derivs = _radial_derivs(lambda r: (r - a) ** 2 / 2, lambda r: r - a, lambda r: np.ones_like(r))
    pressure = _radial_pressure(
        lambda r: r * r / 2 - 2 * a * r + a * a * np.log(r),
        lambda r: (r - a) ** 2 / r,
    )
    return stream_field(
        "shifted",
        _domain(params, a, b),
        derivs,
        pressure=pressure,
        vorticity_function=lambda s: -2 + a / (a + np.sqrt(2 * np.maximum(np.asarray(s), 0.0))),
        params={"a": a, "b": b},
        metadata={"fixed_circles": (a, b), "circular": True},
    )


def _ext_counterexample_config(params: Mapping[str, float]) -> VectorField:
    """u = 2(r²/a² − 1) + (r/a − a/r) cos θ on Ω_{a,∞}; Δu = 8/a²."""
    a = _param(params, "a")
    radial = _radial_derivs(
        lambda r: 2 * (r * r / (a * a) - 1),
        lambda r: 4 * r / (a * a),
        lambda r: np.full_like(r, 4 / (a * a)),
    )
    mode = _cos_mode_derivs(lambda r: r / a - a / r, lambda r: 1 / a + a / (r * r), lambda r: -2 * a / r**3)
    derivs = _sum_derivs(radial, mode)
    f = _const(-8.0 / (a * a))

    def pressure(points: np.ndarray) -> np.ndarray:
        d = _cartesian(derivs, points)
        return -0.5 * (d.ux**2 + d.uy**2) + 8.0 * d.u / (a * a)

    return stream_field(
        "ext_counterexample",
        _domain(params, a, INFINITY),
        derivs,
        pressure=(pressure, _bernoulli_gradient(derivs, f)),
        vorticity_function=f,
        params={"a": a},
        metadata={"fixed_circles": (a,), "circular": False},
    )


def _punct_counterexample_config(params: Mapping[str, float]) -> VectorField:
    """u = (r/b − b/r) cos θ on the punctured disk Ω_{0,b}; harmonic."""
    b = _param(params, "b")
    derivs = _cos_mode_derivs(lambda r: r / b - b / r, lambda r: 1 / b + b / (r * r), lambda r: -2 * b / r**3)
    f = _const(0.0)

    def pressure(points: np.ndarray) -> np.ndarray:
        d = _cartesian(derivs, points)
        return -0.5 * (d.ux**2 + d.uy**2)

    return stream_field(
        "punct_counterexample",
        _domain(params, 0.0, b),
        derivs,
        pressure=(pressure, _bernoulli_gradient(derivs, f)),
        vorticity_function=f,
        params={"b": b},
        metadata={"fixed_circles": (b,), "circular": False},
    )


def _eigenflow_config(params: Mapping[str, float], mode: int) -> VectorField:
    from .radial import eigenpair_mode0, eigenpair_mode1

    a = _param(params, "a", 1.0)
    b = _param(params, "b", 2.0)
    n = int(_param(params, "n", 512))
    pair = (eigenpair_mode1 if mode == 1 else eigenpair_mode0)(a, b, n)
    lam = pair.eigenvalue
    if mode == 1:
        derivs = _cos_mode_derivs(pair.__call__, pair.derivative, pair.second_derivative)
    else:
        derivs = _radial_derivs(pair.__call__, pair.derivative, pair.second_derivative)
    f = lambda s: lam * np.asarray(s)  # noqa: E731

    def pressure(points: np.ndarray) -> np.ndarray:
        d = _cartesian(derivs, points)
        return -0.5 * (d.ux**2 + d.uy**2) - 0.5 * lam * d.u**2

    meta: Dict[str, Any] = {"fixed_circles": (a, b), "circular": mode == 0, "eigenvalue": lam, "r_star": pair.r_star}
    return stream_field(
        f"eigenflow_m{mode}",
        _domain(params, a, b),
        derivs,
        pressure=(pressure, _bernoulli_gradient(derivs, f)),
        vorticity_function=f,
        params={"a": a, "b": b, "n": n},
        metadata=meta,
    )


@dataclass(frozen=True, slots=True)
class CatalogEntry:
    key: str
    description: str
    builder: Callable[[Mapping[str, float]], VectorField]
    required: Tuple[str, ...] = ()


def get_supported_flows() -> Dict[str, CatalogEntry]:
    entries = [
        CatalogEntry("circular", "V(r) = alpha r + beta / r on Ω_{a,b}", _circular_config),
        CatalogEntry("ext_counterexample", "non-circular exterior flow with Δu = 8/a²", _ext_counterexample_config, ("a",)),
        CatalogEntry("punct_counterexample", "non-circular harmonic flow on the punctured disk", _punct_counterexample_config, ("b",)),
        CatalogEntry("inverse_square", "v = e_θ / |x|², u = −1/|x|", _inverse_square_config),
        CatalogEntry("rigid", "v = |x| e_θ, u = |x|²/2", _rigid_config),
        CatalogEntry("log", "v = e_θ / |x|, u = ln |x|", _log_config),
        CatalogEntry("quartic", "v = −4|x|² x⊥ on B_R, u = R⁴ − |x|⁴", _quartic_config, ("R",)),
        CatalogEntry("shifted", "v = (|x| − a) e_θ, vanishing on C_a", _shifted_config, ("a",)),
        CatalogEntry("eigenflow_m1", "u = φ(|x|) x₁/|x|, principal mode-1 eigenfunction", lambda p: _eigenflow_config(p, 1)),
        CatalogEntry("eigenflow_m0", "u = φ(|x|), principal radial eigenfunction", lambda p: _eigenflow_config(p, 0)),
    ]
    return {entry.key: entry for entry in entries}


def list_flow_keys() -> List[str]:
    return list(get_supported_flows().keys())


def catalog(name: str, params: Mapping[str, float] | None = None) -> VectorField:
    entries = get_supported_flows()
    if name not in entries:
        raise UnknownFlowError(f"Unknown flow '{name}'. Supported: {', '.join(entries)}")
    entry = entries[name]
    params = dict(params or {})
    for key in entry.required:
        if key not in params:
            raise MissingParameterError(f"flow '{name}' requires parameter '{key}'")
    return entry.builder(params)


# ---------------------------------------------------------------------------
# Expression and grid-sampled fields
# ---------------------------------------------------------------------------


def expression_field(
    v_r: str,
    v_theta: str,
    domain: AnnularDomain,
    pressure: str | None = None,
    name: str = "expression",
) -> VectorField:
    """v = v_r e_r + v_θ e_θ with both components given as text in `r` and `theta`."""
    variables = ("r", "theta")
    expr_r = parse_expression(v_r, variables)
    expr_t = parse_expression(v_theta, variables)

    def velocity(points: np.ndarray) -> np.ndarray:
        x, y = points[..., 0], points[..., 1]
        r = np.hypot(x, y)
        theta = np.arctan2(y, x)
        vr = np.broadcast_to(expr_r.evaluate(r=r, theta=theta), r.shape)
        vt = np.broadcast_to(expr_t.evaluate(r=r, theta=theta), r.shape)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([vr * c - vt * s, vr * s + vt * c], axis=-1)

    pressure_fn = None
    if pressure is not None:
        expr_p = parse_expression(pressure, variables)

        def pressure_fn(points: np.ndarray) -> np.ndarray:
            x, y = points[..., 0], points[..., 1]
            r = np.hypot(x, y)
            return np.broadcast_to(expr_p.evaluate(r=r, theta=np.arctan2(y, x)), r.shape)

    return VectorField(
        name=name,
        kind="expression",
        domain=domain,
        velocity_fn=velocity,
        pressure_fn=pressure_fn,
        params={},
        metadata={"v_r": v_r, "v_theta": v_theta, "pressure": pressure},
    )


def sample_field(field: VectorField, grid: PolarGrid) -> VectorField:
    """Copy of `field` sampled at grid nodes, bilinear in (r, θ) with periodic wrap."""
    nodes = grid.points()
    v = field.velocity(nodes)
    theta = grid.angles[None, :]
    c, s = np.cos(theta), np.sin(theta)
    vr = v[..., 0] * c + v[..., 1] * s
    vt = -v[..., 0] * s + v[..., 1] * c
    radii = grid.radii
    n_theta = grid.n_theta
    dtheta = grid.dtheta

    def velocity(points: np.ndarray) -> np.ndarray:
        x, y = points[..., 0], points[..., 1]
        r = np.clip(np.hypot(x, y), radii[0], radii[-1])
        phi = np.mod(np.arctan2(y, x), 2 * math.pi)
        i = np.clip(np.searchsorted(radii, r, side="right") - 1, 0, radii.size - 2)
        wr = (r - radii[i]) / (radii[i + 1] - radii[i])
        pos = phi / dtheta
        j = np.floor(pos).astype(int) % n_theta
        wt = pos - np.floor(pos)
        j1 = (j + 1) % n_theta

        def interp(table: np.ndarray) -> np.ndarray:
            return (
                (1 - wr) * (1 - wt) * table[i, j]
                + wr * (1 - wt) * table[i + 1, j]
                + (1 - wr) * wt * table[i, j1]
                + wr * wt * table[i + 1, j1]
            )

        a_r, a_t = interp(vr), interp(vt)
        cq, sq = np.cos(phi), np.sin(phi)
        return np.stack([a_r * cq - a_t * sq, a_r * sq + a_t * cq], axis=-1)

    return VectorField(
        name=f"{field.name}@grid",
        kind="grid",
        domain=grid.domain,
        velocity_fn=velocity,
        params=dict(field.params),
        metadata={"source": field.name, "n_r": grid.n_r, "n_theta": grid.n_theta},
    )


def _domain_from_spec(spec: Mapping[str, Any] | None) -> AnnularDomain | None:
    if not spec:
        return None
    b = spec.get("b", INFINITY)
    if isinstance(b, str) and b.lower() in ("inf", "infinity"):
        b = INFINITY
    return make_annulus(
        float(spec.get("a", 0.0)),
        float(b),
        trunc_inner=spec.get("trunc_inner"),
        trunc_outer=spec.get("trunc_outer"),
    )


def field_from_spec(spec: Mapping[str, Any], domain: Mapping[str, Any] | None = None) -> VectorField:
    """
    Build a field from its JSON definition:
    {"kind": "catalog", "name": ..., "params": {...}} or
    {"kind": "expression", "v_theta": "...", "v_r": "...", "domain": {"a": .., "b": ..}}.
    """
    kind = spec.get("kind", "catalog")
    domain_spec = domain or spec.get("domain")
    if kind == "catalog":
        params = dict(spec.get("params") or {})
        if domain_spec:
            for key in ("a", "b", "trunc_inner", "trunc_outer"):
                if key in domain_spec and key not in params:
                    params[key] = float(domain_spec[key]) if domain_spec[key] not in ("inf", "infinity") else INFINITY
        if "name" not in spec:
            raise MissingParameterError("catalog field definition needs a 'name'")
        return catalog(str(spec["name"]), params)
    if kind == "expression":
        resolved = _domain_from_spec(domain_spec)
        if resolved is None:
            raise MissingParameterError("expression field definition needs a 'domain'")
        return expression_field(
            str(spec.get("v_r", "0")),
            str(spec.get("v_theta", "0")),
            resolved,
            pressure=spec.get("pressure"),
            name=str(spec.get("name", "expression")),
        )
    raise ValueError(f"unknown field kind '{kind}' (expected 'catalog' or 'expression')")


def load_field_file(path: Path | str) -> VectorField:
    with open(path, "r", encoding="utf-8") as handle:
        return field_from_spec(json.load(handle))
