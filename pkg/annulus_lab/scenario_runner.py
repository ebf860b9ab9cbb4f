from __future__ import annotations

"""
Chạy các check của một kịch bản và gom kết quả thành `Report`.

- Mỗi check id trong `config.CHECK_IDS` có đúng một hàm đăng ký trong `CHECKS`.
- Các check chạy song song trên ThreadPoolExecutor, báo cáo được ghép lại theo
  thứ tự khai báo nên kết quả không phụ thuộc thứ tự hoàn thành.
- Check ném exception thì bị ghi FAIL kèm thông điệp lỗi, các check khác vẫn chạy.
"""

import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from .config import CHECK_IDS, CheckSpec, ScenarioConfig, resolve_scenario
from .numerics.flows import (
    MissingPressureError,
    VectorField,
    divergence_at,
    euler_residual,
    euler_residual_relative,
    field_from_spec,
    vorticity_at,
    vorticity_transport_relative,
)
from .numerics.geometry import AnnularDomain, circle_polygon, circle_samples, polar_components, polar_grid
from .numerics.radial import fd_eigenvalue, kelvin_residual, kelvin_transform, shooting_eigenvalue
from .numerics.stream import (
    FAIL,
    PASS,
    MultivaluedStreamError,
    StagnationReport,
    StreamGrid,
    classify_stagnation,
    flux_abs_on_circle,
    radial_decay_report,
    stream_from_field,
)
from .numerics.symmetry import (
    CRITICAL_KINDS,
    critical_counts,
    critical_points,
    deficit_sweep,
    level_comparison,
    overdetermined_audit,
    radial_deviation,
)
from .numerics.tolerances import TOLERANCES, Tolerances
from .numerics.trace import (
    extract_vorticity_profile,
    level_polygon,
    trace_full_gradient_curve,
    trace_streamline,
)
from .report import INFO, SKIPPED, CheckRecord, Report

LOGGER = logging.getLogger(__name__)

CONSISTENT = "CONSISTENT"
INCONSISTENT = "INCONSISTENT"
CONFIRMED = "CONFIRMED-NUMERICALLY"
NOT_CONFIRMED = "NOT-CONFIRMED"

_GEOMETRIC_RATIO = 10.0
_SEMILINEAR_MIN_RATIO = 3.5


@dataclass(slots=True)
class CheckOutcome:
    """Kết quả thô của 1 check, trước khi áp `expect` / chế độ thăm dò."""

    verdict: str
    value: Any = None
    threshold: float | None = None
    message: str = ""
    detail: Dict[str, Any] = field(default_factory=dict)


def _judge(value: float, threshold: float) -> str:
    return PASS if math.isfinite(value) and value <= threshold else FAIL


def _skipped(message: str) -> CheckOutcome:
    return CheckOutcome(SKIPPED, message=message)


# ---------------------------------------------------------------------------
# Shared inputs
# ---------------------------------------------------------------------------


def audit_points(domain: AnnularDomain, n: int, seed: int, tolerances: Tolerances = TOLERANCES) -> np.ndarray:
    """
    n scrambled Halton points of the band, kept far enough from both edges
    that 4th-order difference stencils stay inside. Radii are log-uniform
    on wide bands.
    """
    lo, hi = domain.band
    pad = 4.0 * tolerances.fd_min_step
    r_lo = lo * (1.0 + 4.0 * tolerances.fd_rel_step) + pad
    r_hi = hi * (1.0 - 4.0 * tolerances.fd_rel_step) - pad
    if not r_hi > r_lo:
        raise ValueError(f"band [{lo}, {hi}] is too thin for difference stencils")
    unit = qmc.Halton(d=2, scramble=True, seed=seed).random(n)
    if hi / lo > _GEOMETRIC_RATIO:
        radii = np.exp(np.log(r_lo) + unit[:, 0] * (np.log(r_hi) - np.log(r_lo)))
    else:
        radii = r_lo + unit[:, 0] * (r_hi - r_lo)
    theta = 2.0 * math.pi * unit[:, 1]
    return np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=-1)


def _speed_bounded_below(field_: VectorField) -> Tuple[bool, Dict[str, float]]:
    """Finite-radius reading of inf|v| > 0 near infinity: min speed on the outer band circle holds up."""
    lo, hi = field_.domain.band
    far = float(np.min(field_.speed(circle_samples(hi, 512))))
    near = float(np.min(field_.speed(circle_samples(max(lo, hi / 10.0), 512))))
    holds = far > 0.0 and far >= 0.5 * near
    return holds, {"min_speed_outer": far, "min_speed_inner_decade": near}


def _tangential_sign(field_: VectorField) -> int:
    """+1 / −1 when v·e_θ keeps a strict sign on C_a, 0 otherwise."""
    pts = circle_samples(field_.domain.inner_radius, 512)
    _, v_t = polar_components(pts, field_.velocity(pts))
    if np.all(v_t > 0):
        return 1
    if np.all(v_t < 0):
        return -1
    return 0


def _stagnation_hypothesis(domain: AnnularDomain, report: StagnationReport) -> bool:
    cls = report.classification
    if domain.punctured and domain.exterior:
        return cls == "empty"
    if domain.exterior:
        return cls in ("empty", "proper-subset-inner")
    if domain.punctured:
        return cls in ("empty", "proper-subset-outer")
    return report.hypothesis_holds


def _decay_radii(domain: AnnularDomain, at_infinity: bool) -> np.ndarray:
    lo, hi = domain.band
    if at_infinity:
        return np.geomspace(max(lo, hi / 10.0), hi, 8)
    return np.geomspace(lo, min(hi, 10.0 * lo), 8)


class CheckContext:
    """Trường, lưới và các đại lượng dùng chung giữa các check của 1 kịch bản (có cache, thread-safe)."""

    def __init__(
        self,
        config: ScenarioConfig,
        field_: VectorField,
        *,
        tolerances: Tolerances = TOLERANCES,
        inner_workers: int = 1,
    ) -> None:
        self.config = config
        self.field = field_
        self.tolerances = tolerances
        self.inner_workers = max(int(inner_workers), 1)
        self._cache: Dict[Any, Any] = {}
        self._locks: Dict[Any, threading.Lock] = {}
        self._guard = threading.Lock()

    @property
    def domain(self) -> AnnularDomain:
        return self.field.domain

    def _cached(self, key: Any, build: Callable[[], Any]) -> Any:
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._cache:
                self._cache[key] = build()
            return self._cache[key]

    def stream_grid(self, n_r: int | None = None, n_theta: int | None = None) -> StreamGrid:
        n_r = n_r or self.config.n_r
        n_theta = n_theta or self.config.n_theta
        return self._cached(
            ("stream", n_r, n_theta),
            lambda: stream_from_field(self.field, polar_grid(self.domain, n_r, n_theta), tolerances=self.tolerances),
        )

    def audit_points(self) -> np.ndarray:
        return self._cached(
            "audit",
            lambda: audit_points(self.domain, self.tolerances.audit_points, self.tolerances.random_seed, self.tolerances),
        )

    def stagnation(self) -> StagnationReport:
        return self._cached(
            "stagnation",
            lambda: classify_stagnation(
                self.field, n_r=self.config.n_r, n_theta=self.config.n_theta, tolerances=self.tolerances
            ),
        )


# ---------------------------------------------------------------------------
# Check registry
# ---------------------------------------------------------------------------

CheckFn = Callable[[CheckContext, CheckSpec], CheckOutcome]
CHECKS: Dict[str, CheckFn] = {}


def _register(check_id: str) -> Callable[[CheckFn], CheckFn]:
    if check_id not in CHECK_IDS:
        raise KeyError(f"Unknown check '{check_id}'. Supported checks: {', '.join(CHECK_IDS)}")

    def decorator(fn: CheckFn) -> CheckFn:
        CHECKS[check_id] = fn
        return fn

    return decorator


def _threshold(spec: CheckSpec, default: float) -> float:
    return default if spec.threshold is None else float(spec.threshold)


@_register("divergence")
def _check_divergence(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    values = np.abs(divergence_at(ctx.field, ctx.audit_points()))
    value = float(np.max(values))
    threshold = _threshold(spec, ctx.tolerances.divergence_tol)
    return CheckOutcome(_judge(value, threshold), value, threshold)


@_register("tangency")
def _check_tangency(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    circles = [float(r) for r in spec.params.get("radii", ctx.field.fixed_circles)]
    if not circles:
        return _skipped("field declares no fixed circles")
    worst = 0.0
    per_circle = {}
    for r in circles:
        pts = circle_samples(r, 1024)
        v_r, v_t = polar_components(pts, ctx.field.velocity(pts))
        scale = max(1.0, float(np.max(np.hypot(v_r, v_t))))
        ratio = float(np.max(np.abs(v_r))) / scale
        per_circle[str(r)] = ratio
        worst = max(worst, ratio)
    threshold = _threshold(spec, ctx.tolerances.tangency_tol)
    return CheckOutcome(_judge(worst, threshold), worst, threshold, detail={"circles": per_circle})


@_register("euler_residual")
def _check_euler_residual(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    if not ctx.field.has_pressure:
        return _skipped(f"field '{ctx.field.name}' has no pressure attached")
    points = ctx.audit_points()
    absolute = np.linalg.norm(euler_residual(ctx.field, points), axis=-1)
    # relative to max(1, |v|²/r, |∇p|): truncated punctured bands reach |v|² ~ 1e12
    value = float(np.max(euler_residual_relative(ctx.field, points)))
    threshold = _threshold(spec, ctx.tolerances.euler_tol)
    return CheckOutcome(
        _judge(value, threshold),
        value,
        threshold,
        detail={"n_points": int(points.shape[0]), "max_absolute": float(np.max(absolute))},
    )


@_register("vorticity_transport")
def _check_vorticity_transport(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    value = float(np.max(vorticity_transport_relative(ctx.field, ctx.audit_points())))
    threshold = _threshold(spec, ctx.tolerances.transport_tol)
    return CheckOutcome(_judge(value, threshold), value, threshold)


@_register("vorticity_value")
def _check_vorticity_value(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    if "value" not in spec.params:
        raise ValueError("vorticity_value needs a 'value' parameter")
    target = float(spec.params["value"])
    omega = vorticity_at(ctx.field, ctx.audit_points())
    value = float(np.max(np.abs(omega - target)))
    threshold = _threshold(spec, 1e-8)
    return CheckOutcome(
        _judge(value, threshold),
        value,
        threshold,
        detail={"target": target, "omega_min": float(np.min(omega)), "omega_max": float(np.max(omega))},
    )


@_register("vorticity_sup")
def _check_vorticity_sup(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    domain = ctx.domain
    if not domain.exterior or not domain.has_inner_boundary:
        return _skipped("vorticity sign audit applies to exterior domains only")
    bounded, speeds = _speed_bounded_below(ctx.field)
    sign = _tangential_sign(ctx.field)
    omega = vorticity_at(ctx.field, ctx.audit_points())
    detail: Dict[str, Any] = {
        **speeds,
        "speed_bounded_below": bounded,
        "tangential_sign": sign,
        "omega_min": float(np.min(omega)),
        "omega_max": float(np.max(omega)),
    }
    if not bounded or sign == 0:
        return CheckOutcome(INFO, float(np.max(omega)), message="hypotheses not met on the sampled band", detail=detail)
    value = float(np.max(omega)) if sign > 0 else float(np.min(omega))
    verdict = PASS if value * sign > 0 else FAIL
    return CheckOutcome(verdict, value, 0.0, detail=detail)


@_register("circularity")
def _check_circularity(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    sg = ctx.stream_grid()
    value = radial_deviation(sg)
    threshold = _threshold(spec, ctx.tolerances.circularity_tol)
    return CheckOutcome(_judge(value, threshold), value, threshold, detail={"stream_discrepancy": sg.discrepancy})


def _decay(ctx: CheckContext, at_infinity: bool) -> CheckOutcome:
    report = radial_decay_report(ctx.field, _decay_radii(ctx.domain, at_infinity))
    if at_infinity:
        return CheckOutcome(report.infinity_verdict, report.slope_sup, detail=report.as_dict(),
                            message="finite-radius trend of r·sup|v·e_r|")
    return CheckOutcome(report.origin_verdict, report.slope_flux, detail=report.as_dict(),
                        message="finite-radius trend of the flux through C_ε")


@_register("decay_infinity")
def _check_decay_infinity(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    if not ctx.domain.exterior:
        return _skipped("decay at infinity applies to unbounded domains only")
    return _decay(ctx, True)


@_register("decay_origin")
def _check_decay_origin(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    if not ctx.domain.punctured:
        return _skipped("decay at the origin applies to punctured domains only")
    return _decay(ctx, False)


@_register("stagnation_hypothesis")
def _check_stagnation_hypothesis(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    report = ctx.stagnation()
    verdict = PASS if _stagnation_hypothesis(ctx.domain, report) else FAIL
    return CheckOutcome(verdict, report.classification, detail=report.as_dict())


@_register("unique_stagnation")
def _check_unique_stagnation(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    report = ctx.stagnation()
    verdict = PASS if report.unique_interior_point else FAIL
    return CheckOutcome(verdict, len(report.interior_points), detail=report.as_dict())


@_register("critical_points")
def _check_critical_points(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    """Critical-point census; with a `counts` parameter the split by kind must match exactly."""
    tol = spec.params.get("tol")
    clusters = critical_points(
        ctx.stream_grid(), None if tol is None else float(tol), tolerances=ctx.tolerances
    )
    counts = critical_counts(clusters)
    detail: Dict[str, Any] = {
        "counts": counts,
        "rings": sum(1 for c in clusters if c.ring),
        "clusters": [c.as_dict() for c in clusters],
    }
    expected = spec.params.get("counts")
    if expected is None:
        return CheckOutcome(INFO, len(clusters), detail=detail)
    unknown = set(expected) - set(CRITICAL_KINDS)
    if unknown:
        raise ValueError(f"unknown critical-point kinds {sorted(unknown)}; expected {', '.join(CRITICAL_KINDS)}")
    wanted = {kind: int(expected.get(kind, 0)) for kind in CRITICAL_KINDS}
    detail["expected_counts"] = wanted
    return CheckOutcome(PASS if counts == wanted else FAIL, len(clusters), detail=detail)


@_register("overdetermined")
def _check_overdetermined(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    radius = spec.params.get("radius")
    if radius is None:
        circles = ctx.field.fixed_circles
        if not circles:
            raise ValueError("overdetermined needs a 'radius' parameter")
        radius = max(circles)
    audit = overdetermined_audit(ctx.stream_grid(), circle_polygon(float(radius), 512))
    threshold = _threshold(spec, ctx.tolerances.overdetermined_tol)
    value = max(audit.osc_u, audit.osc_normal_derivative)
    return CheckOutcome(
        _judge(value, threshold),
        value,
        threshold,
        detail={
            "radius": float(radius),
            "osc_u": audit.osc_u,
            "osc_normal_derivative": audit.osc_normal_derivative,
            "mean_normal_derivative": audit.mean_normal_derivative,
            "n_samples": audit.n_samples,
        },
    )


def _semilinear_nodes(
    sg: StreamGrid,
    f: Callable[[np.ndarray], np.ndarray],
    weight: Optional[np.ndarray] = None,
) -> np.ndarray:
    lap = sg.node_laplacian()
    source = np.broadcast_to(np.asarray(f(sg.values), dtype=float), sg.values.shape)
    if weight is not None:
        source = np.asarray(weight, dtype=float)[:, None] * source
    residual = np.abs(lap + source)
    residual[0] = residual[-1] = np.nan
    return residual


@_register("semilinear")
def _check_semilinear(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    """Grid residual of Δu + f(u) on the scenario grid and on its ×2 refinement, compared at shared nodes."""
    f = ctx.field.vorticity_function
    if f is None:
        return _skipped(f"field '{ctx.field.name}' has no known vorticity function")
    n_r, n_theta = ctx.config.n_r, ctx.config.n_theta
    coarse = _semilinear_nodes(ctx.stream_grid(), f)
    fine = _semilinear_nodes(ctx.stream_grid(2 * n_r - 1, 2 * n_theta), f)
    coarse_max = float(np.nanmax(coarse))
    fine_max = float(np.nanmax(fine[2 : 2 * n_r - 3 : 2, ::2]))
    ratio = coarse_max / fine_max if fine_max > 0 else math.inf
    floor = 1e-9 * max(1.0, float(np.max(np.abs(ctx.stream_grid().values))))
    min_ratio = float(spec.params.get("min_ratio", _SEMILINEAR_MIN_RATIO))
    verdict = PASS if coarse_max <= floor or ratio >= min_ratio else FAIL
    return CheckOutcome(
        verdict,
        coarse_max,
        detail={"fine_max": fine_max, "ratio": ratio, "min_ratio": min_ratio, "roundoff_floor": floor},
    )


@_register("kelvin")
def _check_kelvin(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    """Δw + r⁻⁴ f(w) on the inverted grid and on its ×2 refinement, plus the involution error."""
    f = ctx.field.vorticity_function
    if f is None:
        return _skipped(f"field '{ctx.field.name}' has no known vorticity function")
    n_r, n_theta = ctx.config.n_r, ctx.config.n_theta
    sg = ctx.stream_grid()
    transformed = kelvin_transform(sg)
    refined = kelvin_transform(ctx.stream_grid(2 * n_r - 1, 2 * n_theta))
    coarse = _semilinear_nodes(transformed, f, transformed.radii**-4)
    fine = _semilinear_nodes(refined, f, refined.radii**-4)
    coarse_max = float(np.nanmax(coarse))
    fine_max = float(np.nanmax(fine[2 : 2 * n_r - 3 : 2, ::2]))
    ratio = coarse_max / fine_max if fine_max > 0 else math.inf
    source = transformed.radii[:, None] ** -4 * np.asarray(f(transformed.values), dtype=float)
    floor = 1e-9 * max(1.0, float(np.max(np.abs(transformed.values))), float(np.max(np.abs(source[1:-1]))))
    min_ratio = float(spec.params.get("min_ratio", _SEMILINEAR_MIN_RATIO))
    back = kelvin_transform(transformed)
    involution = max(
        float(np.max(np.abs(back.values - sg.values))),
        float(np.max(np.abs(back.radii - sg.radii) / sg.radii)),
    )
    converging = coarse_max <= floor or ratio >= min_ratio
    verdict = PASS if converging and involution <= 1e-12 else FAIL
    return CheckOutcome(
        verdict,
        coarse_max,
        detail={
            "fine_max": fine_max,
            "ratio": ratio,
            "min_ratio": min_ratio,
            "roundoff_floor": floor,
            "residual": kelvin_residual(transformed, f).as_dict(),
            "involution": involution,
            "band": list(transformed.grid.domain.band),
        },
    )


@_register("eigen_oracle")
def _check_eigen_oracle(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    mode = spec.params.get("mode")
    if mode is None:
        if not ctx.field.name.startswith("eigenflow_m"):
            raise ValueError("eigen_oracle needs a 'mode' parameter")
        mode = int(ctx.field.name[-1])
    a = float(spec.params.get("a", ctx.field.params.get("a", 1.0)))
    b = float(spec.params.get("b", ctx.field.params.get("b", 2.0)))
    lam = shooting_eigenvalue(int(mode), a, b)
    oracle = fd_eigenvalue(int(mode), a, b, ctx.tolerances.eigen_oracle_n)
    gap = abs(lam - oracle) / abs(oracle)
    threshold = _threshold(spec, ctx.tolerances.eigen_rel_tol)
    LOGGER.info("Mode-%d eigenvalue on (%g, %g): shooting %.12g, oracle %.12g", mode, a, b, lam, oracle)
    return CheckOutcome(
        _judge(gap, threshold), gap, threshold, detail={"mode": int(mode), "shooting": lam, "oracle": oracle}
    )


@_register("vorticity_profile")
def _check_vorticity_profile(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    exact = ctx.field.vorticity_function
    if exact is None:
        return _skipped(f"field '{ctx.field.name}' has no known vorticity function to compare with")
    seed = spec.params.get("seed")
    if seed is None:
        lo, hi = ctx.domain.band
        seed = [0.5 * (lo + hi), 0.0]
    curve = trace_full_gradient_curve(ctx.field, [float(x) for x in seed])
    profile = extract_vorticity_profile(ctx.field, curve)
    lo, hi = profile.range
    tau = np.linspace(lo, lo + 0.99 * (hi - lo), 400)
    error = float(np.max(np.abs(np.asarray(profile.f_at(tau)) - np.asarray(exact(tau)))))
    threshold = _threshold(spec, 1e-4)
    mid = profile.lipschitz_mid or 0.0
    endpoint = profile.lipschitz_endpoint or 0.0
    return CheckOutcome(
        _judge(error, threshold),
        error,
        threshold,
        detail={
            "tau_range": [lo, hi],
            "vertices": int(profile.tau.size),
            "lipschitz_low": profile.lipschitz_low,
            "lipschitz_mid": profile.lipschitz_mid,
            "lipschitz_high": profile.lipschitz_high,
            "endpoint_to_mid": endpoint / mid if mid > 0 else math.inf,
            "start_termination": curve.start_termination,
            "end_termination": curve.termination,
        },
    )


@_register("streamline_closure")
def _check_streamline_closure(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    lo, hi = ctx.domain.band
    radii = spec.params.get("radii")
    if radii is None:
        radii = list(lo + (hi - lo) * np.arange(1, 6) / 6.0)
    rtol = ctx.tolerances.tracer_rtol
    circular = bool(ctx.field.metadata.get("circular"))
    rows = []
    ok = True
    worst_period = 0.0
    for r in radii:
        seed = np.array([float(r), 0.0])
        line = trace_streamline(ctx.field, seed)
        speed = float(ctx.field.speed(seed))
        u0 = float(ctx.field.stream(seed)) if ctx.field.stream_fn is not None else 0.0
        u_tol = 10.0 * rtol * max(1.0, abs(u0), speed * float(r))
        omega_tol = 10.0 * rtol * max(1.0, abs(float(line.omega_values[0])))
        row: Dict[str, Any] = {**line.summary(), "u_tol": u_tol, "omega_tol": omega_tol}
        good = line.closed and not line.suspect and line.omega_drift <= omega_tol
        if line.u_drift is not None:
            good = good and line.u_drift <= u_tol
        if circular and line.period is not None:
            expected = 2.0 * math.pi * float(r) / speed
            period_error = abs(line.period - expected) / expected
            row["period_expected"] = expected
            row["period_rel_error"] = period_error
            worst_period = max(worst_period, period_error)
            good = good and period_error <= 1e-6
        row["ok"] = good
        ok = ok and good
        rows.append(row)
    return CheckOutcome(PASS if ok else FAIL, worst_period, 1e-6 if circular else None, detail={"streamlines": rows})


@_register("streamline_width")
def _check_streamline_width(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    levels = spec.params.get("levels")
    if not levels:
        raise ValueError("streamline_width needs a non-empty 'levels' list")
    rows = []
    for level in sorted(float(x) for x in levels):
        _, line = level_polygon(ctx.field, level)
        rows.append({"level": level, "width": line.width, "r_min": line.r_min, "r_max": line.r_max})
    return CheckOutcome(INFO, rows[-1]["width"], detail={"levels": rows}, message="width at the largest level")


@_register("flux_law")
def _check_flux_law(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    b = spec.params.get("b", ctx.field.params.get("b"))
    if not ctx.domain.punctured or ctx.field.name != "punct_counterexample" or b is None:
        return _skipped("flux law is stated for the punctured-disk counterexample")
    b = float(b)
    epsilons = spec.params.get("epsilons") or [0.4, 0.2, 0.1]
    rows = []
    worst = 0.0
    for eps in (float(x) for x in epsilons):
        measured = flux_abs_on_circle(ctx.field, eps, int(spec.params.get("n", 256)))
        expected = 4.0 * (b / eps - eps / b)
        rel = abs(measured - expected) / abs(expected)
        worst = max(worst, rel)
        rows.append({"epsilon": eps, "flux": measured, "expected": expected, "rel_error": rel})
    threshold = _threshold(spec, 0.01)
    return CheckOutcome(_judge(worst, threshold), worst, threshold, detail={"rows": rows})


def _circle_from_params(params: Mapping[str, Any], prefix: str):
    center = params.get(f"{prefix}_center", (0.0, 0.0))
    return circle_polygon(float(params[f"{prefix}_circle"]), 256, (float(center[0]), float(center[1])))


@_register("moving_planes")
def _check_moving_planes(ctx: CheckContext, spec: CheckSpec) -> CheckOutcome:
    params = spec.params
    if "outer_level" in params and "inner_level" in params:
        comparison = level_comparison(
            ctx.field,
            float(params["outer_level"]),
            float(params["inner_level"]),
            n_r=ctx.config.n_r,
            n_theta=ctx.config.n_theta,
        )
        outer, inner, phi, negate = comparison.outer, comparison.inner, comparison.phi, comparison.negate
    elif "outer_circle" in params and "inner_circle" in params:
        outer = _circle_from_params(params, "outer")
        inner = _circle_from_params(params, "inner")
        phi = ctx.stream_grid()
        negate = params.get("negate")
        if negate is None:
            negate = float(np.mean(phi.value(outer.vertices))) > float(np.mean(phi.value(inner.vertices)))
    else:
        raise ValueError("moving_planes needs outer_circle/inner_circle or outer_level/inner_level")
    lambdas = params.get("lambdas")
    rows = deficit_sweep(
        phi,
        outer,
        inner,
        int(params.get("directions", 16)),
        None if lambdas is None else [float(x) for x in lambdas],
        n_audit=int(params.get("n_audit", 400)),
        negate=bool(negate),
        workers=ctx.inner_workers,
    )
    usable = [row for row in rows if row.status == "ok"]
    detail = {
        "negate": bool(negate),
        "cells": len(rows),
        "cells_ok": len(usable),
        "rows": [row.as_dict() for row in rows],
    }
    if not usable:
        return CheckOutcome(SKIPPED, message="no admissible reflection plane", detail=detail)
    value = max(row.deficit for row in usable)
    threshold = _threshold(spec, ctx.tolerances.deficit_tol)
    return CheckOutcome(_judge(value, threshold), value, threshold, detail=detail)


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def _is_number(value: Any) -> bool:
    return not isinstance(value, bool) and isinstance(value, (int, float, np.integer, np.floating))


def _apply_expectation(spec: CheckSpec, outcome: CheckOutcome) -> Tuple[str, Dict[str, Any]]:
    """Verdict after comparing with `expect`: number within threshold, class name, or raw PASS/FAIL."""
    expect = spec.expect
    detail = dict(outcome.detail)
    if expect is None or outcome.verdict == SKIPPED:
        return outcome.verdict, detail
    detail["raw_verdict"] = outcome.verdict
    if expect in (PASS, FAIL):
        return (PASS if outcome.verdict == expect else FAIL), detail
    if isinstance(expect, str):
        return (PASS if outcome.value == expect else FAIL), detail
    if _is_number(expect):
        if not _is_number(outcome.value):
            return FAIL, detail
        tolerance = spec.threshold if spec.threshold is not None else 1e-9 * max(1.0, abs(float(expect)))
        return (PASS if abs(float(outcome.value) - float(expect)) <= tolerance else FAIL), detail
    raise ValueError(f"unsupported expect value {expect!r}")


def _default_workers(n_checks: int) -> int:
    env = os.getenv("ANNULUS_LAB_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            LOGGER.warning("Ignoring ANNULUS_LAB_THREADS=%r (not an integer)", env)
    return max(1, min(n_checks, os.cpu_count() or 1))


class ScenarioRunner:
    """Chạy 1 kịch bản: dựng trường, chạy check song song, ghép báo cáo theo thứ tự khai báo."""

    def __init__(
        self,
        config: ScenarioConfig,
        *,
        workers: int | None = None,
        tolerances: Tolerances = TOLERANCES,
    ) -> None:
        self.config = config
        self.tolerances = tolerances
        self.workers = max(int(workers or _default_workers(len(config.checks))), 1)
        self._counts = {PASS: 0, FAIL: 0, INFO: 0, SKIPPED: 0}
        self._errors = 0
        self._lock = threading.Lock()

    @property
    def stats(self) -> Dict[str, int]:
        return {
            "passed": self._counts[PASS],
            "failed": self._counts[FAIL],
            "info": self._counts[INFO],
            "skipped": self._counts[SKIPPED],
            "errors": self._errors,
        }

    def environment(self, field_: VectorField) -> Dict[str, Any]:
        return {
            "grid": {"n_r": self.config.n_r, "n_theta": self.config.n_theta},
            "field": field_.describe(),
            "exploratory": self.config.exploratory,
            "tolerances": self.tolerances.as_dict(),
        }

    def _run_check(self, ctx: CheckContext, spec: CheckSpec) -> CheckRecord:
        try:
            outcome = CHECKS[spec.check](ctx, spec)
        except MissingPressureError as exc:
            outcome = _skipped(str(exc))
        except Exception as exc:
            LOGGER.exception("Check %s of %s failed: %s", spec.check, self.config.key, exc)
            with self._lock:
                self._errors += 1
            return CheckRecord(
                spec.check,
                FAIL,
                threshold=spec.threshold,
                expected=spec.expect,
                message=f"{type(exc).__name__}: {exc}",
                inputs=dict(spec.params),
            )
        verdict, detail = _apply_expectation(spec, outcome)
        if self.config.exploratory and verdict in (PASS, FAIL):
            detail.setdefault("raw_verdict", verdict)
            verdict = INFO
        return CheckRecord(
            spec.check,
            verdict,
            value=outcome.value,
            threshold=outcome.threshold if spec.threshold is None else spec.threshold,
            expected=spec.expect,
            message=outcome.message,
            inputs=dict(spec.params),
            detail=detail,
        )

    def run(self) -> Report:
        cfg = self.config
        LOGGER.info("=== Running scenario %s (%d checks, %d worker(s)) ===", cfg.key, len(cfg.checks), self.workers)
        field_ = field_from_spec(cfg.flow, cfg.domain)
        inner_workers = self.workers if len(cfg.checks) == 1 else 1
        ctx = CheckContext(cfg, field_, tolerances=self.tolerances, inner_workers=inner_workers)

        records: List[CheckRecord | None] = [None] * len(cfg.checks)
        if self.workers <= 1:
            for index, spec in enumerate(cfg.checks):
                records[index] = self._run_check(ctx, spec)
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                future_to_index = {
                    executor.submit(self._run_check, ctx, spec): index for index, spec in enumerate(cfg.checks)
                }
                for future in as_completed(future_to_index):
                    index = future_to_index[future]
                    try:
                        records[index] = future.result()
                    except Exception as exc:  # pragma: no cover - logging only
                        logging.exception("Check %s crashed: %s", cfg.checks[index].check, exc)
                        records[index] = CheckRecord(cfg.checks[index].check, FAIL, message=str(exc))

        final = [record for record in records if record is not None]
        for record in final:
            self._counts[record.verdict] += 1
            LOGGER.info("  %-22s %-7s value=%s", record.check, record.verdict, record.value)
        LOGGER.info("Scenario %s done. Stats: %s", cfg.key, self.stats)
        return Report(cfg.key, final, self.environment(field_))


def run_scenario(name_or_path: str | ScenarioConfig, *, workers: int | None = None) -> Report:
    """Builtin name, scenario file or a ready `ScenarioConfig` → Report."""
    config = name_or_path if isinstance(name_or_path, ScenarioConfig) else resolve_scenario(name_or_path)
    return ScenarioRunner(config, workers=workers).run()


# ---------------------------------------------------------------------------
# Hypothesis audit
# ---------------------------------------------------------------------------


def _label(holds: bool) -> str:
    return CONSISTENT if holds else INCONSISTENT


def _family(name: str, hypotheses: Dict[str, bool], conclusion: Dict[str, bool]) -> CheckRecord:
    labels = {key: _label(value) for key, value in hypotheses.items()}
    verdict_label = _label(all(hypotheses.values()))
    return CheckRecord(
        f"family:{name}",
        INFO,
        value=verdict_label,
        detail={
            "hypotheses": labels,
            "conclusion": {key: CONFIRMED if value else NOT_CONFIRMED for key, value in conclusion.items()},
        },
    )


def audit_flow(
    field_: VectorField,
    domain: AnnularDomain | None = None,
    *,
    n_r: int = 65,
    n_theta: int = 256,
    tolerances: Tolerances = TOLERANCES,
) -> Report:
    """
    Descriptive audit: stagnation set, decay trends, circularity and vorticity
    transport, then the hypothesis families the domain admits, each labelled
    CONSISTENT / INCONSISTENT with its conclusion CONFIRMED-NUMERICALLY or not.
    Every record is INFO or SKIPPED.
    """
    if domain is not None:
        field_ = replace(field_, domain=domain)
    domain = field_.domain
    environment = {"grid": {"n_r": n_r, "n_theta": n_theta}, "field": field_.describe(), "tolerances": tolerances.as_dict()}
    records: List[CheckRecord] = []

    stagnation = classify_stagnation(field_, n_r=n_r, n_theta=n_theta, tolerances=tolerances)
    records.append(CheckRecord("stagnation", INFO, value=stagnation.classification, detail=stagnation.as_dict()))
    symmetry_checks = ["decay_infinity", "decay_origin", "circularity", "vorticity_transport"]
    if stagnation.degenerate:
        message = "field vanishes on the audit grid"
        records.extend(CheckRecord(check, SKIPPED, message=message) for check in symmetry_checks)
        records.append(CheckRecord("families", SKIPPED, message=message))
        LOGGER.info("Audit of %s: degenerate field", field_.name)
        return Report(f"audit:{field_.name}", records, environment)

    infinity_ok = origin_ok = None
    if domain.exterior:
        report = radial_decay_report(field_, _decay_radii(domain, True))
        infinity_ok = report.infinity_verdict == PASS
        records.append(CheckRecord("decay_infinity", INFO, value=report.infinity_verdict, detail=report.as_dict()))
    else:
        records.append(CheckRecord("decay_infinity", SKIPPED, message="bounded domain"))
    if domain.punctured:
        report = radial_decay_report(field_, _decay_radii(domain, False))
        origin_ok = report.origin_verdict == PASS
        records.append(CheckRecord("decay_origin", INFO, value=report.origin_verdict, detail=report.as_dict()))
    else:
        records.append(CheckRecord("decay_origin", SKIPPED, message="domain is not punctured"))

    deviation: float | None = None
    try:
        sg = stream_from_field(field_, polar_grid(domain, n_r, n_theta), tolerances=tolerances)
        deviation = radial_deviation(sg)
        records.append(CheckRecord("circularity", INFO, value=deviation, threshold=tolerances.circularity_tol))
    except MultivaluedStreamError as exc:
        records.append(CheckRecord("circularity", SKIPPED, message=str(exc)))

    points = audit_points(domain, tolerances.audit_points, tolerances.random_seed, tolerances)
    transport = float(np.max(vorticity_transport_relative(field_, points)))
    records.append(CheckRecord("vorticity_transport", INFO, value=transport, threshold=tolerances.transport_tol))

    circular = deviation is not None and deviation <= tolerances.circularity_tol
    cls = stagnation.classification
    if not domain.punctured and not domain.exterior:
        records.append(_family("bounded-annulus", {"stagnation-on-one-circle": stagnation.hypothesis_holds},
                               {"circular": circular}))
    elif domain.exterior and not domain.punctured:
        bounded, _ = _speed_bounded_below(field_)
        records.append(
            _family(
                "exterior",
                {
                    "stagnation-subset-inner": cls in ("empty", "proper-subset-inner"),
                    "speed-bounded-below": bounded,
                    "radial-decay-infinity": bool(infinity_ok),
                },
                {"circular": circular},
            )
        )
        sign = _tangential_sign(field_)
        omega = vorticity_at(field_, points)
        extreme = float(np.max(omega)) if sign >= 0 else float(np.min(omega))
        records.append(
            _family(
                "exterior-vorticity",
                {"speed-bounded-below": bounded, "tangential-sign-on-inner": sign != 0},
                {"vorticity-sign": sign != 0 and extreme * sign > 0},
            )
        )
    elif domain.punctured and not domain.exterior:
        records.append(
            _family(
                "punctured-disk",
                {"stagnation-subset-outer": cls in ("empty", "proper-subset-outer"), "flux-decay-origin": bool(origin_ok)},
                {"circular": circular},
            )
        )
    else:
        bounded, _ = _speed_bounded_below(field_)
        records.append(
            _family(
                "punctured-plane",
                {
                    "no-stagnation": cls == "empty",
                    "speed-bounded-below": bounded,
                    "radial-decay-infinity": bool(infinity_ok),
                    "flux-decay-origin": bool(origin_ok),
                },
                {"circular": circular},
            )
        )
    LOGGER.info("Audit of %s: stagnation %s, circular=%s", field_.name, cls, circular)
    return Report(f"audit:{field_.name}", records, environment)


__all__ = [
    "CHECKS",
    "CONFIRMED",
    "CONSISTENT",
    "CheckContext",
    "CheckOutcome",
    "INCONSISTENT",
    "NOT_CONFIRMED",
    "ScenarioRunner",
    "audit_flow",
    "audit_points",
    "run_scenario",
]
