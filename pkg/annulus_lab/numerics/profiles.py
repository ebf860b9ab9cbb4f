from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .expression import Expression, NotDifferentiableError, parse_expression
from .tolerances import TOLERANCES

LOGGER = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]


class ProfileRangeError(ValueError):
    """Query outside the tabulated range of a profile."""

    def __init__(self, value: float, lo: float, hi: float) -> None:
        super().__init__(f"value {value:.10g} outside profile range [{lo:.10g}, {hi:.10g}]")
        self.value = value
        self.lo = lo
        self.hi = hi


@dataclass(frozen=True, slots=True)
class SignReport:
    min_abs: float
    sign_changes: int
    constant_strict_sign: bool
    sign: int

    def as_dict(self) -> Dict[str, float | int | bool]:
        return {
            "min_abs": self.min_abs,
            "sign_changes": self.sign_changes,
            "constant_strict_sign": self.constant_strict_sign,
            "sign": self.sign,
        }


def _fd_derivative(fn: ArrayFn, r: np.ndarray) -> np.ndarray:
    h = np.maximum(TOLERANCES.fd_min_step, TOLERANCES.fd_rel_step * np.abs(r))
    return (-fn(r + 2 * h) + 8 * fn(r + h) - 8 * fn(r - h) + fn(r - 2 * h)) / (12 * h)


@dataclass(frozen=True, slots=True, eq=False)
class RadialProfile:
    """Scalar function of the radius, e.g. the angular speed V of a circular flow."""

    name: str
    function: ArrayFn
    derivative_fn: ArrayFn | None = None
    source: str | None = None

    @property
    def has_derivative(self) -> bool:
        return self.derivative_fn is not None

    def __call__(self, r: float | np.ndarray) -> np.ndarray | float:
        values = np.asarray(self.function(np.asarray(r, dtype=float)), dtype=float)
        values = np.broadcast_to(values, np.shape(r))
        return float(values) if values.ndim == 0 else np.array(values)

    def derivative(self, r: float | np.ndarray) -> np.ndarray | float:
        radii = np.asarray(r, dtype=float)
        if self.derivative_fn is not None:
            values = np.broadcast_to(np.asarray(self.derivative_fn(radii), dtype=float), radii.shape)
        else:
            values = _fd_derivative(lambda x: np.broadcast_to(self.function(x), x.shape), radii)
        return float(values) if np.ndim(values) == 0 else np.array(values)

    def sign_report(self, radii: np.ndarray) -> SignReport:
        """"Constant strict sign" test: min|V| > 0 and no sign change over the samples."""
        values = np.asarray(self(np.asarray(radii, dtype=float)), dtype=float)
        signs = np.sign(values)
        nonzero = signs[signs != 0]
        changes = int(np.count_nonzero(np.diff(nonzero))) if nonzero.size else 0
        min_abs = float(np.min(np.abs(values)))
        constant = min_abs > 0 and changes == 0
        sign = int(nonzero[0]) if constant else 0
        return SignReport(min_abs, changes, constant, sign)


def parse_profile(text: str, variable: str = "r") -> RadialProfile:
    expr = parse_expression(text, (variable,))
    try:
        derivative: Expression | None = expr.derivative(variable)
    except NotDifferentiableError:
        derivative = None
    return RadialProfile(
        name=text,
        function=expr.as_callable(),
        derivative_fn=derivative.as_callable() if derivative is not None else None,
        source=text,
    )


def profile_from_callable(fn: ArrayFn, derivative: ArrayFn | None = None, name: str = "callable") -> RadialProfile:
    return RadialProfile(name=name, function=fn, derivative_fn=derivative)


def profile_from_samples(radii: np.ndarray, values: np.ndarray, name: str = "samples") -> RadialProfile:
    spline = CubicSpline(np.asarray(radii, dtype=float), np.asarray(values, dtype=float))
    return RadialProfile(name=name, function=spline, derivative_fn=spline.derivative())


@dataclass(frozen=True, slots=True, eq=False)
class VorticityProfile:
    """
    Tabulated f(τ) on strictly increasing τ with its antiderivative F (F(τ₀) = 0).

    The Lipschitz fields hold max |Δf/Δτ| over the first decile, the last decile and
    the middle band τ ∈ [45%, 55%] of the range, when computed from a traced curve.
    """

    tau: np.ndarray
    f: np.ndarray
    antiderivative: np.ndarray
    lipschitz_low: float | None = None
    lipschitz_high: float | None = None
    lipschitz_mid: float | None = None
    source: str = "tabulated"
    _interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.tau.ndim != 1 or self.tau.size < 2:
            raise ValueError("a vorticity profile needs at least 2 samples")
        if np.any(np.diff(self.tau) <= 0):
            raise ValueError("profile abscissae must be strictly increasing")
        object.__setattr__(self, "_interp", PchipInterpolator(self.tau, self.f, extrapolate=True))

    @property
    def range(self) -> Tuple[float, float]:
        return float(self.tau[0]), float(self.tau[-1])

    @property
    def lipschitz_endpoint(self) -> float | None:
        if self.lipschitz_low is None or self.lipschitz_high is None:
            return None
        return max(self.lipschitz_low, self.lipschitz_high)

    def _check(self, s: np.ndarray, margin: float) -> None:
        lo, hi = self.range
        pad = margin * (hi - lo)
        bad = (s < lo - pad) | (s > hi + pad)
        if np.any(bad):
            raise ProfileRangeError(float(s[bad].flat[0]), lo, hi)

    def f_at(self, s: float | np.ndarray, margin: float = 0.0) -> np.ndarray | float:
        """Monotone-safe piecewise cubic f; values inside `margin` of the ends are clamped."""
        values = np.asarray(s, dtype=float)
        self._check(values, margin)
        lo, hi = self.range
        out = self._interp(np.clip(values, lo, hi))
        return float(out) if np.ndim(out) == 0 else out

    def clamped_count(self, s: np.ndarray) -> int:
        lo, hi = self.range
        values = np.asarray(s, dtype=float)
        return int(np.count_nonzero((values < lo) | (values > hi)))

    def F_at(self, s: float | np.ndarray) -> np.ndarray | float:
        """Trapezoid antiderivative: knot values plus a partial trapezoid inside the cell."""
        values = np.asarray(s, dtype=float)
        self._check(values, 0.0)
        idx = np.clip(np.searchsorted(self.tau, values, side="right") - 1, 0, self.tau.size - 2)
        left = self.tau[idx]
        partial = 0.5 * (values - left) * (self.f[idx] + self._interp(values))
        out = self.antiderivative[idx] + partial
        return float(out) if np.ndim(out) == 0 else out

    def to_rows(self) -> list[dict]:
        return [
            {"tau": float(t), "f": float(v), "F": float(a)}
            for t, v, a in zip(self.tau, self.f, self.antiderivative)
        ]


def cumulative_trapezoid(tau: np.ndarray, f: np.ndarray) -> np.ndarray:
    steps = 0.5 * np.diff(tau) * (f[1:] + f[:-1])
    return np.concatenate([[0.0], np.cumsum(steps)])


def make_vorticity_profile(tau: np.ndarray, f: np.ndarray, **extra) -> VorticityProfile:
    tau = np.asarray(tau, dtype=float)
    f = np.asarray(f, dtype=float)
    if tau.size >= 2 and tau[0] > tau[-1]:
        tau, f = tau[::-1], f[::-1]
    return VorticityProfile(tau, f, cumulative_trapezoid(tau, f), **extra)


def profile_from_function(fn: ArrayFn, lo: float, hi: float, n: int = 4097, source: str = "function") -> VorticityProfile:
    """Tabulate f on [lo, hi] with n uniform knots."""
    tau = np.linspace(lo, hi, n)
    values = np.broadcast_to(np.asarray(fn(tau), dtype=float), tau.shape)
    return make_vorticity_profile(tau, np.array(values), source=source)


def profile_from_expression(text: str, lo: float, hi: float, n: int = 4097) -> VorticityProfile:
    expr = parse_expression(text, ("s",))
    return profile_from_function(expr.as_callable(), lo, hi, n, source=text)


def constant_profile(value: float, lo: float, hi: float) -> VorticityProfile:
    return profile_from_function(lambda s: np.full_like(s, value), lo, hi, n=2, source=f"{value!r}")
