from __future__ import annotations

"""
Bài toán xuyên tâm: cặp riêng chính (mode 0 và mode 1), nghiệm xuyên tâm của
U'' + U'/r + f(U) = 0, dòng tròn V(r) e_θ và phép biến đổi Kelvin.

Giá trị riêng trả về là giá trị bắn (shooting); lưới sai phân đối xứng dày
được dùng làm chuẩn đối chiếu.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.linalg import solve_banded
from scipy.optimize import brentq, root_scalar

from .expression import Expression, parse_expression
from .flows import VectorField
from .geometry import INFINITY, AnnularDomain, PolarGrid, make_annulus
from .profiles import ProfileRangeError, RadialProfile, VorticityProfile
from .stream import StreamGrid
from .tolerances import TOLERANCES
from .trace import ProfileLike, SemilinearResidual, semilinear_residual

LOGGER = logging.getLogger(__name__)

_SCAN_POINTS = 64
_SCAN_FACTOR = 10.0
_PUNCTURE_OFFSET = 1e-2
_ODE_RTOL = 1e-12
_ODE_ATOL = 1e-14


class EigenBracketError(RuntimeError):
    def __init__(self, mode: int, a: float, b: float, upper: float) -> None:
        super().__init__(f"no sign change of the mode-{mode} shooting function on (0, {upper:.6g}] for ({a}, {b})")
        self.mode = mode
        self.upper = upper


class RadialIntegrationError(RuntimeError):
    def __init__(self, radius: float, reason: str) -> None:
        super().__init__(f"radial integration stopped at r={radius:.10g}: {reason}")
        self.radius = radius


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------


def _fd_eigenvalue_at(mode: int, a: float, b: float, n: int, tol: float = 1e-12, max_iter: int = 500) -> float:
    """
    Smallest eigenvalue of −(rφ')' + m²φ/r = λ rφ on n uniform intervals.

    Symmetrised with ψ = √r φ into a tridiagonal matrix, then inverse iteration.
    """
    h = (b - a) / n
    r = a + h * np.arange(1, n)
    r_plus = r + 0.5 * h
    r_minus = r - 0.5 * h
    diag = (r_plus + r_minus) / (h * h * r) + mode * mode / (r * r)
    off = -r_plus[:-1] / (h * h * np.sqrt(r[:-1] * r[1:]))
    banded = np.zeros((3, n - 1))
    banded[0, 1:] = off
    banded[1] = diag
    banded[2, :-1] = off

    def apply(x: np.ndarray) -> np.ndarray:
        y = diag * x
        y[:-1] += off * x[1:]
        y[1:] += off * x[:-1]
        return y

    x = np.sqrt(r) * np.sin(math.pi * (r - a) / (b - a))
    x /= np.linalg.norm(x)
    lam = float(x @ apply(x))
    for _ in range(max_iter):
        x = solve_banded((1, 1), banded, x)
        x /= np.linalg.norm(x)
        lam = float(x @ apply(x))
        if np.linalg.norm(apply(x) - lam * x) <= tol * abs(lam):
            break
    return lam


def fd_eigenvalue(mode: int, a: float, b: float, n: int | None = None) -> float:
    """Richardson-extrapolated oracle from n/2 and n intervals."""
    n = n or TOLERANCES.eigen_oracle_n
    coarse = _fd_eigenvalue_at(mode, a, b, n // 2)
    fine = _fd_eigenvalue_at(mode, a, b, n)
    return (4.0 * fine - coarse) / 3.0


# ---------------------------------------------------------------------------
# Shooting
# ---------------------------------------------------------------------------


def _radial_rhs(mode: int, lam: float) -> Callable[[float, np.ndarray], np.ndarray]:
    q = float(mode * mode)

    def rhs(r: float, y: np.ndarray) -> np.ndarray:
        return np.array([y[1], -y[1] / r + (q / (r * r) - lam) * y[0]])

    return rhs


def _shoot(mode: int, a: float, b: float, lam: float, dense: bool = False):
    return solve_ivp(
        _radial_rhs(mode, lam),
        (a, b),
        [0.0, 1.0],
        method="DOP853",
        rtol=_ODE_RTOL,
        atol=_ODE_ATOL,
        dense_output=dense,
    )


def shooting_eigenvalue(mode: int, a: float, b: float) -> float:
    upper = _SCAN_FACTOR * 4.0 * math.pi**2 / (b - a) ** 2
    grid = upper * np.arange(1, _SCAN_POINTS + 1) / _SCAN_POINTS
    values = np.array([_shoot(mode, a, b, lam).y[0, -1] for lam in grid])
    changes = np.flatnonzero(np.sign(values[:-1]) != np.sign(values[1:]))
    if changes.size == 0:
        raise EigenBracketError(mode, a, b, upper)
    lo, hi = float(grid[changes[0]]), float(grid[changes[0] + 1])
    LOGGER.debug("Mode-%d bracket for (%g, %g): [%.8g, %.8g]", mode, a, b, lo, hi)

    def miss(lam: float) -> float:
        return float(_shoot(mode, a, b, lam).y[0, -1])

    result = root_scalar(miss, method="secant", x0=lo, x1=hi, xtol=1e-14 * hi)
    if result.converged and lo <= result.root <= hi:
        return float(result.root)
    return float(brentq(miss, lo, hi, xtol=1e-14 * hi))


@dataclass(frozen=True, slots=True, eq=False)
class EigenPair:
    """Principal Dirichlet pair on [a, b], normalised so max φ = 1."""

    mode: int
    a: float
    b: float
    eigenvalue: float
    radii: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    r_star: float
    oracle_eigenvalue: float | None = None
    spline: CubicHermiteSpline | None = None

    def __call__(self, r: float | np.ndarray) -> np.ndarray:
        return self.spline(r)

    def derivative(self, r: float | np.ndarray) -> np.ndarray:
        return self.spline(r, 1)

    def second_derivative(self, r: float | np.ndarray) -> np.ndarray:
        """φ'' from the equation itself: −φ'/r + (m²/r² − λ)φ."""
        r = np.asarray(r, dtype=float)
        return -self.derivative(r) / r + (self.mode**2 / (r * r) - self.eigenvalue) * self(r)

    @property
    def relative_oracle_gap(self) -> float | None:
        if self.oracle_eigenvalue is None:
            return None
        return abs(self.eigenvalue - self.oracle_eigenvalue) / abs(self.oracle_eigenvalue)

    def operator_residual(self) -> float:
        """max |−φ'' − φ'/r + m²φ/r² − λφ| with 3-point stencils at interior samples."""
        r, phi = self.radii, self.values
        h = r[1] - r[0]
        d2 = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / (h * h)
        d1 = (phi[2:] - phi[:-2]) / (2 * h)
        mid = r[1:-1]
        res = -d2 - d1 / mid + self.mode**2 * phi[1:-1] / (mid * mid) - self.eigenvalue * phi[1:-1]
        return float(np.max(np.abs(res)))

    def to_rows(self) -> List[Dict[str, float]]:
        return [{"r": float(r), "phi": float(p)} for r, p in zip(self.radii, self.values)]


def _eigenpair(mode: int, a: float, b: float, n: int, oracle: bool) -> EigenPair:
    if not 0 < a < b:
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    if n < 64:
        raise ValueError(f"need n >= 64 samples, got {n}")
    lam = shooting_eigenvalue(mode, a, b)
    sol = _shoot(mode, a, b, lam, dense=True)
    radii = np.linspace(a, b, n + 1)
    phi, dphi = sol.sol(radii)
    phi[0], phi[-1] = 0.0, 0.0
    r_star = float(brentq(lambda r: float(sol.sol(r)[1]), a, b, xtol=1e-14 * b))
    peak = float(sol.sol(r_star)[0])
    phi = phi / peak
    dphi = dphi / peak
    oracle_value = fd_eigenvalue(mode, a, b) if oracle else None
    pair = EigenPair(
        mode=mode,
        a=a,
        b=b,
        eigenvalue=lam,
        radii=radii,
        values=phi,
        derivatives=dphi,
        r_star=r_star,
        oracle_eigenvalue=oracle_value,
        spline=CubicHermiteSpline(radii, phi, dphi),
    )
    gap = pair.relative_oracle_gap
    if gap is not None and gap > TOLERANCES.eigen_rel_tol:
        LOGGER.warning("Mode-%d eigenvalue on (%g, %g): shooting and oracle differ by %.3e", mode, a, b, gap)
    LOGGER.info("Mode-%d principal eigenvalue on (%g, %g): %.12g (r* = %.10g)", mode, a, b, lam, r_star)
    return pair


@lru_cache(maxsize=32)
def eigenpair_mode1(a: float, b: float, n: int = 512, oracle: bool = False) -> EigenPair:
    """Principal pair of −φ'' − φ'/r + φ/r² = λφ, φ(a) = φ(b) = 0."""
    return _eigenpair(1, float(a), float(b), int(n), oracle)


@lru_cache(maxsize=32)
def eigenpair_mode0(a: float, b: float, n: int = 512, oracle: bool = False) -> EigenPair:
    """Principal pair of −φ'' − φ'/r = μφ, φ(a) = φ(b) = 0."""
    return _eigenpair(0, float(a), float(b), int(n), oracle)


# ---------------------------------------------------------------------------
# Radial semilinear profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True, eq=False)
class RadialSolution:
    radii: np.ndarray
    U: np.ndarray
    Uprime: np.ndarray
    offset: float = 0.0

    def speed_profile(self) -> RadialProfile:
        """V = U' as a profile for `circular_field`."""
        spline = PchipInterpolator(self.radii, self.Uprime)
        return RadialProfile(name="U'", function=spline, derivative_fn=spline.derivative(), source="radial-solve")

    def to_rows(self) -> List[Dict[str, float]]:
        return [{"r": float(r), "U": float(u), "Uprime": float(d)} for r, u, d in zip(self.radii, self.U, self.Uprime)]


def _as_vorticity_callable(f: ProfileLike | Expression | str) -> Callable[[float], float]:
    if isinstance(f, str):
        f = parse_expression(f, ("s",))
    if isinstance(f, VorticityProfile):
        return lambda s: float(f.f_at(s))
    if isinstance(f, Expression):
        return lambda s: float(f.evaluate(s=s))
    return lambda s: float(np.asarray(f(np.asarray(s, dtype=float))))


def solve_radial_profile(
    f: ProfileLike | Expression | str,
    a: float,
    U_a: float,
    Uprime_a: float,
    b: float,
    n: int = 1025,
) -> RadialSolution:
    """Integrate U'' + U'/r + f(U) = 0 on [a, b] from (U(a), U'(a)); a = 0 is moved to 1e-2."""
    offset = 0.0
    if a <= 0.0:
        offset = _PUNCTURE_OFFSET - a
        a = _PUNCTURE_OFFSET
        LOGGER.info("Radial solve starts at the puncture; offset to r=%g", a)
    if not b > a:
        raise ValueError(f"need b > a, got a={a}, b={b}")
    f_of = _as_vorticity_callable(f)
    last = {"r": a}

    def rhs(r: float, y: np.ndarray) -> np.ndarray:
        last["r"] = r
        return np.array([y[1], -y[1] / r - f_of(y[0])])

    radii = np.linspace(a, b, n)
    try:
        sol = solve_ivp(rhs, (a, b), [U_a, Uprime_a], method="DOP853", rtol=_ODE_RTOL, atol=_ODE_ATOL, t_eval=radii)
    except (ProfileRangeError, ValueError, ArithmeticError) as exc:
        raise RadialIntegrationError(last["r"], str(exc)) from exc
    if sol.status != 0:
        raise RadialIntegrationError(float(sol.t[-1]), sol.message)
    return RadialSolution(radii=radii, U=sol.y[0], Uprime=sol.y[1], offset=offset)


# ---------------------------------------------------------------------------
# Circular flows from a speed profile
# ---------------------------------------------------------------------------


def _corrected_trapezoid(r: np.ndarray, g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Cumulative ∫g with the end-corrected trapezoid h(g_i+g_{i+1})/2 + h²(g'_i − g'_{i+1})/12."""
    h = np.diff(r)
    steps = 0.5 * h * (g[:-1] + g[1:]) + h * h * (dg[:-1] - dg[1:]) / 12.0
    return np.concatenate([[0.0], np.cumsum(steps)])


def circular_field(profile: RadialProfile, domain: AnnularDomain, name: str | None = None, samples: int = 4097) -> VectorField:
    """v = V(|x|) e_θ with analytic Jacobian from V and V'; u and p tabulated by corrected trapezoid."""
    lo, hi = domain.band
    if hi / lo > 10:
        radii = np.geomspace(lo, hi, samples)
    else:
        radii = np.linspace(lo, hi, samples)
    radii[0], radii[-1] = lo, hi
    V = np.asarray(profile(radii), dtype=float)
    dV = np.asarray(profile.derivative(radii), dtype=float)
    if not np.all(np.isfinite(V)):
        raise ValueError(f"profile {profile.name} is not finite on the band [{lo}, {hi}]")

    U = _corrected_trapezoid(radii, V, dV)
    stream_spline = CubicHermiteSpline(radii, U, V)
    g = V * V / radii
    dg = 2 * V * dV / radii - V * V / (radii * radii)
    P = _corrected_trapezoid(radii, g, dg)
    pressure_spline = CubicHermiteSpline(radii, P, g)

    def W_parts(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        r = np.hypot(points[..., 0], points[..., 1])
        v = np.asarray(profile(r), dtype=float)
        dv = np.asarray(profile.derivative(r), dtype=float)
        return r, v / r, (dv * r - v) / (r * r)

    def velocity(points: np.ndarray) -> np.ndarray:
        _, W, _ = W_parts(points)
        return np.stack([-W * points[..., 1], W * points[..., 0]], axis=-1)

    def jacobian(points: np.ndarray) -> np.ndarray:
        r, W, dW = W_parts(points)
        x, y = points[..., 0], points[..., 1]
        k = dW / r
        row1 = np.stack([-k * x * y, -W - k * y * y], axis=-1)
        row2 = np.stack([W + k * x * x, k * x * y], axis=-1)
        return np.stack([row1, row2], axis=-2)

    def stream(points: np.ndarray) -> np.ndarray:
        return stream_spline(np.hypot(points[..., 0], points[..., 1]))

    def pressure(points: np.ndarray) -> np.ndarray:
        return pressure_spline(np.hypot(points[..., 0], points[..., 1]))

    def pressure_gradient(points: np.ndarray) -> np.ndarray:
        r = np.hypot(points[..., 0], points[..., 1])
        v = np.asarray(profile(r), dtype=float)
        return (v * v / (r * r))[..., None] * points

    sign = profile.sign_report(radii)
    vorticity_function = None
    if sign.constant_strict_sign:
        omega = dV + V / radii
        order = np.argsort(U)
        inverse = PchipInterpolator(U[order], -omega[order], extrapolate=True)
        vorticity_function = inverse

    fixed = tuple(c for c in (domain.inner_radius, domain.outer_radius) if 0 < c < INFINITY)
    return VectorField(
        name=name or f"circular[{profile.name}]",
        kind="catalog",
        domain=domain,
        velocity_fn=velocity,
        jacobian_fn=jacobian,
        pressure_fn=pressure,
        pressure_gradient_fn=pressure_gradient,
        stream_fn=stream,
        vorticity_function=vorticity_function,
        params={},
        metadata={"fixed_circles": fixed, "circular": True, "sign": sign.as_dict(), "profile": profile.source},
    )


# ---------------------------------------------------------------------------
# Kelvin transform
# ---------------------------------------------------------------------------


def _inverted_domain(domain: AnnularDomain) -> AnnularDomain:
    inner = 0.0 if domain.exterior else 1.0 / domain.outer_radius
    outer = INFINITY if domain.punctured else 1.0 / domain.inner_radius
    return make_annulus(inner, outer, trunc_inner=1.0 / domain.trunc_outer, trunc_outer=1.0 / domain.trunc_inner)


def kelvin_transform(sg: StreamGrid) -> StreamGrid:
    """w(x) = u(x/|x|²): radii r ↦ 1/r reversed, angular nodes and values reused."""
    grid = sg.grid
    radii = 1.0 / grid.radii[::-1]
    new_grid = PolarGrid(_inverted_domain(grid.domain), radii, grid.angles.copy())
    values = sg.values[::-1, :].copy()
    bx, by = sg.base_point
    norm2 = bx * bx + by * by
    return StreamGrid(new_grid, values, (bx / norm2, by / norm2), sg.base_value, sg.discrepancy)


def kelvin_residual(sg: StreamGrid, profile: ProfileLike, margin: float = 0.02) -> SemilinearResidual:
    """Residual of Δw + |x|⁻⁴ f(w) on a transformed grid."""
    return semilinear_residual(sg, profile, margin=margin, weight=sg.radii**-4)
