from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict

from dotenv import load_dotenv

try:
    import yaml
except ModuleNotFoundError:  # pragma: no cover
    yaml = None

# ANNULUS_LAB_TOLERANCES / ANNULUS_LAB_THREADS có thể đặt trong annulus_lab/.env
load_dotenv(dotenv_path=Path(__file__).resolve().parents[1] / ".env", override=False)
load_dotenv(override=False)


@dataclass(frozen=True, slots=True)
class Tolerances:
    """Numerical tolerances shared by every module of the lab."""

    fd_min_step: float = 1e-5
    fd_rel_step: float = 1e-4
    simpson_tol: float = 1e-10
    simpson_max_depth: int = 40
    tracer_rtol: float = 1e-9
    tracer_atol: float = 1e-12
    tracer_max_step_fraction: float = 0.05
    tracer_max_steps: int = 200_000
    closure_rel_tol: float = 1e-7
    winding_residual_tol: float = 1e-3
    flux_rel_tol: float = 1e-8
    speed_rel_tol: float = 1e-6
    full_circle_coverage: float = 0.99
    audit_points: int = 1000
    random_seed: int = 20240917
    divergence_tol: float = 1e-8
    tangency_tol: float = 1e-10
    euler_tol: float = 1e-8
    transport_tol: float = 1e-6
    circularity_tol: float = 1e-6
    deficit_tol: float = 1e-10
    overdetermined_tol: float = 1e-4
    eigen_rel_tol: float = 1e-6
    eigen_oracle_n: int = 4096
    critical_rel_tol: float = 0.05

    def as_dict(self) -> Dict[str, Any]:
        return {item.name: getattr(self, item.name) for item in _FIELD_DEFS}


_TOLERANCES_PATH = Path(__file__).with_name("tolerances.yml")
_FIELD_DEFS = fields(Tolerances)
_ALLOWED_FIELDS = {item.name for item in _FIELD_DEFS}
_INT_FIELDS = {item.name for item in _FIELD_DEFS if isinstance(item.default, int)}


def _parse_flat_yaml_mapping(text: str) -> dict:
    """
    Minimal parser for `tolerances.yml` when PyYAML is unavailable.

    Only flat `key: number` lines and `#` comments are supported.
    """
    root: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if ":" not in stripped or line.startswith((" ", "\t")):
            raise ValueError(f"Invalid YAML at line {lineno}: {line!r}")
        key, rest = stripped.split(":", 1)
        token = rest.strip()
        try:
            value: Any = int(token)
        except ValueError:
            try:
                value = float(token)
            except ValueError as exc:
                raise ValueError(f"Expected a number at line {lineno}: {line!r}") from exc
        root[key.strip()] = value
    return root


def _coerce(key: str, value: Any) -> float | int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(f"Tolerance '{key}' must be numeric, got {value!r}")
    if key in _INT_FIELDS:
        if float(value) != int(value):
            raise TypeError(f"Tolerance '{key}' must be an integer, got {value!r}")
        return int(value)
    return float(value)


def load_tolerances(path: Path | str | None = None) -> Tolerances:
    """Load tolerances from YAML; `ANNULUS_LAB_TOLERANCES` overrides the bundled file."""
    if path is None:
        env_path = os.getenv("ANNULUS_LAB_TOLERANCES")
        path = Path(env_path) if env_path else _TOLERANCES_PATH
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Tolerance YAML not found: {path}")

    raw_text = path.read_text(encoding="utf-8")
    if yaml is not None:
        raw = yaml.safe_load(raw_text)
    else:  # pragma: no cover
        raw = _parse_flat_yaml_mapping(raw_text)
    if raw is None:
        return Tolerances()
    if not isinstance(raw, dict):
        raise ValueError("Tolerance YAML must be a mapping of name -> value.")

    unknown = set(raw) - _ALLOWED_FIELDS
    if unknown:
        raise ValueError(f"Unknown tolerance keys in {path}: {', '.join(sorted(map(str, unknown)))}")
    return Tolerances(**{key: _coerce(key, value) for key, value in raw.items()})


TOLERANCES = load_tolerances()
