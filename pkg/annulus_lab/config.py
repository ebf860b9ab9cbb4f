from __future__ import annotations

"""
Khai báo các kịch bản (scenario) kiểm tra dòng chảy.

Ý tưởng:
- Mỗi kịch bản được mô tả bằng một `ScenarioConfig` gồm định nghĩa trường vận
  tốc, miền, lưới và danh sách check theo thứ tự khai báo.
- Phần chạy check nằm ở `scenario_runner.py` và đọc cấu hình từ đây.
- Kịch bản dựng sẵn (builtin) liệt kê qua `python -m annulus_lab.main scenarios`;
  kịch bản riêng viết bằng JSON hoặc YAML rồi chạy bằng `run <file>`.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Tuple

try:
    import yaml
except ModuleNotFoundError:  # pragma: no cover
    yaml = None


# Mọi check mà `ScenarioRunner` biết chạy; check lạ bị từ chối ngay khi parse.
CHECK_IDS: Tuple[str, ...] = (
    "divergence",
    "tangency",
    "euler_residual",
    "vorticity_transport",
    "vorticity_value",
    "vorticity_sup",
    "circularity",
    "decay_infinity",
    "decay_origin",
    "stagnation_hypothesis",
    "unique_stagnation",
    "critical_points",
    "overdetermined",
    "semilinear",
    "kelvin",
    "eigen_oracle",
    "vorticity_profile",
    "streamline_closure",
    "streamline_width",
    "flux_law",
    "moving_planes",
)


class ScenarioConfigError(ValueError):
    """Lỗi parse kịch bản; `position` là dòng:cột của file hoặc đường dẫn khoá."""

    def __init__(self, position: str, message: str) -> None:
        self.position = position
        self.message = message
        super().__init__(f"{position}: {message}")


@dataclass(slots=True)
class CheckSpec:
    """Một check trong kịch bản."""

    check: str
    # Ngưỡng PASS/FAIL; None = dùng dung sai mặc định của check.
    threshold: float | None = None
    # Kết quả mong đợi: số (so với value trong phạm vi threshold), tên lớp
    # (ví dụ "full-circle") hoặc "PASS"/"FAIL" cho các phản ví dụ.
    expect: Any = None
    params: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"check": self.check}
        if self.threshold is not None:
            out["threshold"] = self.threshold
        if self.expect is not None:
            out["expect"] = self.expect
        out.update(self.params)
        return out


@dataclass(slots=True)
class ScenarioConfig:
    """Cấu hình chạy cho 1 kịch bản."""

    # Tên ngắn dùng trong CLI / logging, ví dụ: "th1-circular"
    key: str
    description: str
    # Định nghĩa trường, cùng định dạng với `flows.field_from_spec`
    flow: Dict[str, Any]
    domain: Dict[str, Any] | None = None

    # Lưới cực dùng để dựng hàm dòng u
    n_r: int = 65
    n_theta: int = 256

    checks: Tuple[CheckSpec, ...] = field(default_factory=tuple)

    # Đường dẫn file kết quả {"json": ..., "csv": ...}
    outputs: Dict[str, str] = field(default_factory=dict)

    # Kịch bản thăm dò: mọi verdict được ghi là INFO
    exploratory: bool = False

    def check_ids(self) -> List[str]:
        return [spec.check for spec in self.checks]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.key,
            "description": self.description,
            "field": self.flow,
            "domain": self.domain,
            "grid": {"n_r": self.n_r, "n_theta": self.n_theta},
            "checks": [spec.as_dict() for spec in self.checks],
            "outputs": dict(self.outputs),
            "exploratory": self.exploratory,
        }


def _checks(*items: str | Mapping[str, Any]) -> Tuple[CheckSpec, ...]:
    return tuple(_parse_check(item, f"checks[{index}]") for index, item in enumerate(items))


def _catalog(name: str, **params: Any) -> Dict[str, Any]:
    return {"kind": "catalog", "name": name, "params": params}


def _th1_circular_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="th1-circular",
        description="Rigid rotation on the annulus 1 < |x| < 2: every identity and circularity holds",
        flow=_catalog("rigid", a=1.0, b=2.0),
        checks=_checks(
            "divergence",
            "tangency",
            "euler_residual",
            "vorticity_transport",
            {"check": "vorticity_value", "value": 2.0},
            "stagnation_hypothesis",
            "circularity",
            {"check": "streamline_closure", "radii": [1.1, 1.3, 1.5, 1.7, 1.9]},
        ),
    )


def _th1_eigenflow_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="th1-eigenflow",
        description="Mode-1 eigenfunction flow: a non-circular Euler flow with six critical points",
        flow=_catalog("eigenflow_m1", a=1.0, b=2.0),
        checks=_checks(
            "euler_residual",
            "tangency",
            {"check": "eigen_oracle", "mode": 1},
            {"check": "critical_points", "counts": {"interior": 2, "inner-boundary": 2, "outer-boundary": 2}},
            {"check": "stagnation_hypothesis", "expect": "interior-present"},
            {"check": "circularity", "expect": "FAIL"},
            {"check": "overdetermined", "radius": 1.0, "expect": "FAIL"},
        ),
    )


def _th1_ring_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="th1-ring",
        description="Mode-0 eigenfunction flow: circular, stagnant on a whole interior circle",
        flow=_catalog("eigenflow_m0", a=1.0, b=2.0),
        checks=_checks(
            "euler_residual",
            {"check": "eigen_oracle", "mode": 0},
            {"check": "stagnation_hypothesis", "expect": "full-circle"},
            {"check": "critical_points", "counts": {"interior": 1}},
            "circularity",
        ),
    )


def _circular_stagnation_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="circular-stagnation",
        description="V(r) = r - 2.25/r changes sign on |x| = 1.5",
        flow=_catalog("circular", alpha=1.0, beta=-2.25, a=1.0, b=2.0),
        checks=_checks(
            "euler_residual",
            {"check": "stagnation_hypothesis", "expect": "full-circle"},
            {"check": "streamline_closure", "radii": [1.05, 1.2, 1.35, 1.65, 1.8, 1.95]},
        ),
    )


def _th2_counterexample_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="th2-counterexample",
        description="Exterior flow with Δu = 8/a²: no stagnation, but radial velocity does not decay",
        flow=_catalog("ext_counterexample", a=1.0),
        checks=_checks(
            "euler_residual",
            {"check": "vorticity_value", "value": 8.0},
            "stagnation_hypothesis",
            {"check": "decay_infinity", "expect": "FAIL"},
            {"check": "circularity", "expect": "FAIL"},
            "semilinear",
            {"check": "streamline_width", "levels": [1e2, 1e3, 1e4], "expect": 0.5, "threshold": 0.025},
        ),
    )


def _th2_inverse_square_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="th2-inverse-square",
        description="v = e_θ/|x|² on the exterior domain: circular, with negative vorticity",
        flow=_catalog("inverse_square", a=1.0),
        checks=_checks(
            "euler_residual",
            "tangency",
            "decay_infinity",
            "stagnation_hypothesis",
            "circularity",
            "vorticity_sup",
        ),
    )


def _exterior_vorticity_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="exterior-vorticity",
        description="Speed bounded below and v·e_θ > 0 on C_a force a positive vorticity somewhere",
        flow=_catalog("ext_counterexample", a=1.0),
        checks=_checks("vorticity_sup"),
    )


def _th3_counterexample_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="th3-counterexample",
        description="Harmonic flow on the punctured unit disk: flux through C_ε blows up like 4/ε",
        flow=_catalog("punct_counterexample", b=1.0),
        checks=_checks(
            "euler_residual",
            "stagnation_hypothesis",
            {"check": "flux_law", "epsilons": [0.4, 0.2, 0.1], "threshold": 0.01},
            {"check": "decay_origin", "expect": "FAIL"},
            {"check": "circularity", "expect": "FAIL"},
        ),
    )


def _th3_log_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="th3-log",
        description="u = ln|x| on the punctured unit disk: every hypothesis and the conclusion hold",
        flow=_catalog("log", a=0.0, b=1.0),
        checks=_checks(
            "euler_residual",
            {"check": "vorticity_value", "value": 0.0},
            "stagnation_hypothesis",
            "decay_origin",
            "circularity",
            "semilinear",
        ),
    )


def _th4_punctured_plane_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="th4-punctured-plane",
        description="V(r) = r + 1/r on the punctured plane: speed bounded below, both decay conditions",
        flow=_catalog("circular", alpha=1.0, beta=1.0, a=0.0, b=math.inf),
        checks=_checks(
            "euler_residual",
            "stagnation_hypothesis",
            "decay_infinity",
            "decay_origin",
            "circularity",
        ),
    )


def _serrin_quartic_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="serrin-quartic",
        description="u = 1 - |x|⁴ on the unit disk: constant |v| on the boundary, one stagnation point",
        flow=_catalog("quartic", R=1.0),
        checks=_checks(
            "euler_residual",
            {"check": "overdetermined", "radius": 1.0},
            "unique_stagnation",
            {"check": "vorticity_profile", "seed": [0.5, 0.0]},
        ),
    )


def _shifted_profile_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="shifted-profile",
        description="v = (|x| - a) e_θ: the extracted vorticity function matches -2 + a/(a + sqrt(2s))",
        flow=_catalog("shifted", a=1.0),
        checks=_checks(
            "euler_residual",
            {"check": "vorticity_profile", "seed": [1.5, 0.0]},
        ),
    )


def _kelvin_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="kelvin-inverse-square",
        description="Kelvin transform of u = -1/|x| solves Δw + |x|⁻⁴ f(w) = 0 with f(s) = -s³",
        flow=_catalog("inverse_square", a=1.0),
        checks=_checks("kelvin", "semilinear"),
    )


def _moving_planes_radial_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="moving-planes-radial",
        description="φ = -ln|x| between C_2 and C_0.5: the reflected comparison holds for every plane",
        flow=_catalog("log", a=0.25, b=4.0),
        checks=_checks(
            {"check": "moving_planes", "outer_circle": 2.0, "inner_circle": 0.5, "directions": 16},
        ),
    )


def _moving_planes_eigenflow_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="moving-planes-eigenflow",
        description="Mode-1 eigenfunction: the reflected comparison fails, as it must without monotone data",
        flow=_catalog("eigenflow_m1", a=1.0, b=2.0),
        checks=_checks(
            {
                "check": "moving_planes",
                "outer_circle": 1.99,
                "inner_circle": 1.01,
                "directions": 1,
                "lambdas": [0.2],
                "negate": False,
                "expect": "FAIL",
            },
        ),
    )


def _moving_planes_exterior_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="moving-planes-exterior",
        description="Exterior counterexample between the streamlines u = 10 and u = 100, φ = -u",
        flow=_catalog("ext_counterexample", a=1.0),
        n_r=129,
        checks=_checks(
            {"check": "moving_planes", "outer_level": 100.0, "inner_level": 10.0, "directions": 16},
        ),
        exploratory=True,
    )


def _off_center_puncture_config() -> ScenarioConfig:
    return ScenarioConfig(
        key="off-center-puncture",
        description="Disk whose puncture is not the centre; the sweep is reported, no verdict",
        flow=_catalog("log", a=0.25, b=4.0),
        checks=_checks(
            {
                "check": "moving_planes",
                "outer_circle": 2.0,
                "outer_center": [0.3, 0.0],
                "inner_circle": 0.5,
                "directions": 8,
            },
        ),
        exploratory=True,
    )


def get_supported_scenarios() -> Dict[str, ScenarioConfig]:
    """Trả về dict {scenario_key: ScenarioConfig} cho tất cả kịch bản dựng sẵn."""
    scenarios: Dict[str, ScenarioConfig] = {}
    for cfg in (
        _th1_circular_config(),
        _th1_eigenflow_config(),
        _th1_ring_config(),
        _circular_stagnation_config(),
        _th2_counterexample_config(),
        _th2_inverse_square_config(),
        _exterior_vorticity_config(),
        _th3_counterexample_config(),
        _th3_log_config(),
        _th4_punctured_plane_config(),
        _serrin_quartic_config(),
        _shifted_profile_config(),
        _kelvin_config(),
        _moving_planes_radial_config(),
        _moving_planes_eigenflow_config(),
        _moving_planes_exterior_config(),
        _off_center_puncture_config(),
    ):
        scenarios[cfg.key] = cfg
    return scenarios


def list_scenario_keys() -> List[str]:
    """Danh sách key của các kịch bản, dùng cho CLI help."""
    return sorted(get_supported_scenarios().keys())


def get_scenario(scenario_key: str) -> ScenarioConfig:
    """Lấy 1 kịch bản dựng sẵn, raise KeyError nếu không tồn tại."""
    scenarios = get_supported_scenarios()
    try:
        return scenarios[scenario_key]
    except KeyError as exc:
        raise KeyError(
            f"Unknown scenario '{scenario_key}'. Supported scenarios: {', '.join(sorted(scenarios))}"
        ) from exc


def iter_scenarios(keys: Iterable[str] | None = None) -> Iterable[ScenarioConfig]:
    """Iterator trả về các kịch bản theo danh sách key (hoặc tất cả nếu None)."""
    scenarios = get_supported_scenarios()
    if keys is None:
        yield from scenarios.values()
        return
    for key in keys:
        if key not in scenarios:
            raise KeyError(
                f"Unknown scenario '{key}'. Supported scenarios: {', '.join(sorted(scenarios))}"
            )
        yield scenarios[key]


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------


def _parse_check(item: Any, position: str) -> CheckSpec:
    if isinstance(item, str):
        item = {"check": item}
    if not isinstance(item, Mapping):
        raise ScenarioConfigError(position, "a check must be an identifier or an object with a 'check' key")
    raw = dict(item)
    name = raw.pop("check", None)
    if not isinstance(name, str):
        raise ScenarioConfigError(position, "missing check identifier")
    if name not in CHECK_IDS:
        raise ScenarioConfigError(position, f"unknown check '{name}'. Supported checks: {', '.join(CHECK_IDS)}")
    threshold = raw.pop("threshold", None)
    if threshold is not None:
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
            raise ScenarioConfigError(f"{position}.threshold", f"expected a number, got {threshold!r}")
        threshold = float(threshold)
    expect = raw.pop("expect", None)
    return CheckSpec(name, threshold, expect, raw)


def _positive_int(value: Any, position: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ScenarioConfigError(position, f"expected a positive integer, got {value!r}")
    return value


def scenario_from_dict(raw: Any, source: str = "<scenario>") -> ScenarioConfig:
    """Kiểm tra và dựng `ScenarioConfig` từ dict đã parse (JSON/YAML)."""
    if not isinstance(raw, Mapping):
        raise ScenarioConfigError(source, "scenario must be a mapping")
    known = {"name", "description", "field", "domain", "grid", "checks", "outputs", "exploratory"}
    unknown = set(raw) - known
    if unknown:
        raise ScenarioConfigError(source, f"unknown keys: {', '.join(sorted(map(str, unknown)))}")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioConfigError(f"{source}:name", "scenario needs a non-empty 'name'")
    flow = raw.get("field")
    if not isinstance(flow, Mapping):
        raise ScenarioConfigError(f"{source}:field", "scenario needs a 'field' object")
    domain = raw.get("domain")
    if domain is not None and not isinstance(domain, Mapping):
        raise ScenarioConfigError(f"{source}:domain", "domain must be an object")
    grid = raw.get("grid") or {}
    if not isinstance(grid, Mapping):
        raise ScenarioConfigError(f"{source}:grid", "grid must be an object with n_r and n_theta")
    n_r = _positive_int(grid.get("n_r", 65), f"{source}:grid.n_r")
    n_theta = _positive_int(grid.get("n_theta", 256), f"{source}:grid.n_theta")
    checks_raw = raw.get("checks") or []
    if not isinstance(checks_raw, list):
        raise ScenarioConfigError(f"{source}:checks", "checks must be a list")
    checks = tuple(_parse_check(item, f"{source}:checks[{index}]") for index, item in enumerate(checks_raw))
    outputs = raw.get("outputs") or {}
    if not isinstance(outputs, Mapping) or set(outputs) - {"json", "csv"}:
        raise ScenarioConfigError(f"{source}:outputs", "outputs accepts only 'json' and 'csv' paths")
    return ScenarioConfig(
        key=name,
        description=str(raw.get("description", "")),
        flow=dict(flow),
        domain=dict(domain) if domain is not None else None,
        n_r=n_r,
        n_theta=n_theta,
        checks=checks,
        outputs={str(k): str(v) for k, v in outputs.items()},
        exploratory=bool(raw.get("exploratory", False)),
    )


def load_scenario_file(path: Path | str) -> ScenarioConfig:
    """Đọc kịch bản JSON (hoặc YAML, theo đuôi .yml/.yaml)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Scenario file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yml", ".yaml"):
        if yaml is None:  # pragma: no cover
            raise ScenarioConfigError(str(path), "PyYAML is required for YAML scenarios")
        try:
            raw = yaml.safe_load(text)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark
            where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark is not None else str(path)
            raise ScenarioConfigError(where, str(exc.problem or exc)) from exc
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return scenario_from_dict(raw, str(path))


def resolve_scenario(name_or_path: str) -> ScenarioConfig:
    """Kịch bản dựng sẵn theo tên, nếu không thì đọc từ file."""
    scenarios = get_supported_scenarios()
    if name_or_path in scenarios:
        return scenarios[name_or_path]
    path = Path(name_or_path)
    if path.suffix.lower() in (".json", ".yml", ".yaml") or path.exists():
        return load_scenario_file(path)
    raise KeyError(f"Unknown scenario '{name_or_path}'. Supported scenarios: {', '.join(sorted(scenarios))}")
