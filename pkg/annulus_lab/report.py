from __future__ import annotations

"""
Báo cáo kết quả chạy kịch bản: bản ghi từng check, ghi JSON/CSV và lưu DB.

Báo cáo không chứa mốc thời gian nên hai lần chạy cùng cấu hình cho ra
cùng một file JSON từng byte.
"""

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np

from .numerics.stream import FAIL, PASS

LOGGER = logging.getLogger(__name__)

SCHEMA = "annulus-lab/1"
INFO = "INFO"
SKIPPED = "SKIPPED"
VERDICTS = (PASS, FAIL, INFO, SKIPPED)

CSV_COLUMNS = ("sequence", "check", "verdict", "value", "threshold", "expected", "message")


def to_jsonable(value: Any) -> Any:
    """numpy scalars/arrays, tuples and non-finite floats turned into plain JSON values."""
    if isinstance(value, Mapping):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isnan(number):
            return None
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return number
    return value


@dataclass(slots=True)
class CheckRecord:
    """Kết quả 1 check: giá trị đo, ngưỡng, verdict và chi tiết."""

    check: str
    verdict: str
    value: Any = None
    threshold: float | None = None
    expected: Any = None
    message: str = ""
    inputs: Dict[str, Any] = field(default_factory=dict)
    detail: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict '{self.verdict}' (expected one of {', '.join(VERDICTS)})")

    @property
    def numeric_value(self) -> float | None:
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float, np.integer, np.floating)):
            return None
        number = float(self.value)
        return number if math.isfinite(number) else None

    def as_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "check": self.check,
                "verdict": self.verdict,
                "value": self.value,
                "threshold": self.threshold,
                "expected": self.expected,
                "message": self.message,
                "inputs": self.inputs,
                "detail": self.detail,
            }
        )


@dataclass(slots=True)
class Report:
    scenario: str
    records: List[CheckRecord] = field(default_factory=list)
    environment: Dict[str, Any] = field(default_factory=dict)
    schema: str = SCHEMA

    @property
    def exit_code(self) -> int:
        return 1 if any(record.verdict == FAIL for record in self.records) else 0

    def counts(self) -> Dict[str, int]:
        counts = {verdict: 0 for verdict in VERDICTS}
        for record in self.records:
            counts[record.verdict] += 1
        return counts

    def record(self, check: str) -> CheckRecord:
        for item in self.records:
            if item.check == check:
                return item
        raise KeyError(f"no record for check '{check}' in report '{self.scenario}'")

    def as_dict(self) -> Dict[str, Any]:
        return {
            "schema": self.schema,
            "scenario": self.scenario,
            "exit_code": self.exit_code,
            "counts": self.counts(),
            "environment": to_jsonable(self.environment),
            "checks": [record.as_dict() for record in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), ensure_ascii=False, indent=2, sort_keys=False)

    def csv_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for index, record in enumerate(self.records):
            data = record.as_dict()
            rows.append(
                {
                    "sequence": index,
                    "check": data["check"],
                    "verdict": data["verdict"],
                    "value": "" if data["value"] is None else data["value"],
                    "threshold": "" if data["threshold"] is None else data["threshold"],
                    "expected": "" if data["expected"] is None else data["expected"],
                    "message": data["message"],
                }
            )
        return rows

    def to_csv(self) -> str:
        return rows_to_csv(self.csv_rows(), CSV_COLUMNS)


def rows_to_csv(rows: Sequence[Mapping[str, Any]], columns: Sequence[str] | None = None) -> str:
    """CSV có dòng tiêu đề; cột mặc định lấy theo khoá của dòng đầu."""
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: to_jsonable(row.get(key, "")) for key in columns})
    return buffer.getvalue()


def write_text(path: Path | str, text: str) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
        file.write(text)
    return path


def write_report(report: Report, json_path: Path | str | None = None, csv_path: Path | str | None = None) -> List[Path]:
    written = []
    if json_path:
        written.append(write_text(json_path, report.to_json()))
    if csv_path:
        written.append(write_text(csv_path, report.to_csv()))
    for path in written:
        LOGGER.info("Report %s written to %s", report.scenario, path)
    return written


def report_from_dict(payload: Mapping[str, Any]) -> Report:
    """Đọc lại báo cáo JSON đã ghi (dùng cho subcommand `report`)."""
    if payload.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {payload.get('schema')!r} (expected {SCHEMA!r})")
    records = [
        CheckRecord(
            check=item["check"],
            verdict=item["verdict"],
            value=item.get("value"),
            threshold=item.get("threshold"),
            expected=item.get("expected"),
            message=item.get("message", ""),
            inputs=dict(item.get("inputs") or {}),
            detail=dict(item.get("detail") or {}),
        )
        for item in payload.get("checks", [])
    ]
    return Report(str(payload.get("scenario", "")), records, dict(payload.get("environment") or {}))


def archive_report(report: Report, session) -> Any:
    """Lưu báo cáo vào DB qua session SQLAlchemy đang mở; trả về ReportRecord."""
    from .db.models import CheckRecordRow, ReportRecord

    row = ReportRecord(
        scenario=report.scenario,
        schema_version=report.schema,
        exit_code=report.exit_code,
        environment=to_jsonable(report.environment),
        payload=report.as_dict(),
    )
    for index, record in enumerate(report.records):
        data = record.as_dict()
        row.checks.append(
            CheckRecordRow(
                sequence_number=index,
                check=record.check,
                value=record.numeric_value,
                threshold=record.threshold,
                verdict=record.verdict,
                message=record.message,
                detail={"value": data["value"], "expected": data["expected"], **data["detail"]},
            )
        )
    session.add(row)
    session.flush()
    LOGGER.info("Archived report %s as %s", report.scenario, row.id)
    return row
