import csv
import io
import json
import math
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.report import (  # noqa: E402
    CSV_COLUMNS,
    SCHEMA,
    CheckRecord,
    Report,
    report_from_dict,
    rows_to_csv,
    to_jsonable,
    write_report,
)


def _sample_report() -> Report:
    return Report(
        "sample",
        [
            CheckRecord("divergence", "PASS", value=np.float64(1e-12), threshold=1e-8),
            CheckRecord("circularity", "FAIL", value=0.3, threshold=1e-6, expected="PASS", message="not circular"),
            CheckRecord("critical_points", "INFO", value=np.int64(6), detail={"rings": (), "x": np.array([1.0])}),
            CheckRecord("euler_residual", "SKIPPED", message="no pressure"),
        ],
        environment={"grid": {"n_r": 65, "n_theta": 256}},
    )


class JsonableTests(unittest.TestCase):
    def test_numpy_and_non_finite_values(self) -> None:
        payload = to_jsonable({"a": np.float32(0.5), "b": (1, 2), "c": math.nan, "d": -math.inf, "e": np.bool_(True)})
        self.assertEqual(payload, {"a": 0.5, "b": [1, 2], "c": None, "d": "-inf", "e": True})


class ReportTests(unittest.TestCase):
    def test_unknown_verdict_is_rejected(self) -> None:
        with self.assertRaises(ValueError):
            CheckRecord("divergence", "MAYBE")

    def test_counts_exit_code_and_lookup(self) -> None:
        report = _sample_report()
        self.assertEqual(report.exit_code, 1)
        self.assertEqual(report.counts(), {"PASS": 1, "FAIL": 1, "INFO": 1, "SKIPPED": 1})
        self.assertEqual(report.record("circularity").message, "not circular")
        with self.assertRaises(KeyError):
            report.record("kelvin")
        self.assertIsNone(report.record("euler_residual").numeric_value)
        self.assertEqual(report.record("critical_points").numeric_value, 6.0)

    def test_json_is_deterministic_and_reloads(self) -> None:
        report = _sample_report()
        text = report.to_json()
        self.assertEqual(text, _sample_report().to_json())
        payload = json.loads(text)
        self.assertEqual(payload["schema"], SCHEMA)
        self.assertEqual(payload["checks"][2]["detail"], {"rings": [], "x": [1.0]})
        again = report_from_dict(payload)
        self.assertEqual(again.exit_code, 1)
        self.assertEqual([r.check for r in again.records], [r.check for r in report.records])
        with self.assertRaises(ValueError):
            report_from_dict({"schema": "other/0"})

    def test_csv_layout(self) -> None:
        rows = list(csv.DictReader(io.StringIO(_sample_report().to_csv())))
        self.assertEqual(tuple(rows[0].keys()), CSV_COLUMNS)
        self.assertEqual(rows[1]["verdict"], "FAIL")
        self.assertEqual(rows[3]["value"], "")

    def test_write_report_creates_directories(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            base = Path(tmp) / "out" / "nested"
            written = write_report(_sample_report(), base / "r.json", base / "r.csv")
            self.assertEqual(len(written), 2)
            self.assertTrue((base / "r.json").exists())
            self.assertTrue((base / "r.csv").read_text(encoding="utf-8").startswith("sequence,check"))


if __name__ == "__main__":
    unittest.main()
