import json
import sys
import tempfile
import unittest
from pathlib import Path


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.main import _parse_params, _parse_point, main  # noqa: E402
from annulus_lab.report import CheckRecord, Report, write_report  # noqa: E402


class ArgumentParsingTests(unittest.TestCase):
    def test_params_and_points(self) -> None:
        self.assertEqual(_parse_params(["a=1", "b=inf"]), {"a": 1.0, "b": float("inf")})
        self.assertEqual(_parse_params(None), {})
        with self.assertRaises(ValueError):
            _parse_params(["a"])
        self.assertEqual(_parse_point("1.5, -2"), [1.5, -2.0])


class CommandTests(unittest.TestCase):
    def test_scenarios_command_writes_catalogue(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "scenarios.json"
            code = main(["--log-level", "ERROR", "--output", str(out), "scenarios"])
            self.assertEqual(code, 0)
            rows = json.loads(out.read_text(encoding="utf-8"))
            self.assertEqual(len(rows), 17)
            self.assertIn("th1-circular", {row["name"] for row in rows})

    def test_report_command_reemits_csv_and_exit_code(self) -> None:
        report = Report("saved", [CheckRecord("divergence", "PASS", 1e-12), CheckRecord("circularity", "FAIL", 0.2)])
        with tempfile.TemporaryDirectory() as tmp:
            json_path = Path(tmp) / "saved.json"
            write_report(report, json_path)
            out = Path(tmp) / "saved.csv"
            code = main(["--log-level", "ERROR", "--output", str(out), "report", str(json_path), "--format", "csv"])
            self.assertEqual(code, 1)
            lines = out.read_text(encoding="utf-8").splitlines()
            self.assertEqual(len(lines), 3)
            self.assertIn("circularity", lines[2])

    def test_unknown_scenario_returns_error_code(self) -> None:
        self.assertEqual(main(["--log-level", "ERROR", "run", "no-such-scenario"]), 1)

    def test_eigen_command(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "eigen.json"
            code = main(["--log-level", "ERROR", "--output", str(out), "eigen", "--mode", "0", "--n", "128"])
            self.assertEqual(code, 0)
            payload = json.loads(out.read_text(encoding="utf-8"))
            self.assertGreater(payload["eigenvalue"], 0.0)


if __name__ == "__main__":
    unittest.main()
