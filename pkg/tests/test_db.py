import sys
import unittest
from pathlib import Path


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.db.models import CheckRecordRow, ReportRecord  # noqa: E402
from annulus_lab.db.session import create_session_factory, get_database_url, session_scope  # noqa: E402
from annulus_lab.report import CheckRecord, Report, archive_report  # noqa: E402


class ArchiveTests(unittest.TestCase):
    def setUp(self) -> None:
        self.factory = create_session_factory("sqlite://")

    def test_explicit_url_wins(self) -> None:
        self.assertEqual(get_database_url("sqlite:///x.db"), "sqlite:///x.db")

    def test_report_and_checks_are_stored_in_order(self) -> None:
        report = Report(
            "th1-circular",
            [
                CheckRecord("divergence", "PASS", value=1e-13, threshold=1e-8),
                CheckRecord("stagnation_hypothesis", "PASS", value="empty"),
            ],
        )
        with session_scope(factory=self.factory) as session:
            archive_report(report, session)
        with session_scope(factory=self.factory) as session:
            stored = session.query(ReportRecord).one()
            self.assertEqual(stored.scenario, "th1-circular")
            self.assertEqual(stored.exit_code, 0)
            self.assertEqual(stored.payload["counts"]["PASS"], 2)
            checks = [row.check for row in stored.checks]
            self.assertEqual(checks, ["divergence", "stagnation_hypothesis"])
            self.assertIsNone(stored.checks[1].value)
            self.assertEqual(stored.checks[1].detail["value"], "empty")
            self.assertEqual(session.query(CheckRecordRow).count(), 2)

    def test_failed_scope_rolls_back(self) -> None:
        with self.assertRaises(RuntimeError):
            with session_scope(factory=self.factory) as session:
                archive_report(Report("broken"), session)
                raise RuntimeError("boom")
        with session_scope(factory=self.factory) as session:
            self.assertEqual(session.query(ReportRecord).count(), 0)


if __name__ == "__main__":
    unittest.main()
