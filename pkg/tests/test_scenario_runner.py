import sys
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.config import CHECK_IDS, CheckSpec, get_scenario, list_scenario_keys, scenario_from_dict  # noqa: E402
from annulus_lab.numerics.flows import catalog, expression_field, field_from_spec  # noqa: E402
from annulus_lab.numerics.geometry import make_annulus  # noqa: E402
from annulus_lab.numerics.tolerances import TOLERANCES  # noqa: E402
from annulus_lab.scenario_runner import (  # noqa: E402
    CHECKS,
    CONFIRMED,
    CONSISTENT,
    INCONSISTENT,
    NOT_CONFIRMED,
    CheckContext,
    CheckOutcome,
    ScenarioRunner,
    _apply_expectation,
    audit_flow,
    audit_points,
)


FAST = replace(TOLERANCES, audit_points=200)


def _rigid_scenario(checks, **extra) -> dict:
    raw = {
        "name": "rigid-small",
        "field": {"kind": "catalog", "name": "rigid", "params": {"a": 1.0, "b": 2.0}},
        "grid": {"n_r": 17, "n_theta": 64},
        "checks": checks,
    }
    raw.update(extra)
    return raw


class ExpectationTests(unittest.TestCase):
    def test_no_expect_keeps_raw_verdict(self) -> None:
        verdict, detail = _apply_expectation(CheckSpec("divergence"), CheckOutcome("FAIL", 1.0))
        self.assertEqual(verdict, "FAIL")
        self.assertNotIn("raw_verdict", detail)

    def test_expected_failure_becomes_pass(self) -> None:
        verdict, detail = _apply_expectation(CheckSpec("circularity", expect="FAIL"), CheckOutcome("FAIL", 0.4))
        self.assertEqual(verdict, "PASS")
        self.assertEqual(detail["raw_verdict"], "FAIL")

    def test_class_name_is_compared_with_value(self) -> None:
        spec = CheckSpec("stagnation_hypothesis", expect="full-circle")
        self.assertEqual(_apply_expectation(spec, CheckOutcome("FAIL", "full-circle"))[0], "PASS")
        self.assertEqual(_apply_expectation(spec, CheckOutcome("PASS", "empty"))[0], "FAIL")

    def test_numeric_expect_uses_threshold_or_relative_default(self) -> None:
        spec = CheckSpec("flux_law", threshold=0.01, expect=4.0)
        self.assertEqual(_apply_expectation(spec, CheckOutcome("INFO", 4.005))[0], "PASS")
        self.assertEqual(_apply_expectation(spec, CheckOutcome("INFO", 4.02))[0], "FAIL")
        tight = CheckSpec("flux_law", expect=4.0)
        self.assertEqual(_apply_expectation(tight, CheckOutcome("INFO", 4.0 + 1e-10))[0], "PASS")
        self.assertEqual(_apply_expectation(tight, CheckOutcome("INFO", 4.0 + 1e-7))[0], "FAIL")
        self.assertEqual(_apply_expectation(tight, CheckOutcome("INFO", "empty"))[0], "FAIL")

    def test_skipped_ignores_expect(self) -> None:
        verdict, _ = _apply_expectation(CheckSpec("euler_residual", expect="PASS"), CheckOutcome("SKIPPED"))
        self.assertEqual(verdict, "SKIPPED")


class RegistryTests(unittest.TestCase):
    def test_every_check_id_has_an_implementation(self) -> None:
        self.assertEqual(set(CHECKS), set(CHECK_IDS))

    def test_audit_points_stay_inside_band(self) -> None:
        domain = make_annulus(1.0, 2.0)
        pts = audit_points(domain, 300, 7)
        radii = (pts**2).sum(axis=1) ** 0.5
        self.assertEqual(pts.shape, (300, 2))
        self.assertTrue((radii > 1.0).all() and (radii < 2.0).all())
        self.assertTrue((audit_points(domain, 300, 7) == pts).all())


class ScenarioRunnerTests(unittest.TestCase):
    def test_rigid_rotation_passes_cheap_checks_in_order(self) -> None:
        config = scenario_from_dict(
            _rigid_scenario(
                ["divergence", "tangency", "euler_residual", {"check": "vorticity_value", "value": 2.0}]
            )
        )
        serial = ScenarioRunner(config, workers=1, tolerances=FAST).run()
        parallel = ScenarioRunner(config, workers=2, tolerances=FAST).run()
        self.assertEqual([r.check for r in serial.records], ["divergence", "tangency", "euler_residual", "vorticity_value"])
        self.assertEqual([r.check for r in parallel.records], [r.check for r in serial.records])
        self.assertEqual([r.verdict for r in serial.records], ["PASS"] * 4)
        self.assertEqual([r.verdict for r in parallel.records], ["PASS"] * 4)
        self.assertEqual(serial.exit_code, 0)
        self.assertEqual(serial.environment["grid"], {"n_r": 17, "n_theta": 64})

    def test_wrong_vorticity_value_fails_unless_expected(self) -> None:
        config = scenario_from_dict(
            _rigid_scenario(
                [
                    {"check": "vorticity_value", "value": 3.0},
                    {"check": "vorticity_value", "value": 3.0, "expect": "FAIL"},
                ]
            )
        )
        report = ScenarioRunner(config, workers=1, tolerances=FAST).run()
        self.assertEqual([r.verdict for r in report.records], ["FAIL", "PASS"])
        self.assertEqual(report.records[1].detail["raw_verdict"], "FAIL")
        self.assertEqual(report.exit_code, 1)

    def test_check_exception_is_recorded_as_failure(self) -> None:
        config = scenario_from_dict(_rigid_scenario(["vorticity_value", "divergence"]))
        runner = ScenarioRunner(config, workers=1, tolerances=FAST)
        report = runner.run()
        first = report.records[0]
        self.assertEqual(first.verdict, "FAIL")
        self.assertTrue(first.message.startswith("ValueError:"))
        self.assertEqual(report.records[1].verdict, "PASS")
        self.assertEqual(runner.stats["errors"], 1)
        self.assertEqual(runner.stats["failed"], 1)
        self.assertEqual(runner.stats["passed"], 1)

    def test_missing_pressure_skips_euler_residual(self) -> None:
        raw = {
            "name": "expr",
            "field": {"kind": "expression", "v_theta": "r", "v_r": "0"},
            "domain": {"a": 1.0, "b": 2.0},
            "grid": {"n_r": 17, "n_theta": 64},
            "checks": [{"check": "euler_residual", "expect": "PASS"}, "divergence"],
        }
        report = ScenarioRunner(scenario_from_dict(raw), workers=1, tolerances=FAST).run()
        self.assertEqual(report.records[0].verdict, "SKIPPED")
        self.assertEqual(report.records[1].verdict, "PASS")
        self.assertEqual(report.exit_code, 0)

    def test_exploratory_scenario_reports_info(self) -> None:
        config = scenario_from_dict(
            _rigid_scenario(["divergence", {"check": "vorticity_value", "value": 5.0}], exploratory=True)
        )
        report = ScenarioRunner(config, workers=1, tolerances=FAST).run()
        self.assertEqual([r.verdict for r in report.records], ["INFO", "INFO"])
        self.assertEqual(report.records[0].detail["raw_verdict"], "PASS")
        self.assertEqual(report.records[1].detail["raw_verdict"], "FAIL")
        self.assertEqual(report.exit_code, 0)


class AuditFlowTests(unittest.TestCase):
    def test_vanishing_field_is_degenerate(self) -> None:
        field_ = expression_field("0", "0", make_annulus(1.0, 2.0), name="zero")
        report = audit_flow(field_, n_r=17, n_theta=64, tolerances=FAST)
        self.assertEqual(report.scenario, "audit:zero")
        self.assertEqual(report.record("stagnation").value, "degenerate")
        for check in ("decay_infinity", "decay_origin", "circularity", "vorticity_transport", "families"):
            self.assertEqual(report.record(check).verdict, "SKIPPED")
        self.assertEqual(report.exit_code, 0)

    def test_rigid_rotation_on_bounded_annulus(self) -> None:
        report = audit_flow(catalog("rigid", {"a": 1.0, "b": 2.0}), n_r=17, n_theta=64, tolerances=FAST)
        family = report.record("family:bounded-annulus")
        self.assertEqual(family.verdict, "INFO")
        self.assertEqual(family.value, CONSISTENT)
        self.assertEqual(family.detail["conclusion"]["circular"], CONFIRMED)
        self.assertEqual(report.record("decay_infinity").verdict, "SKIPPED")
        self.assertEqual(report.record("decay_origin").verdict, "SKIPPED")
        self.assertTrue(all(r.verdict in ("INFO", "SKIPPED") for r in report.records))

    def test_dipole_on_punctured_disk_violates_origin_decay(self) -> None:
        report = audit_flow(catalog("punct_counterexample", {"b": 1.0}), n_r=33, n_theta=128, tolerances=FAST)
        family = report.record("family:punctured-disk")
        self.assertEqual(family.value, INCONSISTENT)
        self.assertEqual(family.detail["hypotheses"]["flux-decay-origin"], INCONSISTENT)
        self.assertEqual(family.detail["conclusion"]["circular"], NOT_CONFIRMED)
        self.assertEqual(report.record("decay_origin").value, "FAIL")


class KelvinCheckTests(unittest.TestCase):
    def _context(self, field_) -> CheckContext:
        config = scenario_from_dict(
            {
                "name": "kelvin-small",
                "field": {"kind": "catalog", "name": "inverse_square", "params": {"a": 1.0}},
                "grid": {"n_r": 33, "n_theta": 64},
                "checks": ["kelvin"],
            }
        )
        return CheckContext(config, field_, tolerances=FAST)

    def test_inverted_inverse_square_is_at_roundoff_on_both_grids(self) -> None:
        outcome = CHECKS["kelvin"](self._context(catalog("inverse_square", {"a": 1.0})), CheckSpec("kelvin"))
        self.assertEqual(outcome.verdict, "PASS")
        self.assertLessEqual(outcome.value, outcome.detail["roundoff_floor"])
        self.assertLessEqual(outcome.detail["involution"], 1e-12)
        self.assertIn("ratio", outcome.detail)

    def test_wrong_vorticity_function_does_not_converge(self) -> None:
        field_ = replace(catalog("inverse_square", {"a": 1.0}), vorticity_function=lambda s: -2.0 * np.asarray(s) ** 3)
        outcome = CHECKS["kelvin"](self._context(field_), CheckSpec("kelvin"))
        self.assertEqual(outcome.verdict, "FAIL")
        self.assertGreater(outcome.value, outcome.detail["roundoff_floor"])
        self.assertLess(outcome.detail["ratio"], 2.0)


class CriticalPointCheckTests(unittest.TestCase):
    def _context(self) -> CheckContext:
        config = get_scenario("th1-eigenflow")
        return CheckContext(config, field_from_spec(config.flow, config.domain), tolerances=FAST)

    def test_counts_must_match_exactly(self) -> None:
        ctx = self._context()
        census = CHECKS["critical_points"](ctx, CheckSpec("critical_points"))
        self.assertEqual(census.verdict, "INFO")
        self.assertEqual(census.value, 6)
        split = {"interior": 2, "inner-boundary": 2, "outer-boundary": 2}
        matched = CHECKS["critical_points"](ctx, CheckSpec("critical_points", params={"counts": split}))
        self.assertEqual(matched.verdict, "PASS")
        total_only = {"interior": 6}
        outcome = CHECKS["critical_points"](ctx, CheckSpec("critical_points", params={"counts": total_only}))
        self.assertEqual(outcome.verdict, "FAIL")
        self.assertEqual(outcome.detail["expected_counts"], {"interior": 6, "inner-boundary": 0, "outer-boundary": 0})
        with self.assertRaises(ValueError):
            CHECKS["critical_points"](ctx, CheckSpec("critical_points", params={"counts": {"saddle": 1}}))


class BuiltinScenarioTests(unittest.TestCase):
    def test_every_builtin_scenario_exits_cleanly(self) -> None:
        for key in list_scenario_keys():
            with self.subTest(scenario=key):
                config = get_scenario(key)
                report = ScenarioRunner(config, workers=1).run()
                failed = [(r.check, r.message) for r in report.records if r.verdict == "FAIL"]
                self.assertEqual(failed, [])
                self.assertEqual(report.exit_code, 0)
                if config.exploratory:
                    self.assertTrue(all(r.verdict in ("INFO", "SKIPPED") for r in report.records))


if __name__ == "__main__":
    unittest.main()
