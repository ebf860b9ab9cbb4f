import json
import sys
import tempfile
import unittest
from pathlib import Path


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.config import (  # noqa: E402
    CHECK_IDS,
    ScenarioConfigError,
    get_scenario,
    get_supported_scenarios,
    iter_scenarios,
    list_scenario_keys,
    load_scenario_file,
    resolve_scenario,
    scenario_from_dict,
)
from annulus_lab.numerics.flows import field_from_spec  # noqa: E402


class BuiltinScenarioTests(unittest.TestCase):
    def test_builtin_catalogue(self) -> None:
        scenarios = get_supported_scenarios()
        self.assertEqual(len(scenarios), 17)
        self.assertEqual(list_scenario_keys(), sorted(scenarios))
        for key, cfg in scenarios.items():
            self.assertEqual(cfg.key, key)
            self.assertTrue(cfg.checks, key)
            for spec in cfg.checks:
                self.assertIn(spec.check, CHECK_IDS)

    def test_builtin_fields_can_be_built(self) -> None:
        for cfg in iter_scenarios():
            field_ = field_from_spec(cfg.flow, cfg.domain)
            self.assertGreater(field_.domain.band[1], field_.domain.band[0], cfg.key)

    def test_exploratory_flags(self) -> None:
        exploratory = {cfg.key for cfg in iter_scenarios() if cfg.exploratory}
        self.assertEqual(exploratory, {"moving-planes-exterior", "off-center-puncture"})

    def test_unknown_scenario_lists_supported_keys(self) -> None:
        with self.assertRaises(KeyError) as ctx:
            get_scenario("th9")
        self.assertIn("th1-circular", str(ctx.exception))
        with self.assertRaises(KeyError):
            list(iter_scenarios(["th1-circular", "nope"]))


class ScenarioFileTests(unittest.TestCase):
    def _raw(self, **extra) -> dict:
        raw = {
            "name": "custom",
            "field": {"kind": "catalog", "name": "rigid"},
            "checks": ["divergence", {"check": "vorticity_value", "value": 2.0, "threshold": 1e-6}],
        }
        raw.update(extra)
        return raw

    def test_scenario_from_dict(self) -> None:
        cfg = scenario_from_dict(self._raw(grid={"n_r": 33, "n_theta": 128}))
        self.assertEqual(cfg.key, "custom")
        self.assertEqual((cfg.n_r, cfg.n_theta), (33, 128))
        self.assertEqual(cfg.check_ids(), ["divergence", "vorticity_value"])
        spec = cfg.checks[1]
        self.assertEqual(spec.threshold, 1e-6)
        self.assertEqual(spec.params, {"value": 2.0})
        self.assertFalse(cfg.exploratory)
        self.assertEqual(scenario_from_dict(cfg.as_dict()).as_dict(), cfg.as_dict())

    def test_invalid_scenarios(self) -> None:
        cases = [
            (["not", "a", "mapping"], "<scenario>"),
            (self._raw(colour="red"), "<scenario>"),
            ({"field": {"name": "rigid"}}, "<scenario>:name"),
            ({"name": "x"}, "<scenario>:field"),
            (self._raw(grid={"n_r": 0}), "<scenario>:grid.n_r"),
            (self._raw(grid={"n_theta": 2.5}), "<scenario>:grid.n_theta"),
            (self._raw(checks=["divergence", "warp_drive"]), "<scenario>:checks[1]"),
            (self._raw(checks=[{"check": "divergence", "threshold": "small"}]), "<scenario>:checks[0].threshold"),
            (self._raw(checks=[42]), "<scenario>:checks[0]"),
            (self._raw(outputs={"html": "x.html"}), "<scenario>:outputs"),
        ]
        for raw, position in cases:
            with self.subTest(position=position):
                with self.assertRaises(ScenarioConfigError) as ctx:
                    scenario_from_dict(raw)
                self.assertEqual(ctx.exception.position, position)

    def test_load_json_and_yaml_files(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            json_path = Path(tmp) / "custom.json"
            json_path.write_text(json.dumps(self._raw()), encoding="utf-8")
            self.assertEqual(load_scenario_file(json_path).key, "custom")
            self.assertEqual(resolve_scenario(str(json_path)).key, "custom")

            yaml_path = Path(tmp) / "custom.yml"
            yaml_path.write_text(
                "name: from-yaml\n"
                "field:\n"
                "  kind: catalog\n"
                "  name: log\n"
                "domain: {a: 1.0, b: 3.0}\n"
                "checks:\n"
                "  - divergence\n"
                "  - check: circularity\n"
                "    expect: PASS\n",
                encoding="utf-8",
            )
            cfg = load_scenario_file(yaml_path)
            self.assertEqual(cfg.key, "from-yaml")
            self.assertEqual(cfg.domain, {"a": 1.0, "b": 3.0})
            self.assertEqual(cfg.checks[1].expect, "PASS")

    def test_bad_json_reports_line_and_column(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "broken.json"
            path.write_text('{\n  "name": "x",\n  "field": \n}\n', encoding="utf-8")
            with self.assertRaises(ScenarioConfigError) as ctx:
                load_scenario_file(path)
            self.assertTrue(ctx.exception.position.startswith(f"{path}:4:"))

    def test_missing_file_and_unknown_name(self) -> None:
        with self.assertRaises(FileNotFoundError):
            resolve_scenario("/nonexistent/scenario.json")
        with self.assertRaises(KeyError):
            resolve_scenario("no-such-scenario")


if __name__ == "__main__":
    unittest.main()
