import sys
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.numerics.flows import catalog, expression_field  # noqa: E402
from annulus_lab.numerics.geometry import circle_samples, make_annulus, polar_grid  # noqa: E402
from annulus_lab.numerics.stream import (  # noqa: E402
    FAIL,
    PASS,
    MultivaluedStreamError,
    circle_oscillation,
    classify_stagnation,
    flux_abs_on_circle,
    radial_decay_report,
    signed_flux_on_circle,
    stream_from_field,
    stream_on_grid,
)
from annulus_lab.numerics.tolerances import TOLERANCES  # noqa: E402


class FluxTests(unittest.TestCase):
    def test_punctured_counterexample_flux_law(self) -> None:
        field = catalog("punct_counterexample", {"b": 1.0})
        for eps in (0.4, 0.2, 0.1):
            expected = 4 * (1 / eps - eps)
            self.assertAlmostEqual(flux_abs_on_circle(field, eps) / expected, 1.0, places=3)

    def test_circular_flow_has_no_flux(self) -> None:
        field = catalog("rigid", {"a": 1.0, "b": 2.0})
        self.assertAlmostEqual(signed_flux_on_circle(field, 1.5), 0.0, places=12)
        self.assertAlmostEqual(flux_abs_on_circle(field, 1.5), 0.0, places=12)


class StreamReconstructionTests(unittest.TestCase):
    def test_integrated_stream_matches_closed_form(self) -> None:
        domain = make_annulus(1.0, 2.0)
        field = expression_field("0", "r", domain)
        grid = polar_grid(domain, 9, 32)
        sg = stream_on_grid(field, grid)
        expected = 0.5 * grid.radii**2 - 0.5
        np.testing.assert_allclose(sg.values, np.repeat(expected[:, None], 32, axis=1), atol=1e-8)
        self.assertLess(sg.discrepancy, 1e-8)

    def test_source_flow_has_no_single_valued_stream(self) -> None:
        domain = make_annulus(1.0, 2.0)
        field = expression_field("1/r", "0", domain)
        with self.assertRaises(MultivaluedStreamError):
            stream_on_grid(field, polar_grid(domain, 9, 32))

    def test_flux_tolerance_override_accepts_source_flow(self) -> None:
        domain = make_annulus(1.0, 2.0)
        field = expression_field("1/r", "0", domain)
        loose = replace(TOLERANCES, flux_rel_tol=10.0)
        sg = stream_on_grid(field, polar_grid(domain, 9, 32), tolerances=loose)
        self.assertEqual(sg.values.shape, (9, 32))

    def test_closed_form_stream_and_oscillation(self) -> None:
        rigid = catalog("rigid", {"a": 1.0, "b": 2.0})
        sg = stream_from_field(rigid, polar_grid(rigid.domain, 17, 64))
        self.assertEqual(sg.discrepancy, 0.0)
        self.assertLess(circle_oscillation(sg, 1.5), 1e-10)
        ext = catalog("ext_counterexample", {"a": 1.0})
        sg = stream_from_field(ext, polar_grid(make_annulus(1.0, 3.0), 33, 128))
        self.assertAlmostEqual(circle_oscillation(sg, 2.0), 3.0, places=3)

    def test_negated_and_shifted(self) -> None:
        rigid = catalog("rigid", {"a": 1.0, "b": 2.0})
        sg = stream_from_field(rigid, polar_grid(rigid.domain, 9, 32))
        np.testing.assert_allclose(sg.negated().values, -sg.values)
        self.assertAlmostEqual(sg.shifted(1.0).base_value, sg.base_value + 1.0)


class StagnationTests(unittest.TestCase):
    def test_rigid_rotation_has_no_stagnation(self) -> None:
        report = classify_stagnation(catalog("rigid", {"a": 1.0, "b": 2.0}))
        self.assertEqual(report.classification, "empty")
        self.assertTrue(report.hypothesis_holds)

    def test_sign_change_gives_full_circle(self) -> None:
        field = catalog("circular", {"alpha": 1.0, "beta": -2.25, "a": 1.0, "b": 2.0})
        report = classify_stagnation(field)
        self.assertEqual(report.classification, "full-circle")
        self.assertFalse(report.hypothesis_holds)
        self.assertAlmostEqual(report.interior_rings[0], 1.5, places=6)

    def test_stagnation_circle_is_found_on_every_grid(self) -> None:
        field = catalog("circular", {"alpha": 1.0, "beta": -2.25, "a": 1.0, "b": 2.0})
        for n_r, n_theta in ((65, 256), (129, 256), (64, 256), (100, 200)):
            with self.subTest(n_r=n_r, n_theta=n_theta):
                report = classify_stagnation(field, n_r=n_r, n_theta=n_theta)
                self.assertEqual(report.classification, "full-circle")
                self.assertEqual(report.interior_points, ())
                self.assertEqual(len(report.interior_rings), 1)
                self.assertAlmostEqual(report.interior_rings[0], 1.5, places=6)

    def test_mode_zero_eigenflow_is_stagnant_on_one_circle(self) -> None:
        field = catalog("eigenflow_m0", {"a": 1.0, "b": 2.0})
        report = classify_stagnation(field)
        self.assertEqual(report.classification, "full-circle")
        self.assertEqual(report.interior_points, ())
        self.assertEqual(len(report.interior_rings), 1)
        ring = report.interior_rings[0]
        self.assertAlmostEqual(ring, field.metadata["r_star"], places=6)
        median = float(np.median(field.speed(polar_grid(field.domain, 65, 256).points())))
        self.assertLess(float(np.max(field.speed(circle_samples(ring, 1024)))), 1e-6 * median)

    def test_tolerance_override_reaches_the_classifier(self) -> None:
        rigid = catalog("rigid", {"a": 1.0, "b": 2.0})
        self.assertEqual(classify_stagnation(rigid).classification, "empty")
        loose = replace(TOLERANCES, speed_rel_tol=10.0)
        self.assertNotEqual(classify_stagnation(rigid, tolerances=loose).classification, "empty")

    def test_exterior_counterexample_has_no_stagnation(self) -> None:
        report = classify_stagnation(catalog("ext_counterexample", {"a": 1.0}))
        self.assertEqual(report.classification, "empty")

    def test_zero_field_is_degenerate(self) -> None:
        field = expression_field("0", "0", make_annulus(1.0, 2.0))
        report = classify_stagnation(field)
        self.assertTrue(report.degenerate)
        self.assertEqual(report.as_dict()["classification"], "degenerate")


class DecayTests(unittest.TestCase):
    def test_circular_flow_passes_both_decay_conditions(self) -> None:
        field = catalog("inverse_square")
        report = radial_decay_report(field, np.geomspace(10.0, 100.0, 8))
        self.assertEqual(report.infinity_verdict, PASS)
        self.assertEqual(report.origin_verdict, PASS)

    def test_counterexamples_fail_their_decay_condition(self) -> None:
        ext = catalog("ext_counterexample", {"a": 1.0})
        self.assertEqual(radial_decay_report(ext, np.geomspace(10.0, 100.0, 8)).infinity_verdict, FAIL)
        punct = catalog("punct_counterexample", {"b": 1.0})
        report = radial_decay_report(punct, np.geomspace(0.001, 0.01, 8))
        self.assertEqual(report.origin_verdict, FAIL)
        self.assertEqual(len(report.to_rows()), 8)


if __name__ == "__main__":
    unittest.main()
