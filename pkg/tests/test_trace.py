import math
import sys
import unittest
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.numerics.flows import catalog, expression_field  # noqa: E402
from annulus_lab.numerics.geometry import make_annulus, polar_grid  # noqa: E402
from annulus_lab.numerics.stream import stream_from_field  # noqa: E402
from annulus_lab.numerics.trace import (  # noqa: E402
    ChartError,
    OrbitEscapeError,
    StagnantSeedError,
    build_chart,
    extract_vorticity_profile,
    level_polygon,
    semilinear_residual,
    trace_full_gradient_curve,
    trace_gradient_curve,
    trace_streamline,
)


class StreamlineTests(unittest.TestCase):
    def test_rigid_rotation_orbit_closes_after_one_turn(self) -> None:
        field = catalog("rigid", {"a": 1.0, "b": 2.0})
        line = trace_streamline(field, (1.5, 0.0))
        self.assertTrue(line.closed)
        self.assertEqual(line.termination, "closed")
        self.assertEqual(line.winding, 1)
        self.assertAlmostEqual(line.period, 2 * math.pi, places=5)
        self.assertLess(line.u_drift, 1e-7)
        self.assertAlmostEqual(line.width, 0.0, places=6)
        self.assertEqual(line.summary()["termination"], "closed")

    def test_stagnant_seed_is_rejected(self) -> None:
        field = catalog("circular", {"alpha": 1.0, "beta": -2.25, "a": 1.0, "b": 2.0})
        with self.assertRaises(StagnantSeedError):
            trace_streamline(field, (1.5, 0.0))

    def test_radial_outflow_escapes_band(self) -> None:
        field = expression_field("1", "0", make_annulus(1.0, 2.0))
        with self.assertRaises(OrbitEscapeError):
            trace_streamline(field, (1.5, 0.0))

    def test_period_law_of_circular_flows(self) -> None:
        for params in ({"alpha": 1.0, "beta": 0.0}, {"alpha": 1.0, "beta": 1.0}):
            field = catalog("circular", {**params, "a": 1.0, "b": 2.0})
            for r in np.linspace(1.05, 1.95, 10):
                with self.subTest(beta=params["beta"], r=float(r)):
                    line = trace_streamline(field, (float(r), 0.0))
                    expected = 2 * math.pi * r / (params["alpha"] * r + params["beta"] / r)
                    self.assertTrue(line.closed)
                    self.assertLess(abs(line.period - expected) / expected, 1e-6)
                    u0 = abs(float(field.stream(np.array([r, 0.0]))))
                    self.assertLessEqual(line.u_drift, 1e-8 * max(1.0, u0, float(field.speed(np.array([r, 0.0]))) * r))

    def test_exterior_streamline_width_tends_to_half_radius(self) -> None:
        field = catalog("ext_counterexample", {"a": 1.0})
        widths = []
        for level in (1e2, 1e3, 1e4):
            _, line = level_polygon(field, level)
            self.assertTrue(line.closed)
            widths.append(line.width)
        for width in widths:
            self.assertAlmostEqual(width, 0.5, delta=0.05)
        self.assertAlmostEqual(widths[-1], 0.5, delta=0.025)
        self.assertLessEqual(abs(widths[-1] - 0.5), abs(widths[0] - 0.5) + 1e-9)

    def test_level_polygon_of_rigid_rotation(self) -> None:
        field = catalog("rigid", {"a": 1.0, "b": 2.0})
        polygon, line = level_polygon(field, 1.125)
        self.assertAlmostEqual(line.seed[0], 1.5, places=10)
        self.assertAlmostEqual(polygon.signed_area / (math.pi * 2.25), 1.0, places=2)
        self.assertEqual(polygon.orientation, 1)


class GradientCurveTests(unittest.TestCase):
    def test_rigid_gradient_curve_spans_the_annulus(self) -> None:
        field = catalog("rigid", {"a": 1.0, "b": 2.0})
        forward = trace_gradient_curve(field, (1.5, 0.0), 1)
        self.assertEqual(forward.termination, "hit-outer")
        self.assertAlmostEqual(forward.end_radius(), 2.0, places=6)
        full = trace_full_gradient_curve(field, (1.5, 0.0))
        lo, hi = full.u_range
        self.assertAlmostEqual(lo, 0.5, places=6)
        self.assertAlmostEqual(hi, 2.0, places=6)
        self.assertEqual(full.start_termination, "hit-inner")
        self.assertTrue(np.all(np.diff(full.u_values) > 0))

    def test_extracted_profile_of_shifted_rotation(self) -> None:
        field = catalog("shifted", {"a": 1.0})
        curve = trace_full_gradient_curve(field, (1.5, 0.0))
        profile = extract_vorticity_profile(field, curve)
        s = 0.125
        self.assertAlmostEqual(profile.f_at(s), -2 + 1 / (1 + math.sqrt(2 * s)), places=6)

    def test_extracted_quartic_profile_and_endpoint_blow_up(self) -> None:
        field = catalog("quartic", {"R": 1.0})
        curve = trace_full_gradient_curve(field, (0.5, 0.0))
        profile = extract_vorticity_profile(field, curve)
        lo, hi = profile.range
        tau = np.linspace(lo, lo + 0.99 * (hi - lo), 400)
        exact = 16 * np.sqrt(np.maximum(1.0 - tau, 0.0))
        self.assertLess(float(np.max(np.abs(np.asarray(profile.f_at(tau)) - exact))), 1e-4)
        self.assertGreater(profile.lipschitz_endpoint, 10 * profile.lipschitz_mid)

    def test_chart_requires_monotone_samples(self) -> None:
        with self.assertRaises(ChartError):
            build_chart((np.array([0.0, 1.0, 2.0]), np.array([0.0, 2.0, 1.0])))
        chart = build_chart((np.array([0.0, 1.0, 2.0, 3.0]), np.array([0.0, 1.0, 4.0, 9.0])))
        self.assertAlmostEqual(chart.g(1.0), 1.0)
        self.assertAlmostEqual(chart.g_inv(4.0), 2.0)
        self.assertTrue(1.0 < chart.g_inv(2.5) < 2.0)


class SemilinearTests(unittest.TestCase):
    def test_rigid_rotation_solves_constant_profile(self) -> None:
        field = catalog("rigid", {"a": 1.0, "b": 2.0})
        sg = stream_from_field(field, polar_grid(field.domain, 33, 64))
        residual = semilinear_residual(sg, lambda s: np.full_like(s, -2.0))
        self.assertLess(residual.max, 1e-9)
        self.assertEqual(residual.nodes, 31 * 64)
        self.assertEqual(residual.as_dict()["clamped"], 0)


if __name__ == "__main__":
    unittest.main()
