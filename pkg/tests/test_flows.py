import json
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.numerics.flows import (  # noqa: E402
    MissingParameterError,
    MissingPressureError,
    UnknownFlowError,
    catalog,
    divergence_at,
    euler_residual,
    euler_residual_relative,
    expression_field,
    field_from_spec,
    list_flow_keys,
    load_field_file,
    sample_field,
    vorticity_at,
    vorticity_transport_at,
    vorticity_transport_relative,
)
from annulus_lab.numerics.geometry import OutOfBandError, make_annulus, polar_grid  # noqa: E402


class CatalogTests(unittest.TestCase):
    def test_catalog_lists_every_flow(self) -> None:
        keys = list_flow_keys()
        for name in ("circular", "rigid", "log", "inverse_square", "quartic", "shifted",
                     "ext_counterexample", "punct_counterexample", "eigenflow_m1", "eigenflow_m0"):
            self.assertIn(name, keys)

    def test_unknown_flow_lists_supported_keys(self) -> None:
        with self.assertRaises(UnknownFlowError) as ctx:
            catalog("vortex_street")
        self.assertIn("rigid", str(ctx.exception))
        self.assertIsInstance(ctx.exception, KeyError)

    def test_required_parameters(self) -> None:
        with self.assertRaises(MissingParameterError):
            catalog("ext_counterexample")
        with self.assertRaises(ValueError):
            catalog("quartic", {"R": -1.0})

    def test_rigid_rotation_invariants(self) -> None:
        field = catalog("rigid", {"a": 1.0, "b": 2.0})
        points = np.array([[1.5, 0.0], [0.0, -1.2], [1.0, 1.0]])
        np.testing.assert_allclose(vorticity_at(field, points), 2.0, atol=1e-12)
        np.testing.assert_allclose(divergence_at(field, points), 0.0, atol=1e-12)
        np.testing.assert_allclose(euler_residual(field, points), 0.0, atol=1e-12)
        self.assertEqual(field.fixed_circles, (1.0, 2.0))

    def test_point_vortex_is_irrotational(self) -> None:
        field = catalog("log")
        self.assertTrue(field.domain.punctured)
        self.assertAlmostEqual(vorticity_at(field, (0.5, 0.1)), 0.0, places=10)
        np.testing.assert_allclose(field.velocity([0.5, 0.0]), [0.0, 2.0])

    def test_inverse_square_vorticity_function(self) -> None:
        field = catalog("inverse_square")
        point = np.array([2.0, 0.0])
        u = field.stream(point)
        self.assertAlmostEqual(u, -0.5)
        self.assertAlmostEqual(vorticity_at(field, point), -float(field.vorticity_function(np.array(u))), places=12)

    def test_counterexamples_solve_euler(self) -> None:
        rng = np.random.default_rng(3)
        for name, params, lo, hi in (
            ("ext_counterexample", {"a": 1.0}, 1.1, 5.0),
            ("punct_counterexample", {"b": 1.0}, 0.1, 0.9),
        ):
            field = catalog(name, params)
            radii = rng.uniform(lo, hi, 50)
            angles = rng.uniform(0.0, 2 * np.pi, 50)
            points = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=-1)
            residual = np.linalg.norm(euler_residual(field, points), axis=-1)
            scale = max(1.0, float(np.max(field.speed(points))) ** 2)
            self.assertLess(float(np.max(residual)), 1e-10 * scale, name)
            self.assertLess(float(np.max(vorticity_transport_relative(field, points))), 1e-6, name)
            self.assertLess(float(np.max(euler_residual_relative(field, points))), 1e-10, name)

    def test_dipole_near_puncture_is_judged_relative_to_its_speed(self) -> None:
        field = catalog("punct_counterexample", {"b": 1.0})
        angles = np.linspace(0.1, 6.0, 25)
        points = np.stack([2e-3 * np.cos(angles), 2e-3 * np.sin(angles)], axis=-1)
        self.assertGreater(float(np.max(field.speed(points))), 1e5)
        self.assertLess(float(np.max(euler_residual_relative(field, points))), 1e-8)
        self.assertLess(float(np.max(vorticity_transport_relative(field, points))), 1e-6)
        transport = vorticity_transport_at(field, points[0])
        self.assertIsInstance(transport, float)

    def test_out_of_band_queries_raise(self) -> None:
        field = catalog("rigid", {"a": 1.0, "b": 2.0})
        with self.assertRaises(OutOfBandError):
            vorticity_at(field, (5.0, 0.0))


class ExpressionFieldTests(unittest.TestCase):
    def test_expression_vortex_matches_catalog(self) -> None:
        domain = make_annulus(1.0, 2.0)
        field = expression_field("0", "1/r", domain)
        self.assertFalse(field.has_pressure)
        np.testing.assert_allclose(field.velocity([1.5, 0.0]), [0.0, 1 / 1.5])
        self.assertAlmostEqual(vorticity_at(field, (1.5, 0.3)), 0.0, places=6)
        with self.assertRaises(MissingPressureError):
            euler_residual(field, [1.5, 0.0])

    def test_field_from_spec_applies_domain(self) -> None:
        field = field_from_spec({"kind": "catalog", "name": "log", "domain": {"a": 0.5, "b": 2.0}})
        self.assertEqual(field.domain.inner_radius, 0.5)
        expr = field_from_spec({"kind": "expression", "v_theta": "r", "domain": {"a": 1, "b": "inf"}})
        self.assertTrue(expr.domain.exterior)
        with self.assertRaises(MissingParameterError):
            field_from_spec({"kind": "expression", "v_theta": "r"})
        with self.assertRaises(ValueError):
            field_from_spec({"kind": "mesh"})

    def test_load_field_file(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "field.json"
            path.write_text(json.dumps({"kind": "catalog", "name": "rigid", "params": {"a": 1, "b": 3}}))
            field = load_field_file(path)
        self.assertEqual(field.domain.outer_radius, 3.0)

    def test_sampled_field_reproduces_nodes(self) -> None:
        field = catalog("rigid", {"a": 1.0, "b": 2.0})
        grid = polar_grid(field.domain, 9, 32)
        sampled = sample_field(field, grid)
        nodes = grid.points()[3, 5]
        np.testing.assert_allclose(sampled.velocity(nodes), field.velocity(nodes), atol=1e-12)
        self.assertEqual(sampled.kind, "grid")


if __name__ == "__main__":
    unittest.main()
