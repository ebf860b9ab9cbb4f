import math
import sys
import unittest
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.numerics.geometry import (  # noqa: E402
    INFINITY,
    BoundaryAmbiguityError,
    DegeneratePolygonError,
    DomainError,
    OutOfBandError,
    circle_polygon,
    ellipse_polygon,
    make_annulus,
    make_polygon,
    polar_components,
    polar_grid,
    winding_number,
)


class AnnularDomainTests(unittest.TestCase):
    def test_default_truncation_for_exterior_domain(self) -> None:
        domain = make_annulus(2.0)
        self.assertTrue(domain.exterior)
        self.assertFalse(domain.punctured)
        self.assertEqual(domain.band, (2.0, 200.0))
        self.assertEqual(domain.describe()["b"], "inf")

    def test_default_truncation_for_punctured_disk(self) -> None:
        domain = make_annulus(0.0, 1.0)
        self.assertTrue(domain.punctured)
        self.assertFalse(domain.has_inner_boundary)
        self.assertAlmostEqual(domain.trunc_inner, 1e-3)
        self.assertEqual(domain.trunc_outer, 1.0)

    def test_invalid_radii_are_rejected(self) -> None:
        with self.assertRaises(DomainError):
            make_annulus(2.0, 1.0)
        with self.assertRaises(DomainError):
            make_annulus(-1.0, 1.0)
        with self.assertRaises(DomainError):
            make_annulus(1.0, 2.0, trunc_outer=3.0)

    def test_membership_and_band(self) -> None:
        domain = make_annulus(1.0, 2.0)
        self.assertTrue(domain.contains((1.5, 0.0)))
        self.assertFalse(domain.contains((1.0, 0.0)))
        self.assertTrue(domain.in_band((0.0, 2.0)))
        with self.assertRaises(OutOfBandError):
            domain.require_radius(2.5)

    def test_polar_grid_is_geometric_on_wide_bands(self) -> None:
        grid = polar_grid(make_annulus(1.0, INFINITY), 17, 32)
        self.assertTrue(grid.geometric)
        self.assertEqual(grid.points().shape, (17, 32, 2))
        narrow = polar_grid(make_annulus(1.0, 2.0), 17, 32)
        self.assertFalse(narrow.geometric)
        with self.assertRaises(DomainError):
            polar_grid(make_annulus(1.0, 2.0), 3, 32)


class PolygonTests(unittest.TestCase):
    def test_orientation_and_area(self) -> None:
        square = make_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
        self.assertEqual(square.orientation, 1)
        self.assertAlmostEqual(square.signed_area, 1.0)
        self.assertEqual(square.reversed().orientation, -1)

    def test_closing_vertex_is_dropped(self) -> None:
        square = make_polygon([(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)])
        self.assertEqual(square.n, 4)

    def test_degenerate_polygons_raise(self) -> None:
        with self.assertRaises(DegeneratePolygonError):
            make_polygon([(0, 0), (1, 1)])
        with self.assertRaises(DegeneratePolygonError):
            make_polygon([(0, 0), (1, 1), (2, 2)])

    def test_winding_number_inside_outside_and_boundary(self) -> None:
        circle = circle_polygon(1.0, 128)
        self.assertEqual(winding_number(circle, (0.0, 0.0)), 1)
        self.assertEqual(winding_number(circle.reversed(), (0.2, 0.1)), -1)
        self.assertEqual(winding_number(circle, (3.0, 0.0)), 0)
        with self.assertRaises(BoundaryAmbiguityError):
            winding_number(circle, tuple(circle.vertices[5]))

    def test_signed_distance_sign(self) -> None:
        ellipse = ellipse_polygon(2.0, 1.0, 256)
        distances = ellipse.signed_distance(np.array([[0.0, 0.0], [0.0, 3.0]]))
        self.assertGreater(distances[0], 0.9)
        self.assertLess(distances[1], -1.9)
        self.assertTrue(np.all(ellipse.in_closure(ellipse.vertices)))
        self.assertFalse(np.any(ellipse.contains(ellipse.vertices)))

    def test_polar_components_of_rotation(self) -> None:
        points = np.array([[1.0, 0.0], [0.0, 2.0]])
        vectors = np.stack([-points[:, 1], points[:, 0]], axis=-1)
        v_r, v_t = polar_components(points, vectors)
        np.testing.assert_allclose(v_r, 0.0, atol=1e-15)
        np.testing.assert_allclose(v_t, [1.0, 2.0])


if __name__ == "__main__":
    unittest.main()
