import math
import sys
import unittest
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.numerics.utils import (  # noqa: E402
    adaptive_simpson,
    cluster_points,
    fd_gradient,
    fd_jacobian,
    label_periodic,
    loglog_slope,
)


class FiniteDifferenceTests(unittest.TestCase):
    def test_jacobian_of_linear_map(self) -> None:
        matrix = np.array([[1.0, 2.0], [-3.0, 0.5]])
        points = np.array([[0.3, -0.7], [2.0, 5.0]])
        jac = fd_jacobian(lambda p: p @ matrix.T, points)
        np.testing.assert_allclose(jac, np.broadcast_to(matrix, (2, 2, 2)), atol=1e-9)

    def test_gradient_of_quadratic(self) -> None:
        points = np.array([[1.0, 2.0]])
        grad = fd_gradient(lambda p: p[..., 0] ** 2 + 3 * p[..., 1], points)
        np.testing.assert_allclose(grad, [[2.0, 3.0]], atol=1e-9)


class SimpsonTests(unittest.TestCase):
    def test_batched_segments(self) -> None:
        scale = np.array([1.0, 2.0, 3.0])

        def fn(t: np.ndarray, seg: np.ndarray) -> np.ndarray:
            return scale[seg] * np.sin(t)

        totals = adaptive_simpson(fn, np.zeros(3), np.full(3, math.pi), tol=1e-12)
        np.testing.assert_allclose(totals, 2.0 * scale, atol=1e-10)

    def test_empty_batch(self) -> None:
        self.assertEqual(adaptive_simpson(lambda t, s: t, np.array([]), np.array([])).size, 0)


class ClusteringTests(unittest.TestCase):
    def test_single_linkage_clusters(self) -> None:
        points = np.array([[0.0, 0.0], [0.05, 0.0], [0.1, 0.0], [1.0, 1.0]])
        clusters = sorted(cluster_points(points, 0.06), key=len)
        self.assertEqual([len(c) for c in clusters], [1, 3])
        self.assertEqual(cluster_points(np.empty((0, 2)), 0.1), [])

    def test_components_wrap_around_theta(self) -> None:
        mask = np.zeros((5, 8), dtype=bool)
        mask[2, 0] = True
        mask[2, 7] = True
        mask[0, 3] = True
        components = label_periodic(mask)
        self.assertEqual(sorted(len(c) for c in components), [1, 2])

    def test_loglog_slope(self) -> None:
        x = np.geomspace(1.0, 100.0, 8)
        self.assertAlmostEqual(loglog_slope(x, 3.0 / x), -1.0, places=10)
        self.assertEqual(loglog_slope(np.array([1.0]), np.array([1.0])), 0.0)


if __name__ == "__main__":
    unittest.main()
