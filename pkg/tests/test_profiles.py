import sys
import unittest
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.numerics.profiles import (  # noqa: E402
    ProfileRangeError,
    constant_profile,
    make_vorticity_profile,
    parse_profile,
    profile_from_callable,
    profile_from_expression,
    profile_from_samples,
)


class RadialProfileTests(unittest.TestCase):
    def test_parsed_profile_has_symbolic_derivative(self) -> None:
        profile = parse_profile("1/r^2")
        self.assertTrue(profile.has_derivative)
        self.assertAlmostEqual(profile(2.0), 0.25)
        self.assertAlmostEqual(profile.derivative(2.0), -0.25)

    def test_callable_profile_uses_finite_differences(self) -> None:
        profile = profile_from_callable(lambda r: r**2)
        self.assertFalse(profile.has_derivative)
        self.assertAlmostEqual(profile.derivative(1.5), 3.0, places=7)

    def test_sample_profile_interpolates(self) -> None:
        radii = np.linspace(1.0, 2.0, 41)
        profile = profile_from_samples(radii, radii**2)
        self.assertAlmostEqual(profile(1.33), 1.33**2, places=6)

    def test_sign_report(self) -> None:
        radii = np.linspace(1.0, 2.0, 50)
        positive = parse_profile("r - 0.5").sign_report(radii)
        self.assertTrue(positive.constant_strict_sign)
        self.assertEqual(positive.sign, 1)
        changing = parse_profile("r - 1.5").sign_report(radii)
        self.assertFalse(changing.constant_strict_sign)
        self.assertEqual(changing.sign_changes, 1)
        self.assertEqual(changing.sign, 0)


class VorticityProfileTests(unittest.TestCase):
    def test_antiderivative_of_linear_profile_is_exact(self) -> None:
        profile = profile_from_expression("2*s", 0.0, 1.0, n=11)
        self.assertAlmostEqual(profile.F_at(0.5), 0.25, places=12)
        self.assertAlmostEqual(profile.F_at(0.73), 0.73**2, places=12)
        self.assertAlmostEqual(float(profile.antiderivative[-1]), 1.0, places=12)

    def test_decreasing_abscissae_are_reordered(self) -> None:
        profile = make_vorticity_profile(np.array([3.0, 2.0, 1.0]), np.array([30.0, 20.0, 10.0]))
        self.assertEqual(profile.range, (1.0, 3.0))
        self.assertAlmostEqual(profile.f_at(2.0), 20.0)

    def test_range_checks_and_clamping(self) -> None:
        profile = constant_profile(-2.0, 0.0, 1.0)
        with self.assertRaises(ProfileRangeError):
            profile.f_at(1.5)
        self.assertAlmostEqual(profile.f_at(1.05, margin=0.1), -2.0)
        self.assertEqual(profile.clamped_count(np.array([-0.1, 0.5, 1.05])), 2)

    def test_rejects_non_monotone_abscissae(self) -> None:
        with self.assertRaises(ValueError):
            make_vorticity_profile(np.array([0.0, 1.0, 0.5]), np.zeros(3))

    def test_rows_export(self) -> None:
        rows = constant_profile(1.0, 0.0, 2.0).to_rows()
        self.assertEqual(rows[-1], {"tau": 2.0, "f": 1.0, "F": 2.0})
        self.assertIsNone(constant_profile(1.0, 0.0, 2.0).lipschitz_endpoint)


if __name__ == "__main__":
    unittest.main()
