import math
import sys
import unittest
from pathlib import Path

import numpy as np


ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from annulus_lab.numerics.expression import (  # noqa: E402
    ExpressionDomainError,
    ExpressionSyntaxError,
    NotDifferentiableError,
    parse_expression,
)


class ParseTests(unittest.TestCase):
    def test_precedence_and_associativity(self) -> None:
        self.assertEqual(parse_expression("1+2*3").evaluate(), 7.0)
        self.assertEqual(parse_expression("2^3^2").evaluate(), 512.0)
        self.assertEqual(parse_expression("-2^2").evaluate(), -4.0)
        self.assertEqual(parse_expression("(1+2)*3").evaluate(), 9.0)

    def test_functions_constants_and_variables(self) -> None:
        expr = parse_expression("sin(pi/2) + ln(e) + r^2", ("r",))
        self.assertAlmostEqual(expr.evaluate(r=3.0), 11.0)
        values = expr(np.array([0.0, 1.0]))
        np.testing.assert_allclose(values, [2.0, 3.0])

    def test_printed_text_reparses_to_same_values(self) -> None:
        expr = parse_expression("-(r - 1)^2 / (2*r) + exp(-r)", ("r",))
        again = parse_expression(expr.to_text(), ("r",))
        radii = np.linspace(0.5, 3.0, 7)
        np.testing.assert_allclose(again(radii), expr(radii), rtol=1e-14)

    def test_unknown_identifier_reports_position(self) -> None:
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse_expression("1 + q", ("r",))
        self.assertEqual(ctx.exception.position, 4)
        self.assertIn("r", ctx.exception.expected)

    def test_truncated_and_unbalanced_input(self) -> None:
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse_expression("2*")
        self.assertEqual(ctx.exception.position, 2)
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse_expression("(1+2")
        self.assertEqual(ctx.exception.expected, (")",))
        with self.assertRaises(ExpressionSyntaxError):
            parse_expression("1 $ 2")

    def test_missing_variable_value(self) -> None:
        with self.assertRaises(KeyError):
            parse_expression("r + 1").evaluate()


class EvaluationTests(unittest.TestCase):
    def test_domain_errors(self) -> None:
        with self.assertRaises(ExpressionDomainError):
            parse_expression("ln(r)").evaluate(r=0.0)
        with self.assertRaises(ExpressionDomainError):
            parse_expression("sqrt(r)").evaluate(r=np.array([1.0, -1.0]))
        with self.assertRaises(ExpressionDomainError):
            parse_expression("1/r").evaluate(r=0.0)
        with self.assertRaises(ExpressionDomainError):
            parse_expression("exp(r)").evaluate(r=1e4)

    def test_symbolic_derivative(self) -> None:
        expr = parse_expression("r^3 + sin(r)*ln(r)")
        r = 1.7
        expected = 3 * r**2 + math.cos(r) * math.log(r) + math.sin(r) / r
        self.assertAlmostEqual(expr.derivative().evaluate(r=r), expected, places=12)

    def test_abs_has_no_derivative(self) -> None:
        with self.assertRaises(NotDifferentiableError):
            parse_expression("abs(r)").derivative()

    def test_dependency_detection(self) -> None:
        expr = parse_expression("2*s + 1", ("r", "s"))
        self.assertTrue(expr.depends_on("s"))
        self.assertFalse(expr.depends_on("r"))


if __name__ == "__main__":
    unittest.main()
