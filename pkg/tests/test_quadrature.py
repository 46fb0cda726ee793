from math import factorial

import numpy as np
import pytest

from utils.errors import QuadratureDegreeError
from utils.quadrature import edge_quadrature, triangle_quadrature


def exact_monomial_integral(a: int, b: int) -> float:
    """参照三角形上の ∫ x^a y^b = a! b! / (a + b + 2)!"""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def test_triangle_rule_is_exact_up_to_its_degree():
    rule = triangle_quadrature()
    assert rule.degree >= 10
    x, y = rule.points[:, 0], rule.points[:, 1]
    for k in range(rule.degree + 1):
        for b in range(k + 1):
            a = k - b
            approx = float(np.sum(rule.weights * x**a * y**b))
            assert approx == pytest.approx(exact_monomial_integral(a, b), rel=1e-12, abs=1e-15)


def test_triangle_rule_points_inside_and_weights_positive():
    rule = triangle_quadrature()
    lam = rule.barycentric
    assert (lam >= 0).all()
    assert (rule.weights > 0).all()
    assert rule.weights.sum() == pytest.approx(0.5)


def test_edge_rule_is_exact_up_to_degree_nine():
    rule = edge_quadrature()
    assert rule.n_points == 5
    for k in range(10):
        assert float(np.sum(rule.weights * rule.points**k)) == pytest.approx(1.0 / (k + 1))


@pytest.mark.parametrize("degree", [-1, 41])
def test_unsupported_degree_raises(degree):
    with pytest.raises(QuadratureDegreeError):
        triangle_quadrature(degree)
    with pytest.raises(QuadratureDegreeError):
        edge_quadrature(degree)
