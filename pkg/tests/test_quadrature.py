import math

import numpy as np
import pytest

from rosenau_fem.errors import InvalidArgumentError
from rosenau_fem.quadrature import quadrature_rule


@pytest.mark.parametrize("degree", range(0, 10))
def test_interval_rule_integrates_monomials(degree):
    rule = quadrature_rule(1, degree)
    x = rule.points[:, 0]
    for p in range(degree + 1):
        assert rule.weights @ x**p == pytest.approx(1.0 / (p + 1), rel=1e-13)


@pytest.mark.parametrize("degree", range(0, 10))
def test_triangle_rule_integrates_monomials(degree):
    rule = quadrature_rule(2, degree)
    x, y = rule.points[:, 0], rule.points[:, 1]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
            assert rule.weights @ (x**a * y**b) == pytest.approx(exact, rel=1e-12)


def test_triangle_points_are_inside_and_weights_positive():
    rule = quadrature_rule(2, 8)
    assert np.all(rule.weights > 0)
    assert np.all(rule.points >= 0)
    assert np.all(rule.points.sum(axis=1) <= 1)
    assert rule.weights.sum() == pytest.approx(0.5)


def test_rules_are_cached_and_read_only():
    rule = quadrature_rule(1, 4)
    assert quadrature_rule(1, 4) is rule
    with pytest.raises(ValueError):
        rule.weights[0] = 1.0


@pytest.mark.parametrize("dim, degree", [(1, -1), (3, 2)])
def test_invalid_rule_requests(dim, degree):
    with pytest.raises(InvalidArgumentError):
        quadrature_rule(dim, degree)
