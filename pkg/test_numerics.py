"""
Tests for grid functions, bumps and the quadrature layer
"""

import sys
import os
import math

import numpy as np
import pytest

# Add the current directory to the Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core.errors import InvalidInputError, QuadratureError
from utils.numerics import (BumpFunction, GridFunction, differentiate, dirichlet_half_mass, integrate_box,
                            integrate_simplex, integrate_singular, monte_carlo_box, singular_rule)


def test_grid_function_basics():
    g = GridFunction.from_function(lambda x: x * x, 0.0, 2.0, 5)
    assert g.size == 5
    assert g.step == pytest.approx(0.5)
    np.testing.assert_allclose(g.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert g(0.75) == pytest.approx(0.625)
    assert g.scaled(2.0).values[-1] == pytest.approx(8.0)
    # outside the grid the interpolant uses the fill value
    assert g.interpolant("pchip", fill_value=-1.0)(3.0) == -1.0


def test_grid_function_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        GridFunction(1.0, 0.0, np.ones(3))
    with pytest.raises(InvalidInputError):
        GridFunction(0.0, 1.0, np.array([1.0, np.nan]))
    with pytest.raises(InvalidInputError):
        GridFunction(0.0, 1.0, np.ones(3)).interpolant("spline")


def test_sqrt_singular_origin_interpolant():
    g = GridFunction(0.0, 1.0, np.full(11, 2.0), sqrt_singular_origin=True)
    assert g(0.25) == pytest.approx(4.0)
    with pytest.raises(InvalidInputError):
        differentiate(g)


def test_differentiate_is_exact_on_quadratics():
    g = GridFunction.from_function(lambda x: 3 * x * x - x, -1.0, 1.0, 21)
    np.testing.assert_allclose(differentiate(g).values, 6 * g.nodes - 1, atol=1e-12)


def test_bump_function():
    rho = BumpFunction(2.0, 0.5)
    assert rho.support == (1.5, 2.5)
    assert float(rho(2.0)) == pytest.approx(1.0)
    assert float(rho(2.5)) == 0.0
    assert rho.mass() == pytest.approx(0.5 * math.e * 0.4439938161680794, rel=1e-8)
    assert rho.weighted_mass(0.0) == pytest.approx(rho.mass(), rel=1e-10)
    assert rho.weighted_mass(1.0) == pytest.approx(2.0 * rho.mass(), rel=1e-10)
    with pytest.raises(InvalidInputError):
        BumpFunction(0.0, 1.0).weighted_mass(-1.5)
    with pytest.raises(InvalidInputError):
        BumpFunction(1.0, 0.0)


@pytest.mark.parametrize("end, f, expected", [
    ("left", lambda x: 1.0 / np.sqrt(x), 2.0),
    ("right", lambda x: 1.0 / np.sqrt(1.0 - x), 2.0),
    ("both", lambda x: 1.0 / np.sqrt(x * (1.0 - x)), math.pi),
    ("none", lambda x: np.cos(x), math.sin(1.0)),
])
def test_integrate_singular(end, f, expected):
    assert integrate_singular(f, 0.0, 1.0, end, 64) == pytest.approx(expected, rel=1e-10)


def test_singular_rule_keeps_exact_gaps():
    rule = singular_rule(0.0, 1.0, "both", 8)
    np.testing.assert_allclose(rule.left_gap + rule.right_gap, 1.0)
    assert np.all(rule.left_gap > 0) and np.all(rule.right_gap > 0)
    with pytest.raises(InvalidInputError):
        singular_rule(0.0, 1.0, "middle")
    with pytest.raises(InvalidInputError):
        singular_rule(1.0, 0.0)


def test_integrate_singular_flags_non_finite_values():
    with pytest.raises(QuadratureError):
        integrate_singular(lambda x: np.full_like(x, np.inf), 0.0, 1.0)


def test_integrate_box():
    value = integrate_box(lambda p: p[:, 0] * p[:, 1] ** 2, [(0.0, 1.0), (0.0, 2.0)], 4)
    assert value == pytest.approx(0.5 * 8.0 / 3.0, rel=1e-13)


@pytest.mark.parametrize("n, panels", [(1, 32), (2, 64), (3, 16)])
def test_integrate_simplex_dirichlet_weight(n, panels):
    def weight(bary):
        return 1.0 / np.sqrt(np.prod(bary, axis=1))

    value, error = integrate_simplex(weight, n, budget=panels, barycentric=True)
    assert value == pytest.approx(dirichlet_half_mass(n), rel=1e-7)
    assert error < 1e-4


def test_dirichlet_half_mass_closed_forms():
    assert dirichlet_half_mass(2) == pytest.approx(2 * math.pi)
    assert dirichlet_half_mass(3) == pytest.approx(math.pi ** 2)


def test_integrate_simplex_volume_and_polynomial():
    area, _ = integrate_simplex(lambda x: np.ones(x.shape[0]), 2, budget=8)
    assert area == pytest.approx(0.5, rel=1e-12)
    moment, _ = integrate_simplex(lambda x: x[:, 0] * x[:, 1], 2, budget=8)
    assert moment == pytest.approx(1.0 / 24.0, rel=1e-12)


def test_integrate_simplex_monte_carlo_is_seeded():
    f = lambda x: 1.0 + x[:, 0]
    a = integrate_simplex(f, 2, scheme="monte_carlo", budget=200_000, seed=11, batch_size=50_000)
    b = integrate_simplex(f, 2, scheme="monte_carlo", budget=200_000, seed=11, batch_size=50_000, workers=3)
    assert a == b
    # int (1 + x_1) over the triangle = 1/2 + 1/6
    assert abs(a[0] - 2.0 / 3.0) < 5 * a[1]


def test_integrate_simplex_rejects_bad_arguments():
    with pytest.raises(InvalidInputError):
        integrate_simplex(lambda x: x[:, 0], 2, scheme="sparse_grid")
    with pytest.raises(InvalidInputError):
        integrate_simplex(lambda x: x[:, 0], 2, budget=1)


def test_monte_carlo_box_standard_error_scaling():
    f = lambda p: np.sum(p ** 2, axis=1)
    small = monte_carlo_box(f, [(0.0, 1.0)] * 4, 10_000, seed=5)
    large = monte_carlo_box(f, [(0.0, 1.0)] * 4, 100_000, seed=5)
    ratio = small[1] / large[1]
    assert math.sqrt(10) / 2 < ratio < 2 * math.sqrt(10)
    assert abs(large[0] - 4.0 / 3.0) < 5 * large[1]
    with pytest.raises(InvalidInputError):
        monte_carlo_box(f, [(1.0, 0.0)], 10, seed=0)


@pytest.mark.parametrize("workers", [2, 4])
def test_monte_carlo_box_is_independent_of_worker_count(workers):
    f = lambda p: np.cos(p[:, 0]) * p[:, 1]
    serial = monte_carlo_box(f, [(0.0, 1.0), (0.0, 2.0)], 120_000, seed=17, batch_size=25_000)
    parallel = monte_carlo_box(f, [(0.0, 1.0), (0.0, 2.0)], 120_000, seed=17, batch_size=25_000, workers=workers)
    assert serial == parallel
