import math

import numpy as np
import pytest

from shishkin_sdfem import (
    CoefficientSet,
    InvalidConfigError,
    ManufacturedProblem,
    eval_component,
    make_benchmark,
)
from shishkin_sdfem.problem import COMPONENTS, decay


def central(fn, x, y, axis, order, h):
    """Fourth-order central differences for first and second derivatives."""
    def at(k):
        return fn(x + k * h, y) if axis == 0 else fn(x, y + k * h)

    if order == 1:
        return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h)
    return (-at(2) + 16 * at(1) - 30 * at(0) + 16 * at(-1) - at(-2)) / (12 * h * h)


@pytest.mark.parametrize("variant", ["plain", "curved"])
def test_forcing_matches_finite_differences(variant):
    coeffs = CoefficientSet(0.05, b=1.5, c=0.7, beta=1.2)
    prob = make_benchmark(coeffs, variant)
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.1, 0.9, size=(20, 2))
    u = lambda x, y: prob.u(x, y)  # noqa: E731
    for x, y in pts:
        lap = central(u, x, y, 0, 2, 1e-3) + central(u, x, y, 1, 2, 1e-3)
        ux = central(u, x, y, 0, 1, 1e-3)
        expected = -coeffs.epsilon * lap + coeffs.b * ux + coeffs.c * u(x, y)
        assert prob.f(x, y) == pytest.approx(expected, rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("variant", ["plain", "curved"])
@pytest.mark.parametrize("dx,dy", [(1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (1, 2), (2, 1)])
def test_component_derivatives_match_finite_differences(variant, dx, dy):
    prob = make_benchmark(CoefficientSet(0.05), variant)
    for name in COMPONENTS:
        comp = prob.components[name]
        for x, y in [(0.3, 0.4), (0.8, 0.15), (0.55, 0.9)]:
            lower = (lambda a, b, n=name, ox=dx - 1 if dx else 0, oy=dy if dx else dy - 1:
                     prob.components[n](a, b, ox, oy))
            axis = 0 if dx else 1
            approx = central(lower, x, y, axis, 1, 1e-4)
            assert comp(x, y, dx, dy) == pytest.approx(approx, rel=1e-6, abs=1e-7), (name, x, y)


@pytest.mark.parametrize("eps", [1e-3, 1e-6, 1e-10])
def test_boundary_values_vanish(eps):
    prob = make_benchmark(CoefficientSet(eps), "curved")
    t = np.linspace(0, 1, 101)
    zeros = np.zeros_like(t)
    for x, y in [(t, zeros), (t, zeros + 1), (zeros, t), (zeros + 1, t)]:
        assert np.max(np.abs(prob.u(x, y))) < 1e-13


@pytest.mark.parametrize("eps", [1e-4, 1e-8])
def test_layer_functions_solve_the_homogeneous_equations(eps):
    # E1 = g(x) q(y): its x-part satisfies -eps g'' + beta g' = 0 exactly
    prob = make_benchmark(CoefficientSet(eps, b=2.0, beta=2.0), "plain")
    x = np.linspace(0.9, 1.0, 50)
    y = np.full_like(x, 0.5)
    E1 = prob.components["E1"]
    resid = -eps * E1(x, y, 2, 0) + 2.0 * E1(x, y, 1, 0)
    scale = 2.0 * np.max(np.abs(E1(x, y, 1, 0)))
    assert np.max(np.abs(resid)) <= 1e-12 * scale
    # E2 = s(x) r(y): r'' = r / eps
    E2 = prob.components["E2"]
    y = np.linspace(0, 0.01, 50)
    x = np.full_like(y, 0.3)
    np.testing.assert_allclose(eps * E2(x, y, 0, 2), E2(x, y), rtol=1e-10, atol=1e-300)


def test_decomposition_bounds_hold_with_small_constants():
    # |d^i_x d^j_y E1| <= C eps^-i exp(-beta (1 - x) / eps), etc., with C below 10
    for eps in [1e-4, 1e-6, 1e-8]:
        prob = make_benchmark(CoefficientSet(eps), "curved")
        xs = np.concatenate([np.linspace(0, 1, 200), 1 - eps * np.linspace(0, 20, 200)])
        ys = np.concatenate([np.linspace(0, 1, 200), math.sqrt(eps) * np.linspace(0, 20, 200)])
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        for i in range(3):
            for j in range(3 - i):
                w1 = eps**-i * np.exp(-(1 - X) / eps)
                w2 = eps ** (-j / 2) * (np.exp(-Y / math.sqrt(eps)) + np.exp(-(1 - Y) / math.sqrt(eps)))
                # where the weight underflows the component must vanish too
                e1 = np.abs(prob.components["E1"](X, Y, i, j))
                e2 = np.abs(prob.components["E2"](X, Y, i, j))
                assert np.all(e1[w1 == 0] == 0) and np.all(e2[w2 == 0] == 0)
                assert np.max(e1[w1 > 0] / w1[w1 > 0]) < 10
                assert np.max(e2[w2 > 0] / w2[w2 > 0]) < 10
                assert np.abs(prob.components["S"](X, Y, i, j)).max() < 10


def test_smooth_part_of_plain_variant_is_bilinear():
    prob = make_benchmark(CoefficientSet(1e-6), "plain")
    S = prob.components["S"]
    x, y = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 1, 7))
    assert np.all(S(x, y, 2, 0) == 0) and np.all(S(x, y, 0, 2) == 0)
    assert np.all(prob.components["E1"](x, y, 0, 1) == 0)


def test_extreme_eps_stays_finite():
    prob = make_benchmark(CoefficientSet(1e-14), "curved")
    x, y = np.meshgrid(np.linspace(0, 1, 101), np.linspace(0, 1, 101))
    for dx, dy in [(0, 0), (1, 0), (0, 1), (2, 0)]:
        assert np.all(np.isfinite(prob.u(x, y, dx, dy)))


def test_decay_flushes_to_zero():
    assert decay(700.5) == 0.0
    assert decay(699.0) == pytest.approx(math.exp(-699.0))
    assert decay(0.0) == 1.0


def test_eval_component_contract():
    prob = make_benchmark(CoefficientSet(1e-3))
    assert eval_component(prob, "u", 0.5, 0.5) == pytest.approx(float(prob.u(0.5, 0.5)))
    assert isinstance(eval_component(prob, "E1", 0.5, 0.5, 1, 0), float)
    with pytest.raises(ValueError):
        eval_component(prob, "S", 0.5, 0.5, 2, 2)
    with pytest.raises(ValueError):
        eval_component(prob, "S", -0.1, 0.5)
    with pytest.raises(KeyError):
        eval_component(prob, "E3", 0.5, 0.5)


def test_custom_components_are_accepted():
    coeffs = CoefficientSet(0.1)
    zero = lambda x, y, dx=0, dy=0: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731

    def bubble(x, y, dx=0, dy=0):
        px = [x * (1 - x), 1 - 2 * x, -2 + 0 * x, 0 * x][dx]
        py = [y * (1 - y), 1 - 2 * y, -2 + 0 * y, 0 * y][dy]
        return px * py

    prob = ManufacturedProblem(coeffs, {"S": bubble, "E1": zero, "E2": zero, "E12": zero})
    x, y = 0.3, 0.6
    expected = -0.1 * (-2 * y * (1 - y) - 2 * x * (1 - x)) + (1 - 2 * x) * y * (1 - y) + x * (1 - x) * y * (1 - y)
    assert prob.f(x, y) == pytest.approx(expected)
    with pytest.raises(ValueError):
        ManufacturedProblem(coeffs, {"S": bubble})


@pytest.mark.parametrize("kwargs", [dict(epsilon=1.0), dict(epsilon=0.0), dict(epsilon=1e-3, b=0.5, beta=1.0),
                                    dict(epsilon=1e-3, c=-1.0), dict(epsilon=math.nan)])
def test_coefficient_validation(kwargs):
    with pytest.raises(InvalidConfigError):
        CoefficientSet(**kwargs)


def test_unknown_benchmark():
    with pytest.raises(ValueError):
        make_benchmark(CoefficientSet(1e-3), "wiggly")
