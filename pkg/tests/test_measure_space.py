import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from lagvar.measure_space import (
    GridFunction,
    MeasureKind,
    MeasureTag,
    QuadGrid,
    ball_measure_m_alpha,
    lp_norm,
    pushforward_isometry_check,
    weak_l1_quasinorm,
)
from lagvar.special_fn import AlphaIndex


@pytest.mark.parametrize("alpha", [[0.5], [1.0], [2.3], [0.5, 1.5]])
def test_mu_grid_moments(alpha):
    grid = QuadGrid.mu(alpha, 24)
    assert grid.weights.sum() == pytest.approx(1.0, rel=1e-12)
    # E[x_i] = alpha_i + 1 and E[x_i^2] = (alpha_i + 1)(alpha_i + 2) under mu_alpha
    for i, a in enumerate(alpha):
        xi = grid.nodes[:, i]
        assert np.sum(grid.weights * xi) == pytest.approx(a + 1.0, rel=1e-12)
        assert np.sum(grid.weights * xi**2) == pytest.approx((a + 1.0) * (a + 2.0), rel=1e-12)


def test_nu_density_is_probability():
    kind = MeasureKind(MeasureTag.NU_ALPHA, AlphaIndex(1.7))
    total = integrate.quad(lambda y: kind.density(np.array([[y]]))[0], 0, np.inf)[0]
    assert total == pytest.approx(1.0, rel=1e-10)


def test_nu_grid_integrates_gaussian_moment():
    a = 0.8
    grid = QuadGrid.nu(a, 30)
    kind = grid.measure
    ref = integrate.quad(lambda y: y**2 * kind.density(np.array([[y]]))[0], 0, np.inf)[0]
    assert np.sum(grid.weights * grid.nodes[:, 0] ** 2) == pytest.approx(ref, rel=1e-10)


def test_pushforward_pullback_roundtrip():
    grid = QuadGrid.mu([0.5, 1.5], [5, 6])
    back = grid.pushforward().pullback()
    np.testing.assert_allclose(back.nodes, grid.nodes, rtol=1e-15)
    np.testing.assert_allclose(back.weights, grid.weights)
    with pytest.raises(ValueError):
        grid.pullback()


def test_box_grid_for_m_alpha():
    a = 1.0
    grid = QuadGrid.box(a, 20, 2.0, panels=2)
    # m_alpha((0, 2)) = 2^{2a+2} / ((a+1) Gamma(a+1))
    ref = 2.0 ** (2 * a + 2) / ((a + 1) * math.gamma(a + 1))
    assert grid.weights.sum() == pytest.approx(ref, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 4.0), st.floats(0.01, 5.0), st.floats(0.01, 3.0))
def test_ball_measure_n1_matches_quadrature(a, x, r):
    # density 2 y^{2a+1} / Gamma(a+1); the algebraic weight handles the endpoint at 0
    def mass(hi):
        return integrate.quad(lambda y: 2.0 / math.gamma(a + 1.0), 0.0, hi, weight="alg", wvar=(2 * a + 1, 0), epsrel=1e-13)[0]

    ref = mass(x + r) - mass(max(x - r, 0.0)) if x > r else mass(x + r)
    assert ball_measure_m_alpha([x], r, a) == pytest.approx(ref, rel=1e-9)


def test_ball_measure_bounds_n2():
    v, inner, outer = ball_measure_m_alpha([1.0, 2.0], 0.3, [0.5, 1.5], return_bounds=True)
    assert inner <= v <= outer


def test_lp_norm_and_weak(rng):
    grid = QuadGrid.mu(1.0, 30)
    f = GridFunction(grid, rng.standard_normal(grid.size))
    assert lp_norm(f, 2) == pytest.approx(math.sqrt(np.sum(grid.weights * np.abs(f.values) ** 2)))
    assert lp_norm(f, np.inf) == pytest.approx(np.max(np.abs(f.values)))
    # Chebyshev: the weak quasinorm never exceeds the L^1 norm
    assert weak_l1_quasinorm(f) <= lp_norm(f, 1) + 1e-15
    assert lp_norm(f, 1) <= lp_norm(f, 2) + 1e-15
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


def test_transport_is_isometry(rng):
    grid = QuadGrid.mu([1.0], 20)
    f = GridFunction(grid, rng.standard_normal(grid.size))
    for q in (1.0, 2.0, 3.5):
        a, b = pushforward_isometry_check(f, q)
        assert a == pytest.approx(b, rel=1e-14)
    assert f.transported().transported().grid.measure.tag is MeasureTag.MU_ALPHA


def test_csv_roundtrip(tmp_path, rng):
    grid = QuadGrid.mu([0.5, 1.5], [4, 5])
    f = GridFunction(grid, rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size))
    path = tmp_path / "f.csv"
    f.to_csv(path)
    g = GridFunction.from_csv(path, grid.measure)
    np.testing.assert_allclose(g.values, f.values, rtol=0, atol=0)
    np.testing.assert_allclose(g.grid.weights, grid.weights, rtol=1e-14)
    np.testing.assert_allclose(g.grid.nodes, grid.nodes, rtol=0)


def test_grid_function_validation():
    grid = QuadGrid.mu(1.0, 5)
    with pytest.raises(ValueError):
        GridFunction(grid, np.ones(4))
    with pytest.raises(ValueError):
        GridFunction(grid, np.array([1, 2, np.nan, 4, 5.0]))
