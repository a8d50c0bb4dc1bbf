import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from lagvar.laguerre_ops import basis_on_grid
from lagvar.measure_space import GridFunction, QuadGrid
from lagvar.varops import (
    DyadicBlocks,
    Trajectory,
    dyadic_index,
    g_function,
    jump_count,
    jump_domination_lhs,
    oscillation,
    rho_variation,
    short_variation,
)


def brute_variation(v, rho):
    """Max over all index subsequences of sum |v_{j+1} - v_j|^rho, by enumeration."""
    best = 0.0
    n = len(v)
    for mask in range(1, 2**n):
        idx = [i for i in range(n) if mask >> i & 1]
        if len(idx) < 2:
            continue
        best = max(best, sum(abs(v[b] - v[a]) ** rho for a, b in zip(idx, idx[1:])))
    return best ** (1.0 / rho)


def brute_jumps(v, lam):
    """Largest system of chained pairs s_1 < t_1 <= s_2 < ... by exhaustive search."""
    n = len(v)

    def search(start):
        best = 0
        for s in range(start, n):
            for t in range(s + 1, n):
                if abs(v[t] - v[s]) > lam:
                    best = max(best, 1 + search(t))
        return best

    return search(0)


def random_values(rng, n, complex_=True):
    v = rng.standard_normal(n)
    if complex_:
        v = v + 1j * rng.standard_normal(n)
    return v


finite = st.floats(-10, 10, allow_nan=False)
value_lists = st.lists(finite, min_size=1, max_size=14)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory([1.0, 2.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        Trajectory([1.0, 0.5], [0.0, np.nan])
    with pytest.raises(ValueError):
        Trajectory([1.0, -0.5], [0.0, 1.0])
    with pytest.raises(ValueError):
        Trajectory([1.0, 0.5], np.zeros((3, 2)))
    tr = Trajectory([1.0, 0.5], np.zeros((2, 3)))
    assert tr.n_params == 2 and tr.n_nodes == 3


def test_trajectory_csv_round_trip(tmp_path, rng):
    params = np.geomspace(4.0, 0.01, 7)
    vals = rng.standard_normal((7, 3)) + 1j * rng.standard_normal((7, 3))
    path = tmp_path / "traj.csv"
    Trajectory(params, vals).to_csv(path)
    back = Trajectory.from_csv(path)
    np.testing.assert_array_equal(back.params, params)
    np.testing.assert_array_equal(back.values, vals)


def test_variation_constant_and_monotone():
    assert rho_variation(np.full(6, 3.0), 3.0) == 0.0
    v = np.array([0.0, 0.3, 1.1, 1.5, 4.0])
    assert rho_variation(v, 2.5) == pytest.approx(4.0, rel=1e-15)
    with pytest.raises(ValueError):
        rho_variation(v, 2.0)
    assert rho_variation(v, 2.0, permissive=True) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        rho_variation(v, 0.5, permissive=True)


def test_variation_matches_brute_force(rng):
    for _ in range(150):
        n = int(rng.integers(1, 11))
        v = random_values(rng, n)
        for rho in (2.5, 4.0):
            assert rho_variation(v, rho) == pytest.approx(brute_variation(v, rho), rel=1e-12, abs=1e-15)


def test_variation_vectorized_over_nodes(rng):
    vals = rng.standard_normal((9, 4))
    tr = Trajectory(np.geomspace(1, 0.01, 9), vals)
    out = rho_variation(tr, 3.0)
    for j in range(4):
        assert out[j] == pytest.approx(brute_variation(vals[:, j], 3.0), rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(value_lists, st.integers(0, 2**14 - 1))
def test_variation_monotone_under_refinement(v, keep):
    v = np.array(v)
    mask = np.array([(keep >> i) & 1 for i in range(v.size)], dtype=bool)
    if not mask.any():
        mask[0] = True
    sub = v[mask]
    assert rho_variation(sub, 3.0) <= rho_variation(v, 3.0)


def test_jump_examples():
    lam = 1.0
    assert jump_count([0.0, 2.0, 0.0, 2.0, 0.0], lam) == 4
    assert jump_count([0.0, 0.5, -0.4], lam) == 0
    with pytest.raises(ValueError):
        jump_count([0.0, 1.0], 0.0)


def test_jump_greedy_matches_brute_force(rng):
    for _ in range(150):
        n = int(rng.integers(1, 10))
        real = bool(rng.integers(0, 2))
        v = random_values(rng, n, complex_=not real)
        lam = float(rng.uniform(0.1, 2.0))
        assert jump_count(v, lam) == brute_jumps(v, lam)


@settings(max_examples=100, deadline=None)
@given(value_lists, st.sampled_from([2.5, 3.0, 4.0]), st.integers(-4, 3))
def test_jump_domination_exact(v, rho, k):
    lam = 2.0**k
    assert jump_domination_lhs(v, lam, rho) <= rho_variation(v, rho)


@settings(max_examples=100, deadline=None)
@given(value_lists, st.integers(1, 4))
def test_oscillation_domination_exact(v, cuts):
    n = len(v)
    params = np.arange(n, 0, -1, dtype=float)
    tj = np.concatenate([[float(n) + 1], np.linspace(n, 0.5, cuts + 1)[1:]])
    tr = Trajectory(params, v)
    assert oscillation(tr, tj)[0] <= rho_variation(tr, 2.0, permissive=True)[0]


def test_oscillation_examples(rng):
    assert oscillation(np.ones(5), [6.0, 0.5]) == 0.0
    v = rng.standard_normal(6)
    single = oscillation(v, [10.0, 0.1])
    assert single == pytest.approx(np.max(np.abs(v[:, None] - v[None, :])))
    with pytest.raises(ValueError):
        oscillation(v, [1.0, 0.1])


def test_oscillation_block_sum(rng):
    params = np.array([3.5, 3.0, 2.5, 1.5, 1.2, 0.4, 0.3])
    v = rng.standard_normal(7)
    tj = [4.0, 2.0, 1.0, 0.1]
    blocks = [v[:3], v[3:5], v[5:]]
    expected = math.sqrt(sum(np.max(np.abs(b[:, None] - b[None, :])) ** 2 for b in blocks))
    assert oscillation(Trajectory(params, v), tj)[0] == pytest.approx(expected)


def test_dyadic_index_half_open():
    t = np.array([1.0, 0.5, 0.75, 2.0, 1.5, 0.25, 3.0])
    np.testing.assert_array_equal(dyadic_index(t), [1, 2, 1, 0, 0, 3, -1])
    blocks = DyadicBlocks.from_params(np.geomspace(8, 1e-3, 50))
    allidx = np.concatenate([b for _, b in blocks])
    np.testing.assert_array_equal(np.sort(allidx), np.arange(50))


def test_short_variation_recomputation(rng):
    params = np.geomspace(6.0, 0.02, 12)
    v = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    k = dyadic_index(params)
    total = 0.0
    for b in np.unique(k):
        sub = v[k == b]
        if sub.size > 1:
            total += brute_variation(sub, 2.0) ** 2
    assert short_variation(Trajectory(params, v))[0] == pytest.approx(math.sqrt(total), rel=1e-12)


def test_short_variation_single_block(rng):
    params = np.linspace(0.95, 0.55, 6)
    v = rng.standard_normal(6)
    assert short_variation(Trajectory(params, v))[0] == pytest.approx(brute_variation(v, 2.0))
    assert short_variation(Trajectory(params, np.ones(6)))[0] == 0.0


@pytest.fixture(scope="module")
def grid():
    return QuadGrid.mu((1.0,), 64)


def g_constant(beta):
    return math.exp(0.5 * gammaln(2 * beta)) / 2**beta


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.3])
def test_g_function_eigen(grid, beta):
    B = basis_on_grid(grid, 4)[0]
    bulk = grid.nodes[:, 0] < 20
    for k in (1, 2, 4):
        g = g_function(GridFunction(grid, B[k]), beta, heat="spectral")
        np.testing.assert_allclose(g.values.real[bulk], g_constant(beta) * np.abs(B[k][bulk]), rtol=1e-5, atol=1e-9)
        assert g.info["tail_bound"] < 1e-5


def test_g_function_constant_is_zero(grid):
    g = g_function(grid.constant(1.0), 1.0, heat="spectral")
    assert np.max(np.abs(g.values)) < 1e-12


def test_g_function_mixture_double_sum(grid):
    beta = 1.0
    B = basis_on_grid(grid, 2)[0]
    c = {1: 1.0, 2: -0.6}
    f = GridFunction(grid, c[1] * B[1] + c[2] * B[2])
    g = g_function(f, beta, heat="spectral")
    # int (t a)^beta (t b)^beta e^{-t(a+b)} dt/t = (ab)^beta Gamma(2 beta) / (a+b)^{2 beta}
    g2 = np.zeros(grid.size)
    for j, cj in c.items():
        for k, ck in c.items():
            a, b = math.sqrt(j), math.sqrt(k)
            g2 = g2 + cj * ck * B[j] * B[k] * (a * b) ** beta * math.exp(gammaln(2 * beta)) / (a + b) ** (2 * beta)
    bulk = grid.nodes[:, 0] < 20
    np.testing.assert_allclose(g.values.real[bulk], np.sqrt(g2[bulk]), rtol=1e-5, atol=1e-9)


def test_g_function_order_ratio(grid):
    B = basis_on_grid(grid, 3)[0]
    f = GridFunction(grid, B[3])
    bulk = (grid.nodes[:, 0] < 20) & (np.abs(B[3]) > 1e-3)
    g1 = g_function(f, 0.5, heat="spectral").values.real[bulk]
    g2 = g_function(f, 1.5, heat="spectral").values.real[bulk]
    np.testing.assert_allclose(g1 / g2, g_constant(0.5) / g_constant(1.5), rtol=1e-6)


def test_g_function_errors(grid):
    f = grid.constant(1.0)
    with pytest.raises(ValueError):
        g_function(f, 0.0)
    with pytest.raises(ValueError):
        g_function(f, 1.0, t_range=(1.0, 1.0))
    with pytest.raises(ValueError):
        g_function(f, 1.0, N_t=1)
