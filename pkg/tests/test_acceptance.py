"""Acceptance criteria 1-12, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line (printed and repeated in the terminal
summary) before asserting.
"""

import math
import subprocess
import sys
import time

import numpy as np
from scipy import special

from lagvar.experiments import (
    ExperimentConfig,
    build_ensemble,
    jump_uniformity,
    run_experiment,
    sv_chain_check,
    trajectory_for,
    weak_11_sweep,
)
from lagvar.laguerre_ops import HeatKernelParams, apply_heat, apply_poisson, basis_on_grid, heat_kernel
from lagvar.measure_space import GridFunction, QuadGrid
from lagvar.riesz import (
    conjugated_riesz_kernel,
    conjugation_factor,
    riesz_kernel,
    verify_global_domination,
    verify_local_bounds,
)
from lagvar.special_fn import AlphaIndex
from lagvar.varops import Trajectory, g_function, jump_count, jump_domination_lhs, oscillation, rho_variation
from lagvar.weyl import TimeGrid, WeylOrder, weyl_poisson_spectral_profile, weyl_poisson_trajectory

ALPHAS_1 = [(0.5,), (1.0,), (2.3,), (0.5, 1.5)]
WEYL_BETAS = [0.5, 1.0, 1.5, 2.3]
BULK = 20.0


def eigen_values(grid, B, k):
    out = np.ones(())
    for axis, ki in enumerate(k):
        out = np.multiply.outer(out, B[axis][ki])
    return out.ravel()


def eigen_indices(n, k):
    return [(k,)] if n == 1 else [(k, 0), (0, k), (k // 2, k - k // 2)]


def node_errors(grid, err):
    """``sqrt(w)``-weighted sup over all nodes and plain sup over bulk nodes."""
    bulk = np.all(grid.nodes < BULK, axis=1)
    err = np.abs(err)
    return float(np.max(np.sqrt(grid.weights) * err, axis=-1).max()), float(err[..., bulk].max())


# ---------------------------------------------------------------------------
# 1. eigenfunction suite
# ---------------------------------------------------------------------------


def test_criterion_01_eigenfunctions(record_criterion):
    start = time.perf_counter()
    w_err = p_err = 0.0
    for al in ALPHAS_1:
        A = AlphaIndex(al)
        grid = QuadGrid.mu(A, 128)
        B = basis_on_grid(grid, 8)
        for k in range(9):
            for kk in eigen_indices(A.n, k):
                vals = eigen_values(grid, B, kk)
                f = GridFunction(grid, vals)
                lam = sum(kk)
                for t in (0.1, 1.0, 5.0):
                    h = apply_heat(f, HeatKernelParams(A, t), method="kernel").values
                    w_err = max(w_err, *node_errors(grid, h - math.exp(-lam * t) * vals))
                    p = apply_poisson(f, A, t).values
                    p_err = max(p_err, *node_errors(grid, p - math.exp(-math.sqrt(lam) * t) * vals))
    elapsed = time.perf_counter() - start
    ok = w_err < 1e-7 and p_err < 1e-6 and elapsed < 60
    record_criterion(1, ok, f"heat err {w_err:.2e} (<1e-7), Poisson err {p_err:.2e} (<1e-6), {elapsed:.1f}s (<60s)")
    assert ok


# ---------------------------------------------------------------------------
# 2. Hille-Hardy cross-validation
# ---------------------------------------------------------------------------


def test_criterion_02_hille_hardy(record_criterion, rng):
    start = time.perf_counter()
    k = np.arange(800)
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(0.2, 3.0)
        x, y = rng.uniform(0.05, 6.0, 2)
        t = rng.uniform(0.3, 4.0)
        norm = special.gammaln(k + 1) + special.gammaln(a + 1) - special.gammaln(k + a + 1)
        series = float(np.sum(np.exp(-k * t + norm) * special.eval_genlaguerre(k, a, x) * special.eval_genlaguerre(k, a, y)))
        closed = heat_kernel(HeatKernelParams(a, t), [x], [y]).to_float()
        worst = max(worst, abs(closed - series) / abs(series))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and elapsed < 60
    record_criterion(2, ok, f"max relative difference {worst:.2e} (<1e-8) at 100 points, {elapsed:.1f}s (<60s)")
    assert ok


# ---------------------------------------------------------------------------
# 3. Weyl closed form and g-function constant
# ---------------------------------------------------------------------------


def test_criterion_03_weyl_closed_form(record_criterion):
    start = time.perf_counter()
    grid = QuadGrid.mu((1.0,), 128)
    B = basis_on_grid(grid, 5)[0]
    times = TimeGrid.geometric(1e-3, 20.0, 160)
    bulk = grid.nodes[:, 0] < BULK
    traj_err = 0.0
    g_err = 0.0
    for beta in WEYL_BETAS:
        c = math.exp(0.5 * special.gammaln(2 * beta)) / 2**beta
        for k in range(6):
            f = GridFunction(grid, B[k])
            tr = weyl_poisson_trajectory(f, WeylOrder(beta), times)
            exact = weyl_poisson_spectral_profile(beta, times.times, float(k))[:, None] * B[k][None, :]
            traj_err = max(traj_err, *node_errors(grid, tr.values - exact))
            if k >= 1:
                g = g_function(f, beta).values.real
                ref = c * np.abs(B[k])
                rel = np.abs(g[bulk] - ref[bulk]) / np.maximum(ref[bulk], 1e-300)
                # nodes where the eigenfunction itself vanishes carry no relative information
                live = np.abs(B[k][bulk]) > 1e-6
                g_err = max(g_err, float(rel[live].max()))
    elapsed = time.perf_counter() - start
    ok = traj_err < 1e-6 and g_err < 1e-5 and elapsed < 300
    record_criterion(3, ok, f"trajectory err {traj_err:.2e} (<1e-6), g-function rel err {g_err:.2e} (<1e-5), {elapsed:.1f}s (<300s)")
    assert ok


# ---------------------------------------------------------------------------
# 4. exact combinatorial oracles
# ---------------------------------------------------------------------------


def brute_variation(v, rho):
    n = len(v)
    best = 0.0
    for mask in range(1, 2**n):
        idx = [i for i in range(n) if mask >> i & 1]
        best = max(best, sum(abs(v[b] - v[a]) ** rho for a, b in zip(idx, idx[1:])))
    return best ** (1.0 / rho)


def brute_jumps(v, lam):
    n = len(v)

    def search(start):
        best = 0
        for s in range(start, n):
            for t in range(s + 1, n):
                if abs(v[t] - v[s]) > lam:
                    best = max(best, 1 + search(t))
        return best

    return search(0)


def random_trajectories(rng, count, nmax):
    out = []
    for _ in range(count):
        n = int(rng.integers(1, nmax + 1))
        v = rng.standard_normal(n)
        if rng.integers(0, 2):
            v = v + 1j * rng.standard_normal(n)
        out.append(v)
    return out


def test_criterion_04_combinatorial_oracles(record_criterion, rng):
    start = time.perf_counter()
    var_bad = 0
    for v in random_trajectories(rng, 500, 12):
        rho = float(rng.choice([2.5, 3.0, 4.0]))
        dp = rho_variation(v, rho)
        bf = brute_variation(v, rho)
        if abs(dp - bf) > 1e-12 * max(bf, 1.0):
            var_bad += 1
    jump_bad = 0
    for v in random_trajectories(rng, 500, 10):
        lam = float(rng.uniform(0.05, 2.5))
        if jump_count(v, lam) != brute_jumps(v, lam):
            jump_bad += 1
    elapsed = time.perf_counter() - start
    ok = var_bad == 0 and jump_bad == 0 and elapsed < 120
    record_criterion(4, ok, f"variation mismatches {var_bad}/500, jump mismatches {jump_bad}/500, {elapsed:.1f}s (<120s)")
    assert ok


# ---------------------------------------------------------------------------
# 5. pointwise dominations
# ---------------------------------------------------------------------------


def suite_trajectories(rng):
    trajs = [Trajectory(np.arange(v.size, 0, -1, dtype=float), v) for v in random_trajectories(rng, 300, 14)]
    for op, beta in (("VAR_POISSON", 0.0), ("VAR_POISSON", 0.5), ("VAR_POISSON", 2.3), ("VAR_RIESZ", 1.0)):
        for ens in ("EIGEN", "RANDOM_POLY", "NEAR_ATOM"):
            cfg = ExperimentConfig(operator=op, beta=beta, ensemble=ens, grid_size=24, n_t=60, n_functions=3, seed=11)
            for _, f, deg in build_ensemble(cfg)[:6]:
                trajs.append(trajectory_for(cfg, f, deg))
    return trajs


def test_criterion_05_dominations(record_criterion, rng):
    violations = 0
    checks = 0
    for tr in suite_trajectories(rng):
        tj = np.geomspace(tr.params[0], tr.params[-1], 16) if tr.n_params > 1 else np.array([tr.params[0], tr.params[0] / 2])
        tj[0] = tr.params[0]
        v2 = rho_variation(tr, 2.0, permissive=True)
        osc = oscillation(tr, tj)
        violations += int(np.sum(osc > v2))
        checks += osc.size
        scale = float(np.max(np.abs(tr.values))) or 1.0
        for rho in (2.5, 3.0, 4.0):
            var = rho_variation(tr, rho)
            for m in range(-10, 3):
                lhs = jump_domination_lhs(tr, scale * 2.0**m, rho)
                violations += int(np.sum(lhs > var))
                checks += lhs.size
    ok = violations == 0
    record_criterion(5, ok, f"{violations} violations in {checks} exact comparisons")
    assert ok


# ---------------------------------------------------------------------------
# 6. short-variation chain
# ---------------------------------------------------------------------------


def test_criterion_06_short_variation_chain(record_criterion):
    worst = 0.0
    for al in ((1.0,), (0.5, 1.5)):
        for beta in (0.5, 1.0, 2.3):
            worst = max(worst, sv_chain_check(list(al), beta, kmax=5)["max_ratio"])
    ok = worst <= 1.05
    record_criterion(6, ok, f"max S_V / (sqrt(log 2)(beta g^beta + g^(beta+1))) = {worst:.4f} (<=1.05)")
    assert ok


# ---------------------------------------------------------------------------
# 7. Riesz conjugation
# ---------------------------------------------------------------------------


def test_criterion_07_riesz_conjugation(record_criterion, rng):
    start = time.perf_counter()
    worst = 0.0
    for a in (0.5, 1.0):
        count = 0
        while count < 50:
            x, y = rng.uniform(0.1, 4.0, 2)
            if abs(x - y) < 1e-3:
                continue
            r = riesz_kernel(0, (a,), [x], [y])
            c = conjugated_riesz_kernel(0, (a,), [x], [y])
            target = conjugation_factor((a,), [x], [y]) * r
            worst = max(worst, abs(c - target) / abs(c))
            count += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-5 and elapsed < 300
    record_criterion(7, ok, f"max relative difference {worst:.2e} (<1e-5) at 2x50 pairs, {elapsed:.1f}s (<300s)")
    assert ok


# ---------------------------------------------------------------------------
# 8. local kernel-bound sweeps
# ---------------------------------------------------------------------------


def test_criterion_08_local_kernel_bounds(record_criterion):
    start = time.perf_counter()
    reports = []
    for tau in (1.0, 2.0):
        reports += verify_local_bounds((0.5,), tau, 2000, seed=1)
        reports += verify_local_bounds((0.5, 1.5), tau, 2000, seed=1, bounds=("poisson_size", "poisson_gradient", "riesz_size", "riesz_gradient"))
    elapsed = time.perf_counter() - start
    failed = [f"{r['bound_id']}@{r['alpha']},tau={r['tau']}" for r in reports if not r["pass"]]
    drift = max(abs(r["refinement_ratio"] - 1.0) for r in reports)
    ok = not failed and elapsed < 600
    detail = f"{len(reports) - len(failed)}/{len(reports)} bounds stable, max drift {100 * drift:.3f}% (<20%), {elapsed:.1f}s (<600s)"
    if failed:
        detail += "; failing: " + ", ".join(failed)
    record_criterion(8, ok, detail)
    for r in reports:
        print(f"  {r['bound_id']} alpha={r['alpha']} tau={r['tau']}: C={r['empirical_C']:.6g} refined={r['empirical_C_refined']:.6g}")
    assert ok


# ---------------------------------------------------------------------------
# 9. global domination
# ---------------------------------------------------------------------------


def test_criterion_09_global_domination(record_criterion):
    reports = [verify_global_domination(al, 2000, seed=1) for al in ((0.5,), (1.0,), (0.5, 1.5))]
    ok = all(r["pass"] for r in reports)
    detail = ", ".join(f"alpha={r['alpha']}: C={r['empirical_C']:.6g} drift {100 * abs(r['refinement_ratio'] - 1):.3f}%" for r in reports)
    record_criterion(9, ok, detail + " (<20%)")
    assert ok


# ---------------------------------------------------------------------------
# 10. weak-type stability
# ---------------------------------------------------------------------------


def test_criterion_10_weak_type(record_criterion):
    start = time.perf_counter()
    base = ExperimentConfig(alpha=[1.0], ensemble="NEAR_ATOM", kind="weak11", grid_size=64)
    poisson = weak_11_sweep(base.replace(operator="VAR_POISSON", beta=0.0))
    riesz = weak_11_sweep(base.replace(operator="VAR_RIESZ"))
    elapsed = time.perf_counter() - start
    ok = poisson.passed and riesz.passed and elapsed < 900

    def fmt(res):
        return "growth " + "/".join(f"{g:.3f}" for g in res.summary["growth"])

    record_criterion(
        10,
        ok,
        f"Poisson {fmt(poisson)} ({'ok' if poisson.passed else 'exceeds 1.5'}), "
        f"Riesz {fmt(riesz)} ({'ok' if riesz.passed else 'exceeds 1.5'}), {elapsed:.1f}s (<900s)",
    )
    assert ok


# ---------------------------------------------------------------------------
# 11. jump uniformity
# ---------------------------------------------------------------------------


def test_criterion_11_jump_uniformity(record_criterion):
    results = [
        jump_uniformity(ExperimentConfig(operator="JUMP_POISSON", kind="jump_uniformity", p=[2.0, 4.0])),
        jump_uniformity(ExperimentConfig(operator="JUMP_RIESZ", kind="jump_uniformity", grid_size=32, p=[2.0, 4.0])),
    ]
    lo_hi = [r.summary["scaled_levels"] for r in results]
    # the amplitude supremum must be attained strictly inside the scaled range
    interior = all(lo < k < hi for r, (lo, hi) in zip(results, lo_hi) for k in r.summary["attained_level"].values())
    ok = interior and all(r.passed for r in results)
    detail = ", ".join(
        f"{r.config['operator']} variation "
        + "/".join(f"{v:.3f}" for v in r.summary["variation"].values())
        + " (unscaled "
        + "/".join(f"{v:.1f}" for v in r.summary["unscaled_variation"].values())
        + ")"
        for r in results
    )
    record_criterion(11, ok, detail + f" across 6 levels (<2), interior sup {interior}")
    assert ok


# ---------------------------------------------------------------------------
# 12. determinism
# ---------------------------------------------------------------------------

_HASH_SCRIPT = """
from lagvar.experiments import ExperimentConfig, run_experiment
cfg = ExperimentConfig.from_json({text!r})
print(run_experiment(cfg).result_hash())
"""


def test_criterion_12_determinism(record_criterion):
    configs = [
        ExperimentConfig(grid_size=32, n_t=60, n_functions=3, seed=123, p=[1.5, 2.0]),
        ExperimentConfig(operator="JUMP_POISSON", kind="jump_uniformity", grid_size=24, n_functions=2, seed=9),
        ExperimentConfig(operator="VAR_RIESZ", grid_size=16, n_functions=2, seed=2**63 + 5),
        ExperimentConfig(operator="SVAR_POISSON", kind="weak11", ensemble="NEAR_ATOM", grid_size=24, n_t=40),
    ]
    mismatches = 0
    for cfg in configs:
        hashes = {run_experiment(cfg).result_hash() for _ in range(2)}
        fresh = subprocess.run([sys.executable, "-c", _HASH_SCRIPT.format(text=cfg.to_json())], capture_output=True, text=True, check=True)
        hashes.add(fresh.stdout.strip())
        mismatches += int(len(hashes) != 1)
    ok = mismatches == 0
    record_criterion(12, ok, f"{len(configs) - mismatches}/{len(configs)} configurations reproduce identical hashes across 3 runs (one in a fresh interpreter)")
    assert ok
