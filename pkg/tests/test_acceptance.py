"""Acceptance criteria 1-12 at their stated tolerances.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from conftest import record
from harmlat.constructions import RandomSetParams, random_site_set, spiral_set, tetration_set, tube_set
from harmlat.experiments import (
    PSI_CONJECTURE,
    SPIRAL_RATE,
    TETRATION_BANDS,
    TREE_ROOT,
    TYPE_I_BOUND,
    exp_klein_ratio,
    exp_mn_bruteforce,
    exp_rho_ensemble,
    lemma_boundary_connectivity,
    lemma_marginal_existence,
    lemma_noncut_marginal,
    spiral_values,
    tetration_ratios,
)
from harmlat.lattice import SiteSet, box_points, straight_path
from harmlat.montecarlo import mc_path_traversal
from harmlat.solver import (
    dense_harmonic_measure,
    escape_capacity,
    gamma_path,
    green_identities,
    harmonic_measure_infinity,
    last_exit_check,
    tree_tunnel_ratio,
    tunnel_recurrence,
    wired_extrapolated,
    wired_harmonic_measure,
)
from test_solver import path_chain_gamma

pytestmark = pytest.mark.slow

# least positive value over classes in Lambda(2), frozen from the first exhaustive run
MN_FIXTURE = {
    2: 0.5,
    3: 0.21460183660255147,
    4: 0.0983896646810092,
    5: 0.028157951850728228,
}
MN_CLASSES = {2: 5, 3: 44, 4: 275, 5: 1391}


def _finish(k, ok, detail, t0, budget=None):
    dt = time.time() - t0
    if budget is not None and dt > budget:
        ok = False
        detail += f"; runtime {dt:.0f}s over {budget}s"
    record(k, ok, f"{detail} [{dt:.1f}s]")
    assert ok, detail


def test_criterion_01_gamma_closed_form():
    t0 = time.time()
    worst = 0.0
    for d in (2, 3):
        for L in range(0, 65):
            g = gamma_path(L, d)
            # path vertices L..0 followed by a virtual killed node past the start
            tri = tunnel_recurrence(2.0 * d, L + 2).values[L]
            worst = max(worst, abs(g - tri))
            if L >= 1:
                worst = max(worst, abs(g - path_chain_gamma(L, d)))
    # 3 sigma with sigma from the exact value, so an all-miss run at tiny gamma is judged fairly
    zmax = 0.0
    for d in (2, 3):
        for L in range(1, 9):
            est = mc_path_traversal(straight_path((0,) * d, 0, L), 10 ** 6, seed=1000 * d + L)
            g = gamma_path(L, d)
            zmax = max(zmax, abs(est.value - g) / math.sqrt(g * (1 - g) / est.samples))
    ok = worst <= 1e-12 and zmax <= 3
    _finish(1, ok, f"max |gamma - chain| = {worst:.2e}; max MC z-score = {zmax:.2f}", t0, 60)


def test_criterion_02_two_point_symmetry():
    t0 = time.time()
    A2 = SiteSet.from_points([(0, 0), (1, 0)])
    w = wired_extrapolated(A2, tol=1e-7)
    dn = dense_harmonic_measure(A2)
    A3 = SiteSet.from_points([(0, 0, 0), (1, 0, 0)])
    e3 = harmonic_measure_infinity(A3, "escape")
    errs = [np.abs(mv.weights - 0.5).max() for mv in (w, dn, e3)]
    ok = max(errs) <= 1e-6
    _finish(2, ok, "wired/dense/escape deviations " + ", ".join(f"{e:.1e}" for e in errs), t0, 60)


def test_criterion_03_monotone_under_removal():
    t0 = time.time()
    worst = math.inf
    checked = 0
    for d, window in ((2, 3), (3, 2)):
        rng = np.random.default_rng(300 + d)
        for _ in range(200):
            size = int(rng.integers(2, 16))
            A = random_site_set(RandomSetParams(size, window, "any", False, d), int(rng.integers(2 ** 63)))
            base = dense_harmonic_measure(A)
            for z in A.points:
                after = dense_harmonic_measure(A.without(z))
                for y in A.points:
                    if y != z:
                        worst = min(worst, after[y] - base[y])
                        checked += 1
    ok = worst >= -1e-8
    _finish(3, ok, f"{checked} (y,z) pairs; min H_(A-z)(y) - H_A(y) = {worst:.2e}", t0, 300)


def test_criterion_04_green_last_exit_battery():
    t0 = time.time()
    worst = {k: 0.0 for k in ("symmetry", "return", "hitting", "decomposition", "last_exit")}
    for d, radius in ((2, 4), (3, 3)):
        rng = np.random.default_rng(400 + d)
        for _ in range(50):
            A = random_site_set(RandomSetParams(int(rng.integers(2, 7)), 2, "any", False, d),
                                int(rng.integers(2 ** 63)))
            free = [p for p in box_points(3, d) if p not in A]
            x = free[int(rng.integers(len(free)))]
            y = free[int(rng.integers(len(free)))]
            sub = A.without(A.points[int(rng.integers(len(A)))])
            for k, v in green_identities(A, sub, x, y, radius).items():
                worst[k] = max(worst[k], v)
            z = A.points[int(rng.integers(len(A)))]
            A1 = A.without(z)
            yy = A1.points[int(rng.integers(len(A1)))]
            worst["last_exit"] = max(worst["last_exit"], last_exit_check(A1, A, yy, z, radius).diff)
    ok = max(worst.values()) <= 1e-10
    _finish(4, ok, "max residuals " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()), t0, 120)


def test_criterion_05_capacity_laws():
    t0 = time.time()
    rng = np.random.default_rng(500)
    cap = lambda S: escape_capacity(S).cap if len(S) else 0.0
    worst_sub = worst_mono = math.inf
    for _ in range(100):
        A1 = random_site_set(RandomSetParams(int(rng.integers(1, 7)), 2, "any", False, 3, False),
                             int(rng.integers(2 ** 63)))
        A2 = random_site_set(RandomSetParams(int(rng.integers(1, 7)), 2, "any", False, 3, False),
                             int(rng.integers(2 ** 63)))
        U = A1.union(A2.points)
        I = SiteSet.from_points([p for p in A1.points if p in A2], 3)
        worst_sub = min(worst_sub, cap(A1) + cap(A2) - cap(U) - cap(I))
        worst_mono = min(worst_mono, cap(U) - cap(A1), cap(U) - cap(A2))
    worst_wired = 0.0
    for _ in range(20):
        A = random_site_set(RandomSetParams(int(rng.integers(2, 8)), 2, "any", False, 3),
                            int(rng.integers(2 ** 63)))
        ec = escape_capacity(A)
        ref = np.array([ec.es[p] / ec.cap for p in A.points])
        worst_wired = max(worst_wired, np.abs(wired_harmonic_measure(A, 24).weights - ref).max())
    ok = worst_sub >= -1e-8 and worst_mono >= -1e-8 and worst_wired <= 1e-3
    _finish(5, ok, f"min submodular gap {worst_sub:.1e}; min monotone gap {worst_mono:.1e}; "
                   f"max |wired(r=24) - Es/cap| = {worst_wired:.1e}", t0, 300)


def test_criterion_06_combinatorial_lemmas():
    t0 = time.time()
    rng = np.random.default_rng(600)
    fails = {"marginal existence": 0, "non-cut marginal": 0, "boundary connectivity": 0}
    for _ in range(500):
        A = random_site_set(RandomSetParams(int(rng.integers(1, 31)), 4, "star_connected", False),
                            int(rng.integers(2 ** 63)))
        fails["marginal existence"] += not lemma_marginal_existence(A)
        fails["non-cut marginal"] += not lemma_noncut_marginal(A)
        fails["boundary connectivity"] += not lemma_boundary_connectivity(A)
    ok = not any(fails.values())
    _finish(6, ok, "failures " + ", ".join(f"{k}={v}" for k, v in fails.items()) + " over 500 sets", t0, 120)


def test_criterion_07_08_strategy_bound_and_psi():
    t0 = time.time()
    rep = exp_rho_ensemble(300, seed=0)
    dt = time.time() - t0
    v7 = rep.verdicts[0]
    worst = v7["detail"]["max_type_i_rho"]
    n_i = sum(r["type"] == "i" for r in rep.rows)
    ok = v7["verdict"] == "pass" and n_i > 0 and dt <= 600
    psi = rep.verdicts[2]["detail"]["psi_hat"]
    record(8, True, f"report-only: ensemble max of min removal price {psi:.3f} vs (2+sqrt3)^2 = "
                    f"{PSI_CONJECTURE:.3f}")
    _finish(7, ok, f"{n_i} type-(i) rows, max rho = {worst:.3f} <= {TYPE_I_BOUND} "
                   f"(<= 20: {worst <= 20}, report-only)", t0, 600)


def test_criterion_09_klein_bottle():
    t0 = time.time()
    rep = exp_klein_ratio((4, 6, 8), scan=True)
    r = {row["n"]: row["r_n"] for row in rep.rows}
    bad = [v["assertion"] for v in rep.verdicts if v["verdict"] != "pass"]
    ok = not bad and len(rep.verdicts) == 5
    _finish(9, ok, f"r_4={r[4]:.4g}, r_6={r[6]:.4g}, r_8={r[8]:.4g}, "
                   f"ln r_8 - ln r_6 = {math.log(r[8] / r[6]):.2f}; scan clean; failed: {bad}", t0, 900)


def test_criterion_10_mn_bruteforce():
    t0 = time.time()
    rep = exp_mn_bruteforce(5)
    vals = {row["n"]: row["M_hat"] for row in rep.rows}
    classes = {row["n"]: row["classes"] for row in rep.rows}
    fixture_ok = classes == MN_CLASSES and all(
        abs(vals[n] - MN_FIXTURE[n]) <= 1e-9 * MN_FIXTURE[n] for n in MN_FIXTURE)
    ok = rep.passed and fixture_ok
    _finish(10, ok, "M_hat = " + ", ".join(f"{vals[n]:.6g}" for n in sorted(vals))
            + f"; matches fixtures: {fixture_ok}", t0, 600)


def test_criterion_11_rates():
    t0 = time.time()
    tree = tree_tunnel_ratio(40)
    tree_ok = abs(tree - TREE_ROOT) <= 1e-6
    ratios, _ = tetration_ratios(5)
    lo, hi = TETRATION_BANDS[5]
    tet_ok = lo <= ratios[5] <= hi
    sv = spiral_values(range(8, 15))
    slope = float(np.polyfit(list(sv), [-math.log(v) for v in sv.values()], 1)[0])
    _finish(11, tree_ok and tet_ok,
            f"tree ratio {tree:.12f} (hard, ok={tree_ok}); tetration k=5 ratio {ratios[5]:.4f} "
            f"vs [{lo}, {hi}] (hard, ok={tet_ok}); spiral slope {slope:.3f} vs {SPIRAL_RATE:.4f} "
            f"(report-only)", t0, 600)


def _battery():
    sets = {
        "pair": SiteSet.from_points([(0, 0), (1, 0)]),
        "cross": SiteSet.from_points([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]),
        "L": SiteSet.from_points([(0, 0), (1, 0), (1, 1), (-1, 2)]),
        "tube4": tube_set(4).points,
        "spiral10": spiral_set(10),
        "tetration4": tetration_set(4),
    }
    rng = np.random.default_rng(1200)
    for i in range(6):
        size = int(rng.integers(3, 13))
        conn = "star_connected" if i % 2 else "any"
        sets[f"random{i}"] = random_site_set(RandomSetParams(size, 3, conn), int(rng.integers(2 ** 63)))
    assert all(len(A) <= 12 and A.radius() <= 6 for A in sets.values())
    return sets


def test_criterion_12_method_cross_validation():
    t0 = time.time()
    worst_ratio = 0.0
    bad = []
    for name, A in _battery().items():
        w = wired_extrapolated(A, tol=1e-7)
        dn = dense_harmonic_measure(A)
        diff = float(np.abs(w.weights - dn.weights).max())
        allowed = max(1e-6, 3 * w.error_estimate)
        worst_ratio = max(worst_ratio, diff / allowed)
        if diff > allowed:
            bad.append(name)
    _finish(12, not bad, f"12 sets; worst diff/allowance = {worst_ratio:.3f}; disagreements: {bad}", t0)
