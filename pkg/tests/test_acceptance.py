"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are
repeated in the terminal summary.  Runtime limits are part of the pass
condition where a criterion states one.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from permsgd import harness
from permsgd.herding import herd_greedy, herd_signwalk, random_centered_unit_batch, random_order_H
from permsgd.objectives import (
    C1,
    C2,
    THM1_INIT_FACTOR,
    make_diverging_quadratic,
    make_f1_quadratic,
    make_f3_quadratic_pm,
    make_shifted_quadratic,
    make_thm1_aggregate,
    make_thm9_nonconvex_pair,
    make_thm9_single_heavy,
)
from permsgd.optimizer import RunConfig, lambert_w0, run_epochs
from permsgd.oracle import (
    affine_epoch_map,
    coupled_recursion_check,
    exhaustive_permutation_value,
    rr_expectation_exact,
    verify_lemmas,
)
from permsgd.shuffler import make_policy


def report(idx, ok, label, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  [{idx}] {label:<44} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# -- 1 -------------------------------------------------------------------------------------------


@pytest.mark.slow
def test_c1_rr_tail_average_K_rate():
    t = time.perf_counter()
    L, mu, nu, n = 1.0, 1 / 64, 1.0, 16
    spec = harness.SweepSpec(
        "f2_piecewise", {"L": L, "mu0": mu, "nu": nu, "n": n}, policy="rr", axis="K",
        axis_values=[128, 256, 512, 1024], seeds=2000, averaging="tail",
        stepsize={"schedule": "tail_average"}, x0=[nu / mu])
    fit = harness.fit_rate(harness.run_sweep(spec))
    dt = time.perf_counter() - t
    ok = -2.3 <= fit.exponent <= -1.7 and fit.r_squared >= 0.97 and dt <= 300
    report(1, ok, "RR tail-average exponent in K",
           f"exponent={fit.exponent:.3f} r2={fit.r_squared:.3f} time={dt:.0f}s")


# -- 2 -------------------------------------------------------------------------------------------


@pytest.mark.slow
def test_c2_grab_vs_rr_n_rate():
    t = time.perf_counter()
    common = dict(objective="shifted_quadratic",
                  objective_params={"L": 1.0, "mu": 0.5, "nu": 1.0, "dim": 32, "seed": 0, "D": 1e3},
                  axis="n", axis_values=[8, 16, 32, 64], epochs=256, averaging="final")
    grab = harness.fit_rate(harness.run_sweep(harness.SweepSpec(
        policy="grab", seeds=1, stepsize={"schedule": "grab"}, **common)))
    rr = harness.fit_rate(harness.run_sweep(harness.SweepSpec(
        policy="rr", seeds=2000, stepsize={"schedule": "mishchenko"}, **common)))
    dt = time.perf_counter() - t
    ok = -2.4 <= grab.exponent <= -1.6 and -1.4 <= rr.exponent <= -0.6 and dt <= 600
    report(2, ok, "GraB vs RR exponent in n",
           f"grab={grab.exponent:.3f} rr={rr.exponent:.3f} time={dt:.0f}s")


# -- 3 -------------------------------------------------------------------------------------------


@pytest.mark.slow
def test_c3_lower_bound_persistence():
    L, nu, n = 1.0, 1.0, 8
    kappa = 2 * C1
    mu = L / kappa
    K = math.ceil(2 * C2 * kappa)
    obj = make_thm1_aggregate(L, mu, nu, n, K)
    etas = np.linspace(1 / (mu * n * K), 1 / (C2 * L * n), 5)
    # the y block is decoupled from x and z, so simulate it alone
    per = harness.rr_persistence(obj.restrict([1]), etas, K, 2000, seed=0)
    bound = THM1_INIT_FACTOR * nu / (mu * math.sqrt(n) * K)
    m, se = per.mean[:, :, 0], per.stderr[:, :, 0]
    # the stated factor (1 - 3 stderr) read literally, and as a 3-stderr band
    literal = np.all(m >= bound * (1 - 3 * se))
    band = np.all(m + 3 * se >= bound)
    z = ((m[:, 1:] - bound) / se[:, 1:]).min()
    report(3, bool(literal and band), "E[y] stays above the lower-bound level",
           f"K={K} min_k mean/bound={(m / bound).min():.3f} min_(k>=1) z={z:.1f}")


# -- 4 -------------------------------------------------------------------------------------------


def test_c4_lemma_suite():
    t = time.perf_counter()
    rep = verify_lemmas()
    dt = time.perf_counter() - t
    ids = {"sign_partial_sums", "central_binomial_ratio", "one_minus_inv_t_power",
           "aux_polynomial_mx2_over_30", "exp_half_quadratic"}
    sub = [r for r in rep if r["lemma_id"] in ids]
    ok = len(sub) == 5 and all(r["pass"] for r in sub) and dt <= 60
    report(4, ok, "exact lemma suite",
           f"{sum(r['pass'] for r in sub)}/5 pass time={dt:.1f}s")


# -- 5 -------------------------------------------------------------------------------------------


def _first_heavy_counterexamples():
    bad = 0
    L, nu = 1.0, 1.0
    for n in (3, 4, 5, 6):
        o = make_thm9_single_heavy(L, nu, n)
        for eta in np.linspace(2 / (n * L), 1 / L, 7):
            res = exhaustive_permutation_value(o, o.x0, eta, n, 1, keep_all=True)
            first = np.array([s[0][0] == 0 for s in res.orders])
            if not res.gaps[first].min() < res.gaps[~first].min():
                bad += 1
    return bad


def _g1_first_counterexamples():
    bad = 0
    L, nu = 1.0, 1.0
    for n in (4, 6):
        mu = L / (8 * n)
        K_nom = math.ceil((L / mu) ** 2 / n)
        o = make_thm9_nonconvex_pair(L, mu, nu, n)
        for eta in np.linspace(1 / (2 * mu * n * K_nom), 2 / (n * L), 7):
            res = exhaustive_permutation_value(o, o.x0, eta, n, 1, keep_all=True)
            head = np.array([set(s[0][: n // 2]) == set(range(n // 2)) for s in res.orders])
            y = res.end_values[:, 0]
            if not (res.gaps[head].max() < res.gaps[~head].min() and y[head].max() < y[~head].min()
                    and y.min() > 0):
                bad += 1
    return bad


def test_c5_permutation_structure():
    t = time.perf_counter()
    a = _first_heavy_counterexamples()
    b = _g1_first_counterexamples()
    dt = time.perf_counter() - t
    report(5, a == 0 and b == 0 and dt <= 120, "exhaustive best-order structure",
           f"single-heavy={a} g1-first={b} counterexamples time={dt:.1f}s")


# -- 6 -------------------------------------------------------------------------------------------


def test_c6_coupled_recursion():
    t = time.perf_counter()
    reps = [coupled_recursion_check(1.0, 1.0, f, trials=10_000, seed=0) for f in (0.1, 0.5, 0.9)]
    dt = time.perf_counter() - t
    viol = sum(r["violation_count"] for r in reps)
    states = min(r["grid"]["states"] for r in reps)
    report(6, viol == 0 and states >= 10_000 and dt <= 10, "coupled two-step recursion",
           f"violations={viol} states={states} time={dt:.1f}s")


# -- 7 -------------------------------------------------------------------------------------------


def _random_quadratic(rng, t):
    kind = t % 5
    if kind == 0:
        return make_f1_quadratic(rng.uniform(0.1, 2), int(rng.integers(1, 4)), int(rng.integers(1, 7)))
    if kind == 1:
        return make_f3_quadratic_pm(rng.uniform(0.5, 2), rng.uniform(0, 2), 2 * int(rng.integers(1, 5)))
    if kind == 2:
        return make_shifted_quadratic(1.0, rng.uniform(0.05, 1), 1.0, int(rng.integers(2, 9)),
                                      dim=int(rng.integers(1, 6)), seed=int(rng.integers(10**6)))
    if kind == 3:
        return make_thm9_single_heavy(rng.uniform(0.5, 2), 1.0, int(rng.integers(2, 8)))
    return make_diverging_quadratic(rng.uniform(0.5, 2), int(rng.integers(1, 6)), 1.0)


def test_c7_closed_form_equivalence():
    t = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(100):
        o = _random_quadratic(rng, i)
        K = int(rng.integers(1, 8))
        eta = rng.uniform(0.01, 0.5) / (o.constants.L * o.n)
        x0 = rng.standard_normal(o.dim) * 3
        tr = run_epochs(RunConfig(o, make_policy("rr", seed=i), eta, K, x0))
        x = x0
        for p in tr.permutations_used:
            M, c = affine_epoch_map(o, p, eta)
            x = M @ x + c
        worst = max(worst, float(np.max(np.abs(x - tr.final))))
    dt = time.perf_counter() - t
    report(7, worst <= 1e-10 and dt <= 10, "run_epochs equals affine closed form",
           f"max|dev|={worst:.2e} time={dt:.2f}s")


# -- 8 -------------------------------------------------------------------------------------------


def _newton_w(x):
    w = 0.5
    for _ in range(100):
        step = (w * math.exp(w) - x) / (math.exp(w) * (w + 1))
        w -= step
        if abs(step) < 1e-17:
            break
    return w


def test_c8_lambert_w():
    xs = [-1 / math.e + 1e-6, 0.0, 0.1, 1.0, math.e, 10.0, 1e6]
    res = [abs(lambert_w0(x) * math.exp(lambert_w0(x)) - x) / max(1.0, abs(x)) for x in xs]
    newton = abs(lambert_w0(1.0) - _newton_w(1.0))
    ok = max(res) <= 1e-12 and newton <= 1e-12
    report(8, ok, "Lambert W0 accuracy", f"max rel residual={max(res):.1e} |W0(1)-newton|={newton:.1e}")


# -- 9 -------------------------------------------------------------------------------------------


def test_c9_rr_exactness():
    L, nu, n, K, eta, S = 1.0, 1.0, 4, 2, 0.1, 100_000
    o = make_f3_quadratic_pm(L, nu, n)
    exact = rr_expectation_exact(o, [0.0], eta, n, K)
    spec = harness.SweepSpec("f3_quadratic_pm", {"L": L, "nu": nu, "n": n}, policy="rr", axis="K",
                             axis_values=[K], seeds=S, stepsize={"fixed": eta}, x0=[0.0])
    r = harness.run_point(spec, K)
    z = (r["mean_gap"] - exact) / r["stderr_gap"]
    report(9, abs(z) <= 4, "Monte Carlo vs exact RR expectation",
           f"exact={exact:.6e} mc={r['mean_gap']:.6e} z={z:+.2f}")


# -- 10 ------------------------------------------------------------------------------------------


def test_c10_herding_quality():
    n, d = 256, 8
    cap = 2 * math.sqrt(2 * d * math.log(2 * n))
    ratios, within = [], 0
    for trial in range(100):
        rng = np.random.default_rng(trial)
        b = random_centered_unit_batch(n, d, rng)
        ratios.append(random_order_H(b, rng) / herd_greedy(b).achieved_H)
        within += herd_signwalk(b, trial).achieved_H <= cap
    med = float(np.median(ratios))
    report(10, med >= 2 and within >= 99, "herding prefix-norm quality",
           f"median ratio={med:.2f} signwalk within {cap:.2f}: {within}/100")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items(), key=lambda kv: int(kv[0].split("_")[1][1:])
                           if kv[0].startswith("test_c") else 0):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
