import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permsgd import objectives as ob
from permsgd.errors import ConstructionRegimeError, ParameterError
from permsgd.objectives import (
    C1,
    SignPattern,
    check_objective,
    make_diverging_quadratic,
    make_f1_quadratic,
    make_f2_piecewise,
    make_f3_quadratic_pm,
    make_objective,
    make_shifted_quadratic,
    make_thm1_aggregate,
    make_thm7_coupled,
    make_thm9_nonconvex_pair,
    make_thm9_single_heavy,
    pad_to_even,
)
from permsgd.optimizer import RunConfig, run_epochs
from permsgd.shuffler import make_policy

ZOO = {
    "f1": lambda: make_f1_quadratic(0.7, 3, 4),
    "f2": lambda: make_f2_piecewise(2.0, 2.0 / C1, 0.3, 6),
    "f2_mid": lambda: make_f2_piecewise(1.0, 0.25, 1.0, 4),
    "f3": lambda: make_f3_quadratic_pm(1.5, 0.4, 4),
    "thm1": lambda: make_thm1_aggregate(1.0, 1.0 / 4830, 1.0, 8, 50),
    "thm7": lambda: make_thm7_coupled(2.0, 0.5, 0.5, 4),
    "thm9_pair": lambda: make_thm9_nonconvex_pair(1.0, 1.0 / 40, 1.0, 8),
    "thm9_heavy": lambda: make_thm9_single_heavy(4.0, 1.0, 5),
    "diverging": lambda: make_diverging_quadratic(1.5, 4, 2.0),
    "shifted": lambda: make_shifted_quadratic(1.0, 0.2, 1.0, 6, dim=5, seed=3),
    "padded_f3": lambda: pad_to_even(make_f3_quadratic_pm, 5, L=1.0, nu=1.0),
}


# -- spec examples ----------------------------------------------------------------------


def test_f1_examples():
    o = make_f1_quadratic(1.0, 1, 2)
    assert o.component_grad(0, [3.0])[0] == 3.0
    assert o.value(o.x_star) == 0.0
    o = make_f1_quadratic(0.5, 1, 4)
    tr = run_epochs(RunConfig(o, make_policy("incremental"), 0.1, 1, [1.0]))
    assert tr.final[0] == pytest.approx(0.81450625, abs=1e-15)
    assert o.constants.as_dict() == {"L": 0.5, "mu": 0.5, "tau": 0.0, "nu": 0.0}


def test_f1_rejects_nonpositive_mu():
    with pytest.raises(ParameterError):
        make_f1_quadratic(0.0)


def test_f2_examples():
    o = make_f2_piecewise(2.0, 0.5, 0.3, 4)
    # component 0 carries +nu x
    assert o.component_grad(0, [-1.0])[0] == pytest.approx(-1.7, abs=1e-15)
    assert o.value([0.0]) == 0.0
    assert o.grad([0.0])[0] == 0.0
    L = 3.0
    o = make_f2_piecewise(L, L / 2415, 1.0, 4)
    for x in (0.0, 0.5, 2.0):
        assert o.value([x]) == pytest.approx(L / 2415 * x * x / 2, rel=1e-14)
    assert o.value([-1.0]) == pytest.approx(L / 2)


def test_odd_n_rejected():
    for build in (lambda: make_f2_piecewise(1.0, 0.5, 1.0, 3),
                  lambda: make_f3_quadratic_pm(1.0, 1.0, 5),
                  lambda: make_thm7_coupled(1.0, 0.5, 1.0, 3)):
        with pytest.raises(ParameterError):
            build()


def test_f3_hand_unrolled_epoch():
    o = make_f3_quadratic_pm(1.0, 1.0, 2)
    plus_first = run_epochs(RunConfig(o, make_policy("fixed", order=[0, 1]), 0.1, 1, [0.0]))
    minus_first = run_epochs(RunConfig(o, make_policy("fixed", order=[1, 0]), 0.1, 1, [0.0]))
    # x1 = -0.1, x2 = 0.9 * -0.1 + 0.1
    assert plus_first.final[0] == pytest.approx(0.01, abs=1e-15)
    assert minus_first.final[0] == pytest.approx(-0.01, abs=1e-15)
    mean_sq = (plus_first.final[0] ** 2 + minus_first.final[0] ** 2) / 2
    assert mean_sq == pytest.approx(1e-4, abs=1e-16)


def test_thm1_examples():
    L, mu, nu, n, K = 1.0, 1.0 / 3000, 0.9, 4, 10
    o = make_thm1_aggregate(L, mu, nu, n, K)
    assert o.dim == 3
    block_nu = o.meta["block_nu"]
    assert sum(b * b for b in block_nu) == pytest.approx(nu * nu, rel=1e-15)
    assert o.value([0.0, 0.0, 0.0]) == 0.0
    x = np.array([0.3, -0.2, 0.7])
    blocks = [make_f1_quadratic(mu, 1, n), make_f2_piecewise(L, L / C1, nu / math.sqrt(3), n),
              make_f3_quadratic_pm(L, nu / math.sqrt(3), n)]
    for i in range(n):
        g = np.concatenate([b.component_grad(i, [x[j]]) for j, b in enumerate(blocks)])
        assert np.array_equal(o.component_grad(i, x), g)
    assert o.x0[0] == pytest.approx(nu / mu)
    assert o.x0[1] == pytest.approx(nu / (27000 * mu * math.sqrt(n) * K), rel=1e-15)
    assert o.x0[2] == 0.0


def test_thm1_regime_error():
    with pytest.raises(ConstructionRegimeError):
        make_thm1_aggregate(1.0, 1.0 / 2000, 1.0, 4, 10)


def test_thm7_examples():
    o = make_thm7_coupled(2.0, 0.5, 0.5, 4)
    # first-half component: g_{+1}(y) + g_{-1}(z), curvature L/2 on y >= 0
    assert o.component_grad(0, [1.0, 0.0])[0] == pytest.approx(1.5)
    assert o.component_grad(2, [0.0, 1.0])[1] == pytest.approx(1.5)
    for y in (-1.0, 0.4):
        pair = (o.component_value(0, [y, y]) + o.component_value(2, [y, y])) / 2
        assert pair == pytest.approx(o.value([y, y]), rel=1e-15)
    with pytest.raises(ParameterError):
        make_thm7_coupled(2.0, 1.5, 0.5, 4)


def test_thm9_pair_examples():
    o = make_thm9_nonconvex_pair(1.0, 0.1, 0.7, 4)
    assert o.value([2.0]) == pytest.approx(0.2, rel=1e-14)
    assert o.pos_curv[-1, 0] < 0
    assert o.class_tag == "F_PL"
    with pytest.raises(ConstructionRegimeError):
        make_thm9_nonconvex_pair(1.0, 0.5, 1.0, 4)


def test_thm9_pair_swap_identity():
    # (g2, g1) at positions j, j+1 versus (g1, g2): two-step algebra gives
    # y_a - y_b = eta * prod(1 - eta a_later) * 2 eta mu nu
    L, mu, nu, n, eta = 1.0, 1.0 / 40, 1.0, 4, 0.05
    o = make_thm9_nonconvex_pair(L, mu, nu, n)
    curv = {c: (L if c < n // 2 else -(L - 2 * mu)) for c in range(n)}
    for j in range(n - 1):
        others = [1, 3]
        s_a = others[:j] + [2, 0] + others[j:]
        s_b = others[:j] + [0, 2] + others[j:]
        y_a = run_epochs(RunConfig(o, make_policy("fixed", order=s_a), eta, 1, [0.3])).final[0]
        y_b = run_epochs(RunConfig(o, make_policy("fixed", order=s_b), eta, 1, [0.3])).final[0]
        tail = np.prod([1 - eta * curv[c] for c in s_a[j + 2:]])
        assert y_a - y_b == pytest.approx(eta * tail * 2 * eta * mu * nu, rel=1e-9)
        assert y_a - y_b > 0


def test_thm9_single_heavy_examples():
    o = make_thm9_single_heavy(4.0, 1.0, 4)
    assert o.value([1.0]) == pytest.approx(0.25, rel=1e-14)
    assert o.value(o.x_star) == 0.0 and o.f_star == 0.0
    assert o.constants.mu == pytest.approx(4.0 / 8)
    with pytest.raises(ParameterError):
        make_thm9_single_heavy(1.0, 1.0, 1)


def test_diverging_examples():
    L = 2.0
    o = make_diverging_quadratic(L, 4, 3.0)
    tr = run_epochs(RunConfig(o, make_policy("incremental"), 1 / L, 1))
    assert tr.final[0] == pytest.approx(3.0)
    tr = run_epochs(RunConfig(o, make_policy("incremental"), 1 / (2 * L), 1, record="all"))
    assert tr.inner_points[0, 0] == 0.0
    tr = run_epochs(RunConfig(o, make_policy("incremental"), 1.3 / L, 6))
    mags = np.abs(tr.end_points[:, 0])
    assert np.all(np.diff(mags) >= 0)


# -- invariant suite -----------------------------------------------------------------------


@pytest.mark.parametrize("key", sorted(ZOO))
def test_invariant_suite(key):
    rep = check_objective(ZOO[key](), points=1000, rng=np.random.default_rng(1))
    assert rep.passed, rep


def test_check_catches_false_declaration():
    o = make_f3_quadratic_pm(1.0, 1.0, 4)
    lie = ob.FiniteSumObjective(o.neg_curv, o.pos_curv, o.linear, ob.Constants(1.0, 1.0, 0.0, 0.5),
                                o.x_star, 0.0)
    assert not check_objective(lie, points=200).passed


def test_aggregate_separable_at_many_points():
    L, mu, nu, n, K = 1.0, 1.0 / 2415, 1.0, 6, 7
    o = make_thm1_aggregate(L, mu, nu, n, K)
    blocks = [make_f1_quadratic(mu, 1, n), make_f2_piecewise(L, L / C1, nu / math.sqrt(3), n),
              make_f3_quadratic_pm(L, nu / math.sqrt(3), n)]
    X = np.random.default_rng(7).standard_normal((10_000, 3)) * 5
    F = o.values(X)
    Fb = sum(b.values(X[:, [j]]) for j, b in enumerate(blocks))
    assert np.max(np.abs(F - Fb)) <= 1e-12 * np.maximum(1, np.abs(F)).max()
    for i in (0, n - 1):
        G = o.grad_batch(np.full(len(X), i), X)
        Gb = np.column_stack([b.grad_batch(np.full(len(X), i), X[:, [j]])[:, 0]
                              for j, b in enumerate(blocks)])
        assert np.max(np.abs(G - Gb)) <= 1e-12


@pytest.mark.parametrize("key", ["f2", "thm7", "thm1"])
def test_gradient_continuous_at_kink(key):
    o = ZOO[key]()
    eps = 1e-12
    for i in range(o.n):
        left = o.component_grad(i, np.full(o.dim, -eps))
        right = o.component_grad(i, np.full(o.dim, eps))
        assert np.allclose(left, o.linear[i], atol=1e-10)
        assert np.allclose(right, o.linear[i], atol=1e-10)
        v0 = o.component_value(i, np.zeros(o.dim))
        assert abs(o.component_value(i, np.full(o.dim, -eps)) - v0) < 1e-10


def test_pad_to_even():
    o = pad_to_even(make_f3_quadratic_pm, 5, L=1.0, nu=1.0)
    assert o.n == 5
    assert np.all(o.linear[-1] == 0) and np.all(o.pos_curv[-1] == 0)
    base = make_f3_quadratic_pm(1.0, 1.0, 4)
    for x in (-1.0, 0.3, 2.0):
        assert o.value([x]) == pytest.approx(base.value([x]) * 4 / 5, rel=1e-14)
    assert pad_to_even(make_f3_quadratic_pm, 4, L=1.0, nu=1.0).n == 4


def test_sign_pattern():
    p = SignPattern.from_permutation([2, 0, 3, 1])
    assert p.signs == (-1, 1, -1, 1)
    assert list(p.partial_sums()) == [-1, 0, -1, 0]
    with pytest.raises(ParameterError):
        SignPattern((1, 1, -1))
    with pytest.raises(ParameterError):
        SignPattern((1, 1, -1, 1))


def test_zoo_by_key():
    o = make_objective("thm1_aggregate", {"L": 1.0, "mu": 1 / 2415, "nu": 1.0, "n": 4, "K": 3})
    assert o.name == "thm1_aggregate"
    with pytest.raises(ParameterError):
        make_objective("nope", {})


def test_objective_is_immutable():
    o = make_f3_quadratic_pm(1.0, 1.0, 2)
    with pytest.raises(ValueError):
        o.linear[0, 0] = 5.0


@settings(max_examples=60, deadline=None)
@given(st.floats(-50, 50, allow_nan=False), st.integers(1, 5).map(lambda h: 2 * h),
       st.floats(0.1, 10), st.floats(0, 3))
def test_f2_mean_is_asymmetric_quadratic(x, n, L, nu):
    o = make_f2_piecewise(L, L / 7, nu, n)
    c = L if x < 0 else L / 7
    assert o.value([x]) == pytest.approx(c * x * x / 2, rel=1e-12, abs=1e-12)
    assert o.grad([x])[0] == pytest.approx(c * x, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.floats(-5, 5, allow_nan=False), st.floats(0.1, 5))
def test_single_heavy_mean(n, z, L):
    o = make_thm9_single_heavy(L, 1.0, n)
    assert o.value([z]) == pytest.approx(L / (4 * n) * z * z, rel=1e-10, abs=1e-12)
