import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permsgd.errors import ContractError, GuardrailError, ParameterError
from permsgd.objectives import make_f3_quadratic_pm, make_thm9_single_heavy
from permsgd.optimizer import RunConfig, run_epochs
from permsgd.oracle import exhaustive_policy
from permsgd.shuffler import (
    PolicyKind,
    enumerate_all_orders,
    make_policy,
    next_permutation,
    parse_kind,
    record_gradients,
)


def test_incremental_is_identity():
    p = make_policy("incremental")
    for k in range(1, 5):
        assert list(next_permutation(p, k, 4)) == [0, 1, 2, 3]


def test_rr_replay():
    a, b = make_policy("rr", seed=42), make_policy("rr", seed=42)
    for k in range(1, 20):
        assert np.array_equal(next_permutation(a, k, 7), next_permutation(b, k, 7))
    a.reset()
    c = make_policy("rr", seed=42)
    assert np.array_equal(next_permutation(a, 1, 7), next_permutation(c, 1, 7))


def test_rr_uniform_over_24_orders():
    p = make_policy("rr", seed=2024)
    N = 100_000
    index = {o: i for i, o in enumerate(itertools.permutations(range(4)))}
    counts = np.zeros(24)
    for k in range(N):
        counts[index[tuple(next_permutation(p, k + 1, 4).tolist())]] += 1
    q = 1 / 24
    sigma = math.sqrt(N * q * (1 - q))
    assert np.max(np.abs(counts - N * q)) <= 5 * sigma


def test_single_shuffle_frozen():
    p = make_policy("single_shuffle", seed=5)
    first = next_permutation(p, 1, 9)
    for k in range(2, 6):
        assert np.array_equal(next_permutation(p, k, 9), first)


def test_fixed_policy_validation():
    assert list(next_permutation(make_policy("fixed", order=[2, 0, 1]), 1, 3)) == [2, 0, 1]
    with pytest.raises(ContractError):
        next_permutation(make_policy("fixed", order=[0, 0, 1]), 1, 3)
    with pytest.raises(ParameterError):
        next_permutation(make_policy("fixed"), 1, 3)


def test_parse_kind_aliases():
    assert parse_kind("RANDOM_RESHUFFLE") is PolicyKind.RANDOM_RESHUFFLE
    assert parse_kind("grab") is PolicyKind.GRAB_OFFLINE
    with pytest.raises(ParameterError):
        parse_kind("flipflop")
    with pytest.raises(ParameterError):
        make_policy("grab", herding="bansal")


def test_grab_first_epoch_uses_initial_order():
    assert list(next_permutation(make_policy("grab"), 1, 4)) == [0, 1, 2, 3]
    assert list(next_permutation(make_policy("grab", order=[3, 1, 2, 0]), 1, 4)) == [3, 1, 2, 0]


def test_grab_alternates_on_pm_nu():
    # at x = 0 every f3 gradient is +nu or -nu
    o = make_f3_quadratic_pm(1.0, 0.5, 6)
    p = make_policy("grab")
    sigma = next_permutation(p, 1, 6)
    record_gradients(p, o.component_grads(np.zeros(1))[sigma])
    nxt = next_permutation(p, 2, 6)
    signs = np.sign(o.linear[nxt, 0])
    assert np.all(signs[1:] != signs[:-1])
    assert sorted(nxt.tolist()) == list(range(6))


def test_record_gradients_examples():
    p = make_policy("grab")
    next_permutation(p, 1, 3)
    record_gradients(p, np.ones((3, 2)))
    assert list(next_permutation(p, 2, 3)) == [0, 1, 2]
    p = make_policy("grab")
    next_permutation(p, 1, 2)
    g = np.array([[0.3, -0.4]])
    record_gradients(p, np.vstack([g, -g]))
    assert sorted(next_permutation(p, 2, 2).tolist()) == [0, 1]
    assert p.state["last_H"] == pytest.approx(1.0)


def test_record_gradients_keyed_by_component():
    # component 0 has gradient g0, component 1 has g1; visited as (1, 0)
    g0, g1 = np.array([1.0, 0.0]), np.array([0.0, 3.0])
    a = make_policy("grab", order=[1, 0])
    next_permutation(a, 1, 2)
    record_gradients(a, np.vstack([g1, g0]))
    b = make_policy("grab")
    next_permutation(b, 1, 2)
    record_gradients(b, np.vstack([g0, g1]))
    assert np.array_equal(next_permutation(a, 2, 2), next_permutation(b, 2, 2))
    assert a.state["grad_scale"] == pytest.approx(b.state["grad_scale"])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(1, 4), st.integers(0, 2**31))
def test_grab_state_independent_of_storage_order(n, d, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, d))
    visit = rng.permutation(n)
    a = make_policy("grab")
    next_permutation(a, 1, n)
    record_gradients(a, G)
    b = make_policy("grab", order=visit)
    next_permutation(b, 1, n)
    record_gradients(b, G[visit])
    assert np.array_equal(next_permutation(a, 2, n), next_permutation(b, 2, n))


def test_record_gradients_errors():
    p = make_policy("grab")
    next_permutation(p, 1, 3)
    with pytest.raises(ContractError):
        record_gradients(p, np.ones((2, 1)))
    record_gradients(p, np.arange(6.0).reshape(3, 2))
    next_permutation(p, 2, 3)
    with pytest.raises(ContractError):
        record_gradients(p, np.ones((3, 3)))
    rr = make_policy("rr")
    record_gradients(rr, np.ones((3, 1)))
    assert "next" not in rr.state


def test_enumerate_all_orders():
    assert list(enumerate_all_orders(1)) == [(0,)]
    three = list(enumerate_all_orders(3))
    assert three == sorted(three) and len(three) == 6
    assert len(set(enumerate_all_orders(4))) == 24
    with pytest.raises(GuardrailError):
        enumerate_all_orders(9)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_exhaustive_best_single_heavy(n):
    L = 1.0
    o = make_thm9_single_heavy(L, 1.0, n)
    for eta in np.linspace(2 / (n * L), 1 / L, 3):
        pol = exhaustive_policy(o, o.x0, eta, 1)
        assert pol.kind is PolicyKind.EXHAUSTIVE_BEST
        assert next_permutation(pol, 1, n)[0] == 0


def test_exhaustive_policy_replays_through_run_epochs():
    o = make_thm9_single_heavy(1.0, 1.0, 4)
    eta = 0.7
    best = exhaustive_policy(o, o.x0, eta, 2, best=True)
    worst = exhaustive_policy(o, o.x0, eta, 2, best=False)
    gb = o.gap(run_epochs(RunConfig(o, best, eta, 2)).final)
    gw = o.gap(run_epochs(RunConfig(o, worst, eta, 2)).final)
    assert gb <= gw
    with pytest.raises(ParameterError):
        next_permutation(make_policy("exhaustive_best"), 1, 4)
