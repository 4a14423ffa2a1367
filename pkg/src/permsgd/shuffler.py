"""Per-epoch permutation policies, including offline gradient balancing."""

from __future__ import annotations

import copy
import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import ContractError, GuardrailError, ParameterError
from .herding import HERDERS, VectorBatch

MAX_ENUM_N = 8


class PolicyKind(str, enum.Enum):
    RANDOM_RESHUFFLE = "rr"
    SINGLE_SHUFFLE = "single_shuffle"
    INCREMENTAL = "incremental"
    GRAB_OFFLINE = "grab"
    FIXED = "fixed"
    EXHAUSTIVE_BEST = "exhaustive_best"
    EXHAUSTIVE_WORST = "exhaustive_worst"


_ALIASES = {
    "random_reshuffle": PolicyKind.RANDOM_RESHUFFLE,
    "so": PolicyKind.SINGLE_SHUFFLE,
    "grab_offline": PolicyKind.GRAB_OFFLINE,
    "identity": PolicyKind.INCREMENTAL,
}


def parse_kind(key) -> PolicyKind:
    if isinstance(key, PolicyKind):
        return key
    k = str(key).lower().replace("-", "_")
    if k in _ALIASES:
        return _ALIASES[k]
    try:
        return PolicyKind(k)
    except ValueError:
        try:
            return PolicyKind[k.upper()]
        except KeyError:
            names = sorted({p.value for p in PolicyKind} | set(_ALIASES))
            raise ParameterError(f"unknown policy {key!r}; choose from {names}") from None


@dataclass
class PermutationPolicy:
    """Strategy producing the order of epoch k.

    Parameters
    ----------
    kind : PolicyKind
    seed : int
        Seeds the generator used by the randomised policies.
    order : sequence of int, optional
        The order for ``FIXED``, the initial order for ``GRAB_OFFLINE``,
        or a replay schedule (list of orders, one per epoch) for the
        exhaustive policies once the oracle has chosen it.
    herding : {"greedy", "signwalk"}
        Herding routine used by ``GRAB_OFFLINE``.
    """

    kind: PolicyKind
    seed: int = 0
    order: object = None
    herding: str = "greedy"
    state: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = parse_kind(self.kind)
        if self.herding not in HERDERS:
            raise ParameterError(f"unknown herding routine {self.herding!r}")
        self.reset()

    def reset(self):
        """Restore the freshly seeded state."""
        self.state = {"rng": np.random.default_rng(self.seed)}

    def clone(self) -> "PermutationPolicy":
        return copy.deepcopy(self)

    @property
    def is_random(self) -> bool:
        return self.kind in (PolicyKind.RANDOM_RESHUFFLE, PolicyKind.SINGLE_SHUFFLE)

    @property
    def wants_gradients(self) -> bool:
        return self.kind is PolicyKind.GRAB_OFFLINE


def _as_perm(order, n):
    o = np.asarray(order, dtype=np.int64)
    if o.shape != (n,) or not np.array_equal(np.sort(o), np.arange(n)):
        raise ContractError(f"{list(order)} is not a permutation of range({n})")
    return o


def next_permutation(policy: PermutationPolicy, epoch: int, n: int) -> np.ndarray:
    """Order of epoch ``epoch`` (1-based) as 0-based component ids."""
    kind = policy.kind
    st = policy.state
    if kind is PolicyKind.INCREMENTAL:
        return np.arange(n)
    if kind is PolicyKind.RANDOM_RESHUFFLE:
        return st["rng"].permutation(n)
    if kind is PolicyKind.SINGLE_SHUFFLE:
        if "frozen" not in st:
            st["frozen"] = st["rng"].permutation(n)
        return st["frozen"].copy()
    if kind is PolicyKind.FIXED:
        if policy.order is None:
            raise ParameterError("FIXED policy needs an order")
        return _as_perm(policy.order, n)
    if kind is PolicyKind.GRAB_OFFLINE:
        if "next" in st:
            out = st["next"].copy()
        else:
            # no stored gradients yet: fall back to the initial order
            out = np.arange(n) if policy.order is None else _as_perm(policy.order, n)
        st["last_order"] = out.copy()
        return out
    # exhaustive policies replay a schedule picked by the oracle
    sched = policy.order
    if sched is None:
        raise ParameterError(
            f"{kind.name} needs a schedule; build one with oracle.exhaustive_policy"
        )
    sched = np.asarray(sched, dtype=np.int64)
    if sched.ndim == 1:
        return _as_perm(sched, n)
    return _as_perm(sched[(epoch - 1) % len(sched)], n)


def record_gradients(policy: PermutationPolicy, grads, visit_order=None) -> None:
    """Store one epoch of gradients for ``GRAB_OFFLINE``; no-op for other kinds.

    ``grads[i]`` is the gradient taken at step ``i`` of the epoch, i.e. for
    component ``visit_order[i]`` (default: the order last emitted by
    :func:`next_permutation`).  Rows are re-keyed by component id before
    centring, so the next order refers to component ids.
    """
    if not policy.wants_gradients:
        return
    G = np.asarray(grads, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    if visit_order is None:
        visit_order = policy.state.get("last_order", np.arange(G.shape[0]))
    order = np.asarray(visit_order, dtype=np.int64)
    n = order.shape[0]
    if G.shape[0] != n:
        raise ContractError(f"got {G.shape[0]} gradient rows for an epoch of {n} steps")
    if "dim" in policy.state and policy.state["dim"] != G.shape[1]:
        raise ContractError(
            f"gradient dimension changed from {policy.state['dim']} to {G.shape[1]}"
        )
    _as_perm(order, n)
    by_id = np.empty_like(G)
    by_id[order] = G
    centred = by_id - by_id.mean(axis=0)
    scale = float(np.max(np.linalg.norm(centred, axis=1)))
    if scale > 0:
        centred = centred / scale
        centred -= centred.mean(axis=0)
    batch = VectorBatch(centred, tolerance=1e-8)
    herder = HERDERS[policy.herding]
    if policy.herding == "signwalk":
        seed = int(policy.state["rng"].integers(2**63))
        res = herder(batch, seed)
    else:
        res = herder(batch)
    policy.state["dim"] = G.shape[1]
    policy.state["next"] = res.order.copy()
    policy.state["last_H"] = res.achieved_H
    policy.state["grad_scale"] = scale


def enumerate_all_orders(n: int) -> Iterator[tuple]:
    """All ``n!`` orders of ``range(n)`` in lexicographic order."""
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    if n > MAX_ENUM_N:
        raise GuardrailError(f"refusing to enumerate {n}! = {math.factorial(n)} orders (n > {MAX_ENUM_N})")
    return itertools.permutations(range(n))


def make_policy(key, seed: int = 0, herding: str = "greedy", order=None) -> PermutationPolicy:
    return PermutationPolicy(parse_kind(key), seed=seed, order=order, herding=herding)
