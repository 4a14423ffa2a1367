"""Herding: reorder centred vectors so that every prefix sum stays small."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class VectorBatch:
    """Centred vectors, one per row, with norms at most one.

    Parameters
    ----------
    vectors : array_like, shape (n, d)
    tolerance : float
        Slack allowed on the zero-sum and unit-norm contracts.
    """

    vectors: np.ndarray
    tolerance: float = 1e-9

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] == 0:
            raise ContractError(f"expected a non-empty (n, d) matrix, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def validate(self):
        if not np.all(np.isfinite(self.vectors)):
            raise ContractError("batch contains non-finite entries")
        total = float(np.linalg.norm(self.vectors.sum(axis=0)))
        if total > self.tolerance:
            raise ContractError(f"vectors must sum to zero; |sum| = {total:.3g}")
        big = float(np.max(np.linalg.norm(self.vectors, axis=1)))
        if big > 1.0 + self.tolerance:
            raise ContractError(f"vectors must have norm <= 1; max norm = {big:.6g}")

    @classmethod
    def from_raw(cls, vectors, tolerance: float = 1e-9) -> tuple["VectorBatch", float]:
        """Centre and rescale arbitrary rows; returns the batch and the scale used."""
        v = np.array(vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        v = v - v.mean(axis=0)
        scale = float(np.max(np.linalg.norm(v, axis=1))) if v.size else 0.0
        if scale > 0:
            v = v / scale
        # recentering after division leaves only rounding-level residue
        v = v - v.mean(axis=0)
        return cls(v, tolerance), scale


@dataclass(frozen=True)
class HerdingResult:
    order: np.ndarray
    achieved_H: float

    def __post_init__(self):
        o = np.asarray(self.order, dtype=np.int64)
        o.setflags(write=False)
        object.__setattr__(self, "order", o)


def _check_order(order, n):
    order = np.asarray(order)
    if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
        raise ContractError(f"order is not a permutation of range({n})")
    return order.astype(np.int64)


def prefix_norm_profile(batch: VectorBatch, order) -> np.ndarray:
    """Norms ``||z_{order[0]} + ... + z_{order[k-1]}||`` for k = 1..n."""
    order = _check_order(order, batch.n)
    return np.linalg.norm(np.cumsum(batch.vectors[order], axis=0), axis=1)


def _result(batch, order):
    return HerdingResult(order, float(np.max(prefix_norm_profile(batch, order))))


TIE_TOL = 1e-12


def herd_greedy(batch: VectorBatch, tie_tol: float = TIE_TOL) -> HerdingResult:
    """Append the unused vector that minimises the new prefix-sum norm.

    Ties go to the lowest index, so the output is a deterministic function
    of the input.  Scores within ``tie_tol`` of the minimum count as tied:
    vectors have norm at most one, so differences that small are rounding
    noise from the caller's centring.  Cost is O(n^2 d).
    """
    batch.validate()
    Z = batch.vectors
    n = batch.n
    sq = np.einsum("ij,ij->i", Z, Z)
    run = np.zeros(batch.dim)
    used = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    for k in range(n):
        # ||run + z||^2 - ||run||^2 = 2<run, z> + ||z||^2
        score = 2.0 * (Z @ run) + sq
        score[used] = np.inf
        j = int(np.flatnonzero(score <= score.min() + tie_tol)[0])
        order[k] = j
        used[j] = True
        run += Z[j]
    return _result(batch, order)


def herd_signwalk(batch: VectorBatch, rng_seed: int = 0) -> HerdingResult:
    """Self-balancing sign walk, then positives first and negatives reversed.

    Vectors are visited in a seeded random order; each receives the sign
    that keeps the signed running sum shorter.  Listing the ``+`` vectors in
    visit order and then the ``-`` vectors in reverse visit order gives
    prefix sums bounded by the signed-walk and the plain-walk discrepancies.
    """
    batch.validate()
    Z = batch.vectors
    rng = np.random.default_rng(rng_seed)
    visit = rng.permutation(batch.n)
    run = np.zeros(batch.dim)
    plus, minus = [], []
    for j in visit:
        v = Z[j]
        if np.dot(run + v, run + v) <= np.dot(run - v, run - v):
            run += v
            plus.append(j)
        else:
            run -= v
            minus.append(j)
    order = np.array(plus + minus[::-1], dtype=np.int64)
    return _result(batch, order)


HERDERS = {"greedy": herd_greedy, "signwalk": herd_signwalk}


def random_order_H(batch: VectorBatch, rng: np.random.Generator) -> float:
    """Max prefix norm under a uniformly random order; the no-herding baseline."""
    return float(np.max(prefix_norm_profile(batch, rng.permutation(batch.n))))


def random_centered_unit_batch(n: int, d: int, rng: np.random.Generator) -> VectorBatch:
    """Random unit directions, centred, then rescaled so the largest norm is one."""
    g = rng.standard_normal((n, d))
    batch, _ = VectorBatch.from_raw(g / np.linalg.norm(g, axis=1, keepdims=True))
    return batch
