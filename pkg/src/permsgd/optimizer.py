"""Constant-step permutation SGD, the step-size schedules and iterate averaging."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError, ParameterError
from .objectives import FiniteSumObjective
from .shuffler import PermutationPolicy, next_permutation, record_gradients

DIVERGENCE_NORM = 1e12


@dataclass
class RunConfig:
    """One SGD run.

    Parameters
    ----------
    objective : FiniteSumObjective
    policy : PermutationPolicy
        Cloned and reseeded by :func:`run_epochs`; the caller's copy is untouched.
    eta : float
    epochs : int
    x0 : array_like, optional
        Defaults to the objective's attached start, else the origin.
    record : {"end", "all"}
        ``"all"`` also keeps every inner iterate.
    seed : int, optional
        Overrides the policy seed.
    """

    objective: FiniteSumObjective
    policy: PermutationPolicy
    eta: float
    epochs: int
    x0: object = None
    record: str = "end"
    seed: int | None = None

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ParameterError(f"eta must be positive and finite, got {self.eta}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ParameterError(f"epochs must be a positive integer, got {self.epochs}")
        self.epochs = int(self.epochs)
        if self.record not in ("end", "all"):
            raise ParameterError(f"record must be 'end' or 'all', got {self.record!r}")
        if self.x0 is None:
            x0 = self.objective.x0 if self.objective.x0 is not None else np.zeros(self.objective.dim)
        else:
            x0 = self.x0
        x0 = np.array(x0, dtype=float).reshape(-1)
        if x0.shape != (self.objective.dim,):
            raise ParameterError(
                f"x0 has dimension {x0.shape[0]}, objective has {self.objective.dim}"
            )
        self.x0 = x0


@dataclass
class EpochTrace:
    """End-of-epoch iterates of one run.

    ``end_points[k]`` is the start of epoch ``k + 1``; the last row is the
    output of the final epoch.  A diverged run stops early, so it has fewer
    than ``K + 1`` rows.
    """

    end_points: np.ndarray
    permutations_used: list
    seed: int
    diverged: bool = False
    grad_counts: np.ndarray | None = None
    inner_points: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def epochs_run(self) -> int:
        return self.end_points.shape[0] - 1

    @property
    def final(self) -> np.ndarray:
        return self.end_points[-1]


class AveragingScheme:
    """Nonnegative weights ``alpha_1 .. alpha_{K+1}`` over end-of-epoch iterates."""

    def __init__(self, weights, name: str = "custom"):
        w = np.asarray(weights, dtype=float).reshape(-1)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ContractError("averaging weights must be finite and nonnegative")
        if not w.sum() > 0:
            raise ContractError("averaging weights must not all be zero")
        self.weights = w
        self.name = name

    def __len__(self):
        return self.weights.shape[0]

    def __repr__(self):
        return f"AveragingScheme({self.name}, K={len(self) - 1})"

    @classmethod
    def final(cls, K: int) -> "AveragingScheme":
        w = np.zeros(K + 1)
        w[-1] = 1.0
        return cls(w, "final")

    @classmethod
    def average(cls, K: int) -> "AveragingScheme":
        w = np.ones(K + 1)
        w[0] = 0.0
        return cls(w, "average")

    @classmethod
    def tail(cls, K: int) -> "AveragingScheme":
        # 1-based k from ceil(K/2)+1 to K+1, i.e. the last floor(K/2)+1 rows
        w = np.zeros(K + 1)
        w[-(K // 2 + 1):] = 1.0
        return cls(w, "tail")

    @classmethod
    def by_name(cls, name: str, K: int) -> "AveragingScheme":
        try:
            return {"final": cls.final, "average": cls.average, "tail": cls.tail}[name](K)
        except KeyError:
            raise ParameterError(f"unknown averaging scheme {name!r}") from None


def weighted_average(trace: EpochTrace, scheme: AveragingScheme) -> np.ndarray:
    """``sum_k alpha_k x_0^k / sum_k alpha_k``; infinite for a diverged trace."""
    pts = trace.end_points
    if trace.diverged:
        return np.full(pts.shape[1], np.inf)
    if len(scheme) != pts.shape[0]:
        raise ContractError(f"scheme has {len(scheme)} weights, trace has {pts.shape[0]} rows")
    w = scheme.weights
    return (w @ pts) / w.sum()


def run_epochs(config: RunConfig) -> EpochTrace:
    """Run ``K`` epochs of ``x <- x - eta * grad f_{sigma_k(i)}(x)``.

    The run halts and flags divergence once an iterate is non-finite or
    its norm exceeds ``1e12``.
    """
    obj = config.objective
    policy = config.policy.clone()
    if config.seed is not None:
        policy.seed = int(config.seed)
    policy.reset()
    n, d, K, eta = obj.n, obj.dim, config.epochs, config.eta
    neg, pos, lin = obj.neg_curv, obj.pos_curv, obj.linear
    keep_all = config.record == "all"

    ends = [config.x0.copy()]
    perms = []
    counts = np.zeros(n, dtype=np.int64)
    inner = [] if keep_all else None
    grads = np.empty((n, d)) if policy.wants_gradients else None
    x = config.x0.copy()
    diverged = False
    for k in range(1, K + 1):
        sigma = next_permutation(policy, k, n)
        perms.append(sigma.copy())
        for i, c in enumerate(sigma):
            g = np.where(x < 0, neg[c], pos[c]) * x + lin[c]
            counts[c] += 1
            if grads is not None:
                grads[i] = g
            x = x - eta * g
            if keep_all:
                inner.append(x.copy())
        ends.append(x.copy())
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_NORM:
            diverged = True
            break
        if grads is not None:
            record_gradients(policy, grads, sigma)
    return EpochTrace(
        np.array(ends), perms, policy.seed, diverged, counts,
        None if inner is None else np.array(inner),
        {"eta": eta, "epochs": K, "policy": policy.kind.value},
    )


def final_gap(obj: FiniteSumObjective, trace: EpochTrace,
              scheme: AveragingScheme | None = None) -> float:
    if trace.diverged:
        return math.inf
    x = trace.final if scheme is None else weighted_average(trace, scheme)
    return obj.gap(x)


# -- step sizes ---------------------------------------------------------------------------


def _clamped_log(arg: float, where: str) -> float:
    """``max{1, log(arg)}``, warning when the floor is engaged."""
    if not arg > 0:
        raise ParameterError(f"{where}: log argument must be positive, got {arg}")
    val = math.log(arg)
    if val < 1.0:
        warnings.warn(
            f"{where}: log argument {arg:.4g} is below e; using max(1, log) = 1",
            RuntimeWarning, stacklevel=3,
        )
        return 1.0
    return val


def _positive(**kw):
    for k, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise ParameterError(f"{k} must be positive and finite, got {v}")


def stepsize_mishchenko_strcvx(L, mu, nu, D, n, K) -> float:
    """RR final-iterate step ``min{2/(Ln), log(mu^3 n D^2 K^2/(L nu^2)) / (mu n K)}``.

    The log is floored at 1 (with a warning) outside the large-K regime.
    """
    _positive(L=L, mu=mu, nu=nu, D=D, n=n, K=K)
    lg = _clamped_log(mu**3 * n * D**2 * K**2 / (L * nu**2), "stepsize_mishchenko_strcvx")
    return min(2.0 / (L * n), lg / (mu * n * K))


def stepsize_tail_average(L, mu, nu, D, n, K) -> float:
    """RR tail-average step ``min{1/(sqrt2 L n), 9 max{1, log(.)} / (mu n K)}``."""
    _positive(L=L, mu=mu, nu=nu, D=D, n=n, K=K)
    arg = mu**3 * n * D**2 * K**2 / (L * nu**2)
    lg = max(1.0, math.log(arg))
    return min(1.0 / (math.sqrt(2.0) * L * n), 9.0 * lg / (mu * n * K))


_INV_E = math.exp(-1.0)


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function, ``w exp(w) = x`` with ``w >= -1``.

    Halley iteration started from ``log(1 + x)`` for ``x >= 0`` and from the
    branch-point series for ``-1/e <= x < 0``.
    """
    x = float(x)
    if math.isnan(x):
        raise DomainError("lambert_w0 of NaN")
    if x < -_INV_E:
        # allow rounding error in the caller's -1/e
        if x < -_INV_E - 1e-15:
            raise DomainError(f"lambert_w0 is undefined below -1/e, got {x}")
        x = -_INV_E
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    if x == -_INV_E:
        return -1.0
    if x > 0:
        w = math.log1p(x)
        if x > 3:
            # asymptotic start is closer for large x
            lx = math.log(x)
            w = lx - math.log(lx)
    else:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w_new = w - step
        if abs(step) <= 1e-16 * (1.0 + abs(w_new)):
            w = w_new
            break
        w = w_new
    return w


def stepsize_grab(F0_gap, L, mu, nu, H, n, K) -> float:
    """GraB step ``(2/(mu n K)) W0((F0_gap + nu^2/L) mu^3 n^2 K^2 / (192 H^2 L^2 nu^2))``."""
    _positive(L=L, mu=mu, nu=nu, H=H, n=n, K=K)
    if F0_gap < 0:
        raise ParameterError(f"F0_gap must be nonnegative, got {F0_gap}")
    arg = (F0_gap + nu**2 / L) * mu**3 * n**2 * K**2 / (192.0 * H**2 * L**2 * nu**2)
    return 2.0 / (mu * n * K) * lambert_w0(arg)


SCHEDULES = {
    "mishchenko": stepsize_mishchenko_strcvx,
    "tail_average": stepsize_tail_average,
    "grab": stepsize_grab,
}


# -- export ---------------------------------------------------------------------------------


def write_trace_csv(trace: EpochTrace, path) -> None:
    """Long format: one row per (epoch, coordinate)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "coord", "value"])
        for k, row in enumerate(trace.end_points):
            for j, v in enumerate(row):
                w.writerow([k, j, repr(float(v))])


def trace_summary(obj: FiniteSumObjective, trace: EpochTrace) -> dict:
    K = trace.epochs_run
    out = {
        "objective": obj.name,
        "seed": trace.seed,
        "epochs_run": K,
        "diverged": trace.diverged,
        "final_gap": final_gap(obj, trace),
        "averaged_gaps": {},
    }
    if not trace.diverged:
        for name in ("final", "average", "tail"):
            out["averaged_gaps"][name] = obj.gap(
                weighted_average(trace, AveragingScheme.by_name(name, K)))
    return out


def write_trace_summary(obj, trace, path) -> dict:
    s = trace_summary(obj, trace)
    with open(path, "w") as fh:
        json.dump(s, fh, indent=2, default=_json_default)
    return s


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))
