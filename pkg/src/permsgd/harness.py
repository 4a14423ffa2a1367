"""Seeded parameter sweeps, rate fitting and policy comparison."""

from __future__ import annotations

import csv
import hashlib
import inspect
import json
import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractError, FitError, ParameterError
from .herding import VectorBatch, herd_greedy
from .objectives import OBJECTIVES, FiniteSumObjective, make_objective
from .optimizer import (
    AveragingScheme,
    RunConfig,
    run_epochs,
    stepsize_grab,
    stepsize_mishchenko_strcvx,
    stepsize_tail_average,
    weighted_average,
)
from .oracle import component_classes, distinct_arrangements
from .shuffler import PolicyKind, make_policy, parse_kind

log = logging.getLogger(__name__)

AXES = ("K", "n", "eta")
SEED_CHUNK = 256


def derive_seed(master: int, axis_value, index: int) -> int:
    """Per-run seed from (master seed, axis value, seed index).

    Independent of scheduling: any worker computing the same triple draws
    the same stream.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<q", int(master)))
    h.update(struct.pack("<d", float(axis_value)))
    h.update(struct.pack("<q", int(index)))
    return int.from_bytes(h.digest(), "little") >> 1


@dataclass
class SweepSpec:
    """One sweep over K, n or eta.

    ``stepsize`` is ``{"fixed": value}`` or ``{"schedule": name, ...}`` with
    name in ``mishchenko``, ``tail_average``, ``grab``.  Optional schedule
    keys: ``D`` (default ``||x0 - x*||``), ``H`` (default measured by greedy
    herding of the normalised centred gradients at ``x*``).
    """

    objective: str
    objective_params: dict = field(default_factory=dict)
    policy: str = "rr"
    policy_params: dict = field(default_factory=dict)
    axis: str = "K"
    axis_values: list = field(default_factory=list)
    seeds: int = 100
    averaging: str = "final"
    stepsize: dict = field(default_factory=lambda: {"schedule": "tail_average"})
    epochs: int | None = None
    x0: list | None = None
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.objective not in OBJECTIVES:
            raise ParameterError(f"unknown objective {self.objective!r}")
        parse_kind(self.policy)
        if self.axis not in AXES:
            raise ParameterError(f"axis must be one of {AXES}, got {self.axis!r}")
        v = [float(a) for a in self.axis_values]
        if len(v) < 1 or any(b <= a for a, b in zip(v, v[1:])):
            raise ParameterError("axis_values must be non-empty and strictly increasing")
        if self.seeds < 1:
            raise ParameterError("seeds must be positive")
        if self.axis != "K" and not self.epochs:
            raise ParameterError("epochs is required unless the axis is K")
        if self.axis == "eta":
            pass
        elif "fixed" not in self.stepsize and "schedule" not in self.stepsize:
            raise ParameterError("stepsize needs a 'fixed' value or a 'schedule' name")
        AveragingScheme.by_name(self.averaging, 1)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown SweepSpec keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SweepSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RateFit:
    exponent: float
    intercept: float
    r_squared: float
    stderr: float
    points: int
    dropped: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


# -- building one sweep point -------------------------------------------------------------------


def build_objective(spec: SweepSpec, axis_value) -> FiniteSumObjective:
    params = dict(spec.objective_params)
    accepted = inspect.signature(OBJECTIVES[spec.objective]).parameters
    if spec.axis == "n":
        params["n"] = int(axis_value)
    if "K" in accepted and "K" not in params:
        params["K"] = epochs_for(spec, axis_value)
    return make_objective(spec.objective, params)


def epochs_for(spec: SweepSpec, axis_value) -> int:
    return int(axis_value) if spec.axis == "K" else int(spec.epochs)


def start_point(spec: SweepSpec, obj: FiniteSumObjective) -> np.ndarray:
    if spec.x0 is not None:
        return np.array(spec.x0, dtype=float).reshape(obj.dim)
    if obj.x0 is not None:
        return obj.x0.copy()
    return np.zeros(obj.dim)


def measured_H(obj: FiniteSumObjective, x=None) -> float:
    """Greedy-herding bound on the normalised centred component gradients at ``x``."""
    x = obj.x_star if x is None else x
    batch, scale = VectorBatch.from_raw(obj.component_grads(x))
    if scale == 0:
        return 1.0
    return herd_greedy(batch).achieved_H


def resolve_stepsize(spec: SweepSpec, obj: FiniteSumObjective, K: int, x0, axis_value) -> float:
    if spec.axis == "eta":
        return float(axis_value)
    return schedule_eta(spec.stepsize, obj, K, x0)


def schedule_eta(st: dict, obj: FiniteSumObjective, K: int, x0) -> float:
    """Step size from ``{"fixed": v}`` or ``{"schedule": name, ...}``."""
    if "fixed" in st:
        return float(st["fixed"])
    c = obj.constants
    name = st["schedule"]
    D = float(st.get("D", np.linalg.norm(x0 - obj.x_star)))
    if name == "mishchenko":
        return stepsize_mishchenko_strcvx(c.L, c.mu, c.nu, D, obj.n, K)
    if name == "tail_average":
        return stepsize_tail_average(c.L, c.mu, c.nu, D, obj.n, K)
    if name == "grab":
        H = float(st["H"]) if "H" in st else measured_H(obj)
        return stepsize_grab(obj.gap(x0), c.L, c.mu, c.nu, H, obj.n, K)
    raise ParameterError(f"unknown step-size schedule {name!r}")


def _rr_orders(seed: int, K: int, n: int) -> np.ndarray:
    # same draws as PermutationPolicy(RANDOM_RESHUFFLE, seed) inside run_epochs
    rng = np.random.default_rng(seed)
    return np.stack([rng.permutation(n) for _ in range(K)])


def _so_orders(seed: int, K: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.broadcast_to(rng.permutation(n), (K, n))


def simulate_lanes(obj: FiniteSumObjective, orders: np.ndarray, eta: float, x0,
                   scheme: AveragingScheme):
    """Many trajectories with prescribed orders, shape (S, K, n); compiled loop."""
    perms = np.ascontiguousarray(np.transpose(orders, (1, 2, 0)).astype(np.int64))
    final, avg, div = _kernels.sgd_lanes(
        perms, obj.neg_curv, obj.pos_curv, obj.linear,
        np.asarray(x0, dtype=float), float(eta), scheme.weights)
    return final.T.copy(), avg.T.copy(), div


def run_point(spec: SweepSpec, axis_value) -> dict:
    """Gap statistics over all seeds at one axis value."""
    obj = build_objective(spec, axis_value)
    K = epochs_for(spec, axis_value)
    x0 = start_point(spec, obj)
    eta = resolve_stepsize(spec, obj, K, x0, axis_value)
    scheme = AveragingScheme.by_name(spec.averaging, K)
    kind = parse_kind(spec.policy)
    seeds = [derive_seed(spec.master_seed, axis_value, i) for i in range(spec.seeds)]
    gaps = np.empty(spec.seeds)
    div = np.zeros(spec.seeds, dtype=bool)
    if kind in (PolicyKind.RANDOM_RESHUFFLE, PolicyKind.SINGLE_SHUFFLE):
        draw = _rr_orders if kind is PolicyKind.RANDOM_RESHUFFLE else _so_orders
        for lo in range(0, spec.seeds, SEED_CHUNK):
            chunk = seeds[lo:lo + SEED_CHUNK]
            orders = np.stack([draw(s, K, obj.n) for s in chunk])
            _, avg, dv = simulate_lanes(obj, orders, eta, x0, scheme)
            gaps[lo:lo + len(chunk)] = obj.values(avg) - obj.f_star
            div[lo:lo + len(chunk)] = dv
    else:
        pol = make_policy(kind, **spec.policy_params)
        for i, s in enumerate(seeds):
            tr = run_epochs(RunConfig(obj, pol, eta, K, x0, seed=s))
            div[i] = tr.diverged
            gaps[i] = math.inf if tr.diverged else obj.gap(weighted_average(tr, scheme))
    gaps[div] = math.inf
    ok = gaps[np.isfinite(gaps)]
    S = ok.size
    mean = float(np.mean(ok)) if S else math.inf
    se = float(np.std(ok, ddof=1) / math.sqrt(S)) if S > 1 else 0.0
    if div.any():
        mean = math.inf
    return {
        "axis": spec.axis,
        "axis_value": axis_value,
        "eta": eta,
        "epochs": K,
        "n": obj.n,
        "seeds": spec.seeds,
        "mean_gap": mean,
        "stderr_gap": se,
        "median_gap": float(np.median(gaps)),
        "divergences": int(div.sum()),
    }


def run_sweep(spec: SweepSpec) -> list[dict]:
    """One row per axis value, in axis order, independent of the worker count."""
    spec.validate()
    values = list(spec.axis_values)
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as ex:
            rows = list(ex.map(lambda v: run_point(spec, v), values))
    else:
        rows = [run_point(spec, v) for v in values]
    return rows


SWEEP_COLUMNS = ["axis", "axis_value", "eta", "epochs", "n", "seeds", "mean_gap",
                 "stderr_gap", "median_gap", "divergences"]


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, SWEEP_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(r[k])) if isinstance(r[k], float) else r[k])
                        for k in SWEEP_COLUMNS})


def read_sweep_csv(path) -> list[dict]:
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            row = dict(r)
            for k in ("axis_value", "eta", "mean_gap", "stderr_gap", "median_gap"):
                if k in row and row[k] not in (None, ""):
                    row[k] = float(row[k])
            for k in ("epochs", "n", "seeds", "divergences"):
                if k in row and row[k] not in (None, ""):
                    row[k] = int(float(row[k]))
            out.append(row)
    return out


# -- rate fitting -------------------------------------------------------------------------------


def _ols(x, y):
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    m = len(x)
    sxx = float(((x - x.mean()) ** 2).sum())
    se = math.sqrt(ss_res / (m - 2) / sxx) if m > 2 and sxx > 0 else 0.0
    return float(coef[0]), float(coef[1]), min(1.0, max(0.0, r2)), se


def fit_rate(table, min_points: int = 4, r2_floor: float = 0.98) -> RateFit:
    """OLS slope of log(mean_gap) against log(axis_value).

    Non-finite or nonpositive gaps are excluded.  If r^2 falls below
    ``r2_floor`` the smallest axis value is dropped once (the exclusion is
    logged and reported), provided ``min_points`` remain.
    """
    pts = sorted((float(r["axis_value"]), float(r["mean_gap"])) for r in table)
    pts = [(a, g) for a, g in pts if math.isfinite(g) and g > 0 and a > 0]
    if len(pts) < min_points:
        raise FitError(f"need at least {min_points} finite positive points, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, icpt, r2, se = _ols(x, y)
    dropped = []
    if r2 < r2_floor and len(pts) - 1 >= min_points:
        log.info("fit r^2 %.4f < %.2f; dropping smallest axis value %g", r2, r2_floor, pts[0][0])
        dropped.append(pts[0][0])
        slope, icpt, r2, se = _ols(x[1:], y[1:])
    return RateFit(slope, icpt, r2, se, len(pts) - len(dropped), dropped)


def compare_policies(spec_a: SweepSpec, spec_b: SweepSpec) -> dict:
    """Run both sweeps and report per-point gap ratios (a / b) and both fits."""
    if (spec_a.axis != spec_b.axis or list(map(float, spec_a.axis_values))
            != list(map(float, spec_b.axis_values))):
        raise ContractError("specs must share the axis and its values")
    if spec_a.objective != spec_b.objective or spec_a.objective_params != spec_b.objective_params:
        raise ContractError("specs must share the objective")
    rows_a = run_sweep(spec_a)
    rows_b = run_sweep(spec_b)
    out = {"axis": spec_a.axis, "policies": [spec_a.policy, spec_b.policy], "points": []}
    for ra, rb in zip(rows_a, rows_b):
        ratio = ra["mean_gap"] / rb["mean_gap"] if rb["mean_gap"] > 0 else math.nan
        out["points"].append({"axis_value": ra["axis_value"], "gap_a": ra["mean_gap"],
                              "gap_b": rb["mean_gap"], "ratio": ratio})
    for key, rows in (("fit_a", rows_a), ("fit_b", rows_b)):
        try:
            out[key] = fit_rate(rows).to_dict()
        except FitError as exc:
            out[key] = {"error": str(exc)}
    out["rows_a"] = rows_a
    out["rows_b"] = rows_b
    return out


# -- lower-bound persistence ---------------------------------------------------------------------


@dataclass
class Persistence:
    etas: np.ndarray
    mean: np.ndarray  # (E, K + 1, d)
    stderr: np.ndarray  # (E, K + 1, d)
    seeds: int


def _side_map(curv, lin, eta):
    # compose x -> (1 - eta a) x - eta b along each arrangement; the
    # threshold is the smallest start keeping every step input on this side
    P, n, d = curv.shape
    mult = np.ones((P, d))
    offs = np.zeros((P, d))
    lo = np.full((P, d), -np.inf)
    hi = np.full((P, d), np.inf)
    ok = np.ones((P, d), dtype=bool)
    for i in range(n):
        with np.errstate(divide="ignore", invalid="ignore"):
            root = np.where(mult > 0, -offs / mult, np.nan)
        lo = np.maximum(lo, root)
        hi = np.minimum(hi, root)
        step = 1.0 - eta * curv[:, i]
        ok &= step > 0
        mult = step * mult
        offs = step * offs - eta * lin[:, i]
    return mult, offs, lo, hi, ok


def _arrangement_maps(obj, reps, arr, etas):
    lin = obj.linear[reps][arr]  # (P, n, d)
    P, n, d = lin.shape
    maps = np.empty((etas.size, P, d, 6))
    for e, eta in enumerate(etas):
        mp, op, lo, _, okp = _side_map(obj.pos_curv[reps][arr], lin, eta)
        mn, on, _, hi, okn = _side_map(obj.neg_curv[reps][arr], lin, eta)
        # a nonpositive step factor breaks monotonicity; disable that side
        maps[e, ..., 0], maps[e, ..., 1] = mp, op
        maps[e, ..., 2] = np.where(okp, lo, np.inf)
        maps[e, ..., 3], maps[e, ..., 4] = mn, on
        maps[e, ..., 5] = np.where(okn, hi, -np.inf)
    return maps


def rr_persistence(obj: FiniteSumObjective, etas, K: int, seeds: int, x0=None,
                   seed: int = 0, stepwise: bool = False) -> Persistence:
    """Monte-Carlo mean of every end-of-epoch iterate under random reshuffling.

    Uses the class-arrangement law of a uniform permutation and one shared
    draw per lane and epoch for all step sizes.  Memory is O(E K d), so a
    caller interested in one coordinate of a separable objective should
    pass ``obj.restrict([j])``.

    Each arrangement's epoch is precomposed into one affine map per side of
    the kink; lanes whose epoch crosses it are stepped.  ``stepwise=True``
    forces the step-by-step kernel (same draws, agreement up to rounding).
    """
    labels, reps = component_classes(obj)
    arr = np.array(distinct_arrangements(labels), dtype=np.int64)
    if arr.shape[0] > 50_000:
        raise ParameterError(f"{arr.shape[0]} class arrangements; too many to tabulate")
    x0 = obj.x0 if x0 is None else np.asarray(x0, dtype=float)
    etas = np.asarray(etas, dtype=float)
    E, d = etas.size, obj.dim
    mean = np.zeros((E, K + 1, d))
    var = np.zeros((E, K + 1, d))
    x0 = np.asarray(x0, dtype=float).reshape(d)
    if not stepwise:
        maps = _arrangement_maps(obj, reps, arr, etas)
        _kernels.rr_mean_trajectory_fast(
            arr, obj.neg_curv[reps], obj.pos_curv[reps], obj.linear[reps], maps,
            x0, etas, int(seeds), int(K), int(seed), mean, var)
    else:
        _kernels.rr_mean_trajectory(
            arr, obj.neg_curv[reps], obj.pos_curv[reps], obj.linear[reps],
            x0, etas, int(seeds), int(K), int(seed), mean, var)
    return Persistence(etas, mean, np.sqrt(var / seeds), int(seeds))
