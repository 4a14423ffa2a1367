"""Command-line entry point: ``python -m permsgd <subcommand>``.

Every subcommand exits 0 iff the checks it ran passed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import harness, herding, objectives, optimizer, oracle
from .errors import ParameterError
from .shuffler import make_policy


def _dump(obj, path):
    text = json.dumps(obj, indent=2, default=optimizer._json_default, allow_nan=True)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _load_params(s):
    if not s:
        return {}
    if s.startswith("@"):
        with open(s[1:]) as fh:
            return json.load(fh)
    return json.loads(s)


def cmd_run(a) -> int:
    obj = objectives.make_objective(a.objective, _load_params(a.params))
    x0 = None if a.x0 is None else json.loads(a.x0)
    init = None if a.initial_order is None else json.loads(a.initial_order)
    pol = make_policy(a.policy, seed=a.seed, herding=a.herding, order=init)
    if x0 is None:
        x0 = obj.x0 if obj.x0 is not None else np.zeros(obj.dim)
    x0 = np.asarray(x0, dtype=float)
    if a.eta is None:
        eta = harness.schedule_eta({"schedule": a.schedule}, obj, a.epochs, x0)
    else:
        eta = a.eta
    tr = optimizer.run_epochs(optimizer.RunConfig(obj, pol, eta, a.epochs, x0, seed=a.seed))
    if a.out:
        optimizer.write_trace_csv(tr, a.out)
    summary = optimizer.trace_summary(obj, tr)
    summary["eta"] = eta
    _dump(summary, a.summary)
    return 0


def cmd_sweep(a) -> int:
    spec = harness.SweepSpec.from_json(a.spec)
    if a.workers:
        spec.workers = a.workers
    rows = harness.run_sweep(spec)
    harness.write_sweep_csv(rows, a.out)
    return 0 if all(r["divergences"] == 0 for r in rows) or a.allow_divergence else 1


def cmd_fit_rate(a) -> int:
    rows = harness.read_sweep_csv(a.csv)
    fit = harness.fit_rate(rows)
    ok = True
    if a.expect_min is not None:
        ok &= fit.exponent >= a.expect_min
    if a.expect_max is not None:
        ok &= fit.exponent <= a.expect_max
    if a.min_r2 is not None:
        ok &= fit.r_squared >= a.min_r2
    out = fit.to_dict()
    out["pass"] = bool(ok)
    _dump(out, a.out)
    return 0 if ok else 1


def cmd_verify_lemmas(a) -> int:
    report = oracle.verify_lemmas(coupled_trials=a.trials, seed=a.seed)
    _dump(report, a.out)
    return 0 if all(r["pass"] for r in report) else 1


def cmd_verify_herding(a) -> int:
    if a.input:
        raw = np.load(a.input) if a.input.endswith(".npy") else np.loadtxt(a.input, delimiter=",", ndmin=2)
        batch, _ = herding.VectorBatch.from_raw(raw)
    else:
        batch = herding.random_centered_unit_batch(a.n, a.d, np.random.default_rng(a.seed))
    if a.variant == "greedy":
        res = herding.herd_greedy(batch)
    else:
        res = herding.herd_signwalk(batch, a.seed)
    prof = herding.prefix_norm_profile(batch, res.order)
    with open(a.out, "w") as fh:
        fh.write("k,prefix_norm\n")
        for k, v in enumerate(prof, 1):
            fh.write(f"{k},{float(v)!r}\n")
    ok = abs(float(prof.max()) - res.achieved_H) <= 1e-12 and prof[-1] <= 1e-8
    if a.max_h is not None:
        ok &= res.achieved_H <= a.max_h
    print(json.dumps({"n": batch.n, "d": batch.dim, "variant": a.variant,
                      "achieved_H": res.achieved_H, "pass": bool(ok)}))
    return 0 if ok else 1


def cmd_compare(a) -> int:
    sa = harness.SweepSpec.from_json(a.spec_a)
    sb = harness.SweepSpec.from_json(a.spec_b)
    rep = harness.compare_policies(sa, sb)
    _dump(rep, a.out)
    finite = all(math.isfinite(p["gap_a"]) and math.isfinite(p["gap_b"]) for p in rep["points"])
    return 0 if finite else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="permsgd", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="single run; trace CSV and JSON summary")
    r.add_argument("--objective", required=True, choices=sorted(objectives.OBJECTIVES))
    r.add_argument("--params", default="{}", help="JSON object or @file.json")
    r.add_argument("--policy", default="rr")
    r.add_argument("--herding", default="greedy", choices=sorted(herding.HERDERS))
    r.add_argument("--initial-order", help="JSON list, initial order for grab")
    r.add_argument("--eta", type=float)
    r.add_argument("--schedule", default="tail_average", choices=sorted(optimizer.SCHEDULES))
    r.add_argument("--epochs", type=int, required=True)
    r.add_argument("--x0", help="JSON list")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", help="trace CSV path")
    r.add_argument("--summary", help="summary JSON path (default stdout)")
    r.set_defaults(fn=cmd_run)

    s = sub.add_parser("sweep", help="SweepSpec JSON to results CSV")
    s.add_argument("spec")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.add_argument("--allow-divergence", action="store_true")
    s.set_defaults(fn=cmd_sweep)

    f = sub.add_parser("fit-rate", help="sweep CSV to RateFit JSON")
    f.add_argument("csv")
    f.add_argument("--out")
    f.add_argument("--expect-min", type=float)
    f.add_argument("--expect-max", type=float)
    f.add_argument("--min-r2", type=float)
    f.set_defaults(fn=cmd_fit_rate)

    v = sub.add_parser("verify-lemmas", help="run the lemma certification suite")
    v.add_argument("--out")
    v.add_argument("--trials", type=int, default=10_000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(fn=cmd_verify_lemmas)

    h = sub.add_parser("verify-herding", help="prefix-norm profile CSV of a herded batch")
    h.add_argument("--input", help=".npy or CSV of raw vectors (centred and scaled here)")
    h.add_argument("--n", type=int, default=256)
    h.add_argument("--d", type=int, default=8)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--variant", default="greedy", choices=sorted(herding.HERDERS))
    h.add_argument("--max-h", type=float)
    h.add_argument("--out", required=True)
    h.set_defaults(fn=cmd_verify_herding)

    c = sub.add_parser("compare", help="two SweepSpec files to a comparison report")
    c.add_argument("spec_a")
    c.add_argument("spec_b")
    c.add_argument("--out")
    c.set_defaults(fn=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except (ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
