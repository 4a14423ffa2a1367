"""
GraB against random reshuffling
===============================

Both methods run for a fixed number of epochs on a family of shifted
quadratics, with n growing.  Random reshuffling gains a factor n; GraB,
which herds last epoch's centred gradients into the next order, gains n^2.
"""

import numpy as np

from permsgd import harness
from permsgd.herding import herd_greedy, random_centered_unit_batch, random_order_H
from permsgd.objectives import make_shifted_quadratic

###############################################################################
# Herding in isolation
# --------------------
# The herded order keeps every prefix sum short compared with a random one.

rng = np.random.default_rng(0)
batch = random_centered_unit_batch(256, 8, rng)
print(f"random order H = {random_order_H(batch, rng):.2f}")
print(f"greedy herding H = {herd_greedy(batch).achieved_H:.2f}")

###############################################################################
# The measured H on the objective
# -------------------------------
# GraB's step size needs a herding bound; the harness measures it on the
# normalised component gradients at the optimum.

for n in (8, 16, 32, 64):
    o = make_shifted_quadratic(1.0, 0.5, 1.0, n, dim=32, D=1e3)
    print(f"n={n:3d}  H={harness.measured_H(o):.3f}")

###############################################################################
# Sweeping n
# ----------
# Each policy uses its own step-size schedule, so the absolute gaps are not
# comparable at a given n (``ratio`` is GraB over RR).  The slopes are.

common = dict(objective="shifted_quadratic",
              objective_params={"L": 1.0, "mu": 0.5, "nu": 1.0, "dim": 32, "seed": 0, "D": 1e3},
              axis="n", axis_values=[8, 16, 32, 64], epochs=256, averaging="final")
grab = harness.SweepSpec(policy="grab", seeds=1, stepsize={"schedule": "grab"}, **common)
rr = harness.SweepSpec(policy="rr", seeds=500, stepsize={"schedule": "mishchenko"}, **common)
rep = harness.compare_policies(grab, rr)
for p in rep["points"]:
    print(p)

for name, spec in (("grab", grab), ("rr", rr)):
    fit = harness.fit_rate(harness.run_sweep(spec))
    print(f"{name:5s} exponent in n: {fit.exponent:.2f} (r^2 {fit.r_squared:.3f})")
