"""
Random reshuffling: the K^-2 rate of the tail average
======================================================

The tail-average step size is capped at ``1/(sqrt(2) L n)`` until the
logarithmic branch takes over.  While the cap is active the step is fixed
and the gap sits on a plateau; the K^-2 behaviour only shows up once the
step starts shrinking with K.  This script walks through both regimes on
the piecewise quadratic with a kink at the optimum.
"""

import math

import numpy as np

from permsgd import harness
from permsgd.optimizer import stepsize_tail_average

L, nu, n = 1.0, 1.0, 16

###############################################################################
# Where does the cap stop binding?
# --------------------------------
# With a large start distance the cap holds for thousands of epochs.

for mu in (1 / 64, 1 / 4):
    print(f"mu = {mu}")
    for K in (256, 1024, 4096, 16384, 65536):
        eta = stepsize_tail_average(L, mu, nu, nu / mu, n, K)
        print(f"  K={K:6d}  eta={eta:.5f}  capped={math.isclose(eta, 1 / (math.sqrt(2) * L * n))}")

###############################################################################
# The plateau
# -----------
# At fixed step the gap stops moving with K.

mu = 1 / 4
spec = harness.SweepSpec("f2_piecewise", {"L": L, "mu0": mu, "nu": nu, "n": n}, policy="rr",
                         axis="K", axis_values=[128, 256, 512], seeds=200, averaging="tail",
                         stepsize={"schedule": "tail_average"}, x0=[nu / mu])
for r in harness.run_sweep(spec):
    print(f"K={r['axis_value']:6.0f}  eta={r['eta']:.4f}  gap={r['mean_gap']:.3e} +/- {r['stderr_gap']:.1e}")

###############################################################################
# The log branch
# --------------
# Past the cap the fitted exponent approaches -2 (the remaining gap to -2
# is the squared logarithm in the step size).

spec.axis_values = [2048, 4096, 8192, 16384]
rows = harness.run_sweep(spec)
for r in rows:
    print(f"K={r['axis_value']:6.0f}  eta={r['eta']:.5f}  gap={r['mean_gap']:.3e} +/- {r['stderr_gap']:.1e}")
fit = harness.fit_rate(rows, r2_floor=0.0)
print(f"exponent {fit.exponent:.3f}, r^2 {fit.r_squared:.4f}")

# dividing out log^2 K removes most of the remaining curvature
g = np.array([r["mean_gap"] for r in rows])
K = np.array(spec.axis_values, dtype=float)
slope = np.polyfit(np.log(K), np.log(g / np.log(K) ** 2), 1)[0]
print(f"exponent of gap / log^2 K: {slope:.3f}")
