"""
Why convex surrogates pick the wrong threshold
==============================================

A two-atom toy problem where the hinge and exponential losses are *not*
Fisher consistent for the sign-agreement target: their population risks
have strictly negative slope at the true threshold theta = 1, so their
minimizers sit to the right of it, while the 0-1 risk is minimized at 1
exactly.  This is the motivating example for smoothing the 0-1 loss
itself instead of replacing it with a convex upper bound.
"""

import numpy as np

from smooth_threshold import toy_population_risks

grid = np.round(np.arange(0, 201) * 0.01, 10)
table = toy_population_risks(grid)

d_hinge = np.gradient(table.risk_hinge, grid)
d_exp = np.gradient(table.risk_exp, grid)
at_one = int(np.flatnonzero(grid == 1.0)[0])

print("population risks on theta in [0, 2], step 0.01")
print(f"  0-1 risk   : argmin at theta = {grid[np.argmin(table.risk01)]:.2f}")
print(f"  hinge risk : argmin at theta = {grid[np.argmin(table.risk_hinge)]:.2f}, "
      f"slope at 1 = {d_hinge[at_one]:+.4f}")
print(f"  exp risk   : argmin at theta = {grid[np.argmin(table.risk_exp)]:.2f}, "
      f"slope at 1 = {d_exp[at_one]:+.4f}")
print()
print("both convex surrogates still head downhill at the true threshold,")
print("so minimizing them walks past theta = 1; the 0-1 risk does not.")
