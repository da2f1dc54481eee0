"""Propagating input uncertainty through a human-robot distance.

Run with ``python demos/01_propagation_basics.py``.
"""

import numpy as np

from pmusafe import InputSet, propagate_correlated, propagate_mc
from pmusafe.model import Distance3D, gradient

# A hand 1.5 m from the end effector. Each hand coordinate is known to 1 cm,
# the robot position is taken as exact.
names = ["xH", "yH", "zH", "xR", "yR", "zR"]
inputs = InputSet.independent(names, [1.2, 0.9, 0.0, 0.0, 0.0, 0.0], [0.01, 0.01, 0.01, 0, 0, 0])
model = Distance3D()

print("distance          :", model(inputs.means))

# The gradient of a distance is a unit vector, so the first-order
# uncertainty equals the per-coordinate sigma.
g = gradient(model, inputs.means)
print("sensitivities     :", np.round(g, 6))
lin = propagate_correlated(model, inputs)
print(f"first-order u     : {lin.u_prop:.6f} m, 95% interval {np.round(lin.interval, 4)}")

# Sampling agrees in this near-linear regime.
mc = propagate_mc(model, inputs, 100_000, seed=1)
print(f"Monte Carlo u     : {mc.u_prop:.6f} m, 95% interval {np.round(mc.interval, 4)}")
print(f"expanded (U95)    : {mc.uncertainty('expanded-95'):.6f} m")

# Correlated inputs: a sum and a difference of perfectly correlated terms.
from pmusafe.model import LinearCombination

full = InputSet.gaussian(["x1", "x2"], [0, 0], [[1, 1], [1, 1]])
print("sum, rho=1        :", propagate_correlated(LinearCombination([1, 1]), full).u_prop)
print("difference, rho=1 :", propagate_correlated(LinearCombination([1, -1]), full).u_prop)
