"""
The spin ansatz as a matrix-free operator
==========================================

Build the gate schedule, push a block of statevectors through it, and compare
the analytic gradient of the sketched objective with finite differences.
"""

import numpy as np

from aqcsketch import dense
from aqcsketch.engine import apply_ansatz, build_structure
from aqcsketch.objective import ObjectiveContext, gradient_sketched, objective_sketched
from aqcsketch.sketch import gaussian_sketch
from aqcsketch.verification import finite_difference

# four qubits, twelve CNOT units: 3n + 4L = 60 angles
s = build_structure(4, 12)
print("parameters:", s.param_count, "gates:", len(s.gates))
print("CNOT placements:", s.cnot_pairs[:6], "...")

rng = np.random.default_rng(0)
theta = rng.uniform(0, 2 * np.pi, s.param_count)
theta_u = rng.uniform(0, 2 * np.pi, s.param_count)

# V(theta) x for a 16 x 3 block, checked against the explicit 16 x 16 matrix
x = rng.standard_normal((16, 3)) + 1j * rng.standard_normal((16, 3))
y = apply_ansatz(s, theta, x.copy())
print("engine vs dense:", np.abs(y - dense.ansatz(s, theta) @ x).max())

# the sketched objective with five normalized Gaussian columns
ctx = ObjectiveContext(s, theta_u, gaussian_sketch(s.dim, 5, seed=1))
print("objective:", objective_sketched(ctx, theta))
print("objective at the target:", objective_sketched(ctx, theta_u))

# one forward/backward sweep gives every partial derivative at once
g = gradient_sketched(ctx, theta)
fd = finite_difference(lambda t: objective_sketched(ctx, t), theta)
print("max relative gradient error:", np.max(np.abs(g - fd) / np.abs(fd)))
