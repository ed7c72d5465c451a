"""
What the standardised statistic does and does not see
======================================================

Standardising with the sample mean and the symmetric inverse root of the
scatter estimate removes location exactly. A general linear map A does
not cancel; it acts as a rotation U of the null sample, which is why the
statistic is invariant in law rather than affine invariant.
"""

import numpy as np

from ecfgof import FamilySpec, moment_estimate, t_psi_composite
from ecfgof.numerics import inv_sqrt, sqrtm

rng = np.random.default_rng(3)
normal = FamilySpec("normal")
x = rng.standard_normal((40, 3)) @ rng.standard_normal((3, 3))
x0 = rng.standard_normal((40, 3))
theta = moment_estimate(x, normal)
t = t_psi_composite(x, x0, theta)

shifted = x + [100.0, -3.0, 7.0]
print("shifted data:      ", t_psi_composite(shifted, x0, moment_estimate(shifted, normal)) - t)

a = rng.standard_normal((3, 3))
ax = x @ a.T
print("A x against x0:    ", t_psi_composite(ax, x0, moment_estimate(ax, normal)) - t)

v = theta.v_hat.matrix
u = sqrtm(v).matrix @ a.T @ inv_sqrt(a @ v @ a.T).matrix
print("U is orthogonal:   ", np.abs(u @ u.T - np.eye(3)).max())
print("x against U x0:    ",
      t_psi_composite(x, x0 @ u.T, theta) - t_psi_composite(ax, x0, moment_estimate(ax, normal)))
