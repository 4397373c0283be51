"""
Dual coordinates and geodesics
==============================

Primal geodesics are straight lines in the original chart and dual
geodesics are straight lines in ``eta = Dphi / (1 - alpha Dphi . xi)``.
Both run at a non-constant speed along their lines.
"""

import numpy as np

import logdiv as ld
from logdiv.dual_geometry import DUAL, PRIMAL, fit_time_change, time_change_targets

g = ld.make_ball_log_generator(2, 4.0, [0.0, 0.0], 1.0)

xi = np.array([0.5, 0.0])
eta = ld.to_dual(g, xi)
print("eta(0.5, 0) =", eta, " expected (-4/17, 0) =", (-4 / 17, 0.0))
print("back again  =", ld.from_dual(g, eta))
print("psi(eta)    =", ld.conjugate_psi(g, eta), " -log(17/4) =", -np.log(17 / 4))

# %%
# Self-dual form: the divergence written in mixed coordinates.
y = np.array([-0.2, 0.4])
print("self-dual form", ld.self_dual(g, y, eta), " L(y : xi)", ld.l_alpha(g, y, xi))

# %%
# Geodesics from one point, in both families.
q, v = np.array([0.2, 0.3]), np.array([0.6, -0.8])
times = np.linspace(0, 0.3, 31)
primal = ld.geodesic(PRIMAL, g, q, v, times)
dual = ld.geodesic(DUAL, g, q, v, times)
print("primal off-line distance:", ld.projective_flatness_check(primal.points).residual)
print("dual off-line distance in eta:", ld.projective_flatness_check(ld.to_dual(g, dual.points)).residual)

# %%
# The time change ``s(t)`` along the primal line has Taylor coefficients
# ``1, alpha Dphi.v`` and a cubic term fixed by the Hessian.
short = ld.geodesic(PRIMAL, g, q, v, np.linspace(0, 0.1, 41))
coef = fit_time_change(short)
print("fitted  s(t) coefficients:", coef[:3])
print("predicted                :", (1.0, *time_change_targets(g, q, v, PRIMAL)))
