"""
The Pythagorean defect and its curvature expansion
==================================================

Take a primal geodesic ``r(t1)`` and a dual geodesic ``p(t2)`` from ``q``.
``H = D[r : p] - D[r : q] - D[q : p]`` vanishes when the two directions are
orthogonal.  Otherwise its Taylor coefficients carry the curvature.
"""

import numpy as np

import logdiv as ld
from logdiv.dual_geometry import g_orthogonalize, h_expansion_coefficients, random_unit_tangent
from logdiv.dualistic import closed_structure

g = ld.make_ball_log_generator(2, 4.0, [0.0, 0.0], 1.0)
q = np.array([0.1, 0.2])
metric = closed_structure(g, q).g
rng = np.random.default_rng(4)

v = random_unit_tangent(rng, metric)
w = random_unit_tangent(rng, metric)
w_perp = g_orthogonalize(metric, v, w)

ts = np.linspace(0.01, 0.1, 10)
print("orthogonal pair: max |H| =", np.max(np.abs(ld.defect_grid(g, q, v, w_perp, ts, ts))))
print("generic pair:    max |H| =", np.max(np.abs(ld.defect_grid(g, q, v, w, ts, ts))))

# %%
# Fit ``H`` on a small grid and compare with the series
# ``-<v,w> t1 t2 + alpha <v,w> (|v|^2 t1^3 t2 + |w|^2 t1 t2^3) / 3 - alpha <v,w>^2 t1^2 t2^2 / 2``.
fit = ld.fit_H_expansion(g, q, v, w)
target = h_expansion_coefficients(g.alpha, v @ metric @ v, w @ metric @ w, v @ metric @ w)
for name in ("c11", "c31", "c13", "c22"):
    print(f"{name}: fitted {getattr(fit, name): .8f}   series {target[name]: .8f}")

# %%
# The mixed fourth derivative at the origin isolates the curvature term.
vw = v @ metric @ w
print("d^4 H / dt1^2 dt2^2 =", ld.mixed_fourth_derivative(g, q, v, w), " -2 alpha <v,w>^2 =", -2 * vw**2)

# %%
# For a Bregman divergence the defect is exactly bilinear.
quad = ld.make_quadratic_bregman_generator(2)
H = ld.defect_grid(quad, q, v, w, ts, ts)
print("Bregman: max |H + (v.w) t1 t2| =", np.max(np.abs(H + (v @ w) * np.outer(ts, ts))))
