"""
Induced geometry and constant sectional curvature
=================================================

Any smooth divergence induces a metric and a pair of dual connections
through its mixed derivatives on the diagonal.  For the logarithmic
divergence the primal curvature is constant and equal to ``-alpha``.
"""

import numpy as np

import logdiv as ld
from logdiv.dual_geometry import random_unit_tangent

p = np.array([0.3, -0.6])

for alpha in (0.5, 1.0, 2.0):
    g = ld.make_ball_log_generator(2, 4.0, [0.0, 0.0], alpha)
    cp = ld.conformal_pair_of(g)
    D = ld.divergence_of(g)

    fd = ld.induced_structure_fd(D, p)
    closed = ld.conformal_structure_closed(cp, p)
    print(f"alpha={alpha}: |g_fd - g| = {np.max(np.abs(fd.g - closed.g)):.1e},"
          f" |Gamma_fd - Gamma| = {np.max(np.abs(fd.gamma - closed.gamma)):.1e}")

    v, w = random_unit_tangent(np.random.default_rng(1), closed.g), np.array([0.2, 1.0])
    sec_closed = ld.sectional_curvature(closed, ld.curvature_closed(cp, p), v, w)
    sec_fd = ld.sectional_curvature(closed, ld.curvature_fd(D, p), v, w)
    print(f"          sectional curvature: closed {sec_closed:.10f}, finite differences {sec_fd:.6f}")

# %%
# A Bregman divergence is dually flat.
q = ld.make_quadratic_bregman_generator(2)
R = ld.curvature_fd(ld.divergence_of(q), p)
print("quadratic potential, max |R| =", np.max(np.abs(R.r)))

# %%
# Constant curvature shows up as ``1/kappa - lambda phi_c`` being affine for
# ``lambda = -alpha`` and not otherwise.
cp = ld.conformal_pair_of(ld.make_ball_log_generator(2, 4.0, [0.0, 0.0], 1.0))
pts = ld.sample_interior(cp.domain, np.random.default_rng(2), 100)
for lam in (-1.0, 0.0):
    report = ld.constant_curvature_criterion(cp, lam, pts)
    print(f"lambda={lam:+.0f}: max second derivative {report.max_second_derivative:.3g}")
