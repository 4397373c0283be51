"""
Logarithmic, conformal and geometric divergences
================================================

A logarithmic divergence becomes a conformal Bregman divergence after the
monotone map ``T(x) = (exp(alpha x) - 1) / alpha``.  The affine immersion
reproduces the same number as a height above a tangent hyperplane.
"""

import numpy as np

import logdiv as ld

# phi(xi) = log(4 - |xi|^2) on the disc of radius 2
g = ld.make_ball_log_generator(2, 4.0, [0.0, 0.0], alpha=1.0)
cp = ld.conformal_pair_of(g)

x, y = np.array([0.5, 0.0]), np.zeros(2)
L = ld.l_alpha(g, x, y)
print("L(x : y)            =", L, " log(16/15) =", np.log(16 / 15))
print("T(L)                =", ld.transform_T(g.alpha, L))
print("kappa(x) B(x : y)   =", ld.conformal(cp, x, y))
print("geometric rho       =", ld.geometric_divergence(g, x, y))

# %%
# The divergence is not symmetric.
print("L(y : x)            =", ld.l_alpha(g, y, x))

# %%
# Over many random pairs the three forms agree to rounding error.
rng = np.random.default_rng(0)
xs, ys = ld.sample_interior(g.domain, rng, 1000), ld.sample_interior(g.domain, rng, 1000)
gap = ld.transform_T(1.0, ld.l_alpha(g, xs, ys)) - ld.conformal(cp, xs, ys)
print("max |T(L) - D_conf| over 1000 pairs:", np.max(np.abs(gap)))

# %%
# As alpha shrinks the logarithmic divergence approaches the Bregman
# divergence of -phi, with a gap proportional to alpha.
for a in (1e-2, 5e-3, 2.5e-3):
    print(f"alpha={a:<7g} gap={np.max(np.abs(ld.l_alpha(g, xs, ys, alpha=a) - ld.bregman_limit(g, xs, ys))):.4e}")
