"""
The affine immersion
====================

``f(xi) = kappa(xi) (xi, 1)`` with transversal field ``alpha f`` realizes
the primal connection and the metric of the logarithmic divergence.
"""

import numpy as np

import logdiv as ld
from logdiv.immersion import conormal_conditions, tangent_frame

g = ld.make_ball_log_generator(2, 4.0, [0.0, 0.0], 1.0)
cp = ld.conformal_pair_of(g)

frame = ld.immerse(cp, [0.0, 0.0])
print("at the centre: f =", frame.f, " n* =", frame.n_star)

# %%
# The conormal annihilates the tangent plane and pairs to one with the
# transversal field.  The Gauss formula holds up to rounding.
rng = np.random.default_rng(5)
worst_c = worst_r = 0.0
for p in ld.sample_interior(g.domain, rng, 50):
    worst_c = max(worst_c, *conormal_conditions(ld.immerse(cp, p), tangent_frame(cp, p)))
    worst_r = max(worst_r, ld.realization_residual(cp, p))
print(f"conormal conditions {worst_c:.1e}, realization residual {worst_r:.1e}")

# %%
# With a wrong connection the realization residual is large.
p = np.array([0.3, -0.5])
c = ld.conformal_structure_closed(cp, p)
bent = ld.DualisticCoefficients(p, c.g, c.gamma_lower + 0.1 * np.einsum("km,ijm->ijk", c.g, np.ones((2, 2, 2))),
                                c.gamma_star_lower)
print("residual with Gamma + 0.1:", ld.realization_residual(cp, p, bent))
