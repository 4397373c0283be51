"""Logarithmic divergences, their conformal and affine-immersion forms, and the induced geometry."""

from .divergences import (ConformalPair, bregman, bregman_as_conformal, bregman_limit, conformal,
                          conformal_pair_of, divergence_of, inverse_T, l_alpha, self_dual, transform_T)
from .dual_geometry import (ExpansionFit, GeodesicTrace, conjugate_psi, defect_grid, exp_map, fit_H_expansion,
                            from_dual, geodesic, mixed_fourth_derivative, mixed_inner_product,
                            pythagorean_defect_H, to_dual)
from .dualistic import (CurvatureTensor, DualisticCoefficients, conformal_structure_closed,
                        constant_curvature_criterion, curvature_closed, curvature_fd, induced_structure_fd,
                        projective_flatness_check, sectional_curvature)
from .errors import (ConvergenceError, DegeneratePlaneError, DomainError, GeneratorKindError, LogArgumentError,
                     NotPositiveDefiniteError)
from .generators import (Domain, Generator, check_alpha_exp_concavity, make_ball_log_generator,
                         make_quadratic_bregman_generator, parse_generator_id, sample_interior)
from .immersion import ImmersionFrame, geometric_divergence, immerse, realization_residual

__version__ = "0.1.0"
