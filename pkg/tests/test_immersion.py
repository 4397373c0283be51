import numpy as np
import pytest

from logdiv import (GeneratorKindError, bregman_as_conformal, conformal, conformal_pair_of,
                    conformal_structure_closed, geometric_divergence, immerse, l_alpha,
                    make_ball_log_generator, realization_residual, sample_interior, transform_T)
from logdiv.dualistic import DualisticCoefficients
from logdiv.immersion import conormal_conditions, tangent_frame, transversality_det


class TestFrame:
    def test_centre(self, ball):
        fr = immerse(ball, [0.0, 0.0])
        np.testing.assert_allclose(fr.f, [0.0, 0.0, 0.25], atol=1e-15)
        np.testing.assert_allclose(fr.n_field, [0.0, 0.0, 0.25], atol=1e-15)
        np.testing.assert_allclose(fr.n_star, [0.0, 0.0, 4.0], atol=1e-15)
        assert fr.n_star @ fr.n_field == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_conormal_conditions(self, alpha, rng):
        g = make_ball_log_generator(2, 4.0, [0.2, -0.1], alpha)
        cp = conformal_pair_of(g)
        for p in sample_interior(g.domain, rng, 50):
            fr = immerse(cp, p)
            pairing, tangency = conormal_conditions(fr, tangent_frame(cp, p))
            assert pairing <= 1e-12 and tangency <= 1e-10
            np.testing.assert_allclose(fr.n_field, alpha * fr.f, rtol=0, atol=0)

    def test_alpha_in_last_component_breaks_conditions(self, ball2):
        # keeping alpha in front of phi in the last slot fails both conditions once alpha != 1
        cp = conformal_pair_of(ball2)
        p = np.array([0.4, 0.3])
        fr = immerse(cp, p)
        d = cp.grad_phi(p)
        variant = np.append(-d, -2.0 * cp.phi(p) + d @ p)
        assert abs(variant @ fr.n_field - 1.0) > 0.1
        assert np.max(np.abs(tangent_frame(cp, p) @ variant)) > 0.1

    def test_transversal(self, ball, rng):
        for p in sample_interior(ball.domain, rng, 100):
            assert abs(transversality_det(ball, p)) > 1e-8

    def test_to_dict(self, ball):
        d = immerse(ball, [0.1, 0.2]).to_dict()
        assert set(d) == {"at", "f", "n_field", "n_star"} and len(d["f"]) == 3


class TestRealization:
    def test_identity(self, ball, rng):
        for p in sample_interior(ball.domain, rng, 50):
            assert realization_residual(ball, p) <= 1e-8

    def test_perturbed_connection_detected(self, ball):
        p = np.array([0.3, -0.5])
        c = conformal_structure_closed(conformal_pair_of(ball), p)
        # shift Gamma_ij^k by 0.1, expressed through the lowered symbols
        shifted = c.gamma_lower + 0.1 * np.einsum("km,ijm->ijk", c.g, np.ones((2, 2, 2)))
        bad = DualisticCoefficients(p, c.g, shifted, c.gamma_star_lower)
        np.testing.assert_allclose(bad.gamma, c.gamma + 0.1, atol=1e-12)
        assert realization_residual(ball, p, bad) > 1e-3

    def test_rejects_bregman(self, quad):
        with pytest.raises(GeneratorKindError):
            realization_residual(quad, [0.0, 0.0])
        with pytest.raises(GeneratorKindError):
            immerse(bregman_as_conformal(quad), [0.0, 0.0])


class TestGeometricDivergence:
    def test_examples(self, ball):
        assert geometric_divergence(ball, [0.5, 0.0], [0.0, 0.0]) == pytest.approx(1 / 15, abs=1e-15)
        assert geometric_divergence(ball, [0.3, 0.2], [0.3, 0.2]) == 0.0

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_equals_transformed_l_alpha(self, alpha, rng):
        g = make_ball_log_generator(2, 4.0, [0.0, 0.0], alpha)
        x, y = sample_interior(g.domain, rng, 1000), sample_interior(g.domain, rng, 1000)
        rho = geometric_divergence(g, x, y)
        assert np.max(np.abs(rho - transform_T(alpha, l_alpha(g, x, y)))) <= 1e-12
        assert np.max(np.abs(rho - conformal(conformal_pair_of(g), x, y))) <= 1e-12
