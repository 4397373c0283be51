import numpy as np
import pytest

from logdiv import (ConvergenceError, conjugate_psi, conformal_structure_closed, conformal_pair_of, defect_grid,
                    exp_map, fit_H_expansion, from_dual, geodesic, make_ball_log_generator,
                    mixed_fourth_derivative, mixed_inner_product, pythagorean_defect_H, sample_interior, to_dual)
from logdiv.dual_geometry import (DUAL, PRIMAL, conjugate_grad, dual_jacobian, fit_time_change, g_orthogonalize,
                                  h_expansion_coefficients, random_unit_tangent, time_change_targets)
from logdiv.dualistic import closed_structure
from logdiv.generators import fd_gradient, fd_jacobian


def _pair(rng, metric, inner_min=0.3):
    while True:
        v, w = random_unit_tangent(rng, metric), random_unit_tangent(rng, metric)
        if abs(v @ metric @ w) >= inner_min:
            return v, w


class TestDualChart:
    def test_examples(self, ball):
        np.testing.assert_allclose(to_dual(ball, [0.0, 0.0]), [0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(to_dual(ball, [0.5, 0.0]), [-4 / 17, 0.0], atol=1e-15)

    def test_round_trip(self, ball, rng):
        pts = sample_interior(ball.domain, rng, 100)
        back = from_dual(ball, to_dual(ball, pts))
        assert np.max(np.abs(back - pts)) <= 1e-10

    def test_jacobian(self, ball):
        p = np.array([0.4, -0.7])
        np.testing.assert_allclose(dual_jacobian(ball, p), fd_jacobian(lambda x: to_dual(ball, x), p), atol=1e-8)

    def test_unreachable_eta(self, ball):
        with pytest.raises(ConvergenceError):
            from_dual(ball, [1e6, 0.0], max_iter=5)


class TestConjugate:
    def test_examples(self, ball):
        assert conjugate_psi(ball, [0.0, 0.0]) == pytest.approx(-np.log(4.0), abs=1e-14)
        assert conjugate_psi(ball, [-4 / 17, 0.0]) == pytest.approx(-np.log(17 / 4), abs=1e-12)

    def test_fenchel_type_identity(self, ball, rng):
        pts = sample_interior(ball.domain, rng, 50)
        eta = to_dual(ball, pts)
        lhs = np.log1p(np.sum(pts * eta, axis=1))
        rhs = ball.phi(pts) + conjugate_psi(ball, eta, xi=pts)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_gradient(self, ball):
        p = np.array([0.3, 0.5])
        eta = to_dual(ball, p)
        fd = fd_gradient(lambda e: conjugate_psi(ball, e), eta)
        np.testing.assert_allclose(conjugate_grad(ball, eta, xi=p), fd, atol=1e-8)


class TestGeodesics:
    def test_flat(self, quad):
        np.testing.assert_allclose(exp_map(PRIMAL, quad, [0.0, 0.0], [1.0, 0.0], 0.2), [0.2, 0.0], atol=1e-15)

    def test_trace_start_and_velocity(self, ball):
        q, v = np.array([0.2, -0.1]), np.array([0.6, 0.8])
        tr = geodesic(PRIMAL, ball, q, v, [0.0, 1e-4, 2e-4])
        np.testing.assert_array_equal(tr.points[0], q)
        # second-order forward difference
        vel = (-3 * tr.points[0] + 4 * tr.points[1] - tr.points[2]) / 2e-4
        np.testing.assert_allclose(vel, v, atol=1e-6)

    def test_negative_time(self, ball):
        q, v = np.array([0.2, -0.1]), np.array([0.6, 0.8])
        there = exp_map(PRIMAL, ball, q, v, 0.1)
        np.testing.assert_allclose(exp_map(PRIMAL, ball, q, -v, -0.1), there, atol=1e-14)

    def test_step_halving(self, ball):
        exp_map(DUAL, ball, [0.1, 0.1], [0.5, 0.5], 0.2, check_convergence=True)

    def test_leaving_domain_raises(self, ball):
        with pytest.raises(ValueError):
            exp_map(DUAL, ball, [1.5, 0.0], [1.0, 0.0], 1.0)

    def test_primal_slows_towards_boundary(self, ball):
        x = exp_map(PRIMAL, ball, [1.5, 0.0], [1.0, 0.0], 50.0, max_step=0.05)
        assert 1.99 < x[0] < 2.0 and x[1] == 0.0

    def test_bad_times(self, ball):
        with pytest.raises(ValueError):
            geodesic(PRIMAL, ball, [0.0, 0.0], [1.0, 0.0], [0.2, 0.1])

    @pytest.mark.parametrize("kind", [PRIMAL, DUAL])
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_time_change_coefficients(self, kind, alpha, rng):
        g = make_ball_log_generator(2, 4.0, [0.0, 0.0], alpha)
        for q in sample_interior(g.domain, rng, 5, margin=0.8):
            v = rng.standard_normal(2)
            v /= np.linalg.norm(v)
            tr = geodesic(kind, g, q, v, np.linspace(0, 0.1, 41))
            c = fit_time_change(tr)
            quad, cubic = time_change_targets(g, q, v, kind)
            assert c[0] == pytest.approx(1.0, rel=1e-6)
            assert c[1] == pytest.approx(quad, rel=1e-3, abs=1e-9)
            assert c[2] == pytest.approx(cubic, rel=1e-3, abs=1e-9)


class TestDefect:
    def test_vanishes_on_axes(self, ball):
        assert pythagorean_defect_H(ball, [0.1, 0.2], [1.0, 0.0], [0.0, 1.0], 0.0, 0.05) == 0.0
        assert pythagorean_defect_H(ball, [0.1, 0.2], [1.0, 0.0], [0.0, 1.0], 0.05, 0.0) == 0.0

    def test_orthogonal_cohort(self, ball, rng):
        ts = np.linspace(0.01, 0.1, 10)
        for q in sample_interior(ball.domain, rng, 5):
            metric = closed_structure(ball, q).g
            v = random_unit_tangent(rng, metric)
            w = g_orthogonalize(metric, v, random_unit_tangent(rng, metric))
            assert np.max(np.abs(defect_grid(ball, q, v, w, ts, ts))) <= 1e-8

    def test_bregman_identity(self, quad, rng):
        ts = np.linspace(0.01, 0.1, 5)
        v, w = rng.standard_normal(2), rng.standard_normal(2)
        H = defect_grid(quad, [0.3, -0.2], v, w, ts, ts)
        np.testing.assert_allclose(H, -(v @ w) * np.outer(ts, ts), atol=1e-14)

    def test_matches_log_ratio(self, ball):
        # independent evaluation from the endpoints: the phi terms cancel
        q, v, w = np.array([0.3, -0.2]), np.array([0.5, 0.4]), np.array([0.6, -0.1])
        r = exp_map(PRIMAL, ball, q, v, 0.08)
        p = exp_map(DUAL, ball, q, w, 0.06)
        d = ball.grad_phi
        expected = (np.log1p(d(p) @ (r - p)) - np.log1p(d(q) @ (r - q)) - np.log1p(d(p) @ (q - p)))
        assert pythagorean_defect_H(ball, q, v, w, 0.08, 0.06) == pytest.approx(expected, abs=1e-14)

    def test_nonorthogonal_is_visible(self, ball, rng):
        q = np.array([0.1, 0.2])
        metric = closed_structure(ball, q).g
        v, w = _pair(rng, metric)
        ts = np.array([0.05, 0.1])
        assert np.max(np.abs(defect_grid(ball, q, v, w, ts, ts))) >= abs(v @ metric @ w) * 0.05**2 / 2


class TestExpansion:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_fit_against_derived_coefficients(self, alpha, rng):
        g = make_ball_log_generator(2, 4.0, [0.0, 0.0], alpha)
        q = np.array([0.1, 0.2])
        metric = closed_structure(g, q).g
        for _ in range(3):
            v, w = _pair(rng, metric)
            fit = fit_H_expansion(g, q, v, w)
            target = h_expansion_coefficients(alpha, v @ metric @ v, w @ metric @ w, v @ metric @ w)
            assert fit.c11 == pytest.approx(target["c11"], rel=1e-4)
            for name in ("c31", "c13", "c22"):
                assert getattr(fit, name) == pytest.approx(target[name], rel=5e-3)
            assert not fit.ill_conditioned

    def test_near_boundary(self, ball2):
        q = np.array([0.1745, 1.7403])
        metric = closed_structure(ball2, q).g
        v, w = _pair(np.random.default_rng(3), metric)
        fit = fit_H_expansion(ball2, q, v, w)
        target = h_expansion_coefficients(2.0, v @ metric @ v, w @ metric @ w, v @ metric @ w)
        for name in ("c11", "c31", "c13", "c22"):
            assert getattr(fit, name) == pytest.approx(target[name], rel=5e-3)

    def test_bregman_flat(self, quad, rng):
        v, w = rng.standard_normal(2), rng.standard_normal(2)
        fit = fit_H_expansion(quad, [0.5, -1.0], v, w)
        assert fit.c11 == pytest.approx(-(v @ w), rel=1e-8)
        assert max(abs(fit.c31), abs(fit.c13), abs(fit.c22)) <= 1e-8

    def test_fit_validation(self, ball):
        with pytest.raises(ValueError):
            fit_H_expansion(ball, [0, 0], [1, 0], [0, 1], steps=4)
        with pytest.raises(ValueError):
            fit_H_expansion(ball, [0, 0], [1, 0], [0, 1], t_max=0.0)
        with pytest.raises(ValueError):
            fit_H_expansion(ball, [0, 0], [1, 0], [0, 1], steps=8, max_degree=10)


class TestMixedDerivative:
    def test_nonorthogonal(self, ball, rng):
        for q in sample_interior(ball.domain, rng, 3, margin=0.5):
            metric = closed_structure(ball, q).g
            v, w = _pair(rng, metric)
            vw = v @ metric @ w
            assert mixed_fourth_derivative(ball, q, v, w) == pytest.approx(-2 * vw**2, rel=1e-2)

    def test_orthogonal(self, ball, rng):
        q = np.array([0.3, 0.1])
        metric = closed_structure(ball, q).g
        v = random_unit_tangent(rng, metric)
        w = g_orthogonalize(metric, v, random_unit_tangent(rng, metric))
        assert abs(mixed_fourth_derivative(ball, q, v, w)) <= 1e-6

    def test_bregman(self, quad):
        assert abs(mixed_fourth_derivative(quad, [0.1, 0.1], [1.0, 0.2], [0.4, 0.9])) <= 1e-8

    def test_step_bound(self, ball):
        with pytest.raises(ValueError):
            mixed_fourth_derivative(ball, [0, 0], [1, 0], [0, 1], h=0.1)


class TestMixedInnerProduct:
    @pytest.mark.parametrize("q", [[0.0, 0.0], [0.5, 0.0]])
    def test_transport_oracle(self, ball, rng, q):
        q = np.array(q)
        metric = conformal_structure_closed(conformal_pair_of(ball), q).g
        jac = fd_jacobian(lambda e: from_dual(ball, e), to_dual(ball, q), h=1e-6)
        for _ in range(20):
            v, w = rng.standard_normal(2), rng.standard_normal(2)
            assert mixed_inner_product(ball, q, v, w) == pytest.approx(v @ metric @ jac @ w, abs=1e-5)

    def test_centre_value(self, ball):
        v, w = np.array([0.3, 0.4]), np.array([-1.0, 2.0])
        assert mixed_inner_product(ball, [0.0, 0.0], v, w) == pytest.approx(-(v @ w), abs=1e-15)

    def test_small_alpha_limit(self):
        q, v, w = np.array([0.5, 0.3]), np.array([0.3, 0.4]), np.array([-1.0, 2.0])
        vals = [mixed_inner_product(make_ball_log_generator(2, 4.0, 0.0, a), q, v, w) * a
                for a in (1e-3, 1e-5)]
        # with phi scaled by 1/alpha the pairing scales the same way
        assert abs(vals[1] - vals[0]) < 1e-2

    def test_bregman(self, quad):
        assert mixed_inner_product(quad, [0.1, 0.2], [1.0, 2.0], [3.0, 4.0]) == 11.0
