"""Dual coordinates, the conjugate potential, geodesics and the Pythagorean defect.

For an alpha generator the dual chart is ``eta = Dphi / (1 - alpha Dphi . xi)``
and the conjugate potential is ``psi(eta) = log(1 + alpha xi . eta) / alpha - phi(xi)``.
For a Bregman generator these reduce to ``eta = Dphi`` and the Legendre
conjugate ``psi(eta) = xi . eta - phi(xi)``.

Tangent vectors are always given in primal (xi) coordinates at the base
point.  Both exponential maps are integrated in the xi chart; the dual one
uses the dual Christoffel symbols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .divergences import divergence_of
from .dualistic import closed_structure
from .errors import ConvergenceError, DomainError
from .generators import Generator

Array = np.ndarray

MAX_STEP = 1e-3
PRIMAL = "primal"
DUAL = "dual"


# -- dual chart ------------------------------------------------------------------

def to_dual(g: Generator, xi) -> Array:
    xi = g.domain.check(xi)
    d = g.grad_phi(xi)
    if g.is_bregman:
        return d
    den = 1.0 - g.alpha * np.sum(d * xi, axis=-1)
    if np.any(den <= 0):
        raise DomainError("1 - alpha Dphi(xi).xi must be positive for the dual chart")
    return d / den[..., None]


def dual_jacobian(g: Generator, xi) -> Array:
    """``d eta / d xi`` at a single point."""
    xi = g.domain.check(xi)
    h = g.hess_phi(xi)
    if g.is_bregman:
        return h
    a = g.alpha
    d = g.grad_phi(xi)
    den = 1.0 - a * d @ xi
    return h / den + a * np.outer(d, h @ xi + d) / den**2


def from_dual(g: Generator, eta, x0=None, tol: float = 1e-12, max_iter: int = 50) -> Array:
    """Primal point with dual coordinate ``eta``, by damped Newton from the domain centre."""
    eta = np.asarray(eta, dtype=float)
    if eta.ndim > 1:
        return np.stack([from_dual(g, e, x0, tol, max_iter) for e in eta.reshape(-1, eta.shape[-1])]).reshape(eta.shape)
    x = np.array(g.domain.center if x0 is None else x0, dtype=float)
    res = to_dual(g, x) - eta
    scale = 1.0 + np.linalg.norm(eta)
    for _ in range(max_iter):
        if np.linalg.norm(res) <= tol * scale:
            return x
        step = np.linalg.solve(dual_jacobian(g, x), res)
        lam = 1.0
        while lam > 1e-10:
            cand = x - lam * step
            if g.domain.contains(cand):
                try:
                    new_res = to_dual(g, cand) - eta
                except DomainError:
                    new_res = None
                if new_res is not None and np.linalg.norm(new_res) < np.linalg.norm(res) * (1 - 1e-4 * lam) + tol * scale:
                    break
            lam *= 0.5
        else:
            raise ConvergenceError("line search failed in dual-chart inversion")
        x, res = cand, new_res
    if np.linalg.norm(res) <= 10 * tol * scale:
        return x
    raise ConvergenceError(f"dual-chart inversion did not converge (residual {np.linalg.norm(res):.3e})")


def conjugate_psi(g: Generator, eta, xi=None):
    """The conjugate potential at ``eta``; ``xi`` (its preimage) skips the inversion."""
    eta = np.asarray(eta, dtype=float)
    xi = from_dual(g, eta) if xi is None else g.domain.check(xi)
    dot = np.sum(xi * eta, axis=-1)
    if g.is_bregman:
        return dot - g.phi(xi)
    return np.log1p(g.alpha * dot) / g.alpha - g.phi(xi)


def conjugate_grad(g: Generator, eta, xi=None) -> Array:
    """Gradient of the conjugate potential: ``xi / (1 + alpha xi . eta)`` (``xi`` for Bregman)."""
    eta = np.asarray(eta, dtype=float)
    xi = from_dual(g, eta) if xi is None else g.domain.check(xi)
    if g.is_bregman:
        return xi
    return xi / (1.0 + g.alpha * np.sum(xi * eta, axis=-1))[..., None]


def conjugate_hess(g: Generator, eta, xi=None) -> Array:
    eta = np.asarray(eta, dtype=float)
    xi = from_dual(g, eta) if xi is None else g.domain.check(xi)
    jac = dual_jacobian(g, xi)
    if g.is_bregman:
        return np.linalg.inv(jac)
    a = g.alpha
    d = g.grad_phi(xi)
    den = 1.0 - a * d @ xi
    dgrad = den * np.eye(xi.size) - a * np.outer(xi, g.hess_phi(xi) @ xi + d)
    return dgrad @ np.linalg.inv(jac)


def mixed_inner_product(g: Generator, q, v, w_dual) -> float:
    """Metric pairing of a primal-coordinate ``v`` with a dual-coordinate ``w_dual`` at ``q``.

    Closed form ``-(v.w / A - alpha (eta.v)(xi.w) / A^2)`` with ``A = 1 + alpha xi.eta``;
    equals ``g(v, J w_dual)`` where ``J = d xi / d eta``.
    """
    q = g.domain.check(q)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w_dual, dtype=float)
    if g.is_bregman:
        return float(v @ w)
    a = g.alpha
    eta = to_dual(g, q)
    big_a = 1.0 + a * q @ eta
    return float(-(v @ w / big_a - a * (eta @ v) * (q @ w) / big_a**2))


# -- geodesics ----------------------------------------------------------------

def christoffel_field(g: Generator, kind: str):
    """Callable returning ``Gamma_ij^k`` (primal) or ``Gamma*_ij^k`` (dual) at a point."""
    if kind == PRIMAL:
        return lambda x: closed_structure(g, x).gamma
    if kind == DUAL:
        return lambda x: closed_structure(g, x).gamma_star
    raise ValueError(f"kind must be 'primal' or 'dual', got {kind!r}")


def _rk4(gamma, domain, x, u, dt, nsteps):
    def acc(x, u):
        return -np.einsum("ijk,i,j->k", gamma(x), u, u)

    for _ in range(nsteps):
        k1x, k1u = u, acc(x, u)
        x2, u2 = x + 0.5 * dt * k1x, u + 0.5 * dt * k1u
        k2x, k2u = u2, acc(x2, u2)
        x3, u3 = x + 0.5 * dt * k2x, u + 0.5 * dt * k2u
        k3x, k3u = u3, acc(x3, u3)
        x4, u4 = x + dt * k3x, u + dt * k3u
        k4x, k4u = u4, acc(x4, u4)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        u = u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        if not domain.contains(x):
            raise DomainError("geodesic left the domain")
    return x, u


@dataclass(frozen=True)
class GeodesicTrace:
    kind: str
    start: Array
    velocity: Array
    times: Array
    points: Array
    s_of_t: Array
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "start": self.start.tolist(),
            "velocity": self.velocity.tolist(),
            "times": self.times.tolist(),
            "points": self.points.tolist(),
            "s_of_t": self.s_of_t.tolist(),
        }


def _time_change(g: Generator, kind: str, q: Array, v: Array, points: Array) -> Array:
    if kind == PRIMAL:
        return (points - q) @ v / (v @ v)
    w_eta = dual_jacobian(g, q) @ v
    return (to_dual(g, points) - to_dual(g, q)) @ w_eta / (w_eta @ w_eta)


def geodesic(kind: str, g: Generator, q, v, times, max_step: float = MAX_STEP) -> GeodesicTrace:
    """Trace of ``t -> exp_q(t v)`` (primal) or ``exp*_q(t v)`` (dual) at increasing ``times >= 0``.

    Fixed-step RK4 with each segment between requested times split into
    steps no longer than ``max_step``.
    """
    q = g.domain.check(q)
    v = np.asarray(v, dtype=float)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be an increasing sequence of non-negative reals")
    if times.size == 0 or times[0] != 0.0:
        times = np.concatenate([[0.0], times])
    gamma = christoffel_field(g, kind)
    x, u = q.copy(), v.copy()
    pts = [q.copy()]
    for t0, t1 in zip(times[:-1], times[1:]):
        span = t1 - t0
        if span > 0:
            nsteps = max(1, math.ceil(span / max_step - 1e-9))
            x, u = _rk4(gamma, g.domain, x, u, span / nsteps, nsteps)
        pts.append(x.copy())
    pts = np.array(pts)
    return GeodesicTrace(kind, q, v, times, pts, _time_change(g, kind, q, v, pts))


def exp_map(kind: str, g: Generator, q, v, t: float, max_step: float = MAX_STEP,
            check_convergence: bool = False) -> Array:
    """Endpoint of the primal or dual geodesic from ``q`` with velocity ``v`` after time ``t``.

    Negative ``t`` runs the geodesic backwards.  With ``check_convergence`` the
    step is halved once and a change above ``1e-10`` raises.
    """
    q = g.domain.check(q)
    v = np.asarray(v, dtype=float)
    if t == 0:
        return q.copy()
    if t < 0:
        t, v = -t, -v
    nsteps = max(1, math.ceil(t / max_step - 1e-9))
    gamma = christoffel_field(g, kind)
    x, _ = _rk4(gamma, g.domain, q.copy(), v.copy(), t / nsteps, nsteps)
    if check_convergence:
        x2, _ = _rk4(gamma, g.domain, q.copy(), v.copy(), t / (2 * nsteps), 2 * nsteps)
        if np.max(np.abs(x2 - x)) > 1e-10:
            raise ConvergenceError("geodesic endpoint not converged under step halving")
        x = x2
    return x


# -- time changes ------------------------------------------------------------------

def fit_time_change(trace: GeodesicTrace, degree: int = 6) -> Array:
    """Least-squares coefficients ``[c1, c2, ..., c_degree]`` of ``s(t) = sum c_k t^k``."""
    t = trace.times[1:]
    s = trace.s_of_t[1:]
    scale = t.max()
    design = np.vander(t / scale, degree + 1, increasing=True)[:, 1:]
    coef, *_ = np.linalg.lstsq(design, s, rcond=None)
    return coef / scale ** np.arange(1, degree + 1)


def time_change_targets(g: Generator, q, v, kind: str) -> tuple[float, float]:
    """Quadratic and cubic Taylor coefficients of the geodesic time change.

    Primal: ``a = alpha Dphi(q).v`` and ``(4 a^2 + alpha v' D^2phi(q) v) / 3``;
    dual: the same with the conjugate potential and ``v`` mapped to the dual chart.
    """
    if g.is_bregman:
        return 0.0, 0.0
    a = g.alpha
    q = g.domain.check(q)
    v = np.asarray(v, dtype=float)
    if kind == PRIMAL:
        lin = a * g.grad_phi(q) @ v
        quad = v @ g.hess_phi(q) @ v
    else:
        eta = to_dual(g, q)
        w = dual_jacobian(g, q) @ v
        lin = a * conjugate_grad(g, eta, xi=q) @ w
        quad = w @ conjugate_hess(g, eta, xi=q) @ w
    return float(lin), float((4 * lin**2 + a * quad) / 3.0)


# -- Pythagorean defect --------------------------------------------------------------

def _defect_from_points(g, q, r_pts, p_pts):
    D = divergence_of(g)
    r = r_pts[:, None, :]
    p = p_pts[None, :, :]
    return D(r, p) - D(r, q) - D(q, p)


def defect_grid(g: Generator, q, v, w, t1s, t2s, max_step: float = MAX_STEP) -> Array:
    """``H[i, j] = D[r(t1_i) : p(t2_j)] - D[r(t1_i) : q] - D[q : p(t2_j)]``.

    ``r`` is the primal geodesic with velocity ``v``, ``p`` the dual geodesic with
    velocity ``w``; ``D`` is the generator's canonical divergence.
    """
    q = g.domain.check(q)
    t1s = np.asarray(t1s, dtype=float)
    t2s = np.asarray(t2s, dtype=float)
    r = _points_at(PRIMAL, g, q, v, t1s, max_step)
    p = _points_at(DUAL, g, q, w, t2s, max_step)
    return _defect_from_points(g, q, r, p)


def _points_at(kind, g, q, v, ts, max_step):
    order = np.argsort(ts)
    trace = geodesic(kind, g, q, v, ts[order], max_step)
    pts = trace.points[1:] if trace.times.size > ts.size else trace.points
    out = np.empty((ts.size, q.size))
    out[order] = pts
    return out


def pythagorean_defect_H(g: Generator, q, v, w, t1: float, t2: float) -> float:
    q = g.domain.check(q)
    if t1 == 0 or t2 == 0:
        return 0.0
    r = exp_map(PRIMAL, g, q, v, t1)
    p = exp_map(DUAL, g, q, w, t2)
    return float(_defect_from_points(g, q, r[None], p[None])[0, 0])


def h_expansion_coefficients(alpha: float, vv: float, ww: float, vw: float) -> dict:
    """Leading coefficients of ``H(t1, t2)`` for a canonical divergence of curvature ``-alpha``.

    ``H = -<v,w> t1 t2 + alpha <v,w> (|v|^2 t1^3 t2 + |w|^2 t1 t2^3) / 3
    - alpha <v,w>^2 t1^2 t2^2 / 2 + ...``; ``alpha = 0`` is the Bregman case.
    """
    return {
        "c11": -vw,
        "c31": alpha * vw * vv / 3.0,
        "c13": alpha * vw * ww / 3.0,
        "c22": -alpha * vw * vw / 2.0,
    }


@dataclass(frozen=True)
class ExpansionFit:
    c11: float
    c31: float
    c13: float
    c22: float
    residual: float
    condition: float
    nuisance: dict = field(default_factory=dict)

    @property
    def ill_conditioned(self) -> bool:
        return self.condition > 1e10

    def to_dict(self) -> dict:
        return {"c11": self.c11, "c31": self.c31, "c13": self.c13, "c22": self.c22,
                "residual": self.residual, "condition": self.condition,
                "nuisance": {f"c{i}{j}": c for (i, j), c in sorted(self.nuisance.items())}}


def fit_H_expansion(g: Generator, q, v, w, t_max: float = 0.05, steps: int = 12,
                    max_degree: int = 10) -> ExpansionFit:
    """Least-squares fit of ``H`` on the grid ``t = t_max k / steps``, ``k = 1..steps``.

    The model contains every monomial ``t1^i t2^j`` with ``i, j >= 1`` and
    ``i + j <= d``; only the four leading coefficients are named, the rest
    are returned in ``nuisance``.  ``d`` starts at 4 and grows by two until
    the residual reaches the rounding floor or ``max_degree`` is hit, so
    exactly bilinear surfaces are not fitted with noise-amplifying terms
    while curved ones near the boundary get enough terms to stay unbiased.
    """
    if steps < 8:
        raise ValueError("need at least an 8 x 8 grid")
    if max_degree < 4 or steps < max_degree:
        raise ValueError("need 4 <= max_degree <= steps")
    if not 0 < t_max:
        raise ValueError("t_max must be positive")
    ts = t_max * np.arange(1, steps + 1) / steps
    H = defect_grid(g, q, v, w, ts, ts).ravel()
    q = np.asarray(q, dtype=float)
    # H is a difference of divergences whose terms have the size of phi
    scale = max(abs(float(g.phi(q))), float(np.abs(g.grad_phi(q)) @ np.abs(q)), float(np.max(np.abs(H))))
    floor = 64 * np.finfo(float).eps * max(scale, np.finfo(float).tiny)
    u1, u2 = np.meshgrid(ts / t_max, ts / t_max, indexing="ij")
    degree = 4
    while True:
        monos = [(i, j) for i in range(1, degree) for j in range(1, degree) if i + j <= degree]
        design = np.stack([(u1**i * u2**j).ravel() for i, j in monos], axis=1)
        coef, *_ = np.linalg.lstsq(design, H, rcond=None)
        resid = float(np.max(np.abs(design @ coef - H)))
        if resid <= floor or degree + 2 > max_degree:
            break
        degree += 2
    cond = float(np.linalg.cond(design))
    vals = {m: float(c / t_max ** (m[0] + m[1])) for m, c in zip(monos, coef)}
    named = {m: vals.pop(m) for m in [(1, 1), (3, 1), (1, 3), (2, 2)]}
    return ExpansionFit(named[1, 1], named[3, 1], named[1, 3], named[2, 2], resid, cond, vals)


def mixed_fourth_derivative(g: Generator, q, v, w, h: float = 2e-2, use_richardson: bool = True) -> float:
    """Central-difference ``d^2/dt1^2 d^2/dt2^2 D[r(t1) : p(t2)]`` at ``t1 = t2 = 0``."""
    if not 0 < h <= 2e-2:
        raise ValueError("step must be in (0, 2e-2]")
    q = g.domain.check(q)

    def estimate(step):
        ts = np.array([-step, 0.0, step])
        r = np.array([exp_map(PRIMAL, g, q, v, t) for t in ts])
        p = np.array([exp_map(DUAL, g, q, w, t) for t in ts])
        vals = divergence_of(g)(r[:, None, :], p[None, :, :])
        wts = np.array([1.0, -2.0, 1.0])
        return float(wts @ vals @ wts) / step**4

    est = estimate(h)
    if use_richardson:
        est = (4.0 * estimate(h / 2) - est) / 3.0
    return est


# -- tangent sampling ----------------------------------------------------------------

def random_unit_tangent(rng: np.random.Generator, metric: Array) -> Array:
    """Uniform on the metric unit sphere, via the Cholesky factor of the metric."""
    n = metric.shape[0]
    u = rng.standard_normal(n)
    u /= np.linalg.norm(u)
    chol = np.linalg.cholesky(metric)
    return np.linalg.solve(chol.T, u)


def g_orthogonalize(metric: Array, v, w) -> Array:
    """Component of ``w`` orthogonal to ``v`` under the metric (one Gram-Schmidt step)."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return w - (v @ metric @ w) / (v @ metric @ v) * v
