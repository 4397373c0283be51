"""Metric, dual connections and curvature induced by a divergence.

Index conventions (all arrays are plain numpy):

* ``g[i, j]`` -- metric;
* ``gamma_lower[i, j, k]`` -- ``Gamma_{ij,k} = Gamma_ij^m g_mk``;
* ``gamma[i, j, k]`` -- ``Gamma_ij^k``;
* ``r[i, j, k, l]`` -- ``R_ijk^l`` with ``R(d_i, d_j) d_k = R_ijk^l d_l``,
  ``R(X, Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y]``.

For a divergence ``D[xi : xi']`` the induced structure is read off on the
diagonal: ``g_ij = -d_i d_j' D``, ``Gamma_{ij,k} = -d_i d_j d_k' D`` and
``Gamma*_{ij,k} = -d_i' d_j' d_k D`` (primes act on the second argument).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ._stencil import mixed_partials, richardson
from .divergences import ConformalPair, Divergence, conformal_pair_of
from .errors import DegeneratePlaneError, NotPositiveDefiniteError
from .generators import Generator

Array = np.ndarray

THIRD_ORDER_STEP = 1e-3
FOURTH_ORDER_STEP = 5e-3
DEGENERATE_GRAM = 1e-10


@dataclass(frozen=True)
class DualisticCoefficients:
    at: Array
    g: Array
    gamma_lower: Array
    gamma_star_lower: Array

    @property
    def dimension(self) -> int:
        return self.g.shape[0]

    @property
    def gamma(self) -> Array:
        return raise_index(self.g, self.gamma_lower)

    @property
    def gamma_star(self) -> Array:
        return raise_index(self.g, self.gamma_star_lower)

    def inner(self, v, w) -> float:
        return float(np.asarray(v) @ self.g @ np.asarray(w))


@dataclass(frozen=True)
class CurvatureTensor:
    at: Array
    r: Array


def raise_index(g: Array, lower: Array) -> Array:
    """``Gamma_ij^k`` from ``Gamma_{ij,m}`` by solving against the metric (last axis)."""
    n = g.shape[-1]
    flat = lower.reshape(lower.shape[:-3] + (n * n, n))
    up = np.swapaxes(np.linalg.solve(g, np.swapaxes(flat, -1, -2)), -1, -2)
    return up.reshape(lower.shape)


def _check_metric(g: Array) -> None:
    eig = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    if np.any(eig[..., 0] <= 0):
        raise NotPositiveDefiniteError(
            f"induced metric not positive definite (min eigenvalue {eig[..., 0].min():.3e}); "
            "invalid divergence or step too large")


# -- finite-difference engine --------------------------------------------------

def _patterns(n: int):
    """Multiplicity patterns over the joint variable (xi, xi') and where they land."""
    pats, slots = [], []
    for i in range(n):
        for j in range(i, n):
            c = [0] * (2 * n)
            c[i] += 1
            c[n + j] += 1
            pats.append(tuple(c))
            slots.append(("g", i, j))
    for i in range(n):
        for j in range(i, n):
            for k in range(n):
                c = [0] * (2 * n)
                c[i] += 1
                c[j] += 1
                c[n + k] += 1
                pats.append(tuple(c))
                slots.append(("gl", i, j, k))
                c = [0] * (2 * n)
                c[n + i] += 1
                c[n + j] += 1
                c[k] += 1
                pats.append(tuple(c))
                slots.append(("gs", i, j, k))
    return pats, slots


def _structure_batch(D: Divergence, points: Array, h: float, use_richardson: bool = True):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m, n = points.shape
    pats, slots = _patterns(n)

    def joint(z):
        return D(z[..., :n], z[..., n:])

    base = np.concatenate([points, points], axis=1)
    vals = mixed_partials(joint, base, pats, h)
    if use_richardson:
        vals = richardson(vals, mixed_partials(joint, base, pats, h / 2))
    g = np.empty((m, n, n))
    gl = np.empty((m, n, n, n))
    gs = np.empty((m, n, n, n))
    for col, slot in enumerate(slots):
        v = -vals[:, col]
        if slot[0] == "g":
            _, i, j = slot
            g[:, i, j] = v
            g[:, j, i] = v
        elif slot[0] == "gl":
            _, i, j, k = slot
            gl[:, i, j, k] = v
            gl[:, j, i, k] = v
        else:
            _, i, j, k = slot
            gs[:, i, j, k] = v
            gs[:, j, i, k] = v
    return g, gl, gs


def induced_structure_fd(D: Divergence, p, h: float = THIRD_ORDER_STEP,
                         use_richardson: bool = True) -> DualisticCoefficients:
    """Dualistic structure of ``D`` at ``p`` by central differences (one Richardson level).

    ``p`` must lie at least ``4 h`` inside the domain.
    """
    p = np.asarray(p, dtype=float)
    g, gl, gs = _structure_batch(D, p[None], h, use_richardson)
    _check_metric(g[0])
    return DualisticCoefficients(p, g[0], gl[0], gs[0])


def metric_derivative_fd(D: Divergence, p, h: float = FOURTH_ORDER_STEP, inner_h: float = THIRD_ORDER_STEP) -> Array:
    """``dg[k, i, j] = d_k g_ij`` by differencing the FD metric."""
    p = np.asarray(p, dtype=float)
    n = p.size
    pts = []
    for s in (1.0, -1.0, 0.5, -0.5):
        pts.extend(p + s * h * np.eye(n))
    g = _structure_batch(D, np.array(pts), inner_h)[0].reshape(4, n, n, n)
    d_h = (g[0] - g[1]) / (2 * h)
    d_half = (g[2] - g[3]) / h
    return richardson(d_h, d_half)


def duality_residual(coeffs: DualisticCoefficients, dg: Array) -> float:
    """Max of ``|d_k g_ij - Gamma_{ki,j} - Gamma*_{kj,i}|``."""
    gl, gs = coeffs.gamma_lower, coeffs.gamma_star_lower
    res = dg - gl - np.swapaxes(gs, 1, 2)
    return float(np.max(np.abs(res)))


# -- closed forms --------------------------------------------------------------

def conformal_structure_closed(cp: ConformalPair, p) -> DualisticCoefficients:
    """Coefficients of the structure induced by ``kappa(xi) B_phi[xi : xi']``.

    ``g_ij = kappa phi_ij``, ``Gamma_{ij,k} = kappa_i phi_jk + kappa_j phi_ik``,
    ``Gamma*_{ij,k} = kappa phi_ijk - kappa_k phi_ij``.
    """
    p = cp.domain.check(p)
    k = cp.kappa(p)
    dk = cp.grad_kappa(p)
    h = cp.hess_phi(p)
    t = cp.third_phi(p)
    g = k * h
    gl = dk[:, None, None] * h[None, :, :] + dk[None, :, None] * h[:, None, :]
    gs = k * t - h[:, :, None] * dk[None, None, :]
    return DualisticCoefficients(p, g, gl, gs)


def bregman_structure_closed(gen: Generator, p) -> DualisticCoefficients:
    """Dually flat structure of a Bregman divergence: ``g = phi''``, ``Gamma = 0``, ``Gamma*_{ij,k} = phi_ijk``."""
    gen.require_bregman()
    p = gen.domain.check(p)
    n = p.size
    return DualisticCoefficients(p, gen.hess_phi(p), np.zeros((n, n, n)), gen.third(p))


def closed_structure(obj: Union[Generator, ConformalPair], p) -> DualisticCoefficients:
    if isinstance(obj, ConformalPair):
        return conformal_structure_closed(obj, p)
    if obj.is_bregman:
        return bregman_structure_closed(obj, p)
    return conformal_structure_closed(conformal_pair_of(obj), p)


def projective_one_form(cp: ConformalPair, p) -> Array:
    """``tau = d log kappa``; the primal connection is ``Gamma_ij^k = tau_i delta_jk + tau_j delta_ik``."""
    return cp.log_kappa_grad(cp.domain.check(p))


# -- curvature -----------------------------------------------------------------

def riemann_from_christoffel(gamma: Array, dgamma: Array) -> Array:
    """``R_ijk^l = d_i G_jk^l - d_j G_ik^l + G_jk^m G_im^l - G_ik^m G_jm^l``.

    ``dgamma[m, i, j, k] = d_m Gamma_ij^k``.
    """
    r = dgamma - np.swapaxes(dgamma, 0, 1)
    r = r + np.einsum("jkm,iml->ijkl", gamma, gamma) - np.einsum("ikm,jml->ijkl", gamma, gamma)
    return r


def curvature_of_connection(gamma_fn: Callable[[Array], Array], p, h: float = FOURTH_ORDER_STEP) -> CurvatureTensor:
    """Curvature of a connection given pointwise by ``gamma_fn(x) -> Gamma_ij^k``."""
    p = np.asarray(p, dtype=float)
    n = p.size
    e = np.eye(n) * h
    d_h = np.stack([(gamma_fn(p + e[m]) - gamma_fn(p - e[m])) / (2 * h) for m in range(n)])
    d_half = np.stack([(gamma_fn(p + e[m] / 2) - gamma_fn(p - e[m] / 2)) / h for m in range(n)])
    return CurvatureTensor(p, riemann_from_christoffel(gamma_fn(p), richardson(d_h, d_half)))


def curvature_fd(D: Divergence, p, h: float = FOURTH_ORDER_STEP, inner_h: Optional[float] = None,
                 dual: bool = False) -> CurvatureTensor:
    """Primal (or dual) curvature of the structure induced by ``D``, entirely by finite differences.

    Christoffel symbols come from third derivatives of ``D`` with step
    ``inner_h`` (default ``h``) and are differenced once more with step ``h``.
    Needs a margin of ``6 h`` from the boundary.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    inner_h = h if inner_h is None else inner_h
    shifts = [np.zeros(n)]
    for s in (1.0, -1.0, 0.5, -0.5):
        shifts.extend(s * h * np.eye(n))
    pts = p + np.array(shifts)
    g, gl, gs = _structure_batch(D, pts, inner_h)
    _check_metric(g[0])
    gam = raise_index(g, gs if dual else gl)
    centre = gam[0]
    blocks = gam[1:].reshape(4, n, n, n, n)
    d_h = (blocks[0] - blocks[1]) / (2 * h)
    d_half = (blocks[2] - blocks[3]) / h
    return CurvatureTensor(p, riemann_from_christoffel(centre, richardson(d_h, d_half)))


def curvature_closed(cp: ConformalPair, p) -> CurvatureTensor:
    """``R_ijk^l = kappa (d_jk(1/kappa) delta_il - d_ik(1/kappa) delta_jl)``."""
    p = cp.domain.check(p)
    n = p.size
    k = cp.kappa(p)
    hk = cp.hess_inv_kappa(p)
    eye = np.eye(n)
    r = k * (np.einsum("jk,il->ijkl", hk, eye) - np.einsum("ik,jl->ijkl", hk, eye))
    return CurvatureTensor(p, r)


def dual_curvature(obj: Union[Generator, ConformalPair], p, h: float = FOURTH_ORDER_STEP) -> CurvatureTensor:
    """Curvature of the dual connection from the closed-form ``Gamma*`` (differenced once)."""
    return curvature_of_connection(lambda x: closed_structure(obj, x).gamma_star, p, h)


def sectional_curvature(metric, r, v, w) -> float:
    """``<R(w, v) v, w> / (|v|^2 |w|^2 - <v, w>^2)`` with all products under the metric."""
    g = metric.g if isinstance(metric, DualisticCoefficients) else np.asarray(metric)
    r = r.r if isinstance(r, CurvatureTensor) else np.asarray(r)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    vv, ww, vw = v @ g @ v, w @ g @ w, v @ g @ w
    gram = vv * ww - vw * vw
    if gram < DEGENERATE_GRAM:
        raise DegeneratePlaneError(f"Gram determinant {gram:.3e} below {DEGENERATE_GRAM}")
    rwvv = np.einsum("i,j,k,ijkl->l", w, v, v, r)
    return float(rwvv @ g @ w / gram)


# -- constant-curvature and projective-flatness checks -----------------------------

@dataclass(frozen=True)
class CurvatureCriterionReport:
    lam: float
    max_residual: float
    max_second_derivative: float
    a: float
    b: Array


def constant_curvature_criterion(cp: ConformalPair, lam: float, points) -> CurvatureCriterionReport:
    """Test whether ``1/kappa - lam * phi`` is affine over ``points``.

    Fits ``a + b . xi`` by least squares and reports the largest residual and
    the largest entry of the (analytic) Hessian of ``1/kappa - lam * phi``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    y = cp.inv_kappa(pts) - lam * cp.phi(pts)
    design = np.hstack([np.ones((len(pts), 1)), pts])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    second = cp.hess_inv_kappa(pts) - lam * cp.hess_phi(pts)
    return CurvatureCriterionReport(float(lam), float(np.max(np.abs(resid))), float(np.max(np.abs(second))),
                                    float(coef[0]), coef[1:])


@dataclass(frozen=True)
class CollinearityReport:
    max_distance: float
    arc_length: float

    @property
    def residual(self) -> float:
        return self.max_distance / self.arc_length if self.arc_length > 0 else 0.0


def projective_flatness_check(points, start=None, direction=None) -> CollinearityReport:
    """Distance of a trajectory from the line through ``start`` along ``direction``.

    Defaults to the first point and the first chord.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    start = pts[0] if start is None else np.asarray(start, dtype=float)
    direction = pts[1] - pts[0] if direction is None else np.asarray(direction, dtype=float)
    u = direction / np.linalg.norm(direction)
    rel = pts - start
    perp = rel - np.outer(rel @ u, u)
    arc = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
    return CollinearityReport(float(np.max(np.linalg.norm(perp, axis=1))), arc)
