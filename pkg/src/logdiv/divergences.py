"""Bregman, logarithmic, conformal and self-dual divergences.

Every divergence here is a function of two point arrays ``xi`` and
``xi_prime`` (broadcast against each other over leading axes) returning the
divergence ``D[xi : xi_prime]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, GeneratorKindError, LogArgumentError
from .generators import Domain, Field, Generator

Array = np.ndarray
Divergence = Callable[[Array, Array], Array]

#: Values whose magnitude is below this are returned as exactly zero.
CLAMP = 1e-15


def _clamp(d):
    d = np.asarray(d, dtype=float)
    return np.where(np.abs(d) < CLAMP, 0.0, d)


def _as_points(domain: Domain, xi, xi_prime):
    return domain.check(xi), domain.check(xi_prime)


def _bregman_gap(phi: Field, grad: Field, xi, xi_prime):
    return (phi(xi) - phi(xi_prime)) - np.sum(grad(xi_prime) * (xi - xi_prime), axis=-1)


def bregman(g: Generator, xi, xi_prime):
    """Bregman divergence ``B[xi : xi']`` of a convex (Bregman-tagged) potential."""
    g.require_bregman()
    xi, xi_prime = _as_points(g.domain, xi, xi_prime)
    return _clamp(_bregman_gap(g.phi, g.grad_phi, xi, xi_prime))


def bregman_limit(g: Generator, xi, xi_prime):
    """Bregman divergence of ``-phi`` for an alpha generator: the small-alpha limit of :func:`l_alpha`."""
    g.require_alpha()
    xi, xi_prime = _as_points(g.domain, xi, xi_prime)
    neg = lambda x: -g.phi(x)
    neg_grad = lambda x: -g.grad_phi(x)
    return _clamp(_bregman_gap(neg, neg_grad, xi, xi_prime))


def l_alpha(g: Generator, xi, xi_prime, alpha: Optional[float] = None):
    """Logarithmic divergence

    ``(1/alpha) log(1 + alpha Dphi(xi') . (xi - xi')) - (phi(xi) - phi(xi'))``.

    ``alpha`` defaults to the generator's own exponent.  Raises
    :class:`LogArgumentError` where the logarithm's argument is not positive.
    """
    g.require_alpha()
    a = g.alpha if alpha is None else float(alpha)
    xi, xi_prime = _as_points(g.domain, xi, xi_prime)
    x = a * np.sum(g.grad_phi(xi_prime) * (xi - xi_prime), axis=-1)
    if np.any(x <= -1.0):
        raise LogArgumentError("1 + alpha Dphi(xi').(xi - xi') <= 0: divergence undefined for this pair")
    return _clamp(np.log1p(x) / a - (g.phi(xi) - g.phi(xi_prime)))


# -- the monotone transform ---------------------------------------------------

def transform_T(alpha: float, x):
    """``T(x) = (exp(alpha x) - 1) / alpha`` for ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("transform_T is defined on [0, inf)")
    return np.expm1(alpha * x) / alpha


def inverse_T(alpha: float, y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("inverse_T is defined on [0, inf)")
    return np.log1p(alpha * y) / alpha


# -- conformal divergences ------------------------------------------------------

@dataclass(frozen=True)
class ConformalPair:
    """Convex potential ``phi_c`` and positive scale ``kappa`` of a conformal divergence.

    Built from an alpha generator by :func:`conformal_pair_of`, in which case
    ``phi_c = -exp(alpha phi)`` and ``kappa = -1 / (alpha phi_c)``.
    """

    alpha: Optional[float]
    domain: Domain
    phi: Field
    grad_phi: Field
    hess_phi: Field
    third_phi: Field
    kappa: Field
    grad_kappa: Field
    hess_kappa: Field
    inv_kappa: Field
    hess_inv_kappa: Field

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    def log_kappa_grad(self, x):
        return self.grad_kappa(x) / self.kappa(x)[..., None]


def conformal_pair_of(g: Generator) -> ConformalPair:
    a = g.require_alpha()

    def e(x):
        return np.exp(a * g.phi(x))

    def phi_c(x):
        return -e(x)

    def grad_c(x):
        return -a * e(x)[..., None] * g.grad_phi(x)

    def hess_c(x):
        d = g.grad_phi(x)
        return -a * e(x)[..., None, None] * (g.hess_phi(x) + a * d[..., :, None] * d[..., None, :])

    def third_c(x):
        d = g.grad_phi(x)
        h = g.hess_phi(x)
        sym = (np.einsum("...ij,...k->...ijk", h, d)
               + np.einsum("...ik,...j->...ijk", h, d)
               + np.einsum("...jk,...i->...ijk", h, d))
        ddd = np.einsum("...i,...j,...k->...ijk", d, d, d)
        return -a * e(x)[..., None, None, None] * (g.third(x) + a * sym + a * a * ddd)

    def kappa(x):
        return np.exp(-a * g.phi(x)) / a

    def grad_kappa(x):
        return -a * kappa(x)[..., None] * g.grad_phi(x)

    def hess_kappa(x):
        d = g.grad_phi(x)
        return kappa(x)[..., None, None] * (a * a * d[..., :, None] * d[..., None, :] - a * g.hess_phi(x))

    def inv_kappa(x):
        return a * e(x)

    def hess_inv_kappa(x):
        return -a * hess_c(x)

    return ConformalPair(a, g.domain, phi_c, grad_c, hess_c, third_c,
                         kappa, grad_kappa, hess_kappa, inv_kappa, hess_inv_kappa)


def bregman_as_conformal(g: Generator) -> ConformalPair:
    """A Bregman generator viewed as a conformal pair with ``kappa == 1``."""
    g.require_bregman()
    n = g.dimension

    def one(x):
        return np.ones(np.shape(x)[:-1])

    def zero_vec(x):
        return np.zeros(np.shape(x))

    def zero_mat(x):
        return np.zeros(np.shape(x)[:-1] + (n, n))

    return ConformalPair(None, g.domain, g.phi, g.grad_phi, g.hess_phi, g.third,
                         one, zero_vec, zero_mat, one, zero_mat)


def corrupt_kappa(cp: ConformalPair, eps: float = 1e-3) -> ConformalPair:
    """Multiply kappa by ``1 + eps |xi|^2``; a deliberately wrong pair for fault-injection runs."""
    k = cp.kappa

    def kappa(x):
        return k(x) * (1.0 + eps * np.sum(np.asarray(x) ** 2, axis=-1))

    return replace(cp, kappa=kappa)


def conformal(cp: ConformalPair, xi, xi_prime):
    """``kappa(xi) * B_phi[xi : xi']``."""
    xi, xi_prime = _as_points(cp.domain, xi, xi_prime)
    return _clamp(cp.kappa(xi) * _bregman_gap(cp.phi, cp.grad_phi, xi, xi_prime))


# -- self-dual form -----------------------------------------------------------

def self_dual(g: Generator, xi_y, eta_x, xi_x=None):
    """``(1/alpha) log(1 + alpha xi_y . eta_x) - phi(xi_y) - psi(eta_x)``.

    ``xi_x``, the primal preimage of ``eta_x``, skips the Newton inversion when known.
    For a Bregman generator this is ``phi(xi_y) + phi*(eta_x) - xi_y . eta_x``.
    """
    from .dual_geometry import conjugate_psi

    xi_y = g.domain.check(xi_y)
    eta_x = np.asarray(eta_x, dtype=float)
    psi = conjugate_psi(g, eta_x, xi=xi_x)
    dot = np.sum(xi_y * eta_x, axis=-1)
    if g.is_bregman:
        return _clamp(g.phi(xi_y) + psi - dot)
    a = g.alpha
    if np.any(a * dot <= -1.0):
        raise LogArgumentError("1 + alpha xi_y . eta_x <= 0")
    return _clamp(np.log1p(a * dot) / a - g.phi(xi_y) - psi)


def divergence_of(g: Generator, form: str = "canonical") -> Divergence:
    """Two-point evaluator of a named divergence form for ``g``.

    ``"canonical"`` is the L-alpha divergence for alpha generators and the
    Bregman divergence otherwise.  Other forms: ``"l_alpha"``, ``"bregman"``,
    ``"conformal"``, ``"geometric"``, ``"transformed"`` (T applied to L-alpha).
    """
    if form == "canonical":
        form = "bregman" if g.is_bregman else "l_alpha"
    if form == "bregman":
        return lambda x, y: bregman(g, x, y)
    if form == "l_alpha":
        return lambda x, y: l_alpha(g, x, y)
    if form == "transformed":
        return lambda x, y: transform_T(g.alpha, l_alpha(g, x, y))
    if form == "conformal":
        cp = conformal_pair_of(g)
        return lambda x, y: conformal(cp, x, y)
    if form == "geometric":
        from .immersion import geometric_divergence

        cp = conformal_pair_of(g)
        return lambda x, y: geometric_divergence(cp, x, y)
    raise ValueError(f"unknown divergence form {form!r}")


__all__ = [
    "CLAMP", "ConformalPair", "Divergence", "DomainError", "GeneratorKindError", "LogArgumentError",
    "bregman", "bregman_as_conformal", "bregman_limit", "conformal", "conformal_pair_of", "corrupt_kappa", "divergence_of",
    "inverse_T", "l_alpha", "self_dual", "transform_T",
]
