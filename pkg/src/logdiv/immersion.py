"""Affine immersion of the conformal structure into R^(n+1).

``f(xi) = kappa(xi) (xi, 1)`` with transversal field ``n = alpha f``.  The
conormal ``n*`` annihilates the tangent image and pairs to one with ``n``;
for this immersion it is ``(-Dphi, -phi + Dphi . xi)``, where ``phi`` is the
convex potential of the conformal pair.  The geometric divergence is
``rho(p, q) = <f(p) - f(q), n*(q)>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .divergences import ConformalPair, _clamp, conformal_pair_of
from .dualistic import DualisticCoefficients, conformal_structure_closed
from .errors import GeneratorKindError
from .generators import Generator

Array = np.ndarray


def _pair(obj: Union[Generator, ConformalPair]) -> ConformalPair:
    if isinstance(obj, ConformalPair):
        if obj.alpha is None:
            raise GeneratorKindError("the immersion needs an alpha conformal pair")
        return obj
    return conformal_pair_of(obj)


@dataclass(frozen=True)
class ImmersionFrame:
    at: Array
    f: Array
    n_field: Array
    n_star: Array

    def to_dict(self) -> dict:
        return {"at": self.at.tolist(), "f": self.f.tolist(),
                "n_field": self.n_field.tolist(), "n_star": self.n_star.tolist()}


def immersion_value(cp: ConformalPair, xi) -> Array:
    xi = np.asarray(xi, dtype=float)
    ones = np.ones(xi.shape[:-1] + (1,))
    return cp.kappa(xi)[..., None] * np.concatenate([xi, ones], axis=-1)


def conormal(cp: ConformalPair, xi) -> Array:
    xi = np.asarray(xi, dtype=float)
    d = cp.grad_phi(xi)
    last = -cp.phi(xi) + np.sum(d * xi, axis=-1)
    return np.concatenate([-d, last[..., None]], axis=-1)


def immerse(obj: Union[Generator, ConformalPair], xi) -> ImmersionFrame:
    cp = _pair(obj)
    xi = cp.domain.check(xi)
    f = immersion_value(cp, xi)
    return ImmersionFrame(xi, f, cp.alpha * f, conormal(cp, xi))


def tangent_frame(cp: ConformalPair, xi) -> Array:
    """Rows ``d_i f = kappa_i (xi, 1) + kappa e_i``, shape ``(n, n+1)``."""
    xi = cp.domain.check(xi)
    n = xi.size
    base = np.append(xi, 1.0)
    emb = np.hstack([np.eye(n), np.zeros((n, 1))])
    return np.outer(cp.grad_kappa(xi), base) + cp.kappa(xi) * emb


def second_derivatives(cp: ConformalPair, xi) -> Array:
    """``d_k d_j f = kappa_jk (xi, 1) + kappa_j e_k + kappa_k e_j``, shape ``(n, n, n+1)``."""
    xi = cp.domain.check(xi)
    n = xi.size
    base = np.append(xi, 1.0)
    emb = np.hstack([np.eye(n), np.zeros((n, 1))])
    dk = cp.grad_kappa(xi)
    out = cp.hess_kappa(xi)[:, :, None] * base
    out = out + dk[None, :, None] * emb[:, None, :] + dk[:, None, None] * emb[None, :, :]
    return out


def conormal_conditions(frame: ImmersionFrame, tangents: Array) -> tuple[float, float]:
    """``(|<n*, n> - 1|, max_i |<n*, d_i f>|)``."""
    return (abs(float(frame.n_star @ frame.n_field) - 1.0),
            float(np.max(np.abs(tangents @ frame.n_star))))


def transversality_det(obj: Union[Generator, ConformalPair], xi) -> float:
    cp = _pair(obj)
    frame = immerse(cp, xi)
    return float(np.linalg.det(np.vstack([tangent_frame(cp, xi), frame.n_field])))


def realization_residual(obj: Union[Generator, ConformalPair], xi,
                         coeffs: Optional[DualisticCoefficients] = None) -> float:
    """``max_{k,j} |d_k d_j f - Gamma_kj^m d_m f - g_kj alpha f|``.

    ``coeffs`` defaults to the closed-form conformal coefficients; passing
    perturbed ones shows the residual's sensitivity.
    """
    cp = _pair(obj)
    xi = cp.domain.check(xi)
    coeffs = conformal_structure_closed(cp, xi) if coeffs is None else coeffs
    f = immersion_value(cp, xi)
    df = tangent_frame(cp, xi)
    ddf = second_derivatives(cp, xi)
    pred = np.einsum("kjm,ma->kja", coeffs.gamma, df) + coeffs.g[:, :, None] * (cp.alpha * f)
    return float(np.max(np.abs(ddf - pred)))


def geometric_divergence(obj: Union[Generator, ConformalPair], xi, xi_prime):
    cp = _pair(obj)
    xi = cp.domain.check(xi)
    xi_prime = cp.domain.check(xi_prime)
    diff = immersion_value(cp, xi) - immersion_value(cp, xi_prime)
    return _clamp(np.sum(diff * conormal(cp, xi_prime), axis=-1))
