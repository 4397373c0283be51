"""Potentials that generate divergences.

A :class:`Generator` bundles a potential ``phi`` on an open convex domain with
its gradient and Hessian (and optionally third derivatives).  Two kinds exist:

* alpha-exponentially concave potentials (``alpha > 0``), for which
  ``exp(alpha * phi)`` is concave, generating L-alpha divergences;
* convex potentials carrying the Bregman tag (``alpha is None``).

All oracles are vectorised over leading axes: a point array of shape
``(..., n)`` maps to ``(...)``, ``(..., n)``, ``(..., n, n)`` and
``(..., n, n, n)`` respectively.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, GeneratorKindError

Array = np.ndarray
Field = Callable[[Array], Array]

#: Downstream tolerances are widened by this factor when derivative oracles
#: are finite-difference substitutes rather than analytic.
FD_ORACLE_TOLERANCE_FACTOR = 100.0


@dataclass(frozen=True)
class Domain:
    """Open convex set described by a membership predicate.

    Convexity is a property of the built-in constructors and is not checked.
    ``distance_to_boundary`` and ``bounds`` are used only for sampling.
    """

    dimension: int
    contains: Callable[[Array], Array]
    distance_to_boundary: Callable[[Array], Array]
    center: Array
    bounds: tuple[Array, Array]
    interior_margin: float = 0.0

    def check(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise DomainError(f"expected points of dimension {self.dimension}, got shape {x.shape}")
        if not np.all(self.contains(x)):
            raise DomainError("point outside the domain")
        return x


@dataclass(frozen=True)
class Generator:
    alpha: Optional[float]
    domain: Domain
    phi: Field
    grad_phi: Field
    hess_phi: Field
    third_phi: Optional[Field] = None
    name: str = "custom"
    analytic: bool = True
    params: dict = field(default_factory=dict, compare=False)

    @property
    def is_bregman(self) -> bool:
        return self.alpha is None

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def tolerance_factor(self) -> float:
        return 1.0 if self.analytic else FD_ORACLE_TOLERANCE_FACTOR

    def third(self, x) -> Array:
        """Third derivative tensor of phi; finite differences of the Hessian if no oracle."""
        if self.third_phi is not None:
            return self.third_phi(x)
        return fd_jacobian(self.hess_phi, x, 1e-4)

    def with_alpha(self, alpha: float) -> "Generator":
        """Same potential, different exponent (used for the small-alpha limit)."""
        _check_alpha(alpha)
        return Generator(alpha, self.domain, self.phi, self.grad_phi, self.hess_phi,
                         self.third_phi, self.name, self.analytic, dict(self.params, alpha=alpha))

    def require_alpha(self) -> float:
        if self.alpha is None:
            raise GeneratorKindError(f"generator {self.name!r} is a Bregman generator; an alpha generator is required")
        return self.alpha

    def require_bregman(self) -> None:
        if self.alpha is not None:
            raise GeneratorKindError(f"generator {self.name!r} is an alpha generator; a Bregman generator is required")

    @classmethod
    def from_potential(cls, phi: Field, domain: Domain, alpha: Optional[float], *,
                       grad_phi: Optional[Field] = None, hess_phi: Optional[Field] = None,
                       third_phi: Optional[Field] = None, name: str = "custom") -> "Generator":
        """Build a generator, substituting finite-difference oracles for missing derivatives."""
        if alpha is not None:
            _check_alpha(alpha)
        analytic = grad_phi is not None and hess_phi is not None
        if grad_phi is None:
            grad_phi = lambda x: fd_gradient(phi, x, 1e-5)
        if hess_phi is None:
            g = grad_phi
            hess_phi = lambda x: _symmetrize(fd_jacobian(g, x, 1e-4))
        return cls(alpha, domain, phi, grad_phi, hess_phi, third_phi, name, analytic)


def _check_alpha(alpha) -> None:
    if not np.isfinite(alpha) or alpha <= 0:
        raise ValueError(f"alpha must be a positive real, got {alpha!r}")


def _symmetrize(h: Array) -> Array:
    return 0.5 * (h + np.swapaxes(h, -1, -2))


# -- finite-difference oracles ---------------------------------------------

def fd_gradient(f: Field, x, h: float = 1e-5) -> Array:
    """Central-difference gradient of a scalar field, vectorised over leading axes."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    e = np.eye(n) * h
    xp = x[..., None, :] + e
    xm = x[..., None, :] - e
    return (f(xp) - f(xm)) / (2 * h)


def fd_jacobian(f: Field, x, h: float = 1e-5) -> Array:
    """Central-difference derivative of an array-valued field.

    If ``f(x)`` has shape ``(..., *s)`` the result has shape ``(..., *s, n)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    cols = []
    for i in range(n):
        step = np.zeros(n)
        step[i] = h
        cols.append((f(x + step) - f(x - step)) / (2 * h))
    return np.stack(cols, axis=-1)


# -- domains -----------------------------------------------------------------

def ball_domain(n: int, c: float, m) -> Domain:
    """Open ball ``|xi - m|^2 < c``."""
    m = np.asarray(m, dtype=float)
    radius = np.sqrt(c)

    def contains(x):
        return np.sum((np.asarray(x) - m) ** 2, axis=-1) < c

    def dist(x):
        return radius - np.linalg.norm(np.asarray(x) - m, axis=-1)

    return Domain(n, contains, dist, m.copy(), (m - radius, m + radius), 0.1 * radius)


def box_domain(n: int, half_width: float = 10.0) -> Domain:
    """All of R^n; the box only bounds where samples are drawn."""

    def contains(x):
        return np.all(np.isfinite(np.asarray(x)), axis=-1)

    def dist(x):
        return np.full(np.shape(x)[:-1], np.inf)

    return Domain(n, contains, dist, np.zeros(n), (np.full(n, -half_width), np.full(n, half_width)), 0.0)


def sample_interior(domain: Domain, rng: np.random.Generator, size: int, margin: Optional[float] = None) -> Array:
    """Uniform rejection sampling from the domain, keeping ``margin`` from the boundary."""
    margin = domain.interior_margin if margin is None else margin
    lo, hi = domain.bounds
    out = []
    count = 0
    while count < size:
        cand = rng.uniform(lo, hi, size=(max(2 * (size - count), 8), domain.dimension))
        ok = domain.contains(cand) & (domain.distance_to_boundary(cand) >= margin)
        keep = cand[ok][: size - count]
        out.append(keep)
        count += len(keep)
    return np.concatenate(out, axis=0)


# -- built-in generators -----------------------------------------------------

def make_ball_log_generator(n: int, c: float, m=None, alpha: float = 1.0) -> Generator:
    """``phi(xi) = log(c - |xi - m|^2) / alpha`` on the open ball of radius sqrt(c).

    ``exp(alpha * phi) = c - |xi - m|^2`` has Hessian ``-2 I`` everywhere.
    """
    if n < 2:
        raise ValueError("dimension must be at least 2")
    if not c > 0:
        raise ValueError("c must be positive")
    _check_alpha(alpha)
    m = np.zeros(n) if m is None else np.broadcast_to(np.asarray(m, dtype=float), (n,)).copy()
    eye = np.eye(n)

    def phi(x):
        y = np.asarray(x) - m
        return np.log(c - np.sum(y * y, axis=-1)) / alpha

    def grad(x):
        y = np.asarray(x) - m
        u = c - np.sum(y * y, axis=-1)
        return -2.0 * y / (alpha * u[..., None])

    def hess(x):
        y = np.asarray(x) - m
        u = (c - np.sum(y * y, axis=-1))[..., None, None]
        yy = y[..., :, None] * y[..., None, :]
        return (-2.0 * eye / u - 4.0 * yy / u**2) / alpha

    def third(x):
        y = np.asarray(x) - m
        u = (c - np.sum(y * y, axis=-1))[..., None, None, None]
        dy = (np.einsum("ij,...k->...ijk", eye, y)
              + np.einsum("ik,...j->...ijk", eye, y)
              + np.einsum("jk,...i->...ijk", eye, y))
        yyy = np.einsum("...i,...j,...k->...ijk", y, y, y)
        return (-4.0 * dy / u**2 - 16.0 * yyy / u**3) / alpha

    return Generator(float(alpha), ball_domain(n, c, m), phi, grad, hess, third,
                     name=f"ball_log({n},{c!r},{list(m)!r},{alpha!r})",
                     params=dict(kind="ball_log", n=n, c=float(c), m=m, alpha=float(alpha)))


def make_quadratic_bregman_generator(n: int) -> Generator:
    """Convex ``phi(xi) = |xi|^2 / 2`` on R^n with the Bregman tag."""
    if n < 2:
        raise ValueError("dimension must be at least 2")
    eye = np.eye(n)

    def phi(x):
        x = np.asarray(x)
        return 0.5 * np.sum(x * x, axis=-1)

    def grad(x):
        return np.array(x, dtype=float, copy=True)

    def hess(x):
        return np.broadcast_to(eye, np.shape(x)[:-1] + (n, n)).copy()

    def third(x):
        return np.zeros(np.shape(x)[:-1] + (n, n, n))

    return Generator(None, box_domain(n), phi, grad, hess, third,
                     name=f"quadratic({n})", params=dict(kind="quadratic", n=n))


def check_alpha_exp_concavity(g: Generator, p) -> float:
    """Largest eigenvalue of the Hessian of ``exp(alpha * phi)`` at ``p``.

    Valid alpha generators give a strictly negative value.
    """
    alpha = g.require_alpha()
    p = g.domain.check(p)
    d = g.grad_phi(p)
    hess_exp = alpha * np.exp(alpha * g.phi(p)) * (g.hess_phi(p) + alpha * np.outer(d, d))
    return float(np.linalg.eigvalsh(_symmetrize(hess_exp))[-1])


# -- string ids --------------------------------------------------------------

_ID_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$", re.S)


def parse_generator_id(ident: str, alpha: Optional[float] = None) -> Generator:
    """Build a generator from ``"ball_log(n,c,m,alpha)"`` or ``"quadratic(n)"``.

    For ``ball_log`` the trailing alpha may be omitted, in which case
    ``alpha`` is used; ``m`` may be a list or a scalar broadcast to length n.
    """
    match = _ID_RE.match(ident)
    if not match:
        raise ValueError(f"cannot parse generator id {ident!r}")
    kind, body = match.groups()
    try:
        args = ast.literal_eval(f"({body},)") if body.strip() else ()
    except (ValueError, SyntaxError) as exc:
        raise ValueError(f"bad arguments in generator id {ident!r}") from exc
    if kind == "quadratic":
        if len(args) != 1:
            raise ValueError("quadratic(n) takes exactly one argument")
        return make_quadratic_bregman_generator(int(args[0]))
    if kind == "ball_log":
        if len(args) == 3:
            if alpha is None:
                raise ValueError("ball_log(n,c,m) needs alpha from the config")
            n, c, m = args
            a = alpha
        elif len(args) == 4:
            n, c, m, a = args
            if alpha is not None and float(alpha) != float(a):
                raise ValueError(f"alpha in generator id ({a}) disagrees with configured alpha ({alpha})")
        else:
            raise ValueError("ball_log takes (n, c, m[, alpha])")
        return make_ball_log_generator(int(n), float(c), m, float(a))
    raise ValueError(f"unknown generator {kind!r}")
