"""Exception types raised by the library."""


class DomainError(ValueError):
    """A point lies outside the generator's domain."""


class LogArgumentError(DomainError):
    """The argument of the logarithm in an L-alpha divergence is not positive.

    The divergence is finite only where ``1 + alpha * Dphi(xi') . (xi - xi') > 0``;
    convexity of the domain alone does not guarantee this.
    """


class GeneratorKindError(TypeError):
    """An operation received a Bregman generator where an alpha one was required, or vice versa."""


class DegeneratePlaneError(ValueError):
    """Two tangent vectors span a (numerically) degenerate 2-plane."""


class NotPositiveDefiniteError(ValueError):
    """An induced metric failed to be positive definite."""


class ConvergenceError(RuntimeError):
    """An iterative solve or ODE refinement did not converge."""
