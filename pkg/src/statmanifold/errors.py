"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """Parameter point lies outside the declared domain, or a finite-difference
    stencil around it would leave the domain."""


class QuadratureError(RuntimeError):
    """Quadrature failed to converge: the error estimate obtained by comparing
    two rule orders exceeds the requested tolerance, or a consistency
    spot-check (normalization) failed."""


class SingularMetricError(RuntimeError):
    """Metric is singular or too ill-conditioned to invert (cond > 1e12)."""


class NonPositiveDefiniteError(ValueError):
    """A matrix required to be symmetric positive definite is not (metric,
    covariance, or energy Hessian)."""


class DegenerateCorrelationError(ValueError):
    """|r| = 1: the correlated density degenerates and the metric diverges."""


class TemperatureRangeError(ValueError):
    """Temperature outside the validity range of the requested mapping
    (e.g. T > T0 for the oscillator reduction, or T = T0 where tau diverges)."""


class NonSmoothEnergyError(RuntimeError):
    """Independent finite-difference stencils for the energy Hessian disagree,
    which signals a non-smooth energy function."""
