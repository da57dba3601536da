"""Closed-form Gaussian statistical models.

The central object is the correlated bivariate model with the macroscopic
constraint ``sigma_c^2 = sigma_x * sigma_y``:

    p(x, y; mu_x, sigma, r) =
        1 / (2 pi sigma_c^2 sqrt(1 - r^2)) *
        exp( -[ (x-mu_x)^2/sigma^2 + y^2 sigma^2/sigma_c^4
                - 2 r (x-mu_x) y / sigma_c^2 ] / (2 (1 - r^2)) )

whose macrospace is the half-plane (mu_x, sigma); the correlation r and the
constraint constant sigma_c are external parameters (mu_y is fixed at zero).
Its Fisher metric, connection and curvature are known in closed form and are
used as oracles for the numeric geometry pipeline:

    g = diag( 1/(sigma^2 (1-r^2)), 4/(sigma^2 (1-r^2)) )
    Gamma^1_12 = -1/sigma,  Gamma^2_11 = 1/(4 sigma),  Gamma^2_22 = -1/sigma
    R_11 = -1/(4 sigma^2),  R_22 = -1/sigma^2
    R(r) = -(1 - r^2)/2

General multivariate Gaussians over a 2n-dimensional microspace are provided
for the canonical-ensemble bridge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCorrelationError, NonPositiveDefiniteError
from .manifold import ModelFamily, ParameterDomain
from .quadrature import DEFAULT_ORDER, IntegrationSpec

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Correlated2DParams:
    """Parameters of the constrained correlated bivariate model."""

    mu_x: float
    sigma: float
    r: float
    sigma_c: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        if not self.sigma_c > 0.0:
            raise ValueError("sigma_c must be positive")
        if abs(self.r) > 1.0:
            raise ValueError("correlation coefficient must lie in [-1, 1]")

    @property
    def sigma_y(self) -> float:
        """Scale of the y marginal implied by the constraint."""
        return self.sigma_c**2 / self.sigma

    def covariance(self) -> np.ndarray:
        sy = self.sigma_y
        c = self.r * self.sigma * sy
        return np.array([[self.sigma**2, c], [c, sy**2]])

    def require_nondegenerate(self) -> None:
        if abs(self.r) >= 1.0:
            raise DegenerateCorrelationError(
                "|r| = 1: the correlated density is non-normalizable"
            )


@dataclass(frozen=True)
class UnivariateGaussian:
    """One-dimensional Gaussian density, used for marginals."""

    mean: float
    variance: float

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.variance))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-((x - self.mean) ** 2) / (2.0 * self.variance)) / np.sqrt(
            TWO_PI * self.variance
        )

    def __call__(self, x):
        return self.pdf(x)


def pdf_2d(x, y, params: Correlated2DParams):
    """Density of the correlated model; vectorized over x, y."""
    params.require_nondegenerate()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - params.mu_x
    s, sc, r = params.sigma, params.sigma_c, params.r
    quad = d**2 / s**2 + y**2 * s**2 / sc**4 - 2.0 * r * d * y / sc**2
    return np.exp(-quad / (2.0 * (1.0 - r**2))) / (
        TWO_PI * sc**2 * np.sqrt(1.0 - r**2)
    )


def marginals_2d(params: Correlated2DParams):
    """Marginal densities (p1(x), p2(y)) of the correlated model."""
    params.require_nondegenerate()
    return (
        UnivariateGaussian(params.mu_x, params.sigma**2),
        UnivariateGaussian(0.0, params.sigma_c**4 / params.sigma**2),
    )


def metric_2d_closed(params: Correlated2DParams) -> np.ndarray:
    """Closed-form Fisher metric diag(1, 4) / (sigma^2 (1 - r^2))."""
    params.require_nondegenerate()
    denom = params.sigma**2 * (1.0 - params.r**2)
    return np.diag([1.0 / denom, 4.0 / denom])


def christoffel_2d_closed(sigma: float) -> np.ndarray:
    """Closed-form connection of the correlated model; independent of r."""
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    gam = np.zeros((2, 2, 2))
    gam[0, 0, 1] = gam[0, 1, 0] = -1.0 / sigma
    gam[1, 0, 0] = 1.0 / (4.0 * sigma)
    gam[1, 1, 1] = -1.0 / sigma
    return gam


def ricci_2d_closed(sigma: float) -> np.ndarray:
    """Closed-form Ricci tensor diag(-1/(4 sigma^2), -1/sigma^2)."""
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    return np.diag([-1.0 / (4.0 * sigma**2), -1.0 / sigma**2])


def curvature_2d_closed(r: float) -> float:
    """Scalar curvature R(r) = -(1 - r^2)/2; minimum -1/2 at r = 0, 0 at |r| = 1."""
    if abs(r) > 1.0:
        raise ValueError("correlation coefficient must lie in [-1, 1]")
    return -0.5 * (1.0 - r**2)


def correlated_2d_family(r: float, sigma_c: float = 1.0,
                         order: int = DEFAULT_ORDER) -> ModelFamily:
    """The correlated model as a quadrature-backed family over theta = (mu_x, sigma).

    r and sigma_c are external parameters held fixed; geometry is computed on
    the two-dimensional macrospace.
    """
    if abs(r) >= 1.0:
        raise DegenerateCorrelationError("|r| = 1 is a boundary of the family")
    if not sigma_c > 0.0:
        raise ValueError("sigma_c must be positive")

    def params_at(theta):
        return Correlated2DParams(theta[0], theta[1], r, sigma_c)

    def density(x, theta):
        return pdf_2d(x[0], x[1], params_at(theta))

    def grad_log(x, theta):
        mu, s = theta
        d = x[0] - mu
        y = x[1]
        one_m = 1.0 - r**2
        gmu = (d / s**2 - r * y / sigma_c**2) / one_m
        gs = (d**2 / s**3 - s * y**2 / sigma_c**4) / one_m
        return np.stack([gmu, gs])

    def spec(theta):
        return IntegrationSpec.for_gaussian(
            [theta[0], 0.0], params_at(theta).covariance(), order
        )

    domain = ParameterDomain.box([-np.inf, 0.0], [np.inf, np.inf])
    return ModelFamily(
        micro_dim=2,
        macro_dim=2,
        density=density,
        log_density_grad_theta=grad_log,
        domain=domain,
        integration_spec=spec,
        name=f"correlated2d(r={r}, sigma_c={sigma_c})",
    )


def univariate_gaussian_family(order: int = DEFAULT_ORDER) -> ModelFamily:
    """N(mu, sigma^2) over theta = (mu, sigma); Fisher metric diag(1, 2)/sigma^2."""

    def density(x, theta):
        mu, s = theta
        return np.exp(-((x[0] - mu) ** 2) / (2.0 * s**2)) / np.sqrt(TWO_PI * s**2)

    def grad_log(x, theta):
        mu, s = theta
        d = x[0] - mu
        return np.stack([d / s**2, d**2 / s**3 - 1.0 / s])

    def spec(theta):
        return IntegrationSpec.axes([theta[0]], [theta[1]], order)

    domain = ParameterDomain.box([-np.inf, 0.0], [np.inf, np.inf])
    return ModelFamily(1, 2, density, grad_log, domain, spec, name="gaussian1d")


@dataclass(frozen=True)
class MultivariateGaussian:
    """Gaussian over a 2n-dimensional microspace with full covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("covariance shape does not match mean length")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise NonPositiveDefiniteError("covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(cov)) <= 0.0:
            raise NonPositiveDefiniteError("covariance must be positive definite")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def mvn_pdf(x, g: MultivariateGaussian):
    """Multivariate normal density; x has shape (dim,) or (dim, k)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[:, None] if single else x
    d = pts - g.mean[:, None]
    sol = np.linalg.solve(g.covariance, d)
    quad = np.sum(d * sol, axis=0)
    det = np.linalg.det(g.covariance)
    vals = np.exp(-0.5 * quad) / np.sqrt((TWO_PI ** g.dim) * det)
    return float(vals[0]) if single else vals


def mvn_marginal(g: MultivariateGaussian, i: int) -> UnivariateGaussian:
    """i-th coordinate marginal N(mean_i, cov_ii)."""
    if not 0 <= i < g.dim:
        raise IndexError(f"marginal index {i} out of range for dim {g.dim}")
    return UnivariateGaussian(float(g.mean[i]), float(g.covariance[i, i]))
