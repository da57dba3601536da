"""Riemannian geometry of parametric statistical models.

The metric is the Fisher information bilinear form

    g_ij(theta) = int p(x; theta) d_i log p(x; theta) d_j log p(x; theta) dx,

computed by quadrature over the microspace.  Connection and curvature are
obtained by finite differencing the metric field with the standard
Levi-Civita formulas:

    Gamma^k_ij = 1/2 g^{km} (g_{mi,j} + g_{mj,i} - g_{ij,m})
    R_iklm     = 1/2 (g_{im,kl} + g_{kl,im} - g_{il,km} - g_{km,il})
                 + g_{np} (Gamma^n_kl Gamma^p_im - Gamma^n_km Gamma^p_il)
    R_ik       = g^{lm} R_{limk}
    R          = g^{ik} R_ik

Geodesics solve d^2 theta^k / dtau^2 + Gamma^k_ij thetadot^i thetadot^j = 0
with a classic fixed-step 4th-order scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NonPositiveDefiniteError, SingularMetricError
from .quadrature import IntegrationSpec, integrate, integrate_checked

COND_LIMIT = 1e12
FD_REL_STEP = 1e-5


@dataclass(frozen=True)
class ParameterDomain:
    """Open region of the macrospace; box bounds, a predicate, or both."""

    dim: int
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    predicate: Optional[Callable[[np.ndarray], bool]] = None

    @classmethod
    def box(cls, lower, upper) -> "ParameterDomain":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        return cls(lower.shape[0], lower, upper)

    @classmethod
    def from_predicate(cls, dim: int, fn) -> "ParameterDomain":
        return cls(dim, predicate=fn)

    @classmethod
    def unbounded(cls, dim: int) -> "ParameterDomain":
        return cls(dim)

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            return False
        if not np.all(np.isfinite(theta)):
            return False
        if self.lower is not None and np.any(theta <= self.lower):
            return False
        if self.upper is not None and np.any(theta >= self.upper):
            return False
        if self.predicate is not None and not self.predicate(theta):
            return False
        return True


@dataclass(frozen=True)
class ModelFamily:
    """Parametric family p(x; theta) over a microspace of dimension micro_dim.

    ``density`` maps points of shape (micro_dim, k) and a theta vector to
    density values (k,).  ``log_density_grad_theta`` returns the gradient of
    log p in theta with shape (macro_dim, k).  ``integration_spec`` maps theta
    to the quadrature description covering the effective support of
    p(.; theta).  The map theta -> p(.; theta) is assumed injective.
    """

    micro_dim: int
    macro_dim: int
    density: Callable
    log_density_grad_theta: Callable
    domain: ParameterDomain
    integration_spec: Callable[[np.ndarray], IntegrationSpec]
    name: str = ""

    def require_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.macro_dim,):
            raise DomainError(
                f"theta has shape {theta.shape}, expected ({self.macro_dim},)"
            )
        if not self.domain.contains(theta):
            raise DomainError(f"theta {theta} outside the domain of {self.name or 'model'}")
        return theta


def density_normalization(model: ModelFamily, theta, order: int | None = None) -> float:
    """Quadrature of p(.; theta) over the microspace (should be 1)."""
    theta = model.require_theta(theta)
    spec = model.integration_spec(theta)
    if order is not None:
        spec = spec.with_order(order)
    return float(integrate(lambda x: model.density(x, theta), spec))


def fisher_metric(model: ModelFamily, theta, order: int | None = None,
                  quad_tol: float = 1e-6, with_error: bool = False):
    """Fisher information matrix of ``model`` at ``theta`` by quadrature.

    Returns the symmetrized (m, m) matrix; with ``with_error=True`` also
    returns the quadrature error estimate.  Raises
    :class:`NonPositiveDefiniteError` when the result is not positive
    definite, which signals an invalid model or insufficient quadrature.
    """
    theta = model.require_theta(theta)
    spec = model.integration_spec(theta)
    if order is not None:
        spec = spec.with_order(order)
    m = model.macro_dim
    iu = np.triu_indices(m)

    def integrand(x):
        p = model.density(x, theta)
        grad = model.log_density_grad_theta(x, theta)
        return (p * grad[iu[0]] * grad[iu[1]]).T  # (k, m*(m+1)/2)

    vals, err = integrate_checked(integrand, spec, quad_tol)
    g = np.zeros((m, m))
    g[iu] = vals
    g = np.triu(g) + np.triu(g, 1).T
    g = 0.5 * (g + g.T)
    if np.min(np.linalg.eigvalsh(g)) <= 0.0:
        raise NonPositiveDefiniteError(
            f"Fisher metric at theta={theta} is not positive definite"
        )
    if with_error:
        return g, err
    return g


@dataclass(frozen=True)
class MetricField:
    """A map theta -> symmetric positive-definite matrix g(theta).

    Either quadrature-backed (``from_model``) or closed-form
    (``from_function``).  Closed-form fields may carry analytic derivative
    callables which override the finite-difference path: ``d1(theta)[i,j,k] =
    g_ij,k`` and ``d2(theta)[i,j,k,l] = g_ij,kl``.
    """

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    domain: ParameterDomain
    d1: Optional[Callable] = None
    d2: Optional[Callable] = None
    name: str = ""

    def __call__(self, theta) -> np.ndarray:
        g = np.asarray(self.func(np.asarray(theta, dtype=float)), dtype=float)
        return 0.5 * (g + g.T)

    @classmethod
    def from_model(cls, model: ModelFamily, order: int | None = None,
                   quad_tol: float = 1e-6) -> "MetricField":
        fn = lambda th: fisher_metric(model, th, order=order, quad_tol=quad_tol)
        return cls(model.macro_dim, fn, model.domain, name=model.name or "fisher")

    @classmethod
    def from_function(cls, dim: int, func, domain: ParameterDomain | None = None,
                      d1=None, d2=None, name: str = "") -> "MetricField":
        return cls(dim, func, domain or ParameterDomain.unbounded(dim), d1, d2, name)

    def require_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise DomainError(f"theta has shape {theta.shape}, expected ({self.dim},)")
        if not self.domain.contains(theta):
            raise DomainError(f"theta {theta} outside the metric field domain")
        return theta


def _fd_steps(theta: np.ndarray) -> np.ndarray:
    return np.maximum(FD_REL_STEP, FD_REL_STEP * np.abs(theta))


def _check_stencil(field: MetricField, theta: np.ndarray, reach: np.ndarray) -> None:
    for k in range(theta.shape[0]):
        for s in (-1.0, 1.0):
            probe = theta.copy()
            probe[k] += s * reach[k]
            if not field.domain.contains(probe):
                raise DomainError(
                    f"finite-difference stencil exits the domain at coordinate {k}"
                )


def metric_derivatives(field: MetricField, theta, order: int):
    """Central finite-difference derivatives of the metric field.

    order=1 returns d1[i,j,k] = g_ij,k; order=2 returns
    d2[i,j,k,l] = g_ij,kl.  Analytic derivatives on the field take
    precedence.  Raises :class:`DomainError` when the stencil would leave the
    domain.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    theta = field.require_theta(theta)
    m = field.dim
    if order == 1 and field.d1 is not None:
        return np.asarray(field.d1(theta), dtype=float)
    if order == 2 and field.d2 is not None:
        return np.asarray(field.d2(theta), dtype=float)

    h = _fd_steps(theta)
    if np.any(h <= 0.0) or np.any(~np.isfinite(h)):
        raise DomainError("finite-difference step underflow")
    _check_stencil(field, theta, h * order)

    if order == 1:
        d1 = np.zeros((m, m, m))
        for k in range(m):
            tp, tm = theta.copy(), theta.copy()
            tp[k] += h[k]
            tm[k] -= h[k]
            d1[:, :, k] = (field(tp) - field(tm)) / (2.0 * h[k])
        return d1

    g0 = field(theta)
    d2 = np.zeros((m, m, m, m))
    for k in range(m):
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h[k]
        tm[k] -= h[k]
        d2[:, :, k, k] = (field(tp) - 2.0 * g0 + field(tm)) / h[k] ** 2
        for l in range(k + 1, m):
            corners = {}
            for sk in (1.0, -1.0):
                for sl in (1.0, -1.0):
                    t = theta.copy()
                    t[k] += sk * h[k]
                    t[l] += sl * h[l]
                    corners[(sk, sl)] = field(t)
            mixed = (corners[(1, 1)] - corners[(1, -1)] - corners[(-1, 1)]
                     + corners[(-1, -1)]) / (4.0 * h[k] * h[l])
            d2[:, :, k, l] = mixed
            d2[:, :, l, k] = mixed
    return d2


def inverse_metric(g: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive-definite metric with conditioning guard."""
    eig = np.linalg.eigvalsh(g)
    if eig[0] <= 0.0:
        raise SingularMetricError("metric is not positive definite")
    if eig[-1] / eig[0] > COND_LIMIT:
        raise SingularMetricError(
            f"metric condition number {eig[-1] / eig[0]:.3e} exceeds {COND_LIMIT:.0e}"
        )
    return np.linalg.inv(g)


def christoffel(field: MetricField, theta) -> np.ndarray:
    """Levi-Civita connection coefficients Gamma[k, i, j], symmetric in (i, j)."""
    theta = field.require_theta(theta)
    g = field(theta)
    gi = inverse_metric(g)
    d1 = metric_derivatives(field, theta, 1)
    # Gamma^k_ij = 1/2 g^{km} (g_mi,j + g_mj,i - g_ij,m); d1[i,j,k] = g_ij,k
    gam = 0.5 * np.einsum(
        "km,mij->kij",
        gi,
        d1 + d1.transpose(0, 2, 1) - d1.transpose(2, 0, 1),
    )
    return gam


def riemann(field: MetricField, theta) -> np.ndarray:
    """Covariant curvature tensor R[i, k, l, m]."""
    theta = field.require_theta(theta)
    g = field(theta)
    gam = christoffel(field, theta)
    d2 = metric_derivatives(field, theta, 2)
    term1 = 0.5 * (
        d2.transpose(0, 2, 3, 1)      # g_im,kl -> [i,k,l,m]
        + d2.transpose(2, 0, 1, 3)    # g_kl,im
        - d2.transpose(0, 2, 1, 3)    # g_il,km
        - d2.transpose(2, 0, 3, 1)    # g_km,il
    )
    term2 = np.einsum("np,nkl,pim->iklm", g, gam, gam) - np.einsum(
        "np,nkm,pil->iklm", g, gam, gam
    )
    return term1 + term2


def ricci(field: MetricField, theta) -> np.ndarray:
    """Ricci tensor R_ik = g^{lm} R_{limk}."""
    theta = field.require_theta(theta)
    gi = inverse_metric(field(theta))
    return np.einsum("lm,limk->ik", gi, riemann(field, theta))


def scalar_curvature(field: MetricField, theta) -> float:
    """Scalar curvature R = g^{ik} R_ik."""
    theta = field.require_theta(theta)
    gi = inverse_metric(field(theta))
    return float(np.einsum("ik,ik->", gi, ricci(field, theta)))


@dataclass(frozen=True)
class GeometryReport:
    """All local geometric quantities at a parameter point."""

    at: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float


def geometry_report(field: MetricField, theta) -> GeometryReport:
    theta = field.require_theta(theta)
    gam = christoffel(field, theta)
    rie = riemann(field, theta)
    gi = inverse_metric(field(theta))
    ric = np.einsum("lm,limk->ik", gi, rie)
    scal = float(np.einsum("ik,ik->", gi, ric))
    return GeometryReport(theta, gam, rie, ric, scal)


@dataclass(frozen=True)
class GeodesicState:
    """Position, velocity and affine parameter along a geodesic."""

    position: np.ndarray
    velocity: np.ndarray
    tau: float


@dataclass(frozen=True)
class GeodesicResult:
    states: tuple
    exited_domain: bool


def metric_speed(field: MetricField, state: GeodesicState) -> float:
    """Conserved quantity v . g(theta) . v along an exact geodesic."""
    g = field(state.position)
    return float(state.velocity @ g @ state.velocity)


def geodesic_integrate(field: MetricField, init: GeodesicState, tau_end: float,
                       step: float) -> GeodesicResult:
    """Integrate the geodesic system with a fixed-step 4th-order scheme.

    Terminates early (``exited_domain`` flag set) if the trajectory leaves the
    parameter domain; a singular metric on the path raises
    :class:`SingularMetricError`.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    pos = field.require_theta(init.position)
    vel = np.asarray(init.velocity, dtype=float)
    tau = float(init.tau)

    def rhs(p, v):
        gam = christoffel(field, p)
        return v, -np.einsum("kij,i,j->k", gam, v, v)

    states = [GeodesicState(pos.copy(), vel.copy(), tau)]
    n_steps = int(np.ceil((tau_end - tau) / step - 1e-12))
    for _ in range(n_steps):
        h = min(step, tau_end - tau)
        if h <= 0.0:
            break
        try:
            k1p, k1v = rhs(pos, vel)
            k2p, k2v = rhs(pos + 0.5 * h * k1p, vel + 0.5 * h * k1v)
            k3p, k3v = rhs(pos + 0.5 * h * k2p, vel + 0.5 * h * k2v)
            k4p, k4v = rhs(pos + h * k3p, vel + h * k3v)
        except DomainError:
            # an intermediate stage probed outside the domain
            return GeodesicResult(tuple(states), True)
        pos = pos + (h / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p)
        vel = vel + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        tau += h
        if not field.domain.contains(pos):
            return GeodesicResult(tuple(states), True)
        states.append(GeodesicState(pos.copy(), vel.copy(), tau))
    return GeodesicResult(tuple(states), False)
