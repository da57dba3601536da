"""Quadrature over unbounded microspaces.

Two rules are provided for Gaussian-dominated integrands:

* ``gauss_hermite`` -- reweighted Gauss-Hermite product rule.  Nodes are
  mapped through an affine transform ``x = center + sqrt(2) * L @ t``; when
  ``L`` is a Cholesky factor of the covariance of the dominant Gaussian the
  reweighted integrand is polynomial-like and the rule is exact to machine
  precision at modest orders.
* ``rectangle`` -- midpoint rule on a box of ``half_width`` axis standard
  deviations.  Used as an independent cross-check: for smooth integrands that
  decay like Gaussians the midpoint rule converges exponentially, and it
  shares no machinery with the Gauss-Hermite path.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureError

DEFAULT_ORDER = 64
_CHUNK = 1 << 19  # max number of nodes evaluated per vectorized call


@lru_cache(maxsize=64)
def hermgauss_cached(order: int):
    """Gauss-Hermite nodes/weights for weight exp(-t^2), cached per order."""
    t, w = np.polynomial.hermite.hermgauss(order)
    return t, w


@dataclass(frozen=True)
class IntegrationSpec:
    """Describes how to integrate over a d-dimensional microspace.

    ``transform`` is a (d, d) scale matrix; its rows/columns set the node
    cloud.  For ``axes`` construction it is diagonal with the per-axis
    effective standard deviations.
    """

    center: np.ndarray
    transform: np.ndarray
    order: int = DEFAULT_ORDER
    rule: str = "gauss_hermite"
    half_width: float = 8.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        object.__setattr__(self, "transform", np.atleast_2d(np.asarray(self.transform, dtype=float)))
        if self.transform.shape != (self.dim, self.dim):
            raise ValueError("transform must be (d, d) matching the center length")
        if self.order < 2:
            raise ValueError("order must be >= 2")
        if self.rule not in ("gauss_hermite", "rectangle"):
            raise ValueError(f"unknown rule {self.rule!r}")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def axis_scales(self) -> np.ndarray:
        """Per-axis effective standard deviations sqrt(diag(L L^T))."""
        return np.sqrt(np.sum(self.transform**2, axis=1))

    @classmethod
    def axes(cls, center, scales, order: int = DEFAULT_ORDER, rule: str = "gauss_hermite",
             half_width: float = 8.0) -> "IntegrationSpec":
        scales = np.atleast_1d(np.asarray(scales, dtype=float))
        return cls(np.asarray(center, dtype=float), np.diag(scales), order, rule, half_width)

    @classmethod
    def for_gaussian(cls, mean, covariance, order: int = DEFAULT_ORDER) -> "IntegrationSpec":
        """Whitened rule matched to a Gaussian with the given mean/covariance."""
        L = np.linalg.cholesky(np.atleast_2d(np.asarray(covariance, dtype=float)))
        return cls(np.asarray(mean, dtype=float), L, order, "gauss_hermite")

    def with_order(self, order: int) -> "IntegrationSpec":
        return IntegrationSpec(self.center, self.transform, order, self.rule, self.half_width)

    def axis_spec(self, i: int, order: int | None = None) -> "IntegrationSpec":
        """1-D spec for axis ``i`` (used for marginal integrals)."""
        return IntegrationSpec(
            self.center[i : i + 1],
            np.array([[self.axis_scales[i]]]),
            order or self.order,
            self.rule,
            self.half_width,
        )


def _node_chunks(spec: IntegrationSpec):
    """Yield (points, weights) chunks; points has shape (d, k)."""
    d = spec.dim
    if spec.rule == "gauss_hermite":
        t, w = hermgauss_cached(spec.order)
        axes_t = [t] * d
        # absorb the implicit weight exp(-t^2) so plain integrands can be summed
        axes_w = [w * np.exp(t**2)] * d
        jac = (np.sqrt(2.0) ** d) * abs(np.linalg.det(spec.transform))
        map_pts = lambda T: spec.center[:, None] + np.sqrt(2.0) * (spec.transform @ T)
    else:
        scales = spec.axis_scales
        lo = spec.center - spec.half_width * scales
        hi = spec.center + spec.half_width * scales
        h = (hi - lo) / spec.order
        axes_t = [lo[i] + (np.arange(spec.order) + 0.5) * h[i] for i in range(d)]
        axes_w = [np.full(spec.order, h[i]) for i in range(d)]
        jac = 1.0
        map_pts = lambda T: T

    n = spec.order
    total = n**d
    if total <= _CHUNK:
        grids = np.meshgrid(*axes_t, indexing="ij")
        T = np.stack([g.ravel() for g in grids])
        W = axes_w[0]
        for i in range(1, d):
            W = np.multiply.outer(W, axes_w[i])
        yield map_pts(T), W.ravel() * jac
        return

    # chunk along the first axis
    grids_rest = np.meshgrid(*axes_t[1:], indexing="ij")
    T_rest = np.stack([g.ravel() for g in grids_rest])
    W_rest = axes_w[1]
    for i in range(2, d):
        W_rest = np.multiply.outer(W_rest, axes_w[i])
    W_rest = W_rest.ravel()
    for k in range(n):
        T = np.vstack([np.full(T_rest.shape[1], axes_t[0][k]), T_rest])
        yield map_pts(T), axes_w[0][k] * W_rest * jac


def integrate(fn, spec: IntegrationSpec):
    """Integrate ``fn`` over the microspace described by ``spec``.

    ``fn`` maps an array of points with shape (d, k) to values of shape (k,)
    or (k, m); the result is a float or an (m,) array accordingly.
    """
    total = None
    for pts, w in _node_chunks(spec):
        vals = np.asarray(fn(pts))
        if vals.ndim == 1:
            part = float(np.dot(w, vals))
        else:
            part = w @ vals
        total = part if total is None else total + part
    return total


def integrate_with_error(fn, spec: IntegrationSpec):
    """Integrate and estimate the error by comparing against a coarser rule."""
    coarse = spec.with_order(max(4, spec.order // 2))
    val = integrate(fn, spec)
    ref = integrate(fn, coarse)
    err = np.max(np.abs(np.atleast_1d(val - ref)))
    return val, float(err)


def integrate_checked(fn, spec: IntegrationSpec, tol: float):
    """Integrate; raise :class:`QuadratureError` if the error estimate exceeds tol."""
    val, err = integrate_with_error(fn, spec)
    if err > tol:
        raise QuadratureError(
            f"quadrature did not converge: error estimate {err:.3e} > tol {tol:.3e}"
        )
    return val, err
