"""Correlation between microvariables and the ergodic-hierarchy classifier.

The central quantity is the correlation of N integrable test functions under
a joint density versus the product of its marginals,

    C(f_1, ..., f_N, tau) = int p(x; theta(tau)) f_1(x_1) ... f_N(x_N) dx
                            - prod_i int p_i(x_i; theta(tau)) f_i(x_i) dx_i,

which vanishes identically for product measures.  A trace of C along a
time-like parameter tau is classified into three levels of decreasing
strength:

* Bernoulli -- C is zero (within tol) at every sample;
* Mixing    -- C decays: the trailing window is zero within tol;
* Ergodic   -- the running Cesaro average (1/T) int_0^T C dtau vanishes.

Each level implies the weaker ones; the classifier grants the implied levels
even when a finite-horizon statistic (e.g. the Cesaro average of a trace that
decayed only recently) has not yet converged.

For the correlated bivariate model the sup-norm distance between joint and
product of marginals is characterized by the closed form

    F(r) = |r| (sqrt(1 - r^2) (1 + |r|))^(-1 - 1/|r|),

independent of mu_x and sigma, and F(r) * ||f_1 f_2||_1 bounds |C|.  The
closed form is the value of the difference at its interior critical point on
the diagonal; that critical point exists only while sqrt(1-r^2)(1+|r|) >= 1,
i.e. |r| <= r* = 0.8392867552141612 (the root of (1-r)(1+r)^3 = 1).  Up to r*
the closed form equals the supremum exactly; beyond r* the supremum moves to
the center of the distribution, with value 1/sqrt(1-r^2) - 1, and the closed
form strictly exceeds it (so bounds built from it remain valid).  Both the
closed form and the brute-force maximizer are expressed in units of the
joint's central prefactor 1/(2 pi sigma_c^2), which makes them scale-free
and directly comparable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureError
from .models import (
    Correlated2DParams,
    MultivariateGaussian,
    marginals_2d,
    mvn_marginal,
    mvn_pdf,
    pdf_2d,
)
from .quadrature import DEFAULT_ORDER, IntegrationSpec, integrate

SQRT_TWO_PI = math.sqrt(2.0 * math.pi)
NORM_SPOT_TOL = 1e-6


@dataclass(frozen=True)
class GaussianBump:
    """Gaussian test function height * exp(-(x - center)^2 / (2 width^2))."""

    center: float
    width: float
    height: float = 1.0

    def __post_init__(self):
        if not self.width > 0.0:
            raise ValueError("width must be positive")

    @property
    def l1_norm(self) -> float:
        return abs(self.height) * self.width * SQRT_TWO_PI

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.height * np.exp(-((x - self.center) ** 2) / (2.0 * self.width**2))


@dataclass(frozen=True)
class TestFunctionSet:
    """N absolutely integrable test functions with precomputed L1 norms."""

    __test__ = False  # not a pytest collection target

    fs: tuple
    l1_norms: tuple

    def __post_init__(self):
        if len(self.fs) != len(self.l1_norms):
            raise ValueError("fs and l1_norms must have equal length")
        if any(not (n > 0.0 and np.isfinite(n)) for n in self.l1_norms):
            raise ValueError("every L1 norm must be finite and positive")

    def __len__(self) -> int:
        return len(self.fs)

    @property
    def product_l1(self) -> float:
        return float(np.prod(self.l1_norms))

    @classmethod
    def from_bumps(cls, bumps: Sequence[GaussianBump]) -> "TestFunctionSet":
        return cls(tuple(bumps), tuple(b.l1_norm for b in bumps))

    @classmethod
    def unit_l1_bumps(cls, centers: Sequence[float], width: float = 1.0) -> "TestFunctionSet":
        """Bumps normalized to unit L1 norm, one per coordinate center."""
        bumps = [GaussianBump(c, width, 1.0 / (width * SQRT_TWO_PI)) for c in centers]
        return cls.from_bumps(bumps)

    @classmethod
    def from_functions(cls, fs: Sequence[Callable], specs: Sequence[IntegrationSpec]) -> "TestFunctionSet":
        """Arbitrary integrable functions; L1 norms computed by quadrature."""
        norms = [float(integrate(lambda x, f=f: np.abs(f(x[0])), s)) for f, s in zip(fs, specs)]
        return cls(tuple(fs), tuple(norms))


def ig_correlation(joint: Callable, marginals: Sequence[Callable],
                   fs: TestFunctionSet, spec: IntegrationSpec,
                   check: bool = True) -> float:
    """Correlation of the test functions under ``joint`` minus the product route.

    ``joint`` maps points of shape (N, k) to density values (k,); each
    marginal maps (k,) to (k,).  ``spec`` covers the joint's effective
    support; per-axis 1-D rules derived from it integrate the marginals.
    With ``check`` the joint and marginal normalizations are spot-checked by
    quadrature.
    """
    n = len(fs)
    if n < 2:
        raise ValueError("need at least two test functions")
    if len(marginals) != n or spec.dim != n:
        raise ValueError("joint dimension, marginals and test functions must agree")

    if check:
        total = float(integrate(joint, spec))
        if abs(total - 1.0) > NORM_SPOT_TOL:
            raise QuadratureError(
                f"joint density normalization off by {total - 1.0:.3e}"
            )

    def joint_integrand(x):
        vals = joint(x)
        for i, f in enumerate(fs.fs):
            vals = vals * f(x[i])
        return vals

    joint_term = float(integrate(joint_integrand, spec))

    prod_term = 1.0
    for i, (p_i, f_i) in enumerate(zip(marginals, fs.fs)):
        spec_i = spec.axis_spec(i)
        if check:
            mass = float(integrate(lambda x, p=p_i: p(x[0]), spec_i))
            if abs(mass - 1.0) > NORM_SPOT_TOL:
                raise QuadratureError(
                    f"marginal {i} inconsistent with joint: mass {mass:.8f}"
                )
        prod_term *= float(integrate(lambda x, p=p_i, f=f_i: p(x[0]) * f(x[0]), spec_i))
    return joint_term - prod_term


def ig_correlation_2d(params: Correlated2DParams, fs: TestFunctionSet,
                      order: int = DEFAULT_ORDER, check: bool = False) -> float:
    """IG correlation for the correlated bivariate model."""
    params.require_nondegenerate()
    p1, p2 = marginals_2d(params)
    spec = IntegrationSpec.for_gaussian([params.mu_x, 0.0], params.covariance(), order)
    return ig_correlation(
        lambda x: pdf_2d(x[0], x[1], params), [p1, p2], fs, spec, check=check
    )


BRANCH_SWITCH_R = 0.8392867552141612  # root of (1-r)(1+r)^3 = 1


def distinguishability_F_closed(r: float) -> float:
    """Closed-form distinguishability of the correlated model.

    F(0) = 0 by continuity; F is even in r; at |r| = 1 the measure diverges
    and math.inf is returned.  Equals the sup-norm distance between joint and
    product of marginals for |r| <= BRANCH_SWITCH_R; beyond that point the
    interior critical point it describes no longer exists and F strictly
    exceeds the attained supremum (it remains a valid upper bound).
    """
    a = abs(r)
    if a > 1.0:
        raise ValueError("correlation coefficient must lie in [-1, 1]")
    if a == 0.0:
        return 0.0
    if a == 1.0:
        return math.inf
    return a * (math.sqrt(1.0 - a * a) * (1.0 + a)) ** (-1.0 - 1.0 / a)


def distinguishability_F_numeric(params: Correlated2DParams,
                                 coarse_points: int = 241,
                                 half_width: float = 8.0,
                                 zoom_rounds: int = 42,
                                 zoom_points: int = 33) -> float:
    """Brute-force oracle for the closed form: maximize |p - p1 p2|.

    A coarse scan over +-``half_width`` effective standard deviations is
    followed by deterministic zoom refinement around the best cell.  The
    maximum is reported in units of the joint's central prefactor
    1/(2 pi sigma_c^2), which makes it independent of mu_x, sigma and
    sigma_c and directly comparable with the closed form.  Agrees with the
    closed form for |r| <= BRANCH_SWITCH_R; above that it converges to the
    central value 1/sqrt(1 - r^2) - 1, which is the actual supremum.
    """
    params.require_nondegenerate()
    p1, p2 = marginals_2d(params)
    scale = 2.0 * math.pi * params.sigma_c**2

    def objective(gx, gy):
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        d = np.abs(pdf_2d(X, Y, params) - p1.pdf(X) * p2.pdf(Y)) * scale
        k = np.unravel_index(np.argmax(d), d.shape)
        return float(d[k]), float(X[k]), float(Y[k])

    sx, sy = params.sigma, params.sigma_y
    gx = np.linspace(params.mu_x - half_width * sx, params.mu_x + half_width * sx, coarse_points)
    gy = np.linspace(-half_width * sy, half_width * sy, coarse_points)
    best, cx, cy = objective(gx, gy)
    hx = (gx[1] - gx[0]) * 1.5
    hy = (gy[1] - gy[0]) * 1.5
    for _ in range(zoom_rounds):
        gx = np.linspace(cx - hx, cx + hx, zoom_points)
        gy = np.linspace(cy - hy, cy + hy, zoom_points)
        val, cx, cy = objective(gx, gy)
        best = max(best, val)
        hx *= 0.35
        hy *= 0.35
        if hx < 1e-12 * max(1.0, sx) and hy < 1e-12 * max(1.0, sy):
            break
    return best


def correlation_upper_bound(F_value: float, fs: TestFunctionSet) -> float:
    """Bound F * ||f_1 ... f_N||_1 on the magnitude of the correlation."""
    if F_value < 0.0:
        raise ValueError("F must be nonnegative")
    return F_value * fs.product_l1


class IgehLevel(enum.Enum):
    """Hierarchy levels, strongest first; each implies the weaker ones."""

    BERNOULLI = "bernoulli"
    MIXING = "mixing"
    ERGODIC = "ergodic"
    UNCLASSIFIED = "unclassified"

    @property
    def rank(self) -> int:
        return {"bernoulli": 3, "mixing": 2, "ergodic": 1, "unclassified": 0}[self.value]

    def implies(self, other: "IgehLevel") -> bool:
        return self.rank >= other.rank


@dataclass(frozen=True)
class IgehClass:
    """Classification outcome with the statistics that produced it."""

    level: IgehLevel
    evidence: dict


@dataclass(frozen=True)
class CorrelationTrace:
    """Sampled correlation values along a strictly increasing tau grid."""

    taus: np.ndarray
    values: np.ndarray
    meta: str = ""

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "values", values)
        if taus.ndim != 1 or taus.shape != values.shape:
            raise ValueError("taus and values must be 1-D arrays of equal length")
        if taus.size >= 2 and np.any(np.diff(taus) <= 0.0):
            raise ValueError("taus must be strictly increasing")

    def __len__(self) -> int:
        return int(self.taus.size)


MIN_TRACE_SAMPLES = 16


def classify(trace: CorrelationTrace, tol: float = 1e-6,
             tail_fraction: float = 0.25) -> IgehClass:
    """Classify a correlation trace into the strongest passing level.

    Bernoulli: |c| <= tol at every sample.  Mixing: mean |c| over the trailing
    ``tail_fraction`` of samples <= tol and the tail maximum <= 3 tol.
    Ergodic: the running Cesaro average of c (trapezoid rule over the observed
    window) ends with magnitude <= tol.  A stronger level grants the weaker
    ones, so the reported levels always respect the strict-inclusion ordering.
    """
    if len(trace) < MIN_TRACE_SAMPLES:
        raise ValueError(
            f"need at least {MIN_TRACE_SAMPLES} samples, got {len(trace)}"
        )
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")

    c = trace.values
    n = len(trace)
    max_abs = float(np.max(np.abs(c)))

    k0 = n - max(1, int(math.ceil(tail_fraction * n)))
    tail = np.abs(c[k0:])
    tail_mean = float(np.mean(tail))
    tail_max = float(np.max(tail))

    dtau = np.diff(trace.taus)
    cumint = np.concatenate([[0.0], np.cumsum(0.5 * (c[1:] + c[:-1]) * dtau)])
    window = trace.taus - trace.taus[0]
    cesaro_final = float(cumint[-1] / window[-1]) if window[-1] > 0.0 else max_abs

    bernoulli = max_abs <= tol
    mixing = (tail_mean <= tol and tail_max <= 3.0 * tol) or bernoulli
    ergodic = abs(cesaro_final) <= tol or mixing

    if bernoulli:
        level = IgehLevel.BERNOULLI
    elif mixing:
        level = IgehLevel.MIXING
    elif ergodic:
        level = IgehLevel.ERGODIC
    else:
        level = IgehLevel.UNCLASSIFIED

    evidence = {
        "max_abs": max_abs,
        "tail_mean": tail_mean,
        "tail_max": tail_max,
        "cesaro_final": cesaro_final,
        "tol": tol,
        "tail_fraction": tail_fraction,
        "bernoulli": bernoulli,
        "mixing": mixing,
        "ergodic": ergodic,
    }
    return IgehClass(level, evidence)


def _default_mvn_order(dim: int) -> int:
    return DEFAULT_ORDER if dim <= 2 else 20


def mvn_ig_correlation(g: MultivariateGaussian, fs: TestFunctionSet,
                       order: int | None = None, check: bool = False) -> float:
    """IG correlation for a multivariate Gaussian joint (desk scale: dim <= 4)."""
    if len(fs) != g.dim:
        raise ValueError("need one test function per coordinate")
    if g.dim > 4:
        raise ValueError("quadrature path supports dimension <= 4 (desk scale)")
    order = order or _default_mvn_order(g.dim)
    spec = IntegrationSpec.for_gaussian(g.mean, g.covariance, order)
    marginals = [mvn_marginal(g, i) for i in range(g.dim)]
    return ig_correlation(lambda x: mvn_pdf(x, g), marginals, fs, spec, check=check)


def mvn_distinguishability(g: MultivariateGaussian,
                           coarse_points: int | None = None,
                           half_width: float = 8.0,
                           zoom_rounds: int = 40) -> float:
    """Signed maximum of (joint - product of marginals) by grid scan + zoom."""
    dim = g.dim
    if dim > 4:
        raise ValueError("maximization path supports dimension <= 4 (desk scale)")
    coarse = coarse_points or (201 if dim <= 2 else 21)
    zoom_pts = 17 if dim <= 2 else 7
    marginals = [mvn_marginal(g, i) for i in range(dim)]
    sds = np.sqrt(np.diag(g.covariance))

    def objective(axes):
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([grid.ravel() for grid in grids])
        diff = mvn_pdf(pts, g)
        prod = np.ones(pts.shape[1])
        for i, m in enumerate(marginals):
            prod = prod * m.pdf(pts[i])
        diff = diff - prod
        k = int(np.argmax(diff))
        return float(diff[k]), pts[:, k]

    axes = [np.linspace(g.mean[i] - half_width * sds[i], g.mean[i] + half_width * sds[i], coarse)
            for i in range(dim)]
    best, center = objective(axes)
    h = np.array([(a[1] - a[0]) * 1.5 for a in axes])
    for _ in range(zoom_rounds):
        axes = [np.linspace(center[i] - h[i], center[i] + h[i], zoom_pts) for i in range(dim)]
        val, center = objective(axes)
        best = max(best, val)
        h *= 0.35
        if np.all(h < 1e-12 * np.maximum(1.0, sds)):
            break
    return best


def mvn_upper_bound(g: MultivariateGaussian, fs: TestFunctionSet, **kwargs) -> float:
    """Distinguishability maximum times ||f_1 ... f_N||_1."""
    if len(fs) != g.dim:
        raise ValueError("need one test function per coordinate")
    return mvn_distinguishability(g, **kwargs) * fs.product_l1
