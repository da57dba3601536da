"""Fisher-Rao geometry, ergodic-hierarchy correlations, and canonical-ensemble
bridges for Gaussian statistical models."""

from .canonical import (
    GoeModel,
    HeatBath,
    OscillatorPair,
    OscillatorTraceResult,
    QuadraticHamiltonian,
    canonical_covariance_quadrature,
    canonical_to_gaussian,
    ce_fisher_metric,
    ce_fisher_metric_pair,
    ce_upper_bound,
    covariance_hessian_law,
    default_oscillator_test_functions,
    effective_correlation,
    goe_model,
    hessian_of_energy,
    oscillator_curvature,
    oscillator_mixing_trace,
    oscillator_reduce,
    phase_space_spec,
    temperature_to_tau,
)
from .ergodic import (
    BRANCH_SWITCH_R,
    CorrelationTrace,
    GaussianBump,
    IgehClass,
    IgehLevel,
    TestFunctionSet,
    classify,
    correlation_upper_bound,
    distinguishability_F_closed,
    distinguishability_F_numeric,
    ig_correlation,
    ig_correlation_2d,
    mvn_distinguishability,
    mvn_ig_correlation,
    mvn_upper_bound,
)
from .errors import (
    DegenerateCorrelationError,
    DomainError,
    NonPositiveDefiniteError,
    NonSmoothEnergyError,
    QuadratureError,
    SingularMetricError,
    TemperatureRangeError,
)
from .manifold import (
    GeodesicResult,
    GeodesicState,
    GeometryReport,
    MetricField,
    ModelFamily,
    ParameterDomain,
    christoffel,
    density_normalization,
    fisher_metric,
    geodesic_integrate,
    geometry_report,
    inverse_metric,
    metric_derivatives,
    metric_speed,
    ricci,
    riemann,
    scalar_curvature,
)
from .models import (
    Correlated2DParams,
    MultivariateGaussian,
    UnivariateGaussian,
    christoffel_2d_closed,
    correlated_2d_family,
    curvature_2d_closed,
    marginals_2d,
    metric_2d_closed,
    mvn_marginal,
    mvn_pdf,
    pdf_2d,
    ricci_2d_closed,
    univariate_gaussian_family,
)
from .quadrature import IntegrationSpec, integrate, integrate_with_error

__version__ = "0.1.0"
