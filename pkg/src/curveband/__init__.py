"""Unequal-probability survey sampling of curve data.

High-entropy fixed-size designs (conditional Poisson / rejective, Sampford,
SRSWOR), Horvitz-Thompson mean-curve estimation, Hajek covariance surfaces,
simultaneous confidence bands via Gaussian supremum simulation, an exact
small-population enumeration oracle, and a replicated-sampling evaluation
harness.
"""

from .bands import BandResult, GaussianSimConfig, SupQuantileResult, build_band, repair_and_factor, simulate_sup_quantile
from .designs import (
    DesignDistribution,
    InclusionProfile,
    SampleDraw,
    SecondOrderMatrix,
    a5_statistic,
    calibrate_cp_working_probs,
    cp_first_order_probabilities,
    draw_poisson,
    draw_rejective,
    draw_rejective_many,
    draw_sampford,
    draw_sampford_many,
    draw_srswor,
    draw_srswor_many,
    enumerate_design,
    entropy,
    inclusion_from_auxiliary,
    kl_divergence,
    rejective_working_probs,
    second_order_exact,
    second_order_hajek,
    total_variation,
)
from .errors import ConfigError, CurvebandError, DataError, NumericError
from .estimators import (
    CovarianceSurface,
    InfluenceReport,
    MeanCurveEstimate,
    hajek_estimate_surface,
    hajek_population_surface,
    ht_mean_curve,
    influence_report,
    interpolate_curve,
    yates_grundy_surface,
)
from .montecarlo import (
    CoverageResult,
    DesignSpec,
    McConfig,
    McReport,
    RateStudy,
    coverage_experiment,
    empirical_covariance,
    rate_study,
    risk_R,
    risk_decomposition,
    run_variance_study,
)
from .population import (
    CurvePopulation,
    GeneratorConfig,
    PopulationProfile,
    TimeGrid,
    generate_synthetic,
    load_population,
    population_profile,
    save_population,
)

__version__ = "0.1.0"
