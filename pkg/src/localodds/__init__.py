"""Pointwise odds-ratio estimation for 2x2 tables with a continuous covariate.

Kernel-smoothed conditional cell probabilities yield a local log odds
ratio log OR(x); the package provides plug-in, amended and bias-corrected
estimators, delta-method and multinomial-1 bootstrap confidence intervals,
classical global comparators, and a Monte Carlo study harness.
"""

__version__ = "0.1.0"

from .bandwidth import (
    BandwidthPlan,
    cv_bandwidth,
    default_cv_grid,
    dpi_bandwidth,
    pilot_bandwidth,
    plan_bandwidth,
    undersmooth,
)
from .baselines import (
    GlmFit,
    Table2x2,
    fit_interaction_logit,
    glm_local_log_or,
    global_or,
    haldane_or,
    pearson_chi2,
    wald_ci_or,
)
from .data import CurveEstimate, Observation, ProbVector, Sample
from .estimators import (
    AMENDED,
    CORRECTED,
    PLUGIN,
    EstimatorConfig,
    LocalOrEstimate,
    cell_probabilities,
    epsilon_amendment,
    estimate_bias_terms,
    estimate_curve,
    log_or_amended,
    log_or_corrected,
    log_or_plugin,
)
from .inference import (
    DELTA_AMENDED,
    DELTA_PLUGIN,
    M1_BOOTSTRAP,
    BootstrapConfig,
    ConfidenceInterval,
    bootstrap_ci,
    bootstrap_curve,
    delta_ci_amended,
    delta_ci_plugin,
    multinomial1_resample,
)
from .kernels import (
    EPANECHNIKOV,
    GAUSSIAN,
    KernelSpec,
    get_kernel,
    kde,
    kernel_constants,
    kernel_eval,
    nw_estimate,
    nw_weights,
)
from .simulation import (
    GLM,
    MODEL_A,
    MODEL_B,
    MODEL_C,
    CoverageReport,
    InvalidityReport,
    MetricsReport,
    SimulationModel,
    corrected_invalidity_study,
    coverage_study,
    get_model,
    integrated_metrics,
    simulate_dataset,
    true_log_or,
    true_probabilities,
)
from .streams import substream

__all__ = [
    "__version__",
    "AMENDED", "CORRECTED", "PLUGIN", "GLM",
    "GAUSSIAN", "EPANECHNIKOV",
    "DELTA_PLUGIN", "DELTA_AMENDED", "M1_BOOTSTRAP",
    "MODEL_A", "MODEL_B", "MODEL_C",
    "BandwidthPlan", "BootstrapConfig", "ConfidenceInterval", "CoverageReport",
    "CurveEstimate", "EstimatorConfig", "GlmFit", "InvalidityReport",
    "KernelSpec", "LocalOrEstimate", "MetricsReport", "Observation",
    "ProbVector", "Sample", "SimulationModel", "Table2x2",
    "bootstrap_ci", "bootstrap_curve", "cell_probabilities",
    "corrected_invalidity_study", "coverage_study",
    "cv_bandwidth", "default_cv_grid", "delta_ci_amended", "delta_ci_plugin",
    "dpi_bandwidth", "epsilon_amendment", "estimate_bias_terms",
    "estimate_curve", "fit_interaction_logit", "get_kernel", "get_model",
    "glm_local_log_or", "global_or", "haldane_or", "integrated_metrics",
    "kde", "kernel_constants", "kernel_eval", "log_or_amended",
    "log_or_corrected", "log_or_plugin", "multinomial1_resample",
    "nw_estimate", "nw_weights", "pearson_chi2", "pilot_bandwidth",
    "plan_bandwidth", "simulate_dataset", "substream", "true_log_or",
    "true_probabilities", "undersmooth", "wald_ci_or",
]
