"""Pointwise log odds-ratio estimators built on kernel-smoothed cell probabilities.

Three estimators are provided, distinguished by the amendment added to the
four smoothed cell probabilities before taking the log cross-product ratio:

* plug-in (tag "I"): no amendment; can be infinite or undefined when a
  smoothed cell probability hits zero;
* amended (tag "II"): adds eps(x) = nu0 / (2 n h fhat(x)), the kernel
  analog of the classical half-count correction; always finite;
* bias-corrected (tag "III"): adjusts eps(x) by an explicit estimate of
  the smoothing-bias contribution, built from bootstrap estimates of the
  per-cell bias functions; can produce a negative amended probability, in
  which case the result is flagged invalid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bandwidth import BandwidthPlan
from .data import CELL_SIGNS, CurveEstimate, ProbVector, Sample
from .errors import (
    BoundaryPointWarning,
    DensityFloorWarning,
    SingularDenominatorWarning,
)
from .kernels import GAUSSIAN, KernelSpec, kde_values, nw_weight_matrix, nw_weights
from .streams import substream

PLUGIN = "I"
AMENDED = "II"
CORRECTED = "III"

ESTIMATOR_TAGS = (PLUGIN, AMENDED, CORRECTED)

#: |sum of signed reciprocal cell probabilities| below this is treated as
#: an exact cancellation in the bias-corrected amendment.
_SINGULAR_TOL = 1e-8


@dataclass(frozen=True)
class LocalOrEstimate:
    """A pointwise log odds-ratio estimate and its validity status."""

    x: float
    estimator: str
    log_or: float
    epsilon: float
    valid: bool


@dataclass(frozen=True)
class EstimatorConfig:
    """Which estimator to run over a grid and with what smoothing scales."""

    bandwidths: BandwidthPlan
    estimator: str = AMENDED
    kernel: KernelSpec = GAUSSIAN
    bias_resamples: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.estimator not in ESTIMATOR_TAGS:
            raise ValueError(f"estimator must be one of {ESTIMATOR_TAGS}")


def density_floor(n: int, support_range: float) -> float:
    """Lower clamp 1/(n * range) applied to the density inside the amendment.

    Keeps eps = O((nh)^-1) while preventing blow-up where the design is
    sparse.
    """
    if n < 1 or support_range <= 0:
        raise ValueError("need n >= 1 and a positive support range")
    return 1.0 / (n * support_range)


def cell_probability_matrix(
    sample: Sample, points, h: float, spec: KernelSpec = GAUSSIAN
) -> np.ndarray:
    """Smoothed cell probabilities at each point, shape (len(points), 4).

    All four cells share one weight vector per point, so each row lies on
    the simplex up to rounding.
    """
    w = nw_weight_matrix(points, sample.xs, h, spec)
    return w @ sample.one_hot()


def is_boundary(sample: Sample, x: float, h: float) -> bool:
    """True when x lies outside the h-interior of the sample support."""
    return not (sample.support_lo + h <= x <= sample.support_hi - h)


def cell_probabilities(
    sample: Sample, x: float, h: float, spec: KernelSpec = GAUSSIAN
) -> ProbVector:
    """Smoothed cell probabilities at x from a single shared weight vector.

    Warns (BoundaryPointWarning) when x is outside the h-interior of the
    support; the computation proceeds.
    """
    if is_boundary(sample, x, h):
        warnings.warn(
            f"x={x!r} lies outside the h-interior "
            f"[{sample.support_lo + h}, {sample.support_hi - h}]",
            BoundaryPointWarning,
            stacklevel=2,
        )
    return ProbVector.from_array(cell_probability_matrix(sample, [x], h, spec)[0])


def epsilon_amendment(
    x: float,
    n: int,
    h: float,
    fhat: float,
    spec: KernelSpec = GAUSSIAN,
    floor: float = 0.0,
) -> float:
    """Amendment eps(x) = nu0 / (2 n h fhat(x)) added to each cell probability.

    When fhat falls below ``floor`` the floor is used instead and a
    DensityFloorWarning is emitted.
    """
    if n < 1 or h <= 0:
        raise ValueError("need n >= 1 and h > 0")
    f = fhat
    if fhat < floor:
        warnings.warn(
            f"density estimate {fhat!r} at x={x!r} below floor {floor!r}; clamped",
            DensityFloorWarning,
            stacklevel=2,
        )
        f = floor
    if f <= 0:
        raise ValueError("density estimate must be positive (or a positive floor set)")
    return spec.nu0 / (2.0 * n * h * f)


def _log_cross_ratio(a: np.ndarray) -> float:
    """(log a11 + log a22) - (log a12 + log a21) for strictly positive a."""
    return (math.log(a[0]) + math.log(a[3])) - (math.log(a[1]) + math.log(a[2]))


def _plugin_log_or(p: np.ndarray) -> tuple[float, bool]:
    """Signed-infinity conventions for the unamended log cross-ratio."""
    numerator_zero = p[0] == 0.0 or p[3] == 0.0
    denominator_zero = p[1] == 0.0 or p[2] == 0.0
    if numerator_zero and denominator_zero:
        return math.nan, False
    if denominator_zero:
        return math.inf, False
    if numerator_zero:
        return -math.inf, False
    return _log_cross_ratio(p), True


def log_or_plugin(p: ProbVector, x: float = math.nan) -> LocalOrEstimate:
    """Plug-in estimator: log of the raw cross-product ratio.

    Empty cells give signed infinities (+inf for a zero denominator cell,
    -inf for a zero numerator cell, NaN for both) with valid=False.
    """
    log_or, valid = _plugin_log_or(p.as_array())
    return LocalOrEstimate(x=x, estimator=PLUGIN, log_or=log_or, epsilon=0.0, valid=valid)


def log_or_amended(p: ProbVector, eps: float, x: float = math.nan) -> LocalOrEstimate:
    """Amended estimator: log cross-ratio of (p_ij + eps); always finite."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    log_or = _log_cross_ratio(p.as_array() + eps)
    return LocalOrEstimate(x=x, estimator=AMENDED, log_or=log_or, epsilon=eps, valid=True)


def _corrected_epsilon(
    p: np.ndarray,
    bhat: np.ndarray,
    n: int,
    h: float,
    fhat: float,
    spec: KernelSpec,
    floor: float = 0.0,
) -> tuple[float, bool]:
    """Bias-corrected amendment; returns (eps, singular_flag).

    eps_III = nu0/(2 n h f) - h^2 kappa2 * (sum_ij s_ij b_ij/p_ij) /
                                            (sum_ij s_ij / p_ij)
    with s_ij = (-1)^(i+j). Cell probabilities are clamped away from zero
    inside the ratio, which reproduces the dominating-cell limit when a
    cell estimate vanishes.
    """
    base = epsilon_amendment(math.nan, n, h, fhat, spec, floor)
    pc = np.maximum(p, 1e-12)
    denom = (1.0 / pc[0] + 1.0 / pc[3]) - (1.0 / pc[1] + 1.0 / pc[2])
    if abs(denom) < _SINGULAR_TOL:
        return math.nan, True
    numer = (bhat[0] / pc[0] + bhat[3] / pc[3]) - (bhat[1] / pc[1] + bhat[2] / pc[2])
    return base - h * h * spec.kappa2 * (numer / denom), False


def log_or_corrected(
    p: ProbVector,
    x: float,
    n: int,
    h: float,
    fhat: float,
    bhat,
    spec: KernelSpec = GAUSSIAN,
    floor: float = 0.0,
) -> LocalOrEstimate:
    """Bias-corrected estimator: amendment adjusted by estimated bias terms.

    With bhat identically zero this reduces exactly to the amended
    estimator. The result is flagged invalid when the signed reciprocal sum
    is numerically zero (SingularDenominatorWarning) or when any amended
    probability is nonpositive, the negative-odds-ratio failure mode.
    """
    parr = p.as_array()
    bhat = np.asarray(bhat, dtype=float)
    if bhat.shape != (4,):
        raise ValueError("bhat must hold four bias terms")
    eps, singular = _corrected_epsilon(parr, bhat, n, h, fhat, spec, floor)
    if singular:
        warnings.warn(
            f"signed reciprocal cell sum is numerically zero at x={x!r}",
            SingularDenominatorWarning,
            stacklevel=2,
        )
        return LocalOrEstimate(x=x, estimator=CORRECTED, log_or=math.nan,
                               epsilon=math.nan, valid=False)
    amended = parr + eps
    if np.any(amended <= 0.0):
        return LocalOrEstimate(x=x, estimator=CORRECTED, log_or=math.nan,
                               epsilon=eps, valid=False)
    return LocalOrEstimate(x=x, estimator=CORRECTED, log_or=_log_cross_ratio(amended),
                           epsilon=eps, valid=True)


def _draw_cells(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF cell draws; cum is (n, 4) cumulative rows, u is (B, n)."""
    return np.clip((u[:, :, None] >= cum[None, :, :]).sum(axis=2), 0, 3)


def estimate_bias_terms(
    sample: Sample,
    x: float,
    h: float,
    g: float,
    B: int,
    rng: np.random.Generator,
    spec: KernelSpec = GAUSSIAN,
    return_se: bool = False,
):
    """Bootstrap estimates of the four smoothing-bias terms b_ij(x).

    Redraws each one-hot cell vector from the pilot-smoothed conditional
    probabilities at its own covariate (covariates unchanged), re-smooths
    at bandwidth h, and scales the mean excess over the pilot estimate by
    the h^2 kappa2 bias factor:

        bhat_ij(x) = [mean_b phat*_ij^h(x) - phat_ij^g(x)] / (h^2 kappa2).

    Deterministic given the rng state. With return_se=True also returns
    the Monte Carlo standard error of each term.
    """
    if B < 100:
        raise ValueError("need at least 100 resamples for bias estimation")
    if not (g > h > 0):
        raise ValueError("pilot bandwidth g must exceed h > 0")
    p_g_data = cell_probability_matrix(sample, sample.xs, g, spec)
    cum = np.cumsum(p_g_data, axis=1)
    w = nw_weights(x, sample.xs, h, spec)
    p_g_x = cell_probability_matrix(sample, [x], g, spec)[0]

    cells = _draw_cells(cum, rng.random((B, sample.n)))
    p_star = np.empty((B, 4))
    for j in range(4):
        p_star[:, j] = (cells == j) @ w

    scale = h * h * spec.kappa2
    bhat = (p_star.mean(axis=0) - p_g_x) / scale
    if return_se:
        se = p_star.std(axis=0, ddof=1) / math.sqrt(B) / scale
        return bhat, se
    return bhat


def bias_terms_grid(
    sample: Sample,
    points,
    h: float,
    g: float,
    B: int,
    rng: np.random.Generator,
    spec: KernelSpec = GAUSSIAN,
) -> np.ndarray:
    """Bias terms at every grid point from one shared set of resamples.

    Only the resample mean enters the estimate, so the bootstrap collapses
    to per-observation cell frequencies smoothed at bandwidth h. Returns
    shape (len(points), 4).
    """
    if B < 100:
        raise ValueError("need at least 100 resamples for bias estimation")
    if not (g > h > 0):
        raise ValueError("pilot bandwidth g must exceed h > 0")
    points = np.atleast_1d(np.asarray(points, dtype=float))
    p_g_data = cell_probability_matrix(sample, sample.xs, g, spec)
    cum = np.cumsum(p_g_data, axis=1)
    cells = _draw_cells(cum, rng.random((B, sample.n)))
    freq = np.stack([(cells == j).mean(axis=0) for j in range(4)], axis=1)
    w = nw_weight_matrix(points, sample.xs, h, spec)
    p_g_pts = cell_probability_matrix(sample, points, g, spec)
    return (w @ freq - p_g_pts) / (h * h * spec.kappa2)


def _amended_log_or_rows(p_rows: np.ndarray, eps) -> np.ndarray:
    """Vectorized amended log cross-ratio over rows; eps scalar or per-row."""
    a = p_rows + np.asarray(eps).reshape(-1, 1)
    logs = np.log(a)
    return (logs[:, 0] + logs[:, 3]) - (logs[:, 1] + logs[:, 2])


def estimate_curve(sample: Sample, grid, config: EstimatorConfig) -> CurveEstimate:
    """Evaluate the configured estimator over a grid of covariate values.

    Invalid points (infinite plug-in values, negative corrected odds
    ratios) are retained with valid=False. Points outside the h-interior
    are computed but flagged in the boundary mask. For the bias-corrected
    estimator, the bootstrap at grid point i draws from a stream derived
    from (config.seed, i), so results do not depend on evaluation order.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    h, g = config.bandwidths.h, config.bandwidths.g
    spec = config.kernel
    m = grid.size
    if m == 0:
        empty = np.empty(0)
        return CurveEstimate(
            x=grid, log_or=empty, valid=np.empty(0, dtype=bool),
            estimator=config.estimator, epsilon=empty,
            boundary=np.empty(0, dtype=bool), h=h, g=g,
        )

    p_rows = cell_probability_matrix(sample, grid, h, spec)
    boundary = ~(
        (grid >= sample.support_lo + h) & (grid <= sample.support_hi - h)
    )
    log_or = np.empty(m)
    valid = np.ones(m, dtype=bool)
    eps_arr = np.zeros(m)

    if config.estimator == PLUGIN:
        for i in range(m):
            log_or[i], valid[i] = _plugin_log_or(p_rows[i])
        return CurveEstimate(x=grid, log_or=log_or, valid=valid,
                             estimator=PLUGIN, epsilon=eps_arr,
                             boundary=boundary, h=h, g=g)

    floor = density_floor(sample.n, sample.support_range)
    fhat = np.maximum(kde_values(grid, sample.xs, h, spec), floor)
    eps_base = spec.nu0 / (2.0 * sample.n * h * fhat)

    if config.estimator == AMENDED:
        log_or = _amended_log_or_rows(p_rows, eps_base)
        return CurveEstimate(x=grid, log_or=log_or, valid=valid,
                             estimator=AMENDED, epsilon=eps_base,
                             boundary=boundary, h=h, g=g)

    # Bias-corrected estimator.
    for i, x in enumerate(grid):
        rng = substream(config.seed, i)
        bhat = estimate_bias_terms(sample, float(x), h, g,
                                   config.bias_resamples, rng, spec)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SingularDenominatorWarning)
            est = log_or_corrected(
                ProbVector.from_array(p_rows[i]), float(x), sample.n, h,
                float(fhat[i]), bhat, spec, floor,
            )
        log_or[i], valid[i], eps_arr[i] = est.log_or, est.valid, est.epsilon
    return CurveEstimate(x=grid, log_or=log_or, valid=valid,
                         estimator=CORRECTED, epsilon=eps_arr,
                         boundary=boundary, h=h, g=g)
