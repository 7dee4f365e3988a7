"""Closed-form data-generating models and the Monte Carlo study harness.

The three models share the covariate law X ~ Unif[-2, 2] and the margin
functions

    p_row1(x) = 0.07 exp(-x^2) + 0.47
    p_col1(x) = 0.1 / (1 + e^x) + 0.45

and differ in the association function delta(x) added to the independence
cells:

    A: delta(x) = 0.05 exp(-0.3 x)
    B: delta(x) = 0.25 - phi(x; -1, 1.8^2)        (normal density, sd 1.8)
    C: delta(x) = 0.25 (1/(1 + e^(-6x)) - 0.5)

With delta = 0 the cells factor and log OR(x) = 0, so delta controls the
degree of local association.

Study metrics follow the integrated-error protocol: pointwise absolute
bias and MSE over the grid x = -1.75(0.05)1.75 (71 points, avoiding the
boundary region), averaged over the grid. Per-replicate bandwidths are
re-selected by direct plug-in and undersmoothed. Coverage studies report
the empirical coverage probability and mean width on the log scale.

Every replicate draws from a stream derived from (seed, model, n,
replicate index), so any subset of a study is reproducible in isolation
and aggregate results are invariant under the order replicates are run.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .bandwidth import DPI, plan_bandwidth
from .baselines import glm_local_log_or
from .data import ProbVector, Sample
from .errors import EmptyCellError, NumericalError
from .estimators import (
    AMENDED,
    CORRECTED,
    PLUGIN,
    _amended_log_or_rows,
    _corrected_epsilon,
    _plugin_log_or,
    bias_terms_grid,
    cell_probability_matrix,
    density_floor,
)
from .inference import (
    DELTA_AMENDED,
    DELTA_PLUGIN,
    M1_BOOTSTRAP,
    BootstrapConfig,
    _bootstrap_cell_draws,
    _bootstrap_interval_at,
    delta_ci_amended,
    delta_ci_plugin,
)
from .kernels import GAUSSIAN, KernelSpec, kde_values
from .streams import substream

GLM = "GLM"
STUDY_ESTIMATORS = (PLUGIN, AMENDED, CORRECTED, GLM)

SUPPORT = (-2.0, 2.0)


@dataclass(frozen=True)
class SimulationModel:
    """Closed-form margins and association function defining a model."""

    name: str
    margin_row: Callable
    margin_col: Callable
    delta: Callable


def _normal_pdf(x, mean: float, sd: float):
    z = (np.asarray(x, dtype=float) - mean) / sd
    return np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))


def _margin_row(x):
    return 0.07 * np.exp(-np.square(np.asarray(x, dtype=float))) + 0.47


def _margin_col(x):
    return 0.1 * expit(-np.asarray(x, dtype=float)) + 0.45


MODEL_A = SimulationModel("A", _margin_row, _margin_col,
                          lambda x: 0.05 * np.exp(-0.3 * np.asarray(x, dtype=float)))
MODEL_B = SimulationModel("B", _margin_row, _margin_col,
                          lambda x: 0.25 - _normal_pdf(x, -1.0, 1.8))
MODEL_C = SimulationModel("C", _margin_row, _margin_col,
                          lambda x: 0.25 * (expit(6.0 * np.asarray(x, dtype=float)) - 0.5))

MODELS = {"A": MODEL_A, "B": MODEL_B, "C": MODEL_C}


def get_model(name: str) -> SimulationModel:
    try:
        return MODELS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODELS)}")


def _model_ordinal(model: SimulationModel) -> int:
    return ord(model.name) - ord("A")


def true_cell_matrix(model: SimulationModel, xs) -> np.ndarray:
    """True cell probabilities at each x, shape (len(xs), 4)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    row1 = model.margin_row(xs)
    col1 = model.margin_col(xs)
    delta = model.delta(xs)
    return np.stack(
        [
            row1 * col1 + delta,
            row1 * (1.0 - col1) - delta,
            (1.0 - row1) * col1 - delta,
            (1.0 - row1) * (1.0 - col1) + delta,
        ],
        axis=1,
    )


def true_probabilities(model: SimulationModel, x: float) -> ProbVector:
    """True cell probabilities at x in [-2, 2]."""
    if not (SUPPORT[0] <= x <= SUPPORT[1]):
        raise ValueError(f"x={x!r} outside the model support {SUPPORT}")
    return ProbVector.from_array(true_cell_matrix(model, [x])[0])


def true_log_or(model: SimulationModel, x) -> float | np.ndarray:
    """True pointwise log odds ratio; vectorized over x."""
    p = true_cell_matrix(model, x)
    values = (np.log(p[:, 0]) + np.log(p[:, 3])) - (np.log(p[:, 1]) + np.log(p[:, 2]))
    return float(values[0]) if np.isscalar(x) else values


def simulate_dataset(model: SimulationModel, n: int, rng: np.random.Generator) -> Sample:
    """Draw n observations: X ~ Unif[-2,2], cell one-hot by inverse CDF."""
    if n < 1:
        raise ValueError("n must be at least 1")
    xs = rng.uniform(SUPPORT[0], SUPPORT[1], n)
    cum = np.cumsum(true_cell_matrix(model, xs), axis=1)
    cells = np.clip((rng.random((1, n))[:, :, None] >= cum[None, :, :]).sum(axis=2), 0, 3)[0]
    return Sample(xs, cells.astype(np.int8), SUPPORT[0], SUPPORT[1])


def default_metric_grid() -> np.ndarray:
    """The integrated-error evaluation grid x = -1.75(0.05)1.75."""
    return np.linspace(-1.75, 1.75, 71)


@dataclass
class MetricsReport:
    """Integrated absolute bias and MSE of one estimator configuration."""

    model: str
    n: int
    estimator: str
    integrated_abs_bias: float
    integrated_mse: float
    replicates: int
    invalid_count: int
    grid: np.ndarray | None = field(default=None, repr=False)
    pointwise_abs_bias: np.ndarray | None = field(default=None, repr=False)
    pointwise_mse: np.ndarray | None = field(default=None, repr=False)


@dataclass
class CoverageReport:
    """Empirical coverage probability and mean width at one covariate value."""

    model: str
    n: int
    x: float
    method: str
    ecp: float
    mean_width: float
    replicates: int


def _replicate_curve(
    model: SimulationModel,
    estimator: str,
    n: int,
    seed: int,
    rep: int,
    grid: np.ndarray,
    B: int,
    spec: KernelSpec,
) -> np.ndarray:
    """One replicate's estimates over the grid; invalid points are NaN.

    The bias-corrected estimator shares one set of bootstrap resamples
    across the grid (only the resample mean enters the bias terms).
    """
    rng = substream(seed, _model_ordinal(model), n, rep)
    sample = simulate_dataset(model, n, rng)

    if estimator == GLM:
        try:
            return glm_local_log_or(sample, grid).log_or
        except NumericalError:
            return np.full(grid.size, np.nan)

    try:
        plan = plan_bandwidth(sample, spec, DPI, undersmoothed=True)
    except NumericalError:
        return np.full(grid.size, np.nan)

    h, g = plan.h, plan.g
    p_rows = cell_probability_matrix(sample, grid, h, spec)
    if estimator == PLUGIN:
        out = np.empty(grid.size)
        for i in range(grid.size):
            value, valid = _plugin_log_or(p_rows[i])
            out[i] = value if valid else np.nan
        return out

    floor = density_floor(n, sample.support_range)
    fhat = np.maximum(kde_values(grid, sample.xs, h, spec), floor)
    if estimator == AMENDED:
        eps = spec.nu0 / (2.0 * n * h * fhat)
        return _amended_log_or_rows(p_rows, eps)

    if estimator != CORRECTED:
        raise ValueError(f"unknown estimator tag {estimator!r}")
    bhat_rows = bias_terms_grid(sample, grid, h, g, B, rng, spec)
    out = np.empty(grid.size)
    for i in range(grid.size):
        eps, singular = _corrected_epsilon(
            p_rows[i], bhat_rows[i], n, h, float(fhat[i]), spec, floor
        )
        if singular:
            out[i] = np.nan
            continue
        amended = p_rows[i] + eps
        if np.any(amended <= 0.0):
            out[i] = np.nan
            continue
        logs = np.log(amended)
        out[i] = (logs[0] + logs[3]) - (logs[1] + logs[2])
    return out


def integrated_metrics(
    model: SimulationModel,
    estimator: str,
    n: int,
    replicates: int,
    seed: int,
    grid=None,
    B: int = 500,
    spec: KernelSpec = GAUSSIAN,
    replicate_indices: Sequence[int] | None = None,
    threads: int = 1,
) -> MetricsReport:
    """Integrated absolute bias and MSE of one estimator over replicates.

    Non-finite and invalid estimates are excluded from the moment averages
    and tallied in invalid_count. ``replicate_indices`` selects which
    replicate streams to run (default 0..replicates-1); results depend
    only on the set of indices, not on the order they are evaluated.
    """
    if estimator not in STUDY_ESTIMATORS:
        raise ValueError(f"estimator must be one of {STUDY_ESTIMATORS}")
    if replicate_indices is None:
        if replicates < 2:
            raise ValueError("need at least 2 replicates")
        replicate_indices = range(replicates)
    indices = sorted(int(r) for r in replicate_indices)
    grid = default_metric_grid() if grid is None else np.asarray(grid, dtype=float)

    def run(rep: int) -> np.ndarray:
        return _replicate_curve(model, estimator, n, seed, rep, grid, B, spec)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curves = np.array(list(pool.map(run, indices)))
    else:
        curves = np.array([run(rep) for rep in indices])

    curves[~np.isfinite(curves)] = np.nan
    invalid = int(np.isnan(curves).sum())
    truth = true_log_or(model, grid)
    with np.errstate(invalid="ignore"):
        bias_pt = np.abs(np.nanmean(curves, axis=0) - truth)
        mse_pt = np.nanmean((curves - truth[None, :]) ** 2, axis=0)
    return MetricsReport(
        model=model.name,
        n=n,
        estimator=estimator,
        integrated_abs_bias=float(np.nanmean(bias_pt)),
        integrated_mse=float(np.nanmean(mse_pt)),
        replicates=len(indices),
        invalid_count=invalid,
        grid=grid,
        pointwise_abs_bias=bias_pt,
        pointwise_mse=mse_pt,
    )


@dataclass
class InvalidityReport:
    """Tally of bias-corrected estimator failures over a replicated grid."""

    model: str
    n: int
    negative_or: int
    nonpositive_cell: int
    evaluations: int

    @property
    def negative_or_rate(self) -> float:
        return self.negative_or / self.evaluations


def corrected_invalidity_study(
    model: SimulationModel,
    n: int,
    replicates: int,
    seed: int,
    grid=None,
    B: int = 500,
    spec: KernelSpec = GAUSSIAN,
) -> InvalidityReport:
    """Count bias-corrected estimator failures over replicated datasets.

    ``negative_or`` counts evaluations whose amended cross-product ratio is
    negative (an odd number of amended cells nonpositive); the broader
    ``nonpositive_cell`` tally also includes even-signed cases, where the
    ratio stays positive but the log estimate is still undefined.
    """
    grid = default_metric_grid() if grid is None else np.asarray(grid, dtype=float)
    negative = nonpositive = 0
    total = 0
    for rep in range(replicates):
        rng = substream(seed, _model_ordinal(model), n, rep)
        sample = simulate_dataset(model, n, rng)
        try:
            plan = plan_bandwidth(sample, spec, DPI, undersmoothed=True)
        except NumericalError:
            continue
        h, g = plan.h, plan.g
        p_rows = cell_probability_matrix(sample, grid, h, spec)
        floor = density_floor(n, sample.support_range)
        fhat = np.maximum(kde_values(grid, sample.xs, h, spec), floor)
        bhat_rows = bias_terms_grid(sample, grid, h, g, B, rng, spec)
        for i in range(grid.size):
            total += 1
            eps, singular = _corrected_epsilon(
                p_rows[i], bhat_rows[i], n, h, float(fhat[i]), spec, floor
            )
            if singular:
                continue
            negatives = int(np.sum(p_rows[i] + eps <= 0.0))
            if negatives:
                nonpositive += 1
                if negatives % 2 == 1:
                    negative += 1
    return InvalidityReport(
        model=model.name, n=n, negative_or=negative,
        nonpositive_cell=nonpositive, evaluations=total,
    )


def _coverage_replicate(
    model: SimulationModel,
    n: int,
    seed: int,
    rep: int,
    x_points: np.ndarray,
    method: str,
    B: int,
    alpha: float,
    spec: KernelSpec,
) -> tuple[np.ndarray, np.ndarray]:
    """(covered, width) per x for one replicate; undefined intervals count
    as misses with NaN width."""
    rng = substream(seed, _model_ordinal(model), n, rep)
    sample = simulate_dataset(model, n, rng)
    boot_seed = int(rng.integers(0, 2**63))
    truth = true_log_or(model, x_points)
    covered = np.zeros(x_points.size, dtype=bool)
    widths = np.full(x_points.size, np.nan)
    try:
        plan = plan_bandwidth(sample, spec, DPI, undersmoothed=True)
    except NumericalError:
        return covered, widths

    cells = None
    if method == M1_BOOTSTRAP:
        config = BootstrapConfig(B=B, alpha=alpha, seed=boot_seed, pilot_g=plan.g)
        cells = _bootstrap_cell_draws(sample, plan.g, spec, B, boot_seed)

    for i, x in enumerate(x_points):
        try:
            if method == DELTA_PLUGIN:
                ci = delta_ci_plugin(sample, float(x), plan.h, spec, alpha)
            elif method == DELTA_AMENDED:
                ci = delta_ci_amended(sample, float(x), plan.h, spec, alpha)
            elif method == M1_BOOTSTRAP:
                ci = _bootstrap_interval_at(float(x), sample, plan.h, config, spec, cells)
            else:
                raise ValueError(f"unknown CI method {method!r}")
        except EmptyCellError:
            continue
        covered[i] = ci.contains(float(truth[i]))
        widths[i] = ci.width
    return covered, widths


def coverage_study(
    model: SimulationModel,
    n: int,
    replicates: int,
    x_points,
    method: str,
    B: int = 500,
    seed: int = 0,
    alpha: float = 0.05,
    spec: KernelSpec = GAUSSIAN,
    threads: int = 1,
) -> list[CoverageReport]:
    """Empirical coverage of one CI method at the given covariate values."""
    if method not in (DELTA_PLUGIN, DELTA_AMENDED, M1_BOOTSTRAP):
        raise ValueError(f"unknown CI method {method!r}")
    if replicates < 100:
        raise ValueError("need at least 100 replicates for a coverage study")
    x_points = np.atleast_1d(np.asarray(x_points, dtype=float))

    def run(rep: int):
        return _coverage_replicate(model, n, seed, rep, x_points, method, B, alpha, spec)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(replicates)))
    else:
        results = [run(rep) for rep in range(replicates)]

    covered = np.array([c for c, _ in results])
    widths = np.array([w for _, w in results])
    with np.errstate(invalid="ignore"):
        mean_widths = np.nanmean(widths, axis=0)
    return [
        CoverageReport(
            model=model.name, n=n, x=float(x), method=method,
            ecp=float(covered[:, i].mean()), mean_width=float(mean_widths[i]),
            replicates=replicates,
        )
        for i, x in enumerate(x_points)
    ]
