"""Classical global and parametric comparators for the pointwise estimators.

Global 2x2 measures (odds ratio, half-count adjusted odds ratio, Wald
interval, Pearson chi-square) plus the logistic-regression local log odds
ratio beta2 + beta3 * x from the interaction model

    logit P(col = 1 | row, x) = beta0 + beta1 x + beta2 r + beta3 x r

with r the indicator of row 1. Table orientation is fixed: row index is
the exposure/admission level, column index is the outcome/status level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaincc, ndtri

from .data import CurveEstimate, Sample
from .errors import (
    DegenerateMarginError,
    EmptyCellError,
    EmptyDenominatorError,
    NoConvergenceError,
    SeparationError,
)

_GLM_MAX_ITER = 50
_GLM_GRAD_TOL = 1e-8
_GLM_DIVERGENCE = 1e4


@dataclass(frozen=True)
class Table2x2:
    """Cell counts of a 2x2 contingency table."""

    n11: int
    n12: int
    n21: int
    n22: int

    def __post_init__(self):
        counts = self.as_array()
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if counts.sum() < 1:
            raise ValueError("table must contain at least one observation")

    def as_array(self) -> np.ndarray:
        return np.array([self.n11, self.n12, self.n21, self.n22], dtype=float)

    @property
    def total(self) -> int:
        return self.n11 + self.n12 + self.n21 + self.n22

    @property
    def margins(self) -> tuple[float, float, float, float]:
        """(row1, row2, col1, col2) totals."""
        return (
            self.n11 + self.n12,
            self.n21 + self.n22,
            self.n11 + self.n21,
            self.n12 + self.n22,
        )

    def swap_rows(self) -> "Table2x2":
        return Table2x2(self.n21, self.n22, self.n11, self.n12)

    def transpose(self) -> "Table2x2":
        return Table2x2(self.n11, self.n21, self.n12, self.n22)

    @classmethod
    def from_sample(cls, sample: Sample) -> "Table2x2":
        c = sample.cell_counts()
        return cls(int(c[0]), int(c[1]), int(c[2]), int(c[3]))


def global_or(t: Table2x2) -> float:
    """Cross-product ratio n11*n22 / (n12*n21)."""
    if t.n12 * t.n21 == 0:
        raise EmptyDenominatorError("n12 * n21 is zero; odds ratio undefined")
    return (t.n11 * t.n22) / (t.n12 * t.n21)


def haldane_or(t: Table2x2) -> float:
    """Half-count adjusted odds ratio; finite and positive for any table."""
    return ((t.n11 + 0.5) * (t.n22 + 0.5)) / ((t.n12 + 0.5) * (t.n21 + 0.5))


def wald_ci_or(t: Table2x2, alpha: float = 0.05) -> tuple[float, float]:
    """Wald interval for the odds ratio: exp(log OR +- z * sqrt(sum 1/n_ij))."""
    counts = t.as_array()
    if np.any(counts == 0):
        raise EmptyCellError("Wald interval requires all cell counts positive")
    log_or = math.log(global_or(t))
    se = math.sqrt(float(np.sum(1.0 / counts)))
    z = float(ndtri(1.0 - alpha / 2.0))
    return math.exp(log_or - z * se), math.exp(log_or + z * se)


def pearson_chi2(t: Table2x2) -> tuple[float, float]:
    """Pearson chi-square statistic (1 df, no continuity correction) and p-value."""
    r1, r2, c1, c2 = t.margins
    if r1 * r2 * c1 * c2 == 0:
        raise DegenerateMarginError("a table margin is zero")
    n = t.total
    cross = t.n11 * t.n22 - t.n12 * t.n21
    statistic = n * cross * cross / (r1 * r2 * c1 * c2)
    p_value = float(gammaincc(0.5, statistic / 2.0))
    return float(statistic), p_value


@dataclass
class GlmFit:
    """Fitted interaction logistic model."""

    beta0: float
    beta1: float
    beta2: float
    beta3: float
    standard_errors: np.ndarray
    covariance: np.ndarray
    converged: bool
    iterations: int

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.beta0, self.beta1, self.beta2, self.beta3])


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    # -sum log(1 + exp(-(2y-1) eta)), stable for any eta
    return -float(np.logaddexp(0.0, -(2.0 * y - 1.0) * eta).sum())


def fit_interaction_logit(sample: Sample) -> GlmFit:
    """Fit the interaction logistic model by Newton iterations.

    Safeguards: step halving whenever the log-likelihood would decrease,
    a divergence guard for separated data, and a rank check on the design.
    Convergence means the gradient max-norm fell below 1e-8.
    """
    y = np.isin(sample.cells, (0, 2)).astype(float)  # col == 1
    r = (sample.cells <= 1).astype(float)            # row == 1
    x = sample.xs
    design = np.column_stack([np.ones(sample.n), x, r, x * r])
    if np.linalg.matrix_rank(design) < 4:
        raise SeparationError(
            "design matrix is rank deficient (constant row indicator or "
            "collinear covariate)"
        )

    beta = np.zeros(4)
    eta = design @ beta
    loglik = _log_likelihood(eta, y)
    converged = False
    iterations = 0
    hessian = None
    for iterations in range(1, _GLM_MAX_ITER + 1):
        mu = expit(eta)
        grad = design.T @ (y - mu)
        if float(np.abs(grad).max()) < _GLM_GRAD_TOL:
            converged = True
            iterations -= 1
            break
        weights = mu * (1.0 - mu)
        hessian = design.T @ (design * weights[:, None])
        try:
            step = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError:
            raise SeparationError("singular Hessian; likelihood appears unbounded")
        lam = 1.0
        while lam > 1e-10:
            cand = beta + lam * step
            cand_eta = design @ cand
            cand_ll = _log_likelihood(cand_eta, y)
            if cand_ll >= loglik - 1e-12:
                break
            lam *= 0.5
        beta, eta, loglik = cand, cand_eta, cand_ll
        if float(np.abs(beta).max()) > _GLM_DIVERGENCE:
            raise SeparationError("coefficients diverging; data appear separated")

    mu = expit(eta)
    weights = mu * (1.0 - mu)
    hessian = design.T @ (design * weights[:, None])
    try:
        covariance = np.linalg.inv(hessian)
    except np.linalg.LinAlgError:
        raise SeparationError("singular information matrix at the fit")
    return GlmFit(
        beta0=float(beta[0]), beta1=float(beta[1]),
        beta2=float(beta[2]), beta3=float(beta[3]),
        standard_errors=np.sqrt(np.diag(covariance)),
        covariance=covariance,
        converged=converged,
        iterations=iterations,
    )


def glm_local_log_or(sample: Sample, grid) -> CurveEstimate:
    """Model-based local log odds ratio beta2 + beta3 * x over the grid."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    fit = fit_interaction_logit(sample)
    if not fit.converged:
        raise NoConvergenceError(
            f"logistic fit did not converge in {fit.iterations} iterations"
        )
    log_or = fit.beta2 + fit.beta3 * grid
    v = fit.covariance
    se = np.sqrt(v[2, 2] + grid * grid * v[3, 3] + 2.0 * grid * v[2, 3])
    return CurveEstimate(
        x=grid, log_or=log_or, valid=np.ones(grid.size, dtype=bool),
        estimator="GLM", se=se,
    )
