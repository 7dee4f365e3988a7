"""Bandwidth selection and derived smoothing scales.

Two selectors are provided for the estimation bandwidth: a two-stage
direct plug-in targeting the asymptotic MISE of the smoothed cell
regressions, and pooled leave-one-out cross-validation over the four
cells. On top of the selected base bandwidth sit two deterministic
transforms: undersmoothing (multiply by n^(-1/20), taking an
n^(-1/5)-rate bandwidth to the n^(-1/4) rate that makes smoothing bias
asymptotically negligible) and the oversmoothed pilot g = h * n^(5/36)
used to generate bootstrap data, which restores the n^(-1/9) rate needed
for the bootstrap to capture the estimator's bias.

The plug-in is the standard blocked-quartic two-stage construction:

1. Quartic polynomials are fitted per block (block count chosen by
   Mallows' Cp among 1..max(min(n/20, 5), 1)), giving the residual
   variance and a rough curvature functional theta24 = mean m'' m''''.
2. theta24 sets the n^(-1/7)-rate pilot for a local-cubic kernel
   estimate of theta22 = mean m''^2 over the lightly trimmed support.
3. h = ( nu0 * sigma^2 * |T| / (kappa2^2 * theta22 * n) )^(1/5),
   capped at the covariate range.

Its constant only needs to be roughly right, since undersmoothing
follows. The selector tracks the curvature of the regression function
itself (the design-density gradient term of the smoothing bias is not
estimated; it vanishes for flat designs and is dominated by curvature
noise elsewhere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Sample
from .errors import DegenerateDataError
from .kernels import GAUSSIAN, KernelSpec, kernel_eval

DPI = "dpi"
CV = "cv"
FIXED = "fixed"

#: Fraction of the covariate range excluded at each end when averaging
#: curvature functionals (keeps the worst boundary variance out while the
#: pilot-scale noise that drives finite-sample undersmoothing stays in).
_TRIM_FRACTION = 0.05
_MIN_XS_SD = 1e-12
_MAX_BLOCKS = 5

# Gaussian (2,3) equivalent-kernel constant R(K*) with K*(u) = (u^2-1) phi(u);
# the matching bias constant mu4(K*)/24 = 1/2 makes the pilot exponent clean.
_R_K23 = 3.0 / (8.0 * math.sqrt(math.pi))


@dataclass(frozen=True)
class BandwidthPlan:
    """Estimation bandwidth h, bootstrap pilot g, and how they were chosen."""

    h: float
    g: float
    method: str
    undersmoothed: bool

    def __post_init__(self):
        if not (self.h > 0 and self.g > 0):
            raise ValueError("bandwidths must be positive")


def undersmooth(h_opt: float, n: int) -> float:
    """Shrink an n^(-1/5)-rate bandwidth to the n^(-1/4) rate: h_opt * n^(-1/20)."""
    if h_opt <= 0:
        raise ValueError("h_opt must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    return h_opt * n ** (-1.0 / 20.0)


def pilot_bandwidth(h: float, n: int) -> float:
    """Oversmoothed pilot g = h * n^(5/36), restoring the n^(-1/9) rate."""
    if h <= 0:
        raise ValueError("h must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    return h * n ** (5.0 / 36.0)


def _check_not_degenerate(xs: np.ndarray):
    if float(np.std(xs)) < _MIN_XS_SD:
        raise DegenerateDataError("covariate values are (numerically) constant")


def _blocked_quartic_stage(xs: np.ndarray, ys: np.ndarray):
    """Blocked quartic fits with Mallows-Cp block choice.

    Returns (sigma2, theta24, interior_mask) where theta24 averages
    m''(X_i) m''''(X_i) over the trimmed interior points.
    """
    n = xs.size
    nmax = max(min(n // 20, _MAX_BLOCKS), 1)
    order = np.argsort(xs)
    xs_s, ys_s = xs[order], ys[order]

    def fit(count):
        edges = [int(round(n * k / count)) for k in range(count + 1)]
        polys, rss = [], 0.0
        for b in range(count):
            chunk = slice(edges[b], edges[b + 1])
            poly = np.polynomial.Polynomial.fit(xs_s[chunk], ys_s[chunk], 4)
            rss += float(np.sum((ys_s[chunk] - poly(xs_s[chunk])) ** 2))
            polys.append((chunk, poly))
        return polys, rss

    fits = {count: fit(count) for count in range(1, nmax + 1)}
    sigma2_max = fits[nmax][1] / (n - 5 * nmax)
    if sigma2_max <= 0:
        raise DegenerateDataError("zero residual variance; bandwidth undefined")
    chosen = min(
        range(1, nmax + 1),
        key=lambda c: (fits[c][1] / sigma2_max - (n - 10 * c), c),
    )
    polys, rss = fits[chosen]
    sigma2 = rss / (n - 5 * chosen)

    lo, hi = xs_s[0], xs_s[-1]
    trim = _TRIM_FRACTION * (hi - lo)
    interior_s = (xs_s >= lo + trim) & (xs_s <= hi - trim)
    d2 = np.empty(n)
    d4 = np.empty(n)
    for chunk, poly in polys:
        d2[chunk] = poly.deriv(2)(xs_s[chunk])
        d4[chunk] = poly.deriv(4)(xs_s[chunk])
    theta24 = float(np.sum(d2[interior_s] * d4[interior_s])) / n
    return sigma2, theta24, xs_s, ys_s, interior_s


def _local_cubic_curvature(xs: np.ndarray, ys: np.ndarray, at: np.ndarray,
                           g: float, spec: KernelSpec) -> np.ndarray:
    """Second derivative of local cubic fits at each point of ``at``."""
    u = (xs[None, :] - at[:, None]) / g
    w = kernel_eval(spec, u)
    # Weighted design moments in scaled coordinates, powers 0..6,
    # accumulated in place to avoid materializing each power separately.
    m = at.size
    sums = np.empty((7, m))
    rhs = np.empty((m, 4))
    acc = w.copy()
    sums[0] = acc.sum(axis=1)
    rhs[:, 0] = acc @ ys
    for k in range(1, 7):
        acc *= u
        sums[k] = acc.sum(axis=1)
        if k < 4:
            rhs[:, k] = acc @ ys
    mat = np.empty((m, 4, 4))
    for i in range(4):
        for j in range(4):
            mat[:, i, j] = sums[i + j]
    # Tiny ridge keeps nearly singular local systems solvable.
    mat += 1e-12 * np.eye(4)[None, :, :]
    try:
        beta = np.linalg.solve(mat, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        beta = np.stack([np.linalg.lstsq(mat[i], rhs[i], rcond=None)[0]
                         for i in range(m)])
    return 2.0 * beta[:, 2] / (g * g)


def dpi_bandwidth(xs, ys, spec: KernelSpec = GAUSSIAN) -> float:
    """Two-stage direct plug-in bandwidth for one smoothed cell regression.

    Targets the asymptotic MISE minimizer

        h_opt = ( nu0 * sigma^2 * |T| / (kappa2^2 * theta22 * n) )^(1/5)

    with sigma^2 and the pilot functional theta24 from Cp-blocked quartic
    fits, and theta22 = mean of squared local-cubic second derivatives at
    pilot bandwidth ghat = ( R* sigma^2 (b-a) / (|theta24| n) )^(1/7).
    The result is capped at the covariate range.

    Raises DegenerateDataError when xs is constant or ys carries no signal.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("xs and ys must have the same length")
    n = xs.size
    if n < 10:
        raise ValueError("need at least 10 observations for plug-in selection")
    _check_not_degenerate(xs)
    if float(np.ptp(ys)) == 0.0:
        raise DegenerateDataError("response is constant; bandwidth undefined")

    sigma2, theta24, xs_s, ys_s, interior = _blocked_quartic_stage(xs, ys)
    if sigma2 <= 0:
        raise DegenerateDataError("zero residual variance; bandwidth undefined")
    span = float(xs_s[-1] - xs_s[0])
    theta24 = max(abs(theta24), 1e-12)
    g_pilot = (_R_K23 * sigma2 * span / (theta24 * n)) ** (1.0 / 7.0)
    g_pilot = min(max(g_pilot, span / n), span)

    at = xs_s[interior]
    if at.size == 0:
        raise DegenerateDataError("no interior points for curvature estimation")
    curvature = _local_cubic_curvature(xs_s, ys_s, at, g_pilot, spec)
    theta22 = float(np.sum(curvature**2)) / n
    if theta22 <= 0 or not math.isfinite(theta22):
        raise DegenerateDataError("flat fitted regression; bandwidth undefined")

    trimmed_span = span * (1.0 - 2.0 * _TRIM_FRACTION)
    h_opt = (spec.nu0 * sigma2 * trimmed_span
             / (spec.kappa2**2 * theta22 * n)) ** 0.2
    return min(h_opt, span)


def default_cv_grid(xs, count: int = 40) -> np.ndarray:
    """Log-spaced candidate bandwidths from 0.05 to 1.0 times the data range."""
    span = float(np.ptp(np.asarray(xs, dtype=float)))
    if span <= 0:
        raise DegenerateDataError("covariate values are constant")
    return np.geomspace(0.05 * span, 1.0 * span, count)


def cv_bandwidth(sample: Sample, spec: KernelSpec = GAUSSIAN, grid=None) -> float:
    """Leave-one-out cross-validation bandwidth, pooled over the four cells.

    Scores each candidate by CV(h) = sum_k sum_ij (Z_k^ij - phat_ij^(-k)(X_k))^2
    and returns the minimizer; exact ties break toward the larger h.
    Candidates for which some point has no leave-one-out kernel mass score
    +inf. The result does not depend on the order of the grid.
    """
    if sample.n < 10:
        raise ValueError("need at least 10 observations for cross-validation")
    _check_not_degenerate(sample.xs)
    if grid is None:
        grid = default_cv_grid(sample.xs)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("candidate grid must be nonempty")
    if np.any(grid <= 0):
        raise ValueError("candidate bandwidths must be positive")

    xs = sample.xs
    z = sample.one_hot()
    scores = np.empty(grid.size)
    for idx, h in enumerate(grid):
        k = kernel_eval(spec, (xs[:, None] - xs[None, :]) / h)
        np.fill_diagonal(k, 0.0)
        denom = k.sum(axis=1)
        if np.any(denom <= 0.0):
            scores[idx] = np.inf
            continue
        pred = (k @ z) / denom[:, None]
        scores[idx] = float(np.sum((z - pred) ** 2))

    best = scores.min()
    if not np.isfinite(best):
        raise DegenerateDataError("no candidate bandwidth gives every point mass")
    return float(grid[scores == best].max())


def plan_bandwidth(
    sample: Sample,
    spec: KernelSpec = GAUSSIAN,
    method: str = DPI,
    undersmoothed: bool = True,
    cv_grid=None,
    fixed_h: float | None = None,
) -> BandwidthPlan:
    """Select the estimation bandwidth and derive the bootstrap pilot.

    For the plug-in method, one bandwidth is selected per cell regression
    and the four are combined by geometric mean (respecting the
    multiplicative MISE structure) before undersmoothing; cells whose
    regression is degenerate (e.g. globally empty) are skipped.
    """
    n = sample.n
    if method == FIXED:
        if fixed_h is None or fixed_h <= 0:
            raise ValueError("fixed method requires a positive fixed_h")
        base = float(fixed_h)
    elif method == DPI:
        z = sample.one_hot()
        per_cell = []
        for j in range(4):
            try:
                per_cell.append(dpi_bandwidth(sample.xs, z[:, j], spec))
            except DegenerateDataError:
                continue
        if not per_cell:
            raise DegenerateDataError("plug-in selection failed for every cell")
        base = float(np.exp(np.mean(np.log(per_cell))))
    elif method == CV:
        base = cv_bandwidth(sample, spec, cv_grid)
    else:
        raise ValueError(f"unknown bandwidth method {method!r}")

    h = undersmooth(base, n) if undersmoothed else base
    return BandwidthPlan(
        h=h, g=pilot_bandwidth(h, n), method=method, undersmoothed=undersmoothed
    )
