"""Kernel functions, their moment constants, Nadaraya-Watson weights and KDE.

Shared numerical substrate for the rest of the package. Conventions:
``u = (x - X_k) / h``; weights are normalized so each evaluation point's
weight vector sums to one, which keeps every smoothed cell probability
inside [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllZeroWeightsError, DegenerateDataError

# Kernel values below this are treated as exact zeros (denormal guard;
# far tails contribute nothing at double precision).
_KERNEL_TINY = 1e-300


@dataclass(frozen=True)
class KernelSpec:
    """A kernel together with its constants nu0 = int K^2, kappa2 = int u^2 K."""

    kind: str
    nu0: float
    kappa2: float


GAUSSIAN = KernelSpec("gaussian", nu0=1.0 / (2.0 * math.sqrt(math.pi)), kappa2=1.0)
EPANECHNIKOV = KernelSpec("epanechnikov", nu0=0.6, kappa2=0.2)

_KERNELS = {k.kind: k for k in (GAUSSIAN, EPANECHNIKOV)}

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def get_kernel(name: str) -> KernelSpec:
    """Resolve a kernel by name ('gaussian' or 'epanechnikov')."""
    try:
        return _KERNELS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; expected one of {sorted(_KERNELS)}")


def kernel_constants(spec: KernelSpec) -> tuple[float, float]:
    """Return (nu0, kappa2) for the kernel."""
    return spec.nu0, spec.kappa2


def kernel_eval(spec: KernelSpec, u):
    """Evaluate K(u); vectorized over u, symmetric about 0 and nonnegative."""
    arr = np.asarray(u, dtype=float)
    if spec.kind == "gaussian":
        k = np.exp(-0.5 * arr * arr) / _SQRT_2PI
    elif spec.kind == "epanechnikov":
        k = 0.75 * np.maximum(0.0, 1.0 - arr * arr)
    else:
        raise ValueError(f"unknown kernel kind {spec.kind!r}")
    k = np.where(k < _KERNEL_TINY, 0.0, k)
    return float(k) if np.isscalar(u) or arr.ndim == 0 else k


def nw_weight_matrix(points, xs, h: float, spec: KernelSpec = GAUSSIAN) -> np.ndarray:
    """Normalized kernel weights, shape (len(points), len(xs)).

    Each row sums to one. Raises AllZeroWeightsError if some point gets no
    kernel mass (possible for compact-support kernels far from the data).
    """
    points = np.atleast_1d(np.asarray(points, dtype=float))
    xs = np.asarray(xs, dtype=float)
    if h <= 0:
        raise ValueError("bandwidth h must be positive")
    if xs.size == 0:
        raise ValueError("xs must be nonempty")
    k = kernel_eval(spec, (points[:, None] - xs[None, :]) / h)
    denom = k.sum(axis=1)
    if np.any(denom <= 0.0):
        bad = points[denom <= 0.0]
        raise AllZeroWeightsError(
            f"all kernel values are zero at x={bad[0]!r}; point outside estimable range"
        )
    return k / denom[:, None]


def nw_weights(x: float, xs, h: float, spec: KernelSpec = GAUSSIAN) -> np.ndarray:
    """Nadaraya-Watson weight vector at a single point; entries sum to one."""
    return nw_weight_matrix([x], xs, h, spec)[0]


def nw_estimate(x: float, xs, ys, h: float, spec: KernelSpec = GAUSSIAN) -> float:
    """Kernel-weighted local average of ys at x.

    The result is a convex combination, hence lies in [min(ys), max(ys)].
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("xs and ys must have the same length")
    return float(nw_weights(x, xs, h, spec) @ ys)


def kde_values(points, xs, h: float, spec: KernelSpec = GAUSSIAN) -> np.ndarray:
    """Kernel density estimate evaluated at each point."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    xs = np.asarray(xs, dtype=float)
    if h <= 0:
        raise ValueError("bandwidth h must be positive")
    if xs.size == 0:
        raise ValueError("xs must be nonempty")
    k = kernel_eval(spec, (points[:, None] - xs[None, :]) / h)
    return k.sum(axis=1) / (xs.size * h)


def kde(x: float, xs, h: float, spec: KernelSpec = GAUSSIAN) -> float:
    """Kernel density estimate at a single point."""
    return float(kde_values([x], xs, h, spec)[0])


def kde_gradient_values(points, xs, h: float) -> np.ndarray:
    """Derivative of the Gaussian KDE at each point (Gaussian kernel only)."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    xs = np.asarray(xs, dtype=float)
    u = (points[:, None] - xs[None, :]) / h
    phi = np.exp(-0.5 * u * u) / _SQRT_2PI
    return (-u * phi).sum(axis=1) / (xs.size * h * h)


def silverman_bandwidth(xs) -> float:
    """Rule-of-thumb density bandwidth 0.9 * min(sd, IQR/1.34) * n^(-1/5)."""
    xs = np.asarray(xs, dtype=float)
    sd = float(np.std(xs))
    q75, q25 = np.percentile(xs, [75, 25])
    iqr = float(q75 - q25)
    scale = min(sd, iqr / 1.34) if iqr > 0 else sd
    if scale <= 0:
        raise DegenerateDataError("cannot pick a density bandwidth for constant data")
    return 0.9 * scale * xs.size ** (-0.2)
