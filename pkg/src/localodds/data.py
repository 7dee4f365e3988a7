"""Sample containers and probability vectors for 2x2 tables with a covariate.

Each observation is a covariate value together with exactly one of the
four table cells, i.e. a one-hot indicator vector over the cells
(1,1), (1,2), (2,1), (2,2). Cells are stored internally as byte codes
0..3 in that fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

#: Fixed cell order used throughout: (row, col) index pairs.
CELL_ORDER: tuple[tuple[int, int], ...] = ((1, 1), (1, 2), (2, 1), (2, 2))

#: Map from (row, col) pair to byte code.
CELL_CODE: dict[tuple[int, int], int] = {c: k for k, c in enumerate(CELL_ORDER)}

#: Code permutation swapping row labels 1 and 2: 11<->21, 12<->22.
ROW_SWAP_CODES = np.array([2, 3, 0, 1], dtype=np.int8)

#: Signs (-1)^(i+j) of the four cells in CELL_ORDER: + - - +.
CELL_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])


@dataclass(frozen=True)
class Observation:
    """One covariate value and the table cell it fell in."""

    x: float
    cell: tuple[int, int]

    def __post_init__(self):
        if self.cell not in CELL_CODE:
            raise ValueError(f"cell must be one of {CELL_ORDER}, got {self.cell!r}")


@dataclass
class Sample:
    """Covariate values plus one-hot cell indicators.

    ``support_lo``/``support_hi`` bound the covariate support; they default
    to the observed range but may be set wider when the true support is
    known (e.g. simulated data).
    """

    xs: np.ndarray
    cells: np.ndarray
    support_lo: float | None = None
    support_hi: float | None = None
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.cells = np.asarray(self.cells, dtype=np.int8)
        if self.xs.ndim != 1 or self.xs.size == 0:
            raise ValueError("xs must be a nonempty 1-d array")
        if self.cells.shape != self.xs.shape:
            raise ValueError("xs and cells must have the same length")
        if self.cells.min() < 0 or self.cells.max() > 3:
            raise ValueError("cell codes must lie in 0..3")
        lo, hi = float(self.xs.min()), float(self.xs.max())
        if self.support_lo is None:
            self.support_lo = lo
        if self.support_hi is None:
            self.support_hi = hi
        if self.support_lo > lo or self.support_hi < hi:
            raise ValueError("support bounds must cover the observed range")

    @property
    def n(self) -> int:
        return self.xs.size

    @property
    def support_range(self) -> float:
        return float(self.support_hi - self.support_lo)

    def one_hot(self) -> np.ndarray:
        """(n, 4) indicator matrix with columns in CELL_ORDER."""
        z = np.zeros((self.n, 4))
        z[np.arange(self.n), self.cells] = 1.0
        return z

    def cell_counts(self) -> np.ndarray:
        """Counts of the four cells in CELL_ORDER."""
        return np.bincount(self.cells, minlength=4)

    def swap_rows(self) -> "Sample":
        """Relabel rows 1 <-> 2, negating every log odds ratio."""
        return Sample(
            self.xs.copy(),
            ROW_SWAP_CODES[self.cells],
            self.support_lo,
            self.support_hi,
        )

    def observations(self) -> Iterator[Observation]:
        for x, c in zip(self.xs, self.cells):
            yield Observation(float(x), CELL_ORDER[int(c)])

    @classmethod
    def from_observations(
        cls,
        obs: Sequence[Observation],
        support_lo: float | None = None,
        support_hi: float | None = None,
    ) -> "Sample":
        xs = np.array([o.x for o in obs], dtype=float)
        cells = np.array([CELL_CODE[o.cell] for o in obs], dtype=np.int8)
        return cls(xs, cells, support_lo, support_hi)


@dataclass(frozen=True)
class ProbVector:
    """Point on the four-cell probability simplex."""

    p11: float
    p12: float
    p21: float
    p22: float

    def __post_init__(self):
        a = self.as_array()
        if np.any(a < 0):
            raise ValueError(f"probabilities must be nonnegative, got {tuple(a)}")
        if abs(float(a.sum()) - 1.0) > 1e-10:
            raise ValueError(f"probabilities must sum to 1, got {a.sum()!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p11, self.p12, self.p21, self.p22])

    @classmethod
    def from_array(cls, a) -> "ProbVector":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def swap_rows(self) -> "ProbVector":
        return ProbVector(self.p21, self.p22, self.p11, self.p12)


@dataclass
class CurveEstimate:
    """Log odds-ratio estimates over a grid, with optional uncertainty bands."""

    x: np.ndarray
    log_or: np.ndarray
    valid: np.ndarray
    estimator: str
    epsilon: np.ndarray | None = None
    boundary: np.ndarray | None = None
    h: float | None = None
    g: float | None = None
    se: np.ndarray | None = None
    ci_lo: np.ndarray | None = None
    ci_hi: np.ndarray | None = None
    ci_method: str | None = None
    alpha: float | None = None

    def __len__(self) -> int:
        return len(self.x)
