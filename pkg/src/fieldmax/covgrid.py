"""Grid geometry and stationary correlation families with decay-condition checks.

Grids are rectangles ``{1..n1} x {1..n2}``; arrays over the grid are stored
row-major as ``(n1, n2)`` float64 numpy arrays. Correlation families are
stationary and symmetric in the lag, with unit variance at lag zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateShape, FactorizationFailed, ThresholdExceeded

DENSE_THRESHOLD_DEFAULT = 4096

_FAMILIES = ("independent", "geometric", "polynomial")


@dataclass(frozen=True)
class GridShape:
    """Rectangle of grid points, ``n1`` rows by ``n2`` columns."""

    n1: int
    n2: int

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if not isinstance(n, (int, np.integer)) or n < 1:
                raise DegenerateShape(f"grid dimensions must be integers >= 1, got {self!r}")

    @property
    def ncells(self) -> int:
        return int(self.n1) * int(self.n2)

    def __str__(self):
        return f"{self.n1}x{self.n2}"


@dataclass(frozen=True)
class CovarianceModel:
    """Stationary correlation family on the 2D integer lattice.

    Families
    --------
    independent
        r(j) = 0 for j != 0.
    geometric(theta)
        r(j) = theta**(|j1| + |j2|), theta in [0, 1). Separable product of two
        one-dimensional exponentially decaying correlations.
    polynomial(c, alpha)
        r(j) = c * (1 + j1**2 + j2**2)**(-alpha/2) for j != 0, c in (0, 1),
        alpha > 0. Equivalent to a nugget mixture (1-c)*delta_0 + c*Cauchy,
        hence positive semidefinite for every c < 1; PSD is nevertheless
        re-checked empirically at factorization time.

    r(0, 0) = 1 exactly for every family.
    """

    family: str
    theta: float = 0.0
    c: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown covariance family {self.family!r}")
        if self.family == "geometric" and not 0.0 <= self.theta < 1.0:
            raise ValueError(f"geometric theta must be in [0, 1), got {self.theta}")
        if self.family == "polynomial":
            if not 0.0 < self.c < 1.0:
                raise ValueError(f"polynomial c must be in (0, 1), got {self.c}")
            if self.alpha <= 0.0:
                raise ValueError(f"polynomial alpha must be > 0, got {self.alpha}")

    @classmethod
    def independent(cls) -> "CovarianceModel":
        return cls("independent")

    @classmethod
    def geometric(cls, theta: float) -> "CovarianceModel":
        return cls("geometric", theta=float(theta))

    @classmethod
    def polynomial(cls, c: float, alpha: float) -> "CovarianceModel":
        return cls("polynomial", c=float(c), alpha=float(alpha))

    @property
    def rho_bound(self) -> float:
        """sup over j != 0 of |r(j)|; strictly below 1 for every family."""
        if self.family == "independent":
            return 0.0
        if self.family == "geometric":
            return self.theta
        return self.c * 2.0 ** (-self.alpha / 2.0)

    def params(self) -> str:
        """Canonical parameter string, used in config tags and CSV rows."""
        if self.family == "independent":
            return "independent"
        if self.family == "geometric":
            return f"geometric({self.theta!r})"
        return f"polynomial({self.c!r},{self.alpha!r})"


def covariance_at(model: CovarianceModel, lag) -> float:
    """Correlation of the field at an integer lag pair.

    Total function: symmetric in the lag, 1 at (0, 0).
    """
    j1, j2 = abs(int(lag[0])), abs(int(lag[1]))
    if j1 == 0 and j2 == 0:
        return 1.0
    if model.family == "independent":
        return 0.0
    if model.family == "geometric":
        return model.theta ** (j1 + j2)
    return model.c * (1.0 + j1 * j1 + j2 * j2) ** (-model.alpha / 2.0)


def covariance_grid(model: CovarianceModel, j1, j2) -> np.ndarray:
    """Vectorized :func:`covariance_at` over arrays of lag components."""
    j1 = np.abs(np.asarray(j1, dtype=np.float64))
    j2 = np.abs(np.asarray(j2, dtype=np.float64))
    if model.family == "independent":
        out = np.zeros(np.broadcast(j1, j2).shape)
    elif model.family == "geometric":
        if model.theta == 0.0:
            out = np.zeros(np.broadcast(j1, j2).shape)
        else:
            out = np.exp((j1 + j2) * math.log(model.theta))
    else:
        out = model.c * (1.0 + j1 * j1 + j2 * j2) ** (-model.alpha / 2.0)
    out = np.where((j1 == 0) & (j2 == 0), 1.0, out)
    return out


def build_covariance_matrix(
    model: CovarianceModel,
    shape: GridShape,
    dense_threshold: int = DENSE_THRESHOLD_DEFAULT,
) -> np.ndarray:
    """Dense N x N correlation matrix of the field on ``shape``, row-major.

    Raises
    ------
    ThresholdExceeded
        When ``shape.ncells`` exceeds ``dense_threshold``; callers should fall
        back to the spectral sampling path instead of densifying.
    """
    n = shape.ncells
    if n > dense_threshold:
        raise ThresholdExceeded(
            f"{n} cells exceeds the dense threshold {dense_threshold}"
        )
    rows = np.arange(shape.n1)
    cols = np.arange(shape.n2)
    d1 = np.abs(rows[:, None] - rows[None, :])  # (n1, n1)
    d2 = np.abs(cols[:, None] - cols[None, :])  # (n2, n2)
    # lag grid for flattened indices i = r1*n2 + c1, j = r2*n2 + c2
    lag1 = d1[:, None, :, None]
    lag2 = d2[None, :, None, :]
    mat = covariance_grid(model, lag1, lag2).reshape(n, n)
    return mat


def factorization_witness(
    model: CovarianceModel,
    shape: GridShape,
    dense_threshold: int = DENSE_THRESHOLD_DEFAULT,
) -> np.ndarray:
    """Lower Cholesky factor of the covariance matrix (PSD witness).

    Raises :class:`FactorizationFailed` when the matrix is numerically not
    positive semidefinite; the sampler treats that as a hard error so that a
    non-covariance is never sampled from.
    """
    mat = build_covariance_matrix(model, shape, dense_threshold)
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailed(
            f"{model.params()} on {shape} is not positive semidefinite: {exc}"
        ) from exc


@dataclass(frozen=True)
class BermanRow:
    """Decay-condition quantities for one grid shape.

    ``q_*`` are the three products of the mixing condition
    (rho at lag (n1,0), (0,n2), (n1,n2) times the matching log factor);
    ``r_*`` are the same products multiplied by ``(log log n)**(1+eps)``,
    i.e. the ratios against the almost-sure-rate benchmark.
    """

    shape: GridShape
    q_row: float
    q_col: float
    q_diag: float
    r_row: float
    r_col: float
    r_diag: float

    def quantities(self):
        return (self.q_row, self.q_col, self.q_diag)

    def ratios(self):
        return (self.r_row, self.r_col, self.r_diag)


@dataclass(frozen=True)
class BermanReport:
    rows: tuple
    epsilon: float
    passed: bool
    field_names: tuple = field(
        default=("q_row", "q_col", "q_diag", "r_row", "r_col", "r_diag"), repr=False
    )


def berman_check(model: CovarianceModel, shapes, epsilon: float = 0.1) -> BermanReport:
    """Evaluate the covariance-decay conditions on a ladder of shapes.

    For each shape reports rho_(n1,0)*log(n1), rho_(0,n2)*log(n2) and
    rho_(n1,n2)*log(n1*n2), plus each quantity scaled by the benchmark
    ``(log log)**(1+eps)`` it must stay below for the almost-sure rate.
    PASS means every one of the six sequences is non-increasing along the
    given (increasing) shape list.
    """
    shapes = list(shapes)
    if not shapes:
        raise DegenerateShape("need at least one shape")
    rows = []
    for s in shapes:
        if s.n1 < 3 or s.n2 < 3:
            raise DegenerateShape(f"{s} too small: need n1, n2 >= 3 so log log is positive")
        ln1, ln2 = math.log(s.n1), math.log(s.n2)
        q_row = covariance_at(model, (s.n1, 0)) * ln1
        q_col = covariance_at(model, (0, s.n2)) * ln2
        q_diag = covariance_at(model, (s.n1, s.n2)) * (ln1 + ln2)
        e = 1.0 + epsilon
        rows.append(
            BermanRow(
                shape=s,
                q_row=q_row,
                q_col=q_col,
                q_diag=q_diag,
                r_row=q_row * math.log(ln1) ** e,
                r_col=q_col * math.log(ln2) ** e,
                r_diag=q_diag * (math.log(ln1) * math.log(ln2)) ** e,
            )
        )
    passed = True
    for prev, cur in zip(rows, rows[1:]):
        seqs = zip(prev.quantities() + prev.ratios(), cur.quantities() + cur.ratios())
        if any(b > a for a, b in seqs):
            passed = False
            break
    return BermanReport(rows=tuple(rows), epsilon=epsilon, passed=passed)
