"""Sampling of Gaussian, chi and order-statistics fields, plus trend machinery.

All samplers take an explicit ``numpy.random.Generator``; nothing touches
global RNG state. A given (model, shape, method, stream) always reproduces the
same values bitwise. Dense Cholesky sampling is used up to a cell threshold,
circulant-embedding FFT synthesis above it; both draw from the same law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from dataclasses import field as dataclass_field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from .covgrid import (
    DENSE_THRESHOLD_DEFAULT,
    CovarianceModel,
    GridShape,
    covariance_grid,
    factorization_witness,
)
from .errors import EmbeddingNotPSD, InvalidRank, KindMismatch
from .levels import normalizing_constants

EMBEDDING_NEG_TOL = 1e-8

_FIELD_KINDS = ("gaussian", "chi", "orderstat", "trended")


@dataclass(frozen=True)
class FieldSample:
    """One realization of a 2D field on a grid rectangle.

    ``values`` is an (n1, n2) float64 array, row-major over grid points
    (1-based grid index (i1, i2) lives at values[i1-1, i2-1]).
    ``components`` optionally retains the d Gaussian component draws of a
    chi or order-statistics field for testing.
    """

    shape: GridShape
    values: np.ndarray
    kind: str
    d: Optional[int] = None
    r: Optional[int] = None
    components: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in _FIELD_KINDS:
            raise KindMismatch(f"unknown field kind {self.kind!r}")
        if self.values.shape != (self.shape.n1, self.shape.n2):
            raise KindMismatch(
                f"values shaped {self.values.shape} do not match grid {self.shape}"
            )

    def support_floor(self) -> float:
        """Infimum of the marginal support; the value missing points fall to."""
        return 0.0 if self.kind == "chi" else -math.inf


@lru_cache(maxsize=2)
def _dense_factor(model: CovarianceModel, shape: GridShape, dense_threshold: int):
    # Identity factor is skipped entirely for the independent family.
    return factorization_witness(model, shape, dense_threshold)


@lru_cache(maxsize=8)
def _embedding_spectrum(model: CovarianceModel, shape: GridShape):
    """Eigenvalues of the circulant embedding on the (2 n1, 2 n2) torus."""
    m1, m2 = 2 * shape.n1, 2 * shape.n2
    j1 = np.minimum(np.arange(m1), m1 - np.arange(m1))
    j2 = np.minimum(np.arange(m2), m2 - np.arange(m2))
    base = covariance_grid(model, j1[:, None], j2[None, :])
    lam = np.fft.fft2(base).real
    return lam


def _clipped_spectrum(lam: np.ndarray, context: str) -> np.ndarray:
    """Clip tiny negative spectral mass; fail loudly above the tolerance."""
    neg = lam[lam < 0.0]
    if neg.size == 0:
        return lam
    rel = -neg.sum() / lam[lam > 0.0].sum()
    if rel > EMBEDDING_NEG_TOL:
        raise EmbeddingNotPSD(
            f"{context}: negative spectral mass {rel:.3e} exceeds {EMBEDDING_NEG_TOL:.0e}"
        )
    return np.maximum(lam, 0.0)


def sample_gaussian_field(
    model: CovarianceModel,
    shape: GridShape,
    rng: np.random.Generator,
    method: str = "auto",
    dense_threshold: int = DENSE_THRESHOLD_DEFAULT,
) -> FieldSample:
    """Draw a zero-mean unit-variance Gaussian field with the given covariance.

    ``method`` is "auto" (dense factorization up to ``dense_threshold`` cells,
    circulant embedding beyond), or "dense"/"spectral" to force a path. The
    path changes only the stream consumption pattern, never the distribution.

    Raises
    ------
    EmbeddingNotPSD
        When the spectral path is required (or forced) and the embedding has
        negative spectral mass above the relative tolerance 1e-8.
    """
    if method == "auto":
        method = "dense" if shape.ncells <= dense_threshold else "spectral"
    if method == "dense":
        if model.family == "independent":
            values = rng.standard_normal((shape.n1, shape.n2))
        else:
            factor = _dense_factor(model, shape, dense_threshold)
            z = rng.standard_normal(shape.ncells)
            values = (factor @ z).reshape(shape.n1, shape.n2)
    elif method == "spectral":
        lam = _clipped_spectrum(
            _embedding_spectrum(model, shape), f"{model.params()} on {shape}"
        )
        m1, m2 = lam.shape
        z = rng.standard_normal((2, m1, m2))
        coeff = np.sqrt(lam) * (z[0] + 1j * z[1])
        synth = np.fft.fft2(coeff).real / math.sqrt(m1 * m2)
        values = np.ascontiguousarray(synth[: shape.n1, : shape.n2])
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return FieldSample(shape=shape, values=values, kind="gaussian")


def sample_chi_field(
    model: CovarianceModel,
    shape: GridShape,
    d: int,
    rng: np.random.Generator,
    keep_components: bool = False,
    dense_threshold: int = DENSE_THRESHOLD_DEFAULT,
) -> FieldSample:
    """Pointwise Euclidean norm of d independent Gaussian fields (chi field)."""
    if d < 1:
        raise InvalidRank(f"d must be >= 1, got {d}")
    comps = np.stack(
        [
            sample_gaussian_field(model, shape, rng, dense_threshold=dense_threshold).values
            for _ in range(d)
        ]
    )
    values = np.sqrt(np.sum(np.square(comps), axis=0))
    return FieldSample(
        shape=shape,
        values=values,
        kind="chi",
        d=d,
        components=comps if keep_components else None,
    )


def sample_orderstat_field(
    model: CovarianceModel,
    shape: GridShape,
    d: int,
    r: int,
    rng: np.random.Generator,
    keep_components: bool = False,
    dense_threshold: int = DENSE_THRESHOLD_DEFAULT,
) -> FieldSample:
    """Pointwise r-th largest of d independent Gaussian fields.

    r = 1 is the pointwise maximum, r = d the pointwise minimum.
    """
    if not 1 <= r <= d:
        raise InvalidRank(f"rank r={r} outside [1, d={d}]")
    comps = np.stack(
        [
            sample_gaussian_field(model, shape, rng, dense_threshold=dense_threshold).values
            for _ in range(d)
        ]
    )
    # sorted ascending along axis 0: r-th largest is entry d - r
    values = np.sort(comps, axis=0)[d - r]
    return FieldSample(
        shape=shape,
        values=values,
        kind="orderstat",
        d=d,
        r=r,
        components=comps if keep_components else None,
    )


# ---------------------------------------------------------------------------
# deterministic trends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrendSpec:
    """Deterministic trend i -> m_i over a grid, with an optional fixed center.

    ``fn(i1, i2, shape)`` receives 1-based index arrays and returns the trend
    values; ``center`` is the per-shape centering constant m* (admissible when
    |m*| <= beta = max |m_i|). When ``center`` is None it is solved per shape
    so the exponential-average identity holds exactly (see
    :func:`solve_center`).

    Config tags: "zero", "constant(c)", "linear(c1,c2)" with
    m_i = c1*i1/n1 + c2*i2/n2, and "sinusoid(c,p1,p2)" with
    m_i = c*sin(2*pi*p1*i1/n1)*cos(2*pi*p2*i2/n2) (defaults p1=1, p2=0).
    """

    tag: str
    fn: Callable = dataclass_field(repr=False)
    center: Optional[float] = None

    @classmethod
    def zero(cls) -> "TrendSpec":
        return cls("zero", lambda i1, i2, shape: np.zeros(np.broadcast(i1, i2).shape))

    @classmethod
    def constant(cls, c: float) -> "TrendSpec":
        return cls(
            f"constant({c!r})",
            lambda i1, i2, shape: np.full(np.broadcast(i1, i2).shape, float(c)),
        )

    @classmethod
    def linear(cls, c1: float, c2: float) -> "TrendSpec":
        return cls(
            f"linear({c1!r},{c2!r})",
            lambda i1, i2, shape: c1 * i1 / shape.n1 + c2 * i2 / shape.n2,
        )

    @classmethod
    def sinusoid(cls, c: float, p1: float = 1.0, p2: float = 0.0) -> "TrendSpec":
        return cls(
            f"sinusoid({c!r},{p1!r},{p2!r})",
            lambda i1, i2, shape: c
            * np.sin(2.0 * math.pi * p1 * i1 / shape.n1)
            * np.cos(2.0 * math.pi * p2 * i2 / shape.n2),
        )

    def values(self, shape: GridShape) -> np.ndarray:
        i1 = np.arange(1, shape.n1 + 1, dtype=np.float64)[:, None]
        i2 = np.arange(1, shape.n2 + 1, dtype=np.float64)[None, :]
        out = np.asarray(self.fn(i1, i2, shape), dtype=np.float64)
        return np.broadcast_to(out, (shape.n1, shape.n2))

    def beta(self, shape: GridShape) -> float:
        """beta_n = max over the grid of |m_i|."""
        return float(np.max(np.abs(self.values(shape))))

    def center_for(self, shape: GridShape) -> float:
        """The fixed center when given, else the solved exponential-average root."""
        if self.center is not None:
            return self.center
        return solve_center(self, shape).center

    def with_center(self, center: float) -> "TrendSpec":
        return replace(self, center=float(center))


def apply_trend(field: FieldSample, trend: TrendSpec) -> FieldSample:
    """Add the deterministic trend to a Gaussian field sample (kind 'trended')."""
    if field.kind != "gaussian":
        raise KindMismatch(f"trend applies to gaussian fields only, got {field.kind!r}")
    values = field.values + trend.values(field.shape)
    return FieldSample(shape=field.shape, values=values, kind="trended")


def _exp_average(m: np.ndarray, center: float, a_star: float) -> float:
    # (1/N) sum_i exp(a* (m_i - c) - (m_i - c)^2 / 2), via logsumexp for safety
    d = m - center
    return float(math.exp(logsumexp(a_star * d - 0.5 * d * d) - math.log(m.size)))


@dataclass(frozen=True)
class CenterResult:
    center: float
    exp_average: float
    no_root: bool


def solve_center(trend, shape: GridShape) -> CenterResult:
    """Solve for the center m* making the exponential average equal 1.

    The average S(m*) = (1/N) sum exp(a*(m_i - m*) - (m_i - m*)^2 / 2) is
    strictly decreasing on the admissible interval [-beta, beta] (the trend is
    bounded and beta stays well below a*), so a bracketed root search applies.
    When S - 1 does not change sign on the interval the nearer endpoint is
    returned with ``no_root=True`` instead of raising.
    """
    if not isinstance(trend, TrendSpec):
        trend = TrendSpec("custom", trend)
    m = trend.values(shape).ravel()
    _, _, a_star = normalizing_constants(shape.ncells)
    beta = float(np.max(np.abs(m)))
    span = float(m.max() - m.min())
    if span == 0.0:
        c = float(m[0])
        return CenterResult(center=c, exp_average=_exp_average(m, c, a_star), no_root=False)
    f = lambda c: _exp_average(m, c, a_star) - 1.0
    lo, hi = -beta, beta
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return CenterResult(center=lo, exp_average=1.0 + flo, no_root=False)
    if fhi == 0.0:
        return CenterResult(center=hi, exp_average=1.0 + fhi, no_root=False)
    if flo * fhi > 0.0:
        end = lo if abs(flo) <= abs(fhi) else hi
        return CenterResult(center=end, exp_average=_exp_average(m, end, a_star), no_root=True)
    root = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    return CenterResult(center=float(root), exp_average=_exp_average(m, root, a_star), no_root=False)


@dataclass(frozen=True)
class TrendReport:
    """Validation of a trend against the admissibility conditions at one shape.

    ``exp_average`` is the exponential-average quantity whose limit must be 1;
    ``gumbel_gap`` is a_n * (max m_i - m*), the boundedness quantity for the
    almost-sure statement; ``beta_rate`` is beta_n / sqrt(N), the growth-rate
    measure that must vanish asymptotically (reported, not flagged).
    """

    shape: GridShape
    beta: float
    center: float
    exp_average: float
    deviation: float
    gumbel_gap: float
    beta_rate: float
    center_admissible: bool
    passed: bool


def validate_trend(trend: TrendSpec, shape: GridShape, tol: float = 1e-2) -> TrendReport:
    """Report the trend-admissibility quantities; PASS when the exponential
    average is within ``tol`` of 1 and the center satisfies |m*| <= beta."""
    m = trend.values(shape)
    beta = float(np.max(np.abs(m)))
    a, _, a_star = normalizing_constants(shape.ncells)
    center = trend.center_for(shape)
    s = _exp_average(m.ravel(), center, a_star)
    deviation = abs(s - 1.0)
    center_ok = abs(center) <= beta + 1e-12
    return TrendReport(
        shape=shape,
        beta=beta,
        center=center,
        exp_average=s,
        deviation=deviation,
        gumbel_gap=a * (float(m.max()) - center),
        beta_rate=beta / math.sqrt(shape.ncells),
        center_admissible=center_ok,
        passed=deviation <= tol and center_ok,
    )
