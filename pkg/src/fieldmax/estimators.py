"""Joint maxima events, Monte Carlo probability estimates, the exact i.i.d.
oracle, and the single-path logarithmic-average estimator via prefix maxima.

Replication r of any Monte Carlo run draws from the stream keyed by
(master seed, r); the success count is an order-independent reduction, so
results do not depend on scheduling, and extending the replication count
never changes earlier replications.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from dataclasses import field as dataclass_field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import blas as scipy_blas

from .covgrid import DENSE_THRESHOLD_DEFAULT, CovarianceModel, GridShape
from .errors import (
    DegenerateShape,
    InvalidTargets,
    KindMismatch,
    OrderViolation,
    RatioBoundExceeded,
    ShapeMismatch,
)
from .fieldgen import (
    FieldSample,
    TrendSpec,
    apply_trend,
    sample_chi_field,
    sample_gaussian_field,
    sample_orderstat_field,
    _dense_factor,
)
from .levels import (
    LevelPlan,
    TailFunction,
    calibrate_level,
    gumbel_level,
    limit_value,
    make_plan,
)
from .missing import LambdaModel, MissingMask, sample_lambda, sample_mask
from .streams import derive_stream


@dataclass(frozen=True)
class EstimateReport:
    """Monte Carlo point estimate with binomial uncertainty and lineage."""

    estimate: float
    std_error: float
    replications: int
    target: float
    seed: int
    config_digest: str
    plan: Optional[LevelPlan] = None
    outcomes: Optional[np.ndarray] = dataclass_field(default=None, repr=False)

    @property
    def abs_error(self) -> float:
        return abs(self.estimate - self.target)


def prefix_max(field) -> np.ndarray:
    """Running rectangle maxima: out[k1, k2] = max over {1..k1} x {1..k2}.

    One O(N) pass; equivalent to the recurrence
    out[k] = max(value[k], out[k1-1, k2], out[k1, k2-1]).
    """
    values = field.values if isinstance(field, FieldSample) else np.asarray(field)
    return np.maximum.accumulate(np.maximum.accumulate(values, axis=0), axis=1)


@dataclass(frozen=True)
class PrefixMaxPair:
    """Running maxima of the complete field and of its observed transform.

    ``observed`` floors missing points at the marginal's lower support
    endpoint, so observed[k] <= complete[k] everywhere and observed[k] equals
    the incomplete-sample maximum over {1..k1} x {1..k2}.
    """

    shape: GridShape
    complete: np.ndarray
    observed: np.ndarray

    @classmethod
    def from_field(cls, field: FieldSample, mask: MissingMask) -> "PrefixMaxPair":
        if field.shape != mask.shape:
            raise ShapeMismatch(f"field on {field.shape} but mask on {mask.shape}")
        floored = np.where(mask.bits, field.values, field.support_floor())
        return cls(
            shape=field.shape,
            complete=prefix_max(field.values),
            observed=prefix_max(floored),
        )


def joint_event(
    field: FieldSample,
    mask: MissingMask,
    plan: LevelPlan,
    trend: Optional[TrendSpec] = None,
) -> bool:
    """True iff the complete maximum is <= u and the observed maximum <= v.

    With a trend, the field must already carry it (kind 'trended') and both
    levels are shifted by the trend center: max(Y_i + m_i) <= u + m*.
    """
    if field.shape != mask.shape or field.shape != plan.shape:
        raise ShapeMismatch(
            f"field {field.shape}, mask {mask.shape}, plan {plan.shape} disagree"
        )
    u_eff, v_eff = plan.u, plan.v
    if trend is not None:
        if field.kind != "trended":
            raise KindMismatch("trend given but field does not carry it")
        center = trend.center_for(field.shape)
        u_eff += center
        v_eff += center
    if float(field.values.max()) > u_eff:
        return False
    observed = np.where(mask.bits, field.values, field.support_floor())
    return float(observed.max()) <= v_eff


def exact_iid_joint(lam: LambdaModel, phi_u: float, phi_v: float, ncells: int) -> float:
    """Exact joint probability for an independent field with i.i.d. masks.

    Conditional on the rate, each grid point independently satisfies the
    joint event with probability lam*phi_v + (1-lam)*phi_u, so
    P = E_lam[(lam*phi_v + (1-lam)*phi_u)^N]. Closed form for point and
    two-point rates, quadrature (absolute error <= 1e-12) for beta rates.
    """
    if not 0.0 <= phi_v <= phi_u <= 1.0:
        raise OrderViolation(f"need 0 <= phi_v <= phi_u <= 1, got ({phi_v}, {phi_u})")
    n = int(ncells)
    return lam.expect(lambda l: (l * phi_v + (1.0 - l) * phi_u) ** n, epsabs=1e-12)


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JointConfig:
    """Everything one joint-maxima experiment needs, minus the output plumbing.

    Levels come either from exceedance targets (tau, kappa), calibrated
    exactly at the grid's cell count, or from Gumbel coordinates (x, y) via
    the affine norming constants; the coordinate route is the only one
    admitting a trend and applies to gaussian fields only.
    """

    model: CovarianceModel
    shape: GridShape
    lam: LambdaModel
    field: str = "gaussian"
    d: int = 1
    r: int = 1
    tau: Optional[float] = None
    kappa: Optional[float] = None
    x: Optional[float] = None
    y: Optional[float] = None
    trend: Optional[TrendSpec] = None
    replications: int = 1000
    seed: int = 0
    ratio_bound: float = 4.0
    dense_threshold: int = DENSE_THRESHOLD_DEFAULT

    def __post_init__(self):
        has_targets = self.tau is not None or self.kappa is not None
        has_coords = self.x is not None or self.y is not None
        if has_targets == has_coords:
            raise InvalidTargets("give either targets (tau, kappa) or coordinates (x, y)")
        if has_targets:
            if self.tau is None or self.kappa is None:
                raise InvalidTargets("both tau and kappa are required")
            if not 0.0 < self.tau <= self.kappa:
                raise InvalidTargets(
                    f"need kappa >= tau > 0, got tau={self.tau}, kappa={self.kappa}"
                )
            if self.trend is not None:
                raise InvalidTargets("trend experiments use coordinates (x, y), not targets")
        else:
            if self.x is None or self.y is None:
                raise InvalidTargets("both x and y are required")
            if self.x > self.y:
                raise OrderViolation(f"need x <= y, got x={self.x}, y={self.y}")
            if self.field != "gaussian":
                raise InvalidTargets("coordinates apply to gaussian fields only")
        if self.field not in ("gaussian", "chi", "orderstat"):
            raise KindMismatch(f"unknown field kind {self.field!r}")
        if self.trend is not None and self.field != "gaussian":
            raise KindMismatch("trends apply to gaussian fields only")

    def uses_coordinates(self) -> bool:
        return self.x is not None

    def tailfn(self) -> TailFunction:
        if self.field == "gaussian":
            return TailFunction.gaussian()
        if self.field == "chi":
            return TailFunction.chi(self.d)
        return TailFunction.orderstat(self.d, self.r)

    def targets(self) -> tuple:
        """(tau, kappa): the exceedance-sum targets, derived from coordinates
        when the plan is coordinate-based."""
        if self.uses_coordinates():
            return math.exp(-self.y), math.exp(-self.x)
        return self.tau, self.kappa

    def plan(self) -> LevelPlan:
        tau, kappa = self.targets()
        if self.uses_coordinates():
            u = gumbel_level(self.y, self.shape)
            v = gumbel_level(self.x, self.shape)
            return LevelPlan(
                shape=self.shape, u=u, v=v, tau=tau, kappa=kappa, tailfn=self.tailfn()
            )
        return make_plan(self.tailfn(), self.shape, tau, kappa)

    def target(self) -> float:
        """Theoretical limit value for the configured rate law and targets."""
        tau, kappa = self.targets()
        return limit_value(self.lam, kappa=kappa, tau=tau)

    def sample_field(self, rng: np.random.Generator) -> FieldSample:
        if self.field == "chi":
            return sample_chi_field(
                self.model, self.shape, self.d, rng, dense_threshold=self.dense_threshold
            )
        if self.field == "orderstat":
            return sample_orderstat_field(
                self.model, self.shape, self.d, self.r, rng,
                dense_threshold=self.dense_threshold,
            )
        f = sample_gaussian_field(
            self.model, self.shape, rng, dense_threshold=self.dense_threshold
        )
        if self.trend is not None:
            f = apply_trend(f, self.trend)
        return f

    def digest(self) -> str:
        """Stable hash of the semantic configuration (seed excluded)."""
        canon = repr(replace(self, seed=0))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _gaussian_rows_sampler(config: JointConfig):
    """Per-replication sampler returning the raw (n1, n2) value array.

    The dense path reuses the cached triangular factor through a BLAS
    triangular matvec; each replication is an independent matvec so the
    floating-point result for replication r never depends on the batch
    context it runs in.
    """
    shape = config.shape
    if config.model.family == "independent":
        return lambda rng: rng.standard_normal((shape.n1, shape.n2))
    if shape.ncells <= config.dense_threshold:
        factor = np.asfortranarray(_dense_factor(config.model, shape, config.dense_threshold))

        def draw(rng):
            z = rng.standard_normal(shape.ncells)
            return scipy_blas.dtrmv(factor, z, lower=1).reshape(shape.n1, shape.n2)

        return draw
    return lambda rng: sample_gaussian_field(
        config.model, shape, rng, dense_threshold=config.dense_threshold
    ).values


def mc_joint_probability(config: JointConfig, keep_outcomes: bool = False) -> EstimateReport:
    """Monte Carlo estimate of the joint probability of Theorem-style events.

    Every replication draws a fresh field, a fresh rate, and a fresh mask
    from its own derived stream, in that order. The report's target is the
    theoretical limit value for the configured rate law.
    """
    if config.replications < 100:
        raise InvalidTargets(f"need at least 100 replications, got {config.replications}")
    shape = config.shape
    plan = config.plan()
    u_eff, v_eff = plan.u, plan.v
    trend_values = None
    if config.trend is not None:
        center = config.trend.center_for(shape)
        u_eff += center
        v_eff += center
        trend_values = config.trend.values(shape)
    floor = 0.0 if config.field == "chi" else -math.inf

    if config.field == "gaussian":
        draw_values = _gaussian_rows_sampler(config)
    else:
        draw_values = lambda rng: config.sample_field(rng).values

    hits = 0
    outcomes = np.zeros(config.replications, dtype=bool) if keep_outcomes else None
    for rep in range(config.replications):
        rng = derive_stream(config.seed, rep)
        values = draw_values(rng)
        if trend_values is not None:
            values = values + trend_values
        lam = sample_lambda(config.lam, rng)
        mask_bits = rng.random((shape.n1, shape.n2)) < lam
        ok = float(values.max()) <= u_eff
        if ok:
            observed = np.where(mask_bits, values, floor)
            ok = float(observed.max()) <= v_eff
        if ok:
            hits += 1
            if outcomes is not None:
                outcomes[rep] = True
    estimate = hits / config.replications
    std_error = math.sqrt(estimate * (1.0 - estimate) / config.replications)
    return EstimateReport(
        estimate=estimate,
        std_error=std_error,
        replications=config.replications,
        target=config.target(),
        seed=config.seed,
        config_digest=config.digest(),
        plan=plan,
        outcomes=outcomes,
    )


# ---------------------------------------------------------------------------
# almost-sure logarithmic averaging
# ---------------------------------------------------------------------------


def weight_normalizer(shape: GridShape) -> tuple:
    """(weight_sum, log_product) of the logarithmic average at this shape.

    weight_sum = sum over k of 1/(k1 k2) = H(n1) H(n2) (harmonic numbers);
    log_product = log(n1) * log(n2). Their ratio is the finite-size
    normalization bias of the estimator.
    """
    if shape.n1 < 2 or shape.n2 < 2:
        raise DegenerateShape(f"need n1, n2 >= 2, got {shape}")
    h1 = math.fsum(1.0 / k for k in range(1, shape.n1 + 1))
    h2 = math.fsum(1.0 / k for k in range(1, shape.n2 + 1))
    return h1 * h2, math.log(shape.n1) * math.log(shape.n2)


def _check_asclt_shape(config: JointConfig):
    s = config.shape
    if s.n1 < 3 or s.n2 < 3:
        raise DegenerateShape(f"need n1, n2 >= 3, got {s}")
    ratio = max(s.n1, s.n2) / min(s.n1, s.n2)
    if ratio > config.ratio_bound:
        raise RatioBoundExceeded(
            f"aspect ratio {ratio:.3g} exceeds the bound {config.ratio_bound}"
        )


@dataclass(frozen=True)
class LevelGrids:
    """Per-scale levels u_k, v_k for every sub-rectangle k of the grid.

    Scales whose cell count cannot carry the target (N_k <= target, or
    N_k < 3 on the coordinate route) get +inf, making that leg of the event
    vacuously true; ``vacuous_u``/``vacuous_v`` count such scales.
    """

    u: np.ndarray
    v: np.ndarray
    vacuous_u: int
    vacuous_v: int


@lru_cache(maxsize=32)
def _scale_level_lut(tailfn: TailFunction, n1: int, n2: int, target: float):
    prods = np.outer(np.arange(1, n1 + 1), np.arange(1, n2 + 1))
    uniq, inverse = np.unique(prods, return_inverse=True)
    levels = np.array(
        [
            math.inf if n <= target else calibrate_level(tailfn, GridShape(1, int(n)), target)
            for n in uniq
        ]
    )
    return levels[inverse].reshape(n1, n2)


@lru_cache(maxsize=16)
def level_grids(config: JointConfig) -> LevelGrids:
    """Levels of the scale-k joint event for every k in the grid rectangle.

    Cached per config: on the coordinate route with a trend, each scale
    solves its own center, which is worth doing once per configuration.
    """
    s = config.shape
    if config.uses_coordinates():
        prods = np.outer(np.arange(1, s.n1 + 1), np.arange(1, s.n2 + 1)).astype(float)
        small = prods < 3.0
        if config.trend is None:
            centers = 0.0
        else:
            centers = np.zeros_like(prods)
            for k1 in range(1, s.n1 + 1):
                for k2 in range(1, s.n2 + 1):
                    if k1 * k2 < 3:
                        continue
                    centers[k1 - 1, k2 - 1] = config.trend.center_for(GridShape(k1, k2))
        with np.errstate(divide="ignore", invalid="ignore"):
            ln = np.log(prods)
            a = np.sqrt(2.0 * ln)
            b = a - (np.log(ln) + math.log(4.0 * math.pi)) / (2.0 * a)
            u = np.where(small, math.inf, config.y / a + b + centers)
            v = np.where(small, math.inf, config.x / a + b + centers)
        nsmall = int(small.sum())
        return LevelGrids(u=u, v=v, vacuous_u=nsmall, vacuous_v=nsmall)
    tf = config.tailfn()
    u = _scale_level_lut(tf, s.n1, s.n2, float(config.tau))
    v = _scale_level_lut(tf, s.n1, s.n2, float(config.kappa))
    return LevelGrids(
        u=u,
        v=v,
        vacuous_u=int(np.isinf(u).sum()),
        vacuous_v=int(np.isinf(v).sum()),
    )


def _indicator_grid(field: FieldSample, mask: MissingMask, config: JointConfig) -> np.ndarray:
    pair = PrefixMaxPair.from_field(field, mask)
    grids = level_grids(config)
    return (pair.complete <= grids.u) & (pair.observed <= grids.v)


def asclt_from_field(field: FieldSample, mask: MissingMask, config: JointConfig) -> float:
    """Logarithmic average of scale-k joint-event indicators for a given path.

    Exposed separately from :func:`asclt_estimate` so the indicator algebra
    can be exercised on constructed fields.
    """
    s = config.shape
    ind = _indicator_grid(field, mask, config)
    weights = np.outer(1.0 / np.arange(1, s.n1 + 1), 1.0 / np.arange(1, s.n2 + 1))
    return float((weights * ind).sum() / (math.log(s.n1) * math.log(s.n2)))


def asclt_estimate(config: JointConfig, rng: Optional[np.random.Generator] = None) -> float:
    """Single-path almost-sure-limit estimate on the configured rectangle.

    Generates one field realization, one rate, one mask, then evaluates the
    joint event at every scale k through the running-maximum pair, at per-k
    levels (recalibrated for each cell count, cached across calls).
    """
    _check_asclt_shape(config)
    if rng is None:
        rng = derive_stream(config.seed, 0)
    field = config.sample_field(rng)
    lam = sample_lambda(config.lam, rng)
    mask = sample_mask(lam, config.shape, rng)
    return asclt_from_field(field, mask, config)


def asclt_trace(
    config: JointConfig,
    checkpoints,
    rng: Optional[np.random.Generator] = None,
):
    """One path's estimates at a ladder of prefix rectangles.

    Scale-k indicators depend only on the path inside {1..k1} x {1..k2}, so a
    single realization on the full rectangle carries its own convergence
    trace; returned as a list of (GridShape, estimate) pairs.
    """
    _check_asclt_shape(config)
    if rng is None:
        rng = derive_stream(config.seed, 0)
    field = config.sample_field(rng)
    lam = sample_lambda(config.lam, rng)
    mask = sample_mask(lam, config.shape, rng)
    s = config.shape
    ind = _indicator_grid(field, mask, config)
    weights = np.outer(1.0 / np.arange(1, s.n1 + 1), 1.0 / np.arange(1, s.n2 + 1))
    cum = np.cumsum(np.cumsum(weights * ind, axis=0), axis=1)
    out = []
    for c in checkpoints:
        if c.n1 > s.n1 or c.n2 > s.n2:
            raise ShapeMismatch(f"checkpoint {c} exceeds the path rectangle {s}")
        if c.n1 < 3 or c.n2 < 3:
            raise DegenerateShape(f"checkpoint {c} too small")
        est = float(cum[c.n1 - 1, c.n2 - 1] / (math.log(c.n1) * math.log(c.n2)))
        out.append((c, est))
    return out
