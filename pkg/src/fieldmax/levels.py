"""Analytic level machinery: tails, Gumbel constants, calibration, limit values.

Levels are constant across grid indices; per-index (nonstationary) levels
arise only through deterministic trends, which shift a constant level by the
trend center (see :mod:`fieldmax.fieldgen`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .covgrid import GridShape
from .errors import DegenerateSize, InvalidRank, InvalidTargets, OrderViolation, TargetOutOfRange

_TAIL_KINDS = ("gaussian", "chi", "orderstat")


@dataclass(frozen=True)
class TailFunction:
    """Marginal upper-tail probability of one of the three shipped field kinds.

    gaussian:        1 - Phi(u)
    chi(d):          P(chi_d > u) = Q(d/2, u^2/2), 1 for u < 0
    orderstat(d, r): P(at least r of d independent N(0,1) exceed u)
    """

    kind: str
    d: int = 1
    r: int = 1

    def __post_init__(self):
        if self.kind not in _TAIL_KINDS:
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.kind == "orderstat" and not 1 <= self.r <= self.d:
            raise InvalidRank(f"rank r={self.r} outside [1, d={self.d}]")

    @classmethod
    def gaussian(cls) -> "TailFunction":
        return cls("gaussian")

    @classmethod
    def chi(cls, d: int) -> "TailFunction":
        return cls("chi", d=int(d))

    @classmethod
    def orderstat(cls, d: int, r: int) -> "TailFunction":
        return cls("orderstat", d=int(d), r=int(r))

    def support_lower(self) -> float:
        """Infimum of the marginal support (the floor used for missing points)."""
        return 0.0 if self.kind == "chi" else -math.inf


def gaussian_upper_tail(u):
    """1 - Phi(u) through the complementary error function.

    The erfc formulation keeps the relative error at or below ~1e-14 across
    u in [-8, 8] where a direct 1 - Phi(u) would cancel catastrophically.
    """
    return 0.5 * special.erfc(np.asarray(u, dtype=np.float64) / math.sqrt(2.0))


def tail(tailfn: TailFunction, u):
    """Upper-tail probability of ``tailfn`` at level ``u`` (scalar or array)."""
    u = np.asarray(u, dtype=np.float64)
    if tailfn.kind == "gaussian":
        out = gaussian_upper_tail(u)
    elif tailfn.kind == "chi":
        out = np.where(u < 0, 1.0, special.gammaincc(tailfn.d / 2.0, np.square(u) / 2.0))
    else:
        q = gaussian_upper_tail(u)
        p = special.ndtr(u)
        out = np.zeros_like(q)
        # P(Bin(d, q) >= r), summed upward from j = r to avoid cancellation
        for j in range(tailfn.r, tailfn.d + 1):
            out = out + math.comb(tailfn.d, j) * q**j * p ** (tailfn.d - j)
        out = np.minimum(out, 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def normalizing_constants(ncells) -> tuple:
    """Gumbel norming constants (a, b, a_star) for a grid of ``ncells`` points.

    a      = sqrt(2 log N)
    b      = a - (log log N + log 4 pi) / (2 a)
    a_star = a - log log N / (2 a)

    ``ncells`` may be a float; the formulas are evaluated exactly as written.
    """
    n = float(ncells)
    if n < 3.0:
        raise DegenerateSize(f"need N >= 3 so log log N is defined and positive, got {ncells}")
    ln = math.log(n)
    a = math.sqrt(2.0 * ln)
    lnln = math.log(ln)
    b = a - (lnln + math.log(4.0 * math.pi)) / (2.0 * a)
    a_star = a - lnln / (2.0 * a)
    return a, b, a_star


def gumbel_level(x: float, shape: GridShape) -> float:
    """Affine Gumbel level u = x / a_N + b_N for the grid's cell count."""
    a, b, _ = normalizing_constants(shape.ncells)
    return x / a + b


def _calibration_bracket(tailfn: TailFunction) -> tuple:
    if tailfn.kind == "chi":
        return 0.0, 80.0
    return -45.0, 45.0


@lru_cache(maxsize=None)
def _calibrate_ncells(tailfn: TailFunction, ncells: int, target: float) -> float:
    n = float(ncells)
    f = lambda u: n * tail(tailfn, u) - target
    lo, hi = _calibration_bracket(tailfn)
    root = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    return float(root)


def calibrate_level(tailfn: TailFunction, shape: GridShape, target: float) -> float:
    """Level u with ``N * tail(u) = target`` for the grid's cell count N.

    Bracketed root search on the strictly decreasing tail; the achieved sum
    matches the target to a relative 1e-10 (verified by the caller's tests).

    Raises
    ------
    TargetOutOfRange
        When ``target`` is not in the open interval (0, N).
    """
    n = shape.ncells
    if not 0.0 < target < n:
        raise TargetOutOfRange(f"target must be in (0, {n}), got {target}")
    return _calibrate_ncells(tailfn, n, float(target))


@dataclass(frozen=True)
class LevelPlan:
    """Paired levels (u, v) with their exceedance-sum targets (tau, kappa).

    ``v <= u`` and ``kappa >= tau`` always; for calibrated plans additionally
    N*tail(u) = tau and N*tail(v) = kappa up to the calibration tolerance.
    """

    shape: GridShape
    u: float
    v: float
    tau: float
    kappa: float
    tailfn: TailFunction

    def __post_init__(self):
        if self.v > self.u:
            raise OrderViolation(f"lower level v={self.v} exceeds upper level u={self.u}")
        if not 0.0 < self.tau <= self.kappa:
            raise InvalidTargets(f"need kappa >= tau > 0, got tau={self.tau}, kappa={self.kappa}")


def make_plan(tailfn: TailFunction, shape: GridShape, tau: float, kappa: float) -> LevelPlan:
    """Calibrate both levels of a plan to exact finite-N exceedance targets."""
    if not 0.0 < tau <= kappa:
        raise InvalidTargets(f"need kappa >= tau > 0, got tau={tau}, kappa={kappa}")
    u = calibrate_level(tailfn, shape, tau)
    v = calibrate_level(tailfn, shape, kappa)
    return LevelPlan(shape=shape, u=u, v=v, tau=tau, kappa=kappa, tailfn=tailfn)


def limit_value(lam, kappa: float, tau: float) -> float:
    """E[exp(-lambda*kappa) * exp(-(1-lambda)*tau)] for an observation-rate law.

    ``lam`` is a :class:`fieldmax.missing.LambdaModel` (anything exposing
    ``expect``). Closed form for point and two-point rates; adaptive
    quadrature with absolute error <= 1e-10 for the beta family.
    """
    if not 0.0 < tau <= kappa:
        raise InvalidTargets(f"need kappa >= tau > 0, got tau={tau}, kappa={kappa}")
    return lam.expect(lambda l: math.exp(-l * kappa - (1.0 - l) * tau), epsabs=1e-12)


def gumbel_joint_limit(lam, x: float, y: float) -> float:
    """Joint Gumbel-coordinate limit E[exp(-lambda e^-x) exp(-(1-lambda) e^-y)].

    The incomplete-sample coordinate ``x`` may not exceed the complete-sample
    coordinate ``y``; equality gives the plain Gumbel law exp(-e^-x).
    """
    if x > y:
        raise OrderViolation(f"need x <= y, got x={x}, y={y}")
    return limit_value(lam, kappa=math.exp(-x), tau=math.exp(-y))
