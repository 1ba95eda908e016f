"""Random-rate missing-observation machinery: rate laws, masks, observed fields.

The mechanism is a mixture: one observation rate lambda is drawn per
replication, then indicator bits are i.i.d. Bernoulli(lambda) given lambda.
Masks are independent of the field, and a fresh mask accompanies every field
replication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .covgrid import GridShape
from .errors import LambdaOutOfRange, ShapeMismatch
from .fieldgen import FieldSample

_LAMBDA_KINDS = ("point", "twopoint", "beta")


@dataclass(frozen=True)
class LambdaModel:
    """Law of the random observation rate lambda in [0, 1].

    point(p):             lambda = p surely
    twopoint(p1, p2, w):  lambda = p1 with probability w, else p2
    beta(a, b):           lambda ~ Beta(a, b)

    Config tags use exactly these spellings, e.g. "twopoint(0.2,0.8,0.5)".
    """

    kind: str
    p: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    w: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in _LAMBDA_KINDS:
            raise ValueError(f"unknown lambda model {self.kind!r}")
        if self.kind == "point" and not 0.0 <= self.p <= 1.0:
            raise LambdaOutOfRange(f"point rate must be in [0, 1], got {self.p}")
        if self.kind == "twopoint":
            for val, name in ((self.p1, "p1"), (self.p2, "p2"), (self.w, "w")):
                if not 0.0 <= val <= 1.0:
                    raise LambdaOutOfRange(f"{name} must be in [0, 1], got {val}")
        if self.kind == "beta" and (self.a <= 0.0 or self.b <= 0.0):
            raise ValueError(f"beta parameters must be > 0, got a={self.a}, b={self.b}")

    @classmethod
    def point(cls, p: float) -> "LambdaModel":
        return cls("point", p=float(p))

    @classmethod
    def twopoint(cls, p1: float, p2: float, w: float) -> "LambdaModel":
        return cls("twopoint", p1=float(p1), p2=float(p2), w=float(w))

    @classmethod
    def beta(cls, a: float, b: float) -> "LambdaModel":
        return cls("beta", a=float(a), b=float(b))

    def mean(self) -> float:
        if self.kind == "point":
            return self.p
        if self.kind == "twopoint":
            return self.w * self.p1 + (1.0 - self.w) * self.p2
        return self.a / (self.a + self.b)

    def expect(self, f, epsabs: float = 1e-12) -> float:
        """E[f(lambda)]: closed form for point/twopoint, adaptive quadrature
        (weighted for the beta endpoint behavior) with absolute error
        at most ``epsabs`` for the beta family."""
        if self.kind == "point":
            return f(self.p)
        if self.kind == "twopoint":
            return self.w * f(self.p1) + (1.0 - self.w) * f(self.p2)
        # weighted rule absorbs the x^(a-1) (1-x)^(b-1) endpoint behavior
        # exactly; the quadrature tolerance is scaled so the error bound
        # survives the division by B(a, b)
        bnorm = math.exp(special.betaln(self.a, self.b))
        val, _ = integrate.quad(
            f,
            0.0,
            1.0,
            weight="alg",
            wvar=(self.a - 1.0, self.b - 1.0),
            epsabs=epsabs * bnorm * 0.5,
            epsrel=1e-13,
            limit=200,
        )
        return val / bnorm

    def tag(self) -> str:
        if self.kind == "point":
            return f"point({self.p!r})"
        if self.kind == "twopoint":
            return f"twopoint({self.p1!r},{self.p2!r},{self.w!r})"
        return f"beta({self.a!r},{self.b!r})"


@dataclass(frozen=True)
class MissingMask:
    """Indicator field: bits[i] = True means grid point i is observed."""

    shape: GridShape
    bits: np.ndarray
    realized_lambda: float

    def __post_init__(self):
        if self.bits.shape != (self.shape.n1, self.shape.n2):
            raise ShapeMismatch(
                f"bits shaped {self.bits.shape} do not match grid {self.shape}"
            )


def sample_lambda(model: LambdaModel, rng: np.random.Generator) -> float:
    """One draw of the observation rate; deterministic for point models."""
    if model.kind == "point":
        return model.p
    if model.kind == "twopoint":
        return model.p1 if rng.random() < model.w else model.p2
    return float(rng.beta(model.a, model.b))


def sample_mask(lam: float, shape: GridShape, rng: np.random.Generator) -> MissingMask:
    """I.i.d. Bernoulli(lam) indicator bits over the grid, given the rate."""
    if not 0.0 <= lam <= 1.0:
        raise LambdaOutOfRange(f"rate must be in [0, 1], got {lam}")
    bits = rng.random((shape.n1, shape.n2)) < lam
    return MissingMask(shape=shape, bits=bits, realized_lambda=float(lam))


def observed_transform(field: FieldSample, mask: MissingMask) -> FieldSample:
    """Floor unobserved points at the lower support endpoint of the marginal.

    The floor (-inf for gaussian/orderstat/trended marginals, 0 for chi) acts
    as a pure order sentinel: it compares <= every finite level, and no
    arithmetic is ever performed on transformed values, only maxima and
    comparisons. The maximum of the transformed field over any index set is
    exactly the maximum over its observed subset (or the floor when that
    subset is empty).
    """
    if field.shape != mask.shape:
        raise ShapeMismatch(f"field on {field.shape} but mask on {mask.shape}")
    values = np.where(mask.bits, field.values, field.support_floor())
    return FieldSample(shape=field.shape, values=values, kind=field.kind, d=field.d, r=field.r)


def empirical_lambda(mask: MissingMask) -> float:
    """Observed fraction S_n / N of the grid."""
    return float(np.count_nonzero(mask.bits)) / mask.shape.ncells
