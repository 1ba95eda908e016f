#!/usr/bin/env python3
"""Tail functions, level calibration, and the limiting mixture law.

Levels u and v are chosen so the summed exceedance probabilities over the
grid hit the targets tau and kappa exactly at every finite size; the joint
law of the complete and incomplete maxima then converges to
E[exp(-lambda kappa) exp(-(1-lambda) tau)].
"""

import math

from fieldmax import (
    GridShape,
    LambdaModel,
    TailFunction,
    calibrate_level,
    gumbel_joint_limit,
    gumbel_level,
    limit_value,
    normalizing_constants,
    tail,
)

print("=== the three marginal tails ===")
for tf, label in [
    (TailFunction.gaussian(), "gaussian"),
    (TailFunction.chi(2), "chi(2)"),
    (TailFunction.chi(4), "chi(4)"),
    (TailFunction.orderstat(3, 1), "orderstat(3,1)"),
    (TailFunction.orderstat(3, 3), "orderstat(3,3)"),
]:
    vals = "  ".join(f"P(>{u}) = {tail(tf, u):.5f}" for u in (0.0, 1.0, 2.0, 3.0))
    print(f"{label:15s} {vals}")

print("\n=== calibration: N * tail(u) = target, exactly, at every N ===")
for n in (100, 10_000, 1_000_000):
    shape = GridShape(1, n)
    u = calibrate_level(TailFunction.gaussian(), shape, 1.0)
    v = calibrate_level(TailFunction.gaussian(), shape, 2.0)
    print(f"N = {n:>9,d}: u = {u:.6f} (N tail = {n*tail(TailFunction.gaussian(), u):.12f}), "
          f"v = {v:.6f}")

print("\n=== Gumbel norming constants and the slow logarithmic rate ===")
for n in (10**4, 10**6, 10**8):
    a, b, a_star = normalizing_constants(n)
    u0 = gumbel_level(0.0, GridShape(1, n))
    achieved = n * tail(TailFunction.gaussian(), u0)
    print(f"N = {n:>10,d}: a = {a:.4f}, b = {b:.4f}, a* = {a_star:.4f}; "
          f"N tail(u_N(0)) = {achieved:.4f} -> 1 (slowly)")

print("\n=== the limiting mixture law ===")
tau, kappa = 1.0, 2.0
for lam in (LambdaModel.point(1.0), LambdaModel.point(0.5),
            LambdaModel.twopoint(0.2, 0.8, 0.5), LambdaModel.beta(1, 1)):
    print(f"{lam.tag():24s} E[e^(-lam*kappa) e^(-(1-lam)*tau)] = {limit_value(lam, kappa, tau):.6f}")
print(f"uniform-rate closed form    (e^-tau - e^-kappa)/(kappa - tau) = "
      f"{(math.exp(-tau) - math.exp(-kappa)) / (kappa - tau):.6f}")

print("\n=== Gumbel coordinates ===")
lam = LambdaModel.beta(1, 1)
for x, y in ((0.0, 0.0), (0.0, 1.0), (-1.0, 2.0)):
    print(f"(x, y) = ({x:+.0f}, {y:+.0f}): joint limit = {gumbel_joint_limit(lam, x, y):.6f}")
print(f"diagonal x = y = 0 recovers the Gumbel law exp(-1) = {math.exp(-1):.6f}")
