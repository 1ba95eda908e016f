#!/usr/bin/env python3
"""Monte Carlo law of the joint maxima versus the exact oracle and the limit.

For independent fields the joint probability has a closed form (condition on
the rate, every grid point factorizes), which pins the Monte Carlo machinery
to three decimal places; dependent fields then show the limit is still the
attractor, just with a finite-size gap.
"""

import time

from scipy.special import ndtr

from fieldmax import (
    CovarianceModel,
    GridShape,
    JointConfig,
    LambdaModel,
    TailFunction,
    calibrate_level,
    exact_iid_joint,
    mc_joint_probability,
)

shape = GridShape(32, 32)
n = shape.ncells
tau, kappa = 1.0, 2.0

print(f"=== independent field on {shape}, tau = {tau}, kappa = {kappa}, 20000 reps ===")
print(f"{'rate law':26s} {'MC estimate':>12s} {'exact':>9s} {'limit':>9s} {'|MC-exact|/SE':>14s}")
for lam in (LambdaModel.point(0.5), LambdaModel.twopoint(0.2, 0.8, 0.5), LambdaModel.beta(1, 1)):
    cfg = JointConfig(model=CovarianceModel.independent(), shape=shape, lam=lam,
                      tau=tau, kappa=kappa, replications=20_000, seed=101)
    rep = mc_joint_probability(cfg)
    exact = exact_iid_joint(lam, 1 - tau / n, 1 - kappa / n, n)
    z = abs(rep.estimate - exact) / rep.std_error
    print(f"{lam.tag():26s} {rep.estimate:12.4f} {exact:9.4f} {rep.target:9.4f} {z:14.2f}")

print("\n=== exact oracle converges to the limit as N grows (no simulation) ===")
lam = LambdaModel.beta(1, 1)
lim = None
for n_cells in (10**2, 10**4, 10**6):
    s = GridShape(1, n_cells)
    u = calibrate_level(TailFunction.gaussian(), s, tau)
    v = calibrate_level(TailFunction.gaussian(), s, kappa)
    exact = exact_iid_joint(lam, float(ndtr(u)), float(ndtr(v)), n_cells)
    cfg = JointConfig(model=CovarianceModel.independent(), shape=s, lam=lam,
                      tau=tau, kappa=kappa, replications=100, seed=0)
    lim = cfg.target()
    print(f"N = {n_cells:>9,d}: exact = {exact:.8f}, limit = {lim:.8f}, "
          f"gap = {abs(exact-lim):.2e} (~ (kappa+tau)^2/2N = {(kappa+tau)**2/(2*n_cells):.1e})")

print("\n=== dependent field: geometric(0.3) on 64x64, beta(1,1) rate ===")
t0 = time.time()
cfg = JointConfig(model=CovarianceModel.geometric(0.3), shape=GridShape(64, 64),
                  lam=LambdaModel.beta(1, 1), tau=tau, kappa=kappa,
                  replications=5_000, seed=202)
rep = mc_joint_probability(cfg)
print(f"estimate = {rep.estimate:.4f} vs limit = {rep.target:.4f} "
      f"(gap {rep.abs_error:.4f}, 3 SE = {3*rep.std_error:.4f}, {time.time()-t0:.0f}s)")
print("positive short-range correlation leaves the limit intact; only the")
print("finite-size approach slows down.")
