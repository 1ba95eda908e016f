import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import ndtr

from fieldmax.covgrid import CovarianceModel, GridShape
from fieldmax.errors import (
    DegenerateShape,
    InvalidTargets,
    OrderViolation,
    RatioBoundExceeded,
    ShapeMismatch,
)
from fieldmax.estimators import (
    JointConfig,
    PrefixMaxPair,
    asclt_estimate,
    asclt_from_field,
    asclt_trace,
    exact_iid_joint,
    joint_event,
    level_grids,
    mc_joint_probability,
    prefix_max,
    weight_normalizer,
)
from fieldmax.fieldgen import FieldSample, TrendSpec, sample_gaussian_field
from fieldmax.levels import TailFunction, make_plan
from fieldmax.missing import LambdaModel, MissingMask, sample_lambda, sample_mask
from fieldmax.streams import derive_stream

INDEP = CovarianceModel.independent()
GEO = CovarianceModel.geometric(0.5)


def brute_prefix_max(values):
    n1, n2 = values.shape
    out = np.empty_like(values)
    for i in range(n1):
        for j in range(n2):
            out[i, j] = values[: i + 1, : j + 1].max()
    return out


def test_prefix_max_hand_example():
    np.testing.assert_array_equal(
        prefix_max(np.array([[1.0, 3.0], [2.0, 0.0]])), [[1.0, 3.0], [2.0, 3.0]]
    )


def test_prefix_max_constant():
    np.testing.assert_array_equal(prefix_max(np.full((4, 5), 2.5)), np.full((4, 5), 2.5))


def test_prefix_max_vs_bruteforce_8x8():
    values = derive_stream(0, 0).standard_normal((8, 8))
    np.testing.assert_array_equal(prefix_max(values), brute_prefix_max(values))


@given(arrays(np.float64, (5, 6), elements=st.floats(-100, 100)))
@settings(max_examples=60)
def test_prefix_max_property(values):
    np.testing.assert_array_equal(prefix_max(values), brute_prefix_max(values))


def test_prefix_pair_ordering():
    shape = GridShape(9, 9)
    field = sample_gaussian_field(GEO, shape, derive_stream(1, 0))
    mask = sample_mask(0.5, shape, derive_stream(1, 1))
    pair = PrefixMaxPair.from_field(field, mask)
    assert np.all(pair.observed <= pair.complete)
    assert np.all(np.diff(pair.complete, axis=0) >= 0)
    assert np.all(np.diff(pair.complete, axis=1) >= 0)


def _plan(shape, tau=1.0, kappa=2.0):
    return make_plan(TailFunction.gaussian(), shape, tau, kappa)


def test_joint_event_hand_case():
    shape = GridShape(2, 2)
    field = FieldSample(shape=shape, values=np.array([[0.1, 3.0], [-1.0, 0.0]]), kind="gaussian")
    bits = np.array([[True, False], [False, False]])
    mask = MissingMask(shape=shape, bits=bits, realized_lambda=0.25)
    plan = make_plan(TailFunction.gaussian(), shape, 0.5, 1.0)
    plan_mod = type(plan)(shape=shape, u=2.5, v=1.0, tau=plan.tau, kappa=plan.kappa, tailfn=plan.tailfn)
    assert not joint_event(field, mask, plan_mod)  # complete max 3.0 > 2.5
    higher = type(plan)(shape=shape, u=3.5, v=1.0, tau=plan.tau, kappa=plan.kappa, tailfn=plan.tailfn)
    assert joint_event(field, mask, higher)  # observed value 0.1 <= 1.0


def test_joint_event_all_zero_mask_reduces_to_complete_leg():
    shape = GridShape(6, 6)
    field = sample_gaussian_field(INDEP, shape, derive_stream(2, 0))
    mask = sample_mask(0.0, shape, derive_stream(2, 1))
    plan = _plan(shape)
    assert joint_event(field, mask, plan) == (field.values.max() <= plan.u)


def test_joint_event_all_one_mask_equal_levels():
    shape = GridShape(6, 6)
    field = sample_gaussian_field(INDEP, shape, derive_stream(3, 0))
    mask = sample_mask(1.0, shape, derive_stream(3, 1))
    plan = make_plan(TailFunction.gaussian(), shape, 1.5, 1.5)
    assert joint_event(field, mask, plan) == (field.values.max() <= plan.u)


def test_joint_event_shape_mismatch():
    field = sample_gaussian_field(INDEP, GridShape(4, 4), derive_stream(4, 0))
    mask = sample_mask(0.5, GridShape(4, 5), derive_stream(4, 1))
    with pytest.raises(ShapeMismatch):
        joint_event(field, mask, _plan(GridShape(4, 4)))


@given(bump=st.floats(0.0, 3.0))
@settings(max_examples=40)
def test_joint_event_monotone_in_levels(bump):
    shape = GridShape(5, 5)
    field = sample_gaussian_field(INDEP, shape, derive_stream(5, 0))
    mask = sample_mask(0.6, shape, derive_stream(5, 1))
    base = _plan(shape)
    raised = type(base)(
        shape=shape, u=base.u + bump, v=base.v + bump,
        tau=base.tau, kappa=base.kappa, tailfn=base.tailfn,
    )
    if joint_event(field, mask, base):
        assert joint_event(field, mask, raised)


def test_exact_iid_trivial_sizes():
    assert exact_iid_joint(LambdaModel.point(1.0), 0.93, 0.71, 1) == pytest.approx(0.71)
    assert exact_iid_joint(LambdaModel.point(0.0), 0.9, 0.8, 2) == pytest.approx(0.81)
    # brute-force enumeration over the two rate arms
    val = exact_iid_joint(LambdaModel.twopoint(0.0, 1.0, 0.5), 0.9, 0.8, 3)
    assert val == pytest.approx(0.5 * 0.8**3 + 0.5 * 0.9**3, abs=1e-15)
    assert val == pytest.approx(0.6205, abs=1e-12)


def test_exact_iid_beta_vs_grid():
    grid = (np.arange(1_000_000) + 0.5) / 1_000_000
    phi_u, phi_v, n = 0.999, 0.997, 400
    oracle = float(((grid * phi_v + (1 - grid) * phi_u) ** n).mean())
    assert exact_iid_joint(LambdaModel.beta(1, 1), phi_u, phi_v, n) == pytest.approx(
        oracle, abs=1e-9
    )


def test_exact_iid_order_violation():
    with pytest.raises(OrderViolation):
        exact_iid_joint(LambdaModel.point(0.5), 0.8, 0.9, 10)


def _config(**kw):
    base = dict(
        model=INDEP,
        shape=GridShape(8, 8),
        lam=LambdaModel.point(0.7),
        tau=1.0,
        kappa=2.0,
        replications=4000,
        seed=11,
    )
    base.update(kw)
    return JointConfig(**base)


def test_mc_matches_exact_iid_point():
    cfg = _config()
    rep = mc_joint_probability(cfg)
    n = cfg.shape.ncells
    exact = exact_iid_joint(cfg.lam, 1.0 - 1.0 / n, 1.0 - 2.0 / n, n)
    assert abs(rep.estimate - exact) < 3 * rep.std_error
    assert rep.std_error == pytest.approx(
        math.sqrt(rep.estimate * (1 - rep.estimate) / cfg.replications)
    )


def test_mc_matches_exact_iid_beta():
    cfg = _config(lam=LambdaModel.beta(1, 1), seed=12)
    rep = mc_joint_probability(cfg)
    n = cfg.shape.ncells
    exact = exact_iid_joint(cfg.lam, 1.0 - 1.0 / n, 1.0 - 2.0 / n, n)
    assert abs(rep.estimate - exact) < 3 * rep.std_error


def test_mc_chi_field_matches_oracle():
    # the factorized oracle holds for any marginal: per-point probability is
    # lam*F(v) + (1-lam)*F(u) with F the chi distribution function
    cfg = _config(field="chi", d=2, shape=GridShape(12, 12), seed=17)
    rep = mc_joint_probability(cfg)
    tf = TailFunction.chi(2)
    n = cfg.shape.ncells
    plan = cfg.plan()
    from fieldmax.levels import tail as tail_fn

    exact = exact_iid_joint(
        cfg.lam, 1.0 - float(tail_fn(tf, plan.u)), 1.0 - float(tail_fn(tf, plan.v)), n
    )
    assert abs(rep.estimate - exact) < 3 * rep.std_error


def test_mc_orderstat_field_matches_oracle():
    cfg = _config(field="orderstat", d=3, r=2, shape=GridShape(12, 12),
                  lam=LambdaModel.beta(2, 2), seed=18)
    rep = mc_joint_probability(cfg)
    tf = TailFunction.orderstat(3, 2)
    n = cfg.shape.ncells
    plan = cfg.plan()
    from fieldmax.levels import tail as tail_fn

    exact = exact_iid_joint(
        cfg.lam, 1.0 - float(tail_fn(tf, plan.u)), 1.0 - float(tail_fn(tf, plan.v)), n
    )
    assert abs(rep.estimate - exact) < 3 * rep.std_error


def test_mc_rate_zero_ignores_lower_level():
    # with nothing observed the event is the complete-maximum law alone
    cfg = _config(lam=LambdaModel.point(0.0), seed=13)
    rep = mc_joint_probability(cfg)
    n = cfg.shape.ncells
    exact = (1.0 - 1.0 / n) ** n
    assert abs(rep.estimate - exact) < 3 * rep.std_error


def test_mc_complete_leg_consistency_all_observed():
    # rate one and equal levels: the estimate is the empirical law of the
    # complete maximum; recompute it from the same streams independently
    cfg = _config(lam=LambdaModel.point(1.0), tau=1.5, kappa=1.5, replications=600, seed=14)
    rep = mc_joint_probability(cfg, keep_outcomes=True)
    plan = cfg.plan()
    manual = np.zeros(cfg.replications, dtype=bool)
    for r in range(cfg.replications):
        rng = derive_stream(cfg.seed, r)
        values = rng.standard_normal((8, 8))
        manual[r] = values.max() <= plan.u
    np.testing.assert_array_equal(rep.outcomes, manual)


def test_mc_reproducible_and_prefix_invariant():
    cfg300 = _config(replications=300, seed=21)
    cfg600 = _config(replications=600, seed=21)
    a = mc_joint_probability(cfg300, keep_outcomes=True)
    b = mc_joint_probability(cfg600, keep_outcomes=True)
    np.testing.assert_array_equal(a.outcomes, b.outcomes[:300])
    again = mc_joint_probability(cfg300, keep_outcomes=True)
    assert again.estimate == a.estimate
    np.testing.assert_array_equal(again.outcomes, a.outcomes)


def test_mc_requires_replications():
    with pytest.raises(InvalidTargets):
        mc_joint_probability(_config(replications=50))


def test_config_validation():
    with pytest.raises(InvalidTargets):
        _config(tau=None, kappa=None)
    with pytest.raises(InvalidTargets):
        _config(x=0.0, y=1.0)  # both routes
    with pytest.raises(InvalidTargets):
        _config(tau=2.0, kappa=1.0)
    with pytest.raises(OrderViolation):
        _config(tau=None, kappa=None, x=1.0, y=0.0)
    with pytest.raises(InvalidTargets):
        _config(field="chi", d=2, tau=None, kappa=None, x=0.0, y=1.0)
    cfg = _config(tau=None, kappa=None, x=0.0, y=1.0)
    assert cfg.targets() == (math.exp(-1.0), 1.0)


def test_weight_normalizer_small():
    ws, lp = weight_normalizer(GridShape(2, 2))
    assert ws == pytest.approx(2.25, abs=1e-15)
    assert lp == pytest.approx(math.log(2) ** 2)
    with pytest.raises(DegenerateShape):
        weight_normalizer(GridShape(1, 1))


def test_weight_normalizer_large_matches_asymptotic():
    # independent oracle: H(n) = log n + gamma + 1/(2n) - 1/(12 n^2) + O(n^-4)
    n = 10**4
    ws, lp = weight_normalizer(GridShape(n, n))
    gamma = 0.5772156649015328606
    h = math.log(n) + gamma + 1.0 / (2 * n) - 1.0 / (12 * n**2)
    assert ws == pytest.approx(h * h, rel=1e-12)
    assert ws / lp == pytest.approx((h / math.log(n)) ** 2, rel=1e-12)
    assert ws / lp == pytest.approx(1.129, abs=2e-3)


def _asclt_config(**kw):
    base = dict(
        model=INDEP,
        shape=GridShape(16, 16),
        lam=LambdaModel.point(0.5),
        tau=1.0,
        kappa=2.0,
        seed=31,
    )
    base.update(kw)
    return JointConfig(**base)


def test_asclt_low_shift_hits_every_scale():
    cfg = _asclt_config()
    rng = derive_stream(31, 0)
    f = sample_gaussian_field(cfg.model, cfg.shape, rng)
    lam = sample_lambda(cfg.lam, rng)
    mask = sample_mask(lam, cfg.shape, rng)
    low = FieldSample(shape=f.shape, values=f.values - 100.0, kind="gaussian")
    ws, lp = weight_normalizer(cfg.shape)
    assert asclt_from_field(low, mask, cfg) == pytest.approx(ws / lp, rel=1e-12)


def test_asclt_high_shift_leaves_only_vacuous_scales():
    # scales whose cell count cannot carry the target keep level +inf and
    # stay on; every calibratable scale drops out under a +100 shift
    cfg = _asclt_config()
    rng = derive_stream(31, 0)
    f = sample_gaussian_field(cfg.model, cfg.shape, rng)
    lam = sample_lambda(cfg.lam, rng)
    mask = sample_mask(lam, cfg.shape, rng)
    high = FieldSample(shape=f.shape, values=f.values + 100.0, kind="gaussian")
    grids = level_grids(cfg)
    vac = np.isinf(grids.u) & np.isinf(grids.v)
    k1 = np.arange(1, 17)[:, None]
    k2 = np.arange(1, 17)[None, :]
    expected = float((vac / (k1 * k2)).sum()) / (math.log(16) ** 2)
    got = asclt_from_field(high, mask, cfg)
    assert got == pytest.approx(expected, rel=1e-12)
    # with tau = 1, kappa = 2 the only doubly vacuous scale is (1,1)
    assert expected == pytest.approx(1.0 / math.log(16) ** 2, rel=1e-12)


def test_asclt_indicator_grid_vs_bruteforce():
    cfg = _asclt_config(shape=GridShape(6, 6), model=GEO, lam=LambdaModel.beta(2, 2), seed=33)
    rng = derive_stream(33, 0)
    field = cfg.sample_field(rng)
    lam = sample_lambda(cfg.lam, rng)
    mask = sample_mask(lam, cfg.shape, rng)
    grids = level_grids(cfg)
    total = 0.0
    for k1 in range(1, 7):
        for k2 in range(1, 7):
            sub = field.values[:k1, :k2]
            floored = np.where(mask.bits[:k1, :k2], sub, -math.inf)
            ok = sub.max() <= grids.u[k1 - 1, k2 - 1] and floored.max() <= grids.v[k1 - 1, k2 - 1]
            total += ok / (k1 * k2)
    expected = total / (math.log(6) ** 2)
    assert asclt_from_field(field, mask, cfg) == pytest.approx(expected, rel=1e-12)


def test_asclt_reproducible_and_bounded():
    cfg = _asclt_config(seed=35)
    a = asclt_estimate(cfg)
    b = asclt_estimate(cfg)
    assert a == b
    ws, lp = weight_normalizer(cfg.shape)
    assert 0.0 <= a <= ws / lp


def test_asclt_ratio_bound():
    with pytest.raises(RatioBoundExceeded):
        asclt_estimate(_asclt_config(shape=GridShape(3, 30)))
    with pytest.raises(DegenerateShape):
        asclt_estimate(_asclt_config(shape=GridShape(2, 4)))


def test_asclt_expectation_identity_lite():
    # mean over independent paths matches the exact per-scale oracle
    cfg = _asclt_config(shape=GridShape(8, 8), seed=37)
    grids = level_grids(cfg)
    oracle = 0.0
    for k1 in range(1, 9):
        for k2 in range(1, 9):
            n = k1 * k2
            u, v = grids.u[k1 - 1, k2 - 1], grids.v[k1 - 1, k2 - 1]
            phi_u = 1.0 if math.isinf(u) else float(ndtr(u))
            phi_v_raw = 1.0 if math.isinf(v) else float(ndtr(v))
            # a vacuous lower level leaves {X <= u} as the per-point event
            oracle += exact_iid_joint(cfg.lam, phi_u, min(phi_v_raw, phi_u), n) / n
    oracle /= math.log(8) ** 2
    paths = 400
    ests = np.array([asclt_estimate(cfg, rng=derive_stream(37, p)) for p in range(paths)])
    se = ests.std(ddof=1) / math.sqrt(paths)
    assert abs(ests.mean() - oracle) < 4 * se


def test_asclt_trace_prefix_consistency():
    cfg = _asclt_config(shape=GridShape(32, 32), seed=39)
    trace = asclt_trace(cfg, [GridShape(8, 8), GridShape(16, 16), GridShape(32, 32)])
    assert [s.ncells for s, _ in trace] == [64, 256, 1024]
    # the final checkpoint equals the plain estimate from the same stream
    assert trace[-1][1] == pytest.approx(asclt_estimate(cfg), rel=1e-12)
    with pytest.raises(ShapeMismatch):
        asclt_trace(cfg, [GridShape(64, 64)])


def test_trended_event_uses_shifted_levels():
    shape = GridShape(16, 16)
    trend = TrendSpec.constant(0.4)
    cfg = _asclt_config(
        shape=shape, tau=None, kappa=None, x=0.0, y=1.0, trend=trend, seed=41
    )
    rng = derive_stream(41, 0)
    field = cfg.sample_field(rng)
    assert field.kind == "trended"
    lam = sample_lambda(cfg.lam, rng)
    mask = sample_mask(lam, shape, rng)
    plan = cfg.plan()
    got = joint_event(field, mask, plan, trend=trend)
    center = trend.center_for(shape)
    assert center == pytest.approx(0.4)
    ok_complete = field.values.max() <= plan.u + center
    floored = np.where(mask.bits, field.values, -math.inf)
    ok_observed = floored.max() <= plan.v + center
    assert got == (ok_complete and ok_observed)
