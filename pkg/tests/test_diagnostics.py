import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from fieldmax.covgrid import CovarianceModel, GridShape
from fieldmax.diagnostics import (
    bvn_upper_orthant,
    comparison_bound,
    dprime_sum,
    dstar_bound,
    make_partition,
    tail_comparability,
)
from fieldmax.errors import (
    CorrelationOutOfRange,
    DegenerateShape,
    DegenerateTail,
    InvalidNesting,
    ShapeMismatch,
)
from fieldmax.fieldgen import TrendSpec, solve_center
from fieldmax.levels import TailFunction, gaussian_upper_tail, make_plan

INDEP = CovarianceModel.independent()
GEO = CovarianceModel.geometric(0.5)
TF = TailFunction.gaussian()


def bvn_quad_oracle(h, k, rho):
    """Iterated adaptive quadrature of the bivariate density over the orthant."""
    s = 1.0 - rho * rho
    norm_const = 1.0 / (2.0 * math.pi * math.sqrt(s))

    def density(y, x):
        return norm_const * math.exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * s))

    val, err = integrate.dblquad(density, h, 9.0, k, 9.0, epsabs=1e-12)
    return val


def test_bvn_arcsin_identity():
    for rho in (-0.9, -0.5, 0.0, 0.5, 0.9):
        exact = 0.25 + math.asin(rho) / (2.0 * math.pi)
        assert bvn_upper_orthant(0.0, 0.0, rho) == pytest.approx(exact, abs=1e-10)


def test_bvn_independence_factorization():
    for h in (-2, -1, 0, 1, 2):
        for k in (-2, -1, 0, 1, 2):
            assert bvn_upper_orthant(h, k, 0.0) == pytest.approx(
                norm.sf(h) * norm.sf(k), abs=1e-12
            )


def test_bvn_monotone_in_correlation():
    for h in (-1.0, 0.0, 1.5):
        vals = [bvn_upper_orthant(h, h, r) for r in np.linspace(-0.95, 0.95, 21)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_bvn_vs_quadrature_sample():
    rng = np.random.default_rng(2024)
    for _ in range(5):
        h, k = rng.uniform(-2, 2, size=2)
        rho = rng.uniform(-0.95, 0.95)
        assert bvn_upper_orthant(h, k, rho) == pytest.approx(
            bvn_quad_oracle(h, k, rho), abs=1e-8
        )


def test_bvn_correlation_domain():
    with pytest.raises(CorrelationOutOfRange):
        bvn_upper_orthant(0.0, 0.0, 1.0)
    with pytest.raises(CorrelationOutOfRange):
        bvn_upper_orthant(0.0, 0.0, -1.2)


def test_partition_schedules():
    p = make_partition(GridShape(100, 100))
    assert (p.k1, p.k2) == (10, 10)
    assert (p.m1, p.m2) == (4, 4)
    assert len(p.blocks) == 100
    assert p.block_shape == (10, 10)
    assert p.remainder_cells == 0

    q = make_partition(GridShape(9, 9))
    assert (q.k1, q.k2) == (3, 3)
    assert (q.m1, q.m2) == (2, 2)
    assert q.remainder_cells == 0


def test_partition_tiles_and_disjoint():
    for shape in (GridShape(100, 100), GridShape(10, 10), GridShape(37, 19)):
        p = make_partition(shape)
        cover = np.zeros((shape.n1, shape.n2), dtype=int)
        for b in p.blocks:
            cover[b.row_start : b.row_stop, b.col_start : b.col_stop] += 1
        assert cover.max() <= 1  # pairwise disjoint
        assert int(cover.sum()) == shape.ncells - p.remainder_cells
        if shape.n1 % p.k1 == 0 and shape.n2 % p.k2 == 0:
            assert p.remainder_cells == 0
            assert cover.min() == 1
    with pytest.raises(DegenerateShape):
        make_partition(GridShape(8, 20))


def test_partition_rates_shrink():
    r100 = make_partition(GridShape(100, 100)).rates
    r10k = make_partition(GridShape(10000, 10000)).rates
    assert r10k[0] < r100[0] and r10k[1] < r100[1]


def test_dprime_independent_value_zero_remainder_closed_form():
    shape = GridShape(100, 100)
    plan = make_plan(TF, shape, 1.0, 1.0)
    part = make_partition(shape)
    res = dprime_sum(INDEP, plan, part)
    assert res.value == 0.0
    # ordered pairs in a 10x10 block times k1 k2 times the squared tail
    tail_v = float(gaussian_upper_tail(plan.v))
    closed = 100 * (100 * 99) * tail_v**2
    assert res.remainder_bound == pytest.approx(closed, rel=1e-12)
    assert res.remainder_bound == pytest.approx(9.9e-3, rel=1e-3)


def test_dprime_vanishes_for_high_levels():
    shape = GridShape(64, 64)
    part = make_partition(shape)
    lo = make_plan(TF, shape, 1.0, 1.0)
    hi_level = lo.u + 2.0
    hi = type(lo)(shape=shape, u=hi_level, v=hi_level, tau=lo.tau, kappa=lo.kappa, tailfn=TF)
    a = dprime_sum(GEO, lo, part)
    b = dprime_sum(GEO, hi, part)
    assert b.value < a.value
    assert b.value > 0.0


def test_dprime_decreases_with_size():
    vals = []
    for n in (64, 256):
        shape = GridShape(n, n)
        plan = make_plan(TF, shape, 1.0, 1.0)
        vals.append(dprime_sum(GEO, plan, make_partition(shape)).value)
    assert vals[1] < vals[0]


def test_dprime_shape_mismatch():
    plan = make_plan(TF, GridShape(64, 64), 1.0, 2.0)
    with pytest.raises(ShapeMismatch):
        dprime_sum(GEO, plan, make_partition(GridShape(32, 32)))


def test_dprime_matches_direct_pair_sum_small_block():
    # brute-force oracle: enumerate ordered pairs of one block directly
    shape = GridShape(9, 9)
    plan = make_plan(TF, shape, 1.0, 1.5)
    part = make_partition(shape)
    w1, w2 = part.block_shape
    total = 0.0
    for i1 in range(w1):
        for i2 in range(w2):
            for j1 in range(w1):
                for j2 in range(w2):
                    if (i1, i2) == (j1, j2):
                        continue
                    rho = GEO.theta ** (abs(i1 - j1) + abs(i2 - j2))
                    total += bvn_upper_orthant(plan.v, plan.v, rho)
    res = dprime_sum(GEO, plan, part)
    assert res.value == pytest.approx(part.k1 * part.k2 * total, rel=1e-9)


def test_comparison_bound_independent_zero():
    for shape in (GridShape(16, 16), GridShape(30, 10)):
        plan = make_plan(TF, shape, 1.0, 2.0)
        res = comparison_bound(INDEP, plan)
        assert res.value == 0.0
        assert res.remainder_bound >= 0.0


def test_comparison_bound_termwise_monotone_in_theta():
    shape = GridShape(32, 32)
    plan = make_plan(TF, shape, 1.0, 1.0)
    lo = comparison_bound(CovarianceModel.geometric(0.25), plan).value
    hi = comparison_bound(CovarianceModel.geometric(0.5), plan).value
    assert 0.0 < lo < hi


def test_comparison_bound_matches_direct_sum():
    shape = GridShape(7, 5)
    plan = make_plan(TF, shape, 0.7, 1.1)
    total = 0.0
    for i1 in range(7):
        for i2 in range(5):
            for j1 in range(7):
                for j2 in range(5):
                    if (i1, i2) == (j1, j2):
                        continue
                    r = GEO.theta ** (abs(i1 - j1) + abs(i2 - j2))
                    total += r * math.exp(-plan.v**2 / (1.0 + r))
    assert comparison_bound(GEO, plan).value == pytest.approx(total, rel=1e-9)


def test_comparison_bound_decreases_with_size():
    vals = [
        comparison_bound(GEO, make_plan(TF, GridShape(n, n), 1.0, 1.0)).value
        for n in (16, 64)
    ]
    assert vals[1] < vals[0]


def test_dstar_independent_zero():
    inner, outer = GridShape(8, 8), GridShape(64, 64)
    res = dstar_bound(
        INDEP, inner, outer,
        make_plan(TF, inner, 1.0, 1.0), make_plan(TF, outer, 1.0, 1.0),
    )
    assert res.value == 0.0
    assert res.below_benchmark


def test_dstar_geometric_small_below_benchmark():
    model = CovarianceModel.geometric(0.3)
    inner, outer = GridShape(8, 8), GridShape(64, 64)
    res = dstar_bound(
        model, inner, outer,
        make_plan(TF, inner, 1.0, 1.0), make_plan(TF, outer, 1.0, 1.0),
        epsilon=0.1,
    )
    assert res.value > 0.0
    assert res.below_benchmark
    lnln = math.log(math.log(64))
    assert res.benchmark == pytest.approx((lnln * lnln) ** (-1.1), rel=1e-12)


def test_dstar_monotone_in_outer():
    model = CovarianceModel.geometric(0.3)
    inner = GridShape(8, 8)
    inner_plan = make_plan(TF, inner, 1.0, 1.0)
    vals = []
    for n in (32, 64, 128):
        outer = GridShape(n, n)
        vals.append(
            dstar_bound(model, inner, outer, inner_plan, make_plan(TF, outer, 1.0, 1.0)).value
        )
    assert vals[0] >= vals[1] >= vals[2]


def test_dstar_invalid_nesting():
    s = GridShape(16, 16)
    plan = make_plan(TF, s, 1.0, 1.0)
    with pytest.raises(InvalidNesting):
        dstar_bound(GEO, s, s, plan, plan)


def test_tail_comparability_constant():
    rep = tail_comparability([0.01] * 20)
    assert rep.ratio == 1.0 and rep.passed


def test_tail_comparability_two_regime_fails():
    shape = GridShape(64, 64)
    plan = make_plan(TF, shape, 1.0, 1.0)
    half = shape.ncells // 2
    tails = [float(gaussian_upper_tail(plan.u))] * half + [
        float(gaussian_upper_tail(plan.u + 3.0))
    ] * half
    rep = tail_comparability(tails)
    assert rep.ratio > 10.0
    assert not rep.passed


def test_tail_comparability_bounded_trend_passes():
    shape = GridShape(64, 64)
    trend = TrendSpec.sinusoid(0.2)
    center = solve_center(trend, shape).center
    m = trend.values(shape)
    plan = make_plan(TF, shape, 1.0, 1.0)
    tails = gaussian_upper_tail(plan.u + center - m).ravel()
    rep = tail_comparability(tails)
    assert rep.passed


def test_tail_comparability_degenerate():
    with pytest.raises(DegenerateTail):
        tail_comparability([0.5, 1.0])
    with pytest.raises(DegenerateTail):
        tail_comparability([])
