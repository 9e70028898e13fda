import math
from fractions import Fraction

import numpy as np
import pytest

from facetproc.correlation import (
    RhoQuery,
    rho_bounds,
    rho_decay_rate,
    rho_limit,
    rho_limit_from_counts,
    rho_mcmc,
    rho_series_full_order,
)
from facetproc.geometry import Facet
from facetproc.model import ModelParams
from facetproc.sampler import ChainConfig, run_chain


def _query(d, axes, b=1.0):
    # spread centers so nothing coincides
    return tuple(Facet(tuple((0.2 + 0.11 * i + 0.07 * j) % 1.0 * b for j in range(d)),
                       b, ax) for i, ax in enumerate(axes))


def test_rho_limit_values():
    assert rho_limit(3, 1, "distinct") == Fraction(1, 3)
    assert rho_limit(3, 2, "distinct") == Fraction(2, 3)
    assert rho_limit(3, 1, "two_groups", l=2) == Fraction(1, 3)
    assert rho_limit(4, 1, "two_groups", l=2) == Fraction(0, 1)  # l = d-2k
    assert rho_limit(3, 1, "overlapping_groups", l=0) == Fraction(0, 1)
    assert rho_limit(3, 1, "overlapping_groups", l=1) == Fraction(1, 3)
    # single-letter aliases stay usable
    assert rho_limit(3, 1, "a") == Fraction(1, 3)
    assert rho_limit(3, 1, "b", l=2) == rho_limit(3, 1, "two_groups", l=2)


def test_rho_limit_matches_counts_rule():
    for d in (2, 3, 4, 5):
        for k in range(1, d):
            counts = [1] * (d - k) + [0] * k
            assert rho_limit(d, k) == rho_limit_from_counts(counts)
    assert rho_limit_from_counts((2, 0, 0)) == Fraction(2, 3)
    assert rho_limit_from_counts((1, 1, 1)) == 0


def test_rho_limit_range_checks():
    with pytest.raises(ValueError):
        rho_limit(3, 3)
    with pytest.raises(ValueError):
        rho_limit(3, 1, "two_groups", l=3)  # above d-k
    with pytest.raises(ValueError):
        rho_limit(4, 1, "two_groups", l=1)  # below d-2k
    with pytest.raises(ValueError):
        rho_limit(3, 1, "overlapping_groups", l=2)
    with pytest.raises(ValueError):
        rho_limit(3, 1, "sideways")
    with pytest.raises(ValueError):
        rho_limit(3, 1, "distinct", l=1)


def test_series_is_one_without_interaction():
    p = ModelParams.special(3, (0.0, 0.0, 0.0), a=4.0)
    q = RhoQuery.from_model(p, _query(3, (0, 1)))
    res = rho_series_full_order(q)
    assert res.value == 1.0
    assert res.tail < 1e-8


def test_series_approaches_limits():
    lim2 = float(rho_limit(3, 1))   # two facets -> 1/3
    lim1 = float(rho_limit(3, 2))   # one facet  -> 2/3
    gap2, gap1 = [], []
    for a in (4.0, 8.0, 16.0):
        p = ModelParams.special(3, (0.0, 0.0, -1.0), a=a)
        r2 = rho_series_full_order(RhoQuery.from_model(p, _query(3, (0, 1))))
        r1 = rho_series_full_order(RhoQuery.from_model(p, _query(3, (0,))))
        gap2.append(abs(r2.value - lim2))
        gap1.append(abs(r1.value - lim1))
        assert r2.tail < 1e-8 and r1.tail < 1e-8
    assert gap2[0] > gap2[1] > gap2[2]
    assert gap1[0] > gap1[1] > gap1[2]
    assert gap2[-1] < 0.05 and gap1[-1] < 0.05
    # normalized pieces approach their own limits
    p = ModelParams.special(3, (0.0, 0.0, -1.0), a=16.0)
    res = rho_series_full_order(RhoQuery.from_model(p, _query(3, (0, 1))))
    assert abs(res.denominator - 3.0) < 0.1
    assert abs(res.numerator - 1.0) < 0.1


def test_series_symmetry():
    p = ModelParams.special(3, (0.0, 0.0, -0.7), a=5.0)
    f = _query(3, (0, 1))
    r_fwd = rho_series_full_order(RhoQuery.from_model(p, f))
    r_rev = rho_series_full_order(RhoQuery.from_model(p, f[::-1]))
    assert r_fwd.value == r_rev.value
    # relabeling the orientations only permutes the sums
    r_rot = rho_series_full_order(RhoQuery.from_model(p, _query(3, (1, 2))))
    assert r_rot.value == pytest.approx(r_fwd.value, rel=1e-10)


def test_series_monotone_truncation():
    p = ModelParams.special(3, (0.0, 0.0, -1.0), a=8.0)
    f = _query(3, (0, 1))
    prev_num = prev_den = 0.0
    prev_tail = math.inf
    for cap in (5, 10, 20, 40):
        res = rho_series_full_order(RhoQuery.from_model(p, f, n_cap=cap))
        assert res.numerator >= prev_num and res.denominator >= prev_den
        assert res.tail <= prev_tail
        prev_num, prev_den, prev_tail = res.numerator, res.denominator, res.tail
    assert res.n_max == 40


def test_series_agrees_with_mcmc():
    p = ModelParams.special(3, (0.0, 0.0, -1.0), a=3.0)
    f = _query(3, (0, 1))
    exact = rho_series_full_order(RhoQuery.from_model(p, f)).value
    samples, _ = run_chain(p, ChainConfig(n_steps=300_000, seed=101, burn_in=30_000,
                                          thin=90, keep_samples=True))
    est, se = rho_mcmc(f, samples, p)
    assert abs(est - exact) < 4 * se + 1e-3


def test_series_with_first_order_tilt():
    # nu_1 tilts the activity and scales rho by a constant; the chain
    # estimator sees the same physics without special-casing
    p = ModelParams.special(2, (0.3, -1.0), a=2.0)
    f = _query(2, (0, 1))
    exact = rho_series_full_order(RhoQuery.from_model(p, f)).value
    samples, _ = run_chain(p, ChainConfig(n_steps=200_000, seed=7, burn_in=20_000,
                                          thin=60, keep_samples=True))
    est, se = rho_mcmc(f, samples, p)
    assert abs(est - exact) < 4 * se + 1e-3


def test_series_rejects_lower_order_and_bad_queries():
    p = ModelParams.special(3, (0.0, -1.0, 0.0), a=2.0)
    with pytest.raises(ValueError, match="rho_bounds"):
        rho_series_full_order(RhoQuery.from_model(p, _query(3, (0, 1))))
    p_full = ModelParams.special(3, (0.0, 0.0, -1.0), a=2.0)
    with pytest.raises(ValueError, match="distinct orientations"):
        rho_series_full_order(RhoQuery.from_model(p_full, _query(3, (0, 0))))


def test_bound_certifies_mcmc():
    p = ModelParams.special(3, (0.0, -1.0, 0.0), a=2.0)
    f = _query(3, (0, 1))
    res = rho_bounds(RhoQuery.from_model(p, f))
    assert res.rate < 0
    samples, _ = run_chain(p, ChainConfig(n_steps=40_000, seed=19, burn_in=4_000,
                                          thin=18, keep_samples=True))
    est, se = rho_mcmc(f, samples, p)
    assert est - 3 * se <= res.bound


def test_bound_vanishes_for_hard_repulsion():
    p = ModelParams.special(3, (0.0, -50.0, 0.0), a=2.0)
    res = rho_bounds(RhoQuery.from_model(p, _query(3, (0, 1))))
    assert res.bound < 1e-8


def test_bound_trivial_without_coupling():
    q = RhoQuery(_query(3, (0, 1)), 2, 0.0, 2.0, 3, 1.0, 1.0)
    res = rho_bounds(q)
    assert res.bound == 1.0 and res.rate == 0.0


def test_bound_rejects_full_order():
    p = ModelParams.special(3, (0.0, 0.0, -1.0), a=2.0)
    with pytest.raises(ValueError, match="rho_series"):
        rho_bounds(RhoQuery.from_model(p, _query(3, (0, 1))))


def test_decay_rate():
    # capped search lands on both envelope exponents at the cap
    expect = 2 * math.exp(-10) + math.exp(-1) - 1
    assert rho_decay_rate(3, 1, 1.0, 3.0, -1.0) == pytest.approx(expect, rel=1e-12)
    assert rho_decay_rate(3, 1, 1.0, 3.0, -1e9) == pytest.approx(-1.0)
    assert rho_decay_rate(4, 2, 1.0, 4.0, -2.0) < 0
    with pytest.raises(ValueError):
        rho_decay_rate(3, 1, 1.0, 3.0, 0.0)
    with pytest.raises(ValueError):
        rho_decay_rate(3, 2, 1.0, 3.0, -1.0)


def test_rho_mcmc_poisson_is_one():
    p = ModelParams.special(2, (0.0, 0.0), a=4.0)
    samples, _ = run_chain(p, ChainConfig(n_steps=100_000, seed=3, burn_in=10_000,
                                          thin=30, keep_samples=True))
    est, se = rho_mcmc(_query(2, (0, 1)), samples, p)
    assert abs(est - 1.0) < 3 * se + 1e-3
    with pytest.raises(ValueError):
        rho_mcmc(_query(2, (0, 1)), [], p)


def test_query_validation():
    p = ModelParams.special(3, (0.0, 0.0, -1.0), a=2.0)
    f = _query(3, (0, 1))
    with pytest.raises(ValueError, match="distinct"):
        RhoQuery.from_model(p, (f[0], f[0]))
    with pytest.raises(ValueError):
        RhoQuery(f, 1, -1.0, 2.0, 3, 1.0, 1.0)   # order below 2
    with pytest.raises(ValueError):
        RhoQuery(f, 2, -1.0, 2.0, 3, 1.0, 1.0, n_cap=0)
    with pytest.raises(ValueError, match="half-extent"):
        RhoQuery((Facet((0.5, 0.5, 0.5), 0.4, 0),), 3, -1.0, 2.0, 3, 1.0, 1.0)
    two = ModelParams.special(3, (0.0, -0.5, -1.0), a=2.0)
    with pytest.raises(ValueError, match="more than one"):
        RhoQuery.from_model(two, f)
    assert RhoQuery.from_model(p, f).query_counts() == (1, 1, 0)
