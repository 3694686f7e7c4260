import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats as sps

from frodo.stats import ecdf_gaps, kolmogorov_sf, ks_one_sided, ks_two_sided, summarize


def brute_force_gaps(a, b):
    """Exact rational ECDF differences at every point of the merged support."""
    def ecdf(sample, t):
        return Fraction(sum(v <= t for v in sample), len(sample))

    diffs = [ecdf(a, t) - ecdf(b, t) for t in sorted(set(a) | set(b))]
    return max(max(diffs), 0), max(max(-d for d in diffs), 0)


def test_identical_samples():
    a = [3.0, 1.0, 2.0, 2.0]
    r = ks_two_sided(a, a)
    assert (r.statistic, r.p_value) == (0.0, 1.0)
    r1 = ks_one_sided(a, a)
    assert (r1.statistic, r1.p_value) == (0.0, 1.0)


def test_disjoint_supports():
    assert ks_two_sided([1, 2, 3, 4], [10, 11, 12, 13]).statistic == 1.0


def test_interleaved_example():
    r = ks_two_sided([1, 2, 3, 4, 5], [1.5, 2.5, 3.5, 4.5, 5.5])
    assert r.statistic == pytest.approx(0.2, abs=1e-15)
    assert brute_force_gaps([1, 2, 3, 4, 5], [1.5, 2.5, 3.5, 4.5, 5.5]) == (Fraction(1, 5), 0)


def test_one_sided_small_cases_against_enumeration():
    for a, b in [([1, 2], [1, 2]), ([1, 2], [1.5, 2.5]), ([1.5, 2.5], [1, 2]), ([1, 2], [2, 3])]:
        dp, dm = brute_force_gaps(a, b)
        assert ks_one_sided(a, b, "smaller").statistic == pytest.approx(float(dp), abs=1e-15)
        assert ks_one_sided(a, b, "larger").statistic == pytest.approx(float(dm), abs=1e-15)


def test_shifted_far_below_gives_tiny_one_sided_p(rng):
    a = rng.normal(size=200)
    r = ks_one_sided(a, a + 100.0, "smaller")
    assert r.statistic == 1.0
    assert r.p_value == pytest.approx(math.exp(-2 * 100), rel=1e-12)
    assert ks_one_sided(a, a + 100.0, "larger").p_value == 1.0


samples = st.lists(st.integers(-20, 20), min_size=1, max_size=25)


@settings(max_examples=200, deadline=None)
@given(samples, samples)
def test_gaps_match_brute_force_with_ties(a, b):
    dp, dm = brute_force_gaps(a, b)
    got_p, got_m = ecdf_gaps(a, b)
    assert got_p == pytest.approx(float(dp), abs=1e-15)
    assert got_m == pytest.approx(float(dm), abs=1e-15)
    d = ks_two_sided(a, b).statistic
    assert 0.0 <= d <= 1.0
    assert d == max(got_p, got_m)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # scipy's own D=0 edge case
@settings(max_examples=100, deadline=None)
@given(samples, samples)
def test_two_sided_matches_scipy_asymptotic(a, b):
    ours = ks_two_sided(a, b)
    ref = sps.ks_2samp(a, b, method="asymp")
    assert ours.statistic == pytest.approx(ref.statistic, abs=1e-12)
    en = len(a) * len(b) / (len(a) + len(b))
    assert ours.p_value == pytest.approx(float(special.kolmogorov(math.sqrt(en) * ours.statistic)), abs=1e-12)


@pytest.mark.parametrize("t", [0.05, 0.2, 0.5, 0.8, 0.99, 1.0, 1.01, 1.5, 2.5, 5.0])
def test_kolmogorov_sf_matches_scipy(t):
    assert kolmogorov_sf(t) == pytest.approx(float(special.kolmogorov(t)), abs=1e-14)


def test_invariant_under_monotone_transform(rng):
    a, b = rng.exponential(size=60), rng.exponential(scale=1.5, size=45)
    base = ks_two_sided(a, b)
    for f in (np.log, np.sqrt, lambda v: 3 * v + 7, np.exp):
        r = ks_two_sided(f(a), f(b))
        assert r.statistic == base.statistic and r.p_value == base.p_value


def test_empty_inputs_raise():
    with pytest.raises(ValueError):
        ks_two_sided([], [1.0])
    with pytest.raises(ValueError):
        ks_one_sided([1.0], [])
    with pytest.raises(ValueError):
        ks_one_sided([1.0], [2.0], "sideways")
    with pytest.raises(ValueError):
        summarize([])


def test_summarize_examples():
    s = summarize([1, 2, 3])
    assert (s.mean, s.std, s.count, s.min, s.max) == (2.0, 1.0, 3, 1.0, 3.0)
    assert summarize([5]).std == 0.0
    assert summarize([427] * 9).std == 0.0
