import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mtebounds.moments import InputError
from mtebounds.propensity import (
    delta_p_interval,
    outer_propensity_interval,
    propensity_bounds,
    propensity_interval,
)
from mtebounds.simulation import population_moments, random_spec


def test_propensity_examples():
    assert propensity_interval(0.49, 0.0) == (0.49, 0.49)
    lo, hi = propensity_interval(0.49, 0.1)
    assert lo == pytest.approx(0.39) and hi == pytest.approx(0.59)
    lo, hi = propensity_interval(0.05, 0.15)
    assert lo == pytest.approx(0.10) and hi == pytest.approx(0.20)


def test_delta_examples():
    lo, hi = delta_p_interval(0.50, 0.15)
    assert (lo, hi) == (0.5, pytest.approx(0.8))
    assert delta_p_interval(0.11, 0.0) == (0.11, 0.11)
    lo, hi = delta_p_interval(0.11, 0.1)
    assert lo == 0.11 and hi == pytest.approx(0.31)


def test_second_upper_branch_binds_near_one():
    lo, hi = propensity_interval(0.95, 0.3)
    assert lo == pytest.approx(0.65) and hi == pytest.approx(0.75)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.floats(0, 0.499))
def test_interval_inside_unit(pd, a):
    lo, hi = propensity_interval(pd, a)
    assert 0 <= lo <= hi <= 1


def test_alpha_range_checked():
    with pytest.raises(InputError):
        propensity_interval(0.3, 0.5)
    with pytest.raises(InputError):
        delta_p_interval(0.3, -0.01)
    with pytest.raises(InputError):
        propensity_interval(1.2, 0.1)


def test_vectorised_matches_scalar():
    pd = np.linspace(0, 1, 11)
    lo, hi = propensity_interval(pd, 0.2)
    for i, x in enumerate(pd):
        assert (lo[i], hi[i]) == propensity_interval(float(x), 0.2)


def test_outer_interval_contains_tight():
    for pd in np.linspace(0.2, 0.8, 7):
        lo, hi = propensity_interval(pd, 0.15)
        olo, ohi = outer_propensity_interval(pd, 0.15)
        assert olo <= lo + 1e-15 and hi <= ohi + 1e-15


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.floats(0, 0.499), st.floats(0, 0.499))
def test_alpha_nesting(pd, a1, a2):
    a1, a2 = sorted((a1, a2))
    assume(a2 <= min(pd, 1 - pd))
    lo1, hi1 = propensity_interval(pd, a1)
    lo2, hi2 = propensity_interval(pd, a2)
    assert lo2 <= lo1 + 1e-15 and hi1 <= hi2 + 1e-15


def test_nesting_fails_outside_domain():
    # past alpha = pd the lower branch alpha - pd starts to grow again
    assert propensity_interval(0.1, 0.3)[0] > propensity_interval(0.1, 0.1)[0]


@settings(max_examples=300, deadline=None)
@given(st.floats(-1, 1), st.floats(0, 0.499), st.floats(0, 0.499))
def test_delta_alpha_nesting(dd, a1, a2):
    a1, a2 = sorted((a1, a2))
    assume(a2 <= (1 - dd) / 2)
    lo1, hi1 = delta_p_interval(dd, a1)
    lo2, hi2 = delta_p_interval(dd, a2)
    assert lo1 == lo2 and hi1 <= hi2 + 1e-15


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(-1, 1))
def test_alpha_zero_degenerate(pd, dd):
    assert propensity_interval(pd, 0.0) == (pd, pd)
    assert delta_p_interval(dd, 0.0)[0] == dd
    assert delta_p_interval(dd, 0.0)[1] == min(1.0, dd, 2 - dd)


def test_truth_inside_bounds_for_full_flip_specs():
    rng = np.random.default_rng(5)
    for _ in range(300):
        spec = random_spec(rng)
        m = population_moments(spec)
        pb = propensity_bounds(m, spec.alpha)
        for lab, p in spec.p_of_z.items():
            lo, hi = pb.interval(lab)
            assert lo - 1e-12 <= p <= hi + 1e-12
        for (hi_lab, lo_lab), (dlo, dhi) in pb.dp.items():
            dp = spec.p_of_z[hi_lab] - spec.p_of_z[lo_lab]
            assert dlo - 1e-12 <= dp <= dhi + 1e-12
