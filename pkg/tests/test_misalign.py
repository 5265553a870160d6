import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ofdmqkd.misalign import (
    MisalignmentModel,
    excess_mean,
    mean_abs,
    sample,
    tail_mean,
    tail_prob,
)


def test_mean_abs():
    assert mean_abs(MisalignmentModel(0.0)) == 0.0
    assert mean_abs(MisalignmentModel(2.0)) == 1.0
    assert mean_abs(MisalignmentModel(4.0)) == 2.0


def test_tail_prob():
    assert tail_prob(MisalignmentModel(2.0), 0.0) == 1.0
    assert tail_prob(MisalignmentModel(0.0), 0.0) == 1.0
    assert tail_prob(MisalignmentModel(2.0), 1.0) == 0.5
    assert tail_prob(MisalignmentModel(2.0), 3.0) == 0.0
    assert tail_prob(MisalignmentModel(0.0), 0.5) == 0.0


def test_tail_mean():
    assert tail_mean(MisalignmentModel(2.0), 0.0) == 1.0  # equals mean_abs
    assert tail_mean(MisalignmentModel(3.0), 1.0) == 2.0
    m = MisalignmentModel(2.0)
    assert tail_prob(m, 5.0) == 0.0
    assert tail_mean(m, 5.0) == 5.0  # empty-tail convention


def test_model_validation():
    with pytest.raises(ValueError):
        MisalignmentModel(-1.0)
    with pytest.raises(ValueError):
        MisalignmentModel(1.0, family="gaussian")


def test_sample_degenerate_and_deterministic():
    zeros = sample(MisalignmentModel(0.0), seed=7, n=5)
    assert np.all(zeros == 0.0) and len(zeros) == 5
    a = sample(MisalignmentModel(2.0), seed=123, n=1000)
    b = sample(MisalignmentModel(2.0), seed=123, n=1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample(MisalignmentModel(2.0), seed=124, n=1000))
    with pytest.raises(ValueError):
        sample(MisalignmentModel(1.0), seed=0, n=0)


def test_sample_law_of_large_numbers():
    a, n = 2.0, 10**6
    draws = sample(MisalignmentModel(a), seed=42, n=n)
    assert np.all(np.abs(draws) <= a)
    # |tau| ~ U(0, a): mean a/2, std a/sqrt(12)
    assert abs(np.mean(np.abs(draws)) - 1.0) <= 3.0 * a / math.sqrt(12 * n)


@given(st.floats(1e-6, 1e3), st.floats(0.0, 1.0))
def test_law_of_total_expectation(a, frac):
    """tail_prob*tail_mean + below_prob*E{|tau| | |tau| < x} == mean_abs."""
    model = MisalignmentModel(a)
    x = frac * a
    p_tail = tail_prob(model, x)
    below = (1.0 - p_tail) * (x / 2.0)  # uniform: E{|tau| | |tau| < x} = x/2
    total = p_tail * tail_mean(model, x) + below
    assert total == pytest.approx(mean_abs(model), rel=1e-12, abs=1e-15)


@given(st.floats(1e-3, 1e3), st.floats(0.0, 2.0))
def test_excess_mean_is_expected_positive_part(a, frac):
    model = MisalignmentModel(a)
    x = frac * a
    expected = (a - x) ** 2 / (2 * a) if x < a else 0.0
    assert excess_mean(model, x) == pytest.approx(expected, rel=1e-9, abs=1e-15)


def test_empirical_tail_statistics_match_closed_forms():
    a, n = 3.0, 10**6
    model = MisalignmentModel(a)
    draws = np.abs(sample(model, seed=99, n=n))
    for x in (0.0, a / 4, a / 2, 3 * a / 4):
        emp_prob = np.mean(draws >= x)
        assert emp_prob == pytest.approx(tail_prob(model, x), rel=0.01)
        emp_mean = draws[draws >= x].mean()
        assert emp_mean == pytest.approx(tail_mean(model, x), rel=0.01)
