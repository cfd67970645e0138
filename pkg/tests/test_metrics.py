from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from picardnet.metrics import MeasureSpec, lq_error


def _const(c):
    return lambda pts: np.full(pts.shape[0], c)


def test_identical_functions_have_zero_error():
    m = MeasureSpec(d=3, T=1.0)
    f = lambda pts: np.sin(pts.sum(axis=1))  # noqa: E731
    assert lq_error(f, f, m) == (0.0, 0.0)


@pytest.mark.parametrize("q", [1.0, 2.0, 3.5, 8.0])
def test_unit_gap_on_probability_measure(q):
    est, se = lq_error(_const(1.0), _const(0.0), MeasureSpec(d=2, T=3.0), qnorm=q, n_samples=500)
    assert est == pytest.approx(1.0, abs=1e-15)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_lebesgue_normalization_scales_by_volume():
    m = MeasureSpec(d=2, T=2.0, lo=-1.0, hi=1.0, normalization="lebesgue")
    est, _ = lq_error(_const(1.0), _const(0.0), m, qnorm=2.0, n_samples=100)
    assert est == pytest.approx(np.sqrt(8.0))


def test_samples_lie_in_box_and_are_deterministic():
    m = MeasureSpec(d=4, T=0.5, lo=-1.0, hi=2.0)
    a = m.sample(1000, seed=3)
    assert np.array_equal(a, m.sample(1000, seed=3))
    assert np.all((a[:, 0] >= 0) & (a[:, 0] <= 0.5))
    assert np.all((a[:, 1:] >= -1.0) & (a[:, 1:] <= 2.0))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), amp=st.floats(0.1, 5.0))
def test_monotone_in_exponent(seed, amp):
    m = MeasureSpec(d=2, T=1.0)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(3)
    f = lambda pts: amp * np.tanh(pts @ w)  # noqa: E731
    e2, _ = lq_error(f, _const(0.0), m, qnorm=2.0, n_samples=2000, seed=seed)
    e4, _ = lq_error(f, _const(0.0), m, qnorm=4.0, n_samples=2000, seed=seed)
    assert e2 <= e4 + 1e-12


def test_jackknife_standard_error_tracks_spread():
    m = MeasureSpec(d=1, T=1.0)
    f = lambda pts: pts[:, 1]  # noqa: E731
    est_small, se_small = lq_error(f, _const(0.0), m, n_samples=1000)
    est_big, se_big = lq_error(f, _const(0.0), m, n_samples=16_000)
    assert est_big == pytest.approx(np.sqrt(1 / 3), abs=4 * se_big)
    assert se_big < se_small


def test_measure_validation():
    with pytest.raises(ValueError):
        MeasureSpec(d=1, T=1.0, lo=1.0, hi=0.0)
    with pytest.raises(ValueError):
        MeasureSpec(d=1, T=1.0, normalization="counting")
    with pytest.raises(ValueError):
        lq_error(_const(1.0), _const(0.0), MeasureSpec(d=1, T=1.0), qnorm=0.5)
