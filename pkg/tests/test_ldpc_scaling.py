"""Tests for the offline/online LLR scaling factors."""

import numpy as np
import pytest

from onebit_idd.ldpc import ScalingState, offline_scaling_train, online_scaling
from onebit_idd.ldpc.scaling import (
    ALPHA_MAX,
    F_MAX,
    InsufficientSamplesError,
)


def ideal_llr_channel(rng, n, mu):
    """Consistent Gaussian LLR channel: L | s ~ N(s*mu, 2*mu)."""
    s = rng.choice([-1.0, 1.0], size=n)
    llr = rng.normal(s * mu, np.sqrt(2.0 * mu))
    return llr, s


class TestOfflineScaling:
    def test_true_llrs_give_unit_alpha(self):
        rng = np.random.default_rng(0)
        llr, s = ideal_llr_channel(rng, 200_000, mu=3.0)
        alpha = offline_scaling_train(llr, s)
        assert abs(alpha - 1.0) < 0.05

    def test_doubled_llrs_halve_alpha(self):
        rng = np.random.default_rng(1)
        llr, s = ideal_llr_channel(rng, 200_000, mu=3.0)
        a1 = offline_scaling_train(llr, s)
        a2 = offline_scaling_train(2.0 * llr, s)
        np.testing.assert_allclose(a2, a1 / 2.0, rtol=1e-9)

    def test_overconfident_llrs_shrink(self):
        rng = np.random.default_rng(2)
        llr, s = ideal_llr_channel(rng, 100_000, mu=2.0)
        alpha = offline_scaling_train(4.0 * llr, s)
        assert 0.15 < alpha < 0.35   # true slope is 0.25

    def test_separated_histogram_hits_upper_clip(self):
        rng = np.random.default_rng(3)
        s = rng.choice([-1.0, 1.0], size=20_000)
        llr = s * rng.uniform(5.0, 6.0, size=s.size)  # fully separated
        assert offline_scaling_train(llr, s) == ALPHA_MAX

    def test_insufficient_samples(self):
        with pytest.raises(InsufficientSamplesError):
            offline_scaling_train(np.zeros(100), np.ones(100))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            offline_scaling_train(np.zeros(20_000), np.ones(19_999))


class TestOnlineScaling:
    def test_matched_means_give_unity(self):
        state = ScalingState(alpha=1.3, lbar_ref=1.3 * 2.0)
        assert online_scaling(state, 1.3 * 2.0) == 1.0

    def test_arithmetic(self):
        state = ScalingState(alpha=1.0, lbar_ref=2.0)
        assert online_scaling(state, 4.0) == 0.5

    def test_zero_denominator_guard(self):
        state = ScalingState(alpha=1.0, lbar_ref=2.0)
        assert online_scaling(state, 0.0) == F_MAX
        assert online_scaling(state, 1e-9) == F_MAX
