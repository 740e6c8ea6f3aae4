"""Tests for the quantization-aware soft-PIC detector."""

import numpy as np
import pytest

from onebit_idd.channel import QPSK, generate_channel, soft_symbols, transmit
from onebit_idd.detector import (
    SQRT_2_OVER_PI,
    DetectorWorkspace,
    SoftSymbolBelief,
    build_filter,
    build_workspace,
    conditional_moments,
    detect_frame,
    detector_llr,
    filter_output,
    hermitian_solve,
    mmse_baseline_filter,
    pic_covariance,
    soft_pic,
)
from onebit_idd.quantization import quantize_1bit


def random_case(seed, m=6, k=3):
    rng = np.random.default_rng(seed)
    sigma_n2 = rng.uniform(0.2, 2.0)
    ch = generate_channel(m, k, rng, sigma_n2)
    return ch.h, sigma_n2, rng


class TestWorkspace:
    def test_cy_structure(self):
        h, sigma_n2, _ = random_case(0)
        ws = build_workspace(h, sigma_n2)
        np.testing.assert_allclose(
            ws.c_y, h @ h.conj().T + sigma_n2 * np.eye(6), atol=1e-12
        )
        np.testing.assert_allclose(ws.c_y, ws.c_y.conj().T)

    def test_cyq_unit_diagonal(self):
        h, sigma_n2, _ = random_case(1)
        ws = build_workspace(h, sigma_n2)
        assert np.all(np.diagonal(ws.c_yq) == 1.0)

    def test_cross_column_form(self):
        h, sigma_n2, _ = random_case(2)
        ws = build_workspace(h, sigma_n2)
        k = 1
        expected = SQRT_2_OVER_PI * ws.k_gain * h[:, k]
        np.testing.assert_allclose(ws.cross[:, k], expected)


class TestBuildFilter:
    def test_scalar_closed_form(self):
        """M=K=1, h=1, unit powers: w = 1/sqrt(pi) exactly."""
        h = np.array([[1.0 + 0j]])
        w, c = build_filter(h, 1.0, SoftSymbolBelief.none(1), 0)
        assert abs(w[0] - 1.0 / np.sqrt(np.pi)) < 1e-12
        assert abs(c[0] - 1.0 / np.sqrt(np.pi)) < 1e-12

    def test_no_prior_collapses_to_cyq(self):
        h, sigma_n2, _ = random_case(3)
        ws = build_workspace(h, sigma_n2)
        cov = pic_covariance(ws, np.zeros(3), 1)
        np.testing.assert_array_equal(cov, ws.c_yq)

    def test_own_entry_ignored(self):
        h, sigma_n2, _ = random_case(4)
        ws = build_workspace(h, sigma_n2)
        q = np.array([0.0, 0.7, 0.0])
        np.testing.assert_array_equal(
            pic_covariance(ws, q, 1), ws.c_yq
        )

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_dense_inverse_oracle(self, seed):
        h, sigma_n2, rng = random_case(seed, m=8, k=4)
        ws = build_workspace(h, sigma_n2)
        belief = SoftSymbolBelief.from_llrs(rng.normal(0, 2, (4, 2)))
        for k in range(4):
            w, c = build_filter(h, sigma_n2, belief, k, workspace=ws)
            cov = pic_covariance(ws, belief.q, k)
            w_oracle = np.linalg.inv(cov) @ c
            err = np.linalg.norm(w - w_oracle) / np.linalg.norm(w_oracle)
            assert err < 1e-9

    def test_eta2_range_after_clamp(self):
        for seed in range(10):
            h, sigma_n2, _ = random_case(seed, m=8, k=4)
            w, c = build_filter(h, sigma_n2, SoftSymbolBelief.none(4), 2)
            _, eta2 = conditional_moments(w, c, h, 2,
                                          SoftSymbolBelief.none(4), 1.0)
            assert 0.0 < eta2 <= 0.25


class TestHermitianSolve:
    def test_agrees_with_inverse_on_conditioned_systems(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            cov = a @ a.conj().T + 1e-3 * np.eye(6)
            assert np.linalg.cond(cov) < 1e6
            b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            x = hermitian_solve(cov, b)
            x_oracle = np.linalg.inv(cov) @ b
            assert np.linalg.norm(x - x_oracle) / np.linalg.norm(x_oracle) \
                < 1e-9

    def test_regularizes_singular_system(self):
        cov = np.diag([1.0, 0.0]).astype(complex)
        x = hermitian_solve(cov, np.array([1.0, 0.0], dtype=complex))
        assert np.isfinite(x).all()


class TestSoftPic:
    def test_no_prior_passthrough(self):
        h, sigma_n2, rng = random_case(5)
        y = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        out = soft_pic(y, h, SoftSymbolBelief.none(3), 0)
        np.testing.assert_array_equal(out, y)

    def test_exact_cancellation_two_users(self):
        rng = np.random.default_rng(6)
        h = generate_channel(4, 2, rng).h
        x = np.array([0.3 + 0.1j, -0.5 + 0.6j])
        y = h @ x
        belief = SoftSymbolBelief(x_tilde=x.copy(), q=np.abs(x) ** 2)
        out = soft_pic(y, h, belief, 0)
        np.testing.assert_allclose(out, h[:, 0] * x[0], atol=1e-12)

    def test_own_symbol_never_cancelled(self):
        rng = np.random.default_rng(7)
        h = generate_channel(4, 3, rng).h
        x = (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        belief = SoftSymbolBelief(x_tilde=x.copy(), q=np.abs(x) ** 2)
        out = soft_pic(h @ x, h, belief, 2)
        np.testing.assert_allclose(out, h[:, 2] * x[2], atol=1e-12)


class TestFilterOutput:
    def test_selector(self):
        w = np.array([1.0, 0.0], dtype=complex)
        assert filter_output(w, np.array([3.0 + 1j, 9.0])) == 3.0 + 1j

    def test_zero_filter(self):
        assert filter_output(np.zeros(3, complex), np.ones(3)) == 0.0

    def test_conjugation(self):
        w = np.array([1j, 0.0])
        assert filter_output(w, np.array([1.0 + 0j, 0.0])) == -1j


class TestConditionalMoments:
    def test_eta2_arithmetic(self):
        # engineered so Re{w^H c} = 0.5 -> eta2 = 0.25
        w = np.array([0.5 + 0j])
        c = np.array([1.0 + 0j])
        _, eta2 = conditional_moments(w, c, np.ones((1, 1), complex), 0,
                                      SoftSymbolBelief.none(1), 1.0)
        assert eta2 == 0.25

    def test_eta2_clamped_at_floor(self):
        w = np.array([1.0 + 0j])
        c = np.array([1.0 + 0j])
        _, eta2 = conditional_moments(w, c, np.ones((1, 1), complex), 0,
                                      SoftSymbolBelief.none(1), 1.0)
        assert eta2 == 1e-12

    def test_quantizer_fixed_point(self):
        # x already in the quantized alphabet, no interference: mu = w^H x
        w = np.array([0.4 - 0.2j])
        h = np.ones((1, 1), dtype=complex)
        x = (1 + 1j) / np.sqrt(2)
        mu, _ = conditional_moments(w, np.array([0.5 + 0j]), h, 0,
                                    SoftSymbolBelief.none(1), x)
        assert abs(mu - np.conj(w[0]) * x) < 1e-15

    def test_linearized_mean(self):
        w = np.array([0.3 + 0j])
        c = np.array([0.6 + 0j])
        mu, _ = conditional_moments(w, c, np.ones((1, 1), complex), 0,
                                    SoftSymbolBelief.none(1), 1j,
                                    mu_mode="linearized")
        assert abs(mu - 0.18j) < 1e-15


def llr_probability_oracle(x_hat, mus, eta2, le_prior):
    """Plain probability-domain evaluation of the posterior LLR ratio."""
    mus = np.asarray(mus)
    labels = QPSK.labels
    likes = np.exp(-np.abs(x_hat - mus) ** 2 / eta2) / (np.pi * eta2)
    priors = np.ones(4)
    for p in range(4):
        for l in range(2):
            priors[p] *= 1.0 / (1.0 + np.exp(-labels[p, l] * le_prior[l]))
    out = np.empty(2)
    for l in range(2):
        plus = labels[:, l] > 0
        num = np.sum(likes[plus] * priors[plus])
        den = np.sum(likes[~plus] * priors[~plus])
        out[l] = np.log(num / den) - le_prior[l]
    return out


class TestDetectorLlr:
    def test_symmetry_gives_zero(self):
        mus = np.full(4, 0.2 + 0.1j)
        out = detector_llr(0.2 + 0.1j, mus, 0.3, np.zeros(2))
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_degenerate_likelihood_saturates(self):
        ws_mus = 0.7 * QPSK.points
        x_hat = ws_mus[2]          # exactly the (-1,+1)-labelled point
        out = detector_llr(x_hat, ws_mus, 1e-12, np.zeros(2))
        np.testing.assert_allclose(out, [-30.0, 30.0])

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_probability_domain_oracle(self, seed):
        """K=1, M=2 instance evaluated in both domains."""
        rng = np.random.default_rng(seed)
        h = generate_channel(2, 1, rng).h
        sigma_n2 = 0.8
        ws = build_workspace(h, sigma_n2)
        w, c = build_filter(h, sigma_n2, SoftSymbolBelief.none(1), 0,
                            workspace=ws)
        mus = []
        for x in QPSK.points:
            mu, eta2 = conditional_moments(w, c, h, 0,
                                           SoftSymbolBelief.none(1), x)
            mus.append(mu)
        x_hat = complex(rng.standard_normal() + 1j * rng.standard_normal())
        le = rng.uniform(-3, 3, 2)
        ours = detector_llr(x_hat, np.array(mus), eta2, le)
        oracle = llr_probability_oracle(x_hat, np.array(mus), eta2, le)
        np.testing.assert_allclose(ours, oracle, atol=1e-9)

    def test_zero_prior_reduces_to_plain_posterior(self):
        rng = np.random.default_rng(9)
        mus = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        x_hat = 0.1 + 0.2j
        withp = detector_llr(x_hat, mus, 0.5, np.zeros(2))
        oracle = llr_probability_oracle(x_hat, mus, 0.5, np.zeros(2))
        np.testing.assert_allclose(withp, oracle, atol=1e-9)


class TestMmseBaseline:
    def test_scalar_closed_form(self):
        h = np.array([[1.0 + 0j]])
        w = mmse_baseline_filter(h, 1.0, 0)
        assert abs(w[0] - 0.5) < 1e-12

    def test_vanishes_with_noise(self):
        h, _, _ = random_case(10)
        w = mmse_baseline_filter(h, 1e9, 0)
        assert np.linalg.norm(w) < 1e-6

    def test_oracle_solve_agreement(self):
        h, sigma_n2, _ = random_case(11, m=8, k=4)
        ws = build_workspace(h, sigma_n2)
        for k in range(4):
            w = mmse_baseline_filter(h, sigma_n2, k, workspace=ws)
            w_oracle = np.linalg.inv(ws.c_y) @ h[:, k]
            assert np.linalg.norm(w - w_oracle) / np.linalg.norm(w_oracle) \
                < 1e-9


class TestFilterMseOptimality:
    def test_perturbations_never_beat_filter(self):
        """Empirical MSE at w is a paired-sample minimum for Gaussian
        symbols, where the quantized covariance model is exact."""
        rng = np.random.default_rng(12)
        m, k = 8, 4
        h = generate_channel(m, k, rng).h
        sigma_n2 = 0.5
        ws = build_workspace(h, sigma_n2)
        w, c = build_filter(h, sigma_n2, SoftSymbolBelief.none(k), 0,
                            workspace=ws)
        n = 300_000
        x = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) \
            / np.sqrt(2.0)
        y_q = quantize_1bit(transmit(h, x, sigma_n2, rng))
        err = x[0] - w.conj() @ y_q
        base = np.abs(err) ** 2
        for _ in range(5):
            delta = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            delta *= 1e-3 / np.linalg.norm(delta)
            err_p = x[0] - (w + delta).conj() @ y_q
            diff = np.abs(err_p) ** 2 - base
            mean, sem = diff.mean(), diff.std() / np.sqrt(n)
            assert mean > -2.0 * sem


class TestDetectFrame:
    def test_linear_path_matches_llr_ops(self):
        """The collapsed linear LLR equals the general enumeration."""
        rng = np.random.default_rng(13)
        m, k, t = 6, 3, 5
        h = generate_channel(m, k, rng).h
        sigma_n2 = 0.7
        ws = build_workspace(h, sigma_n2)
        le = rng.uniform(-4, 4, (k, t, 2))
        y_q = quantize_1bit(transmit(
            h, (rng.standard_normal((k, t)) + 1j * rng.standard_normal((k, t))),
            sigma_n2, rng))
        lc = detect_frame(y_q, ws, le, mu_mode="linearized")
        x_tilde = soft_symbols(le)
        q_bar = np.mean(np.abs(x_tilde) ** 2, axis=1)
        a_pic = SQRT_2_OVER_PI * ws.k_gain[:, None] * h
        for kk in range(k):
            cov = pic_covariance(ws, q_bar, kk, "linearized")
            w = hermitian_solve(cov, ws.cross[:, kk])
            g = np.real(np.vdot(w, a_pic[:, kk]))
            rho = np.real(np.vdot(w, ws.cross[:, kk]))
            eta2 = max(rho - rho * rho, 1e-12)
            for tt in range(t):
                xt = x_tilde[:, tt].copy()
                xt[kk] = 0.0
                x_hat = np.vdot(w, y_q[:, tt] - a_pic @ xt)
                ref = detector_llr(x_hat, g * QPSK.points, eta2, le[kk, tt])
                np.testing.assert_allclose(lc[kk, tt], ref, atol=1e-8)

    def test_verbatim_path_matches_op_chain(self):
        rng = np.random.default_rng(14)
        m, k, t = 6, 3, 4
        h = generate_channel(m, k, rng).h
        sigma_n2 = 0.9
        ws = build_workspace(h, sigma_n2)
        le = rng.uniform(-3, 3, (k, t, 2))
        y_q = quantize_1bit(transmit(
            h, (rng.standard_normal((k, t)) + 1j * rng.standard_normal((k, t))),
            sigma_n2, rng))
        lc = detect_frame(y_q, ws, le, mu_mode="verbatim")
        x_tilde = soft_symbols(le)
        q_bar = np.mean(np.abs(x_tilde) ** 2, axis=1)
        filter_belief = SoftSymbolBelief(x_tilde=x_tilde[:, 0], q=q_bar)
        for kk in range(k):
            w, c = build_filter(h, sigma_n2, filter_belief, kk, workspace=ws)
            for tt in range(t):
                slot = SoftSymbolBelief.from_llrs(le[:, tt, :])
                y_kk = soft_pic(y_q[:, tt], h, slot, kk)
                x_hat = filter_output(w, y_kk)
                mus = []
                for x in QPSK.points:
                    mu, eta2 = conditional_moments(w, c, h, kk, slot, x)
                    mus.append(mu)
                ref = detector_llr(x_hat, np.array(mus), eta2, le[kk, tt])
                np.testing.assert_allclose(lc[kk, tt], ref, atol=1e-8)

    def test_no_prior_equals_zero_prior(self):
        """Explicit zero LLRs and None produce identical output."""
        rng = np.random.default_rng(15)
        m, k, t = 6, 3, 4
        h = generate_channel(m, k, rng).h
        ws = build_workspace(h, 0.5)
        y_q = quantize_1bit(transmit(
            h, (rng.standard_normal((k, t)) + 1j * rng.standard_normal((k, t))),
            0.5, rng))
        for mode in ("linearized", "verbatim"):
            a = detect_frame(y_q, ws, None, mu_mode=mode)
            b = detect_frame(y_q, ws, np.zeros((k, t, 2)), mu_mode=mode)
            np.testing.assert_array_equal(a, b)

    def test_unknown_detector_rejected(self):
        h, sigma_n2, rng = random_case(16)
        ws = build_workspace(h, sigma_n2)
        with pytest.raises(ValueError):
            detect_frame(np.zeros((6, 2), complex), ws, detector="zf")
