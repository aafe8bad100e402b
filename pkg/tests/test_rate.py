import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_irs.rate import (achievable_rate, amplitude_profile, csi_error_power,
                             effective_channel, eop, mmse_receiver, mse_e_k, psi_d,
                             sinr, user_rates, weighted_sum_rate)
from robust_irs.training import ChannelEstimate, design_patterns, error_covariance

from conftest import crandn, mc_interference, random_estimate


def _single_path_estimate(h, N=1):
    """Estimate whose effective channel at v = 0 is ``h`` and has no error."""
    M = h.size
    H_bar = np.zeros((N + 1, M), complex)
    H_bar[0] = np.conj(h)
    return ChannelEstimate(H_bar, np.zeros((N + 1, N + 1)))


class TestPsi:
    def test_noise_floor(self, rng):
        est = random_estimate(rng, 3, 2).without_error()
        w = crandn(rng, 1, 2)
        assert psi_d(0, crandn(rng, 3), w, est, 0.7) == pytest.approx(0.7)

    def test_iid_case(self, rng):
        N, d2 = 5, 0.03
        est = ChannelEstimate(crandn(rng, N + 1, 3), d2 * np.eye(N + 1))
        v, W = crandn(rng, N), crandn(rng, 2, 3)
        h = effective_channel(v, est)
        pw = np.sum(np.abs(W) ** 2)
        expect = abs(h.conj() @ W[1]) ** 2 + d2 * pw + d2 * pw * np.vdot(v, v).real + 0.2
        assert psi_d(0, v, W, est, 0.2) == pytest.approx(expect, rel=1e-12)

    def test_monte_carlo(self, rng):
        N, M, p_u, eps2, s2 = 4, 2, 2.0, 1.0, 0.1
        pat = design_patterns(N, 7, q_theta=2)
        est = ChannelEstimate(crandn(rng, N + 1, M), error_covariance(pat, eps2, p_u))
        v, W = crandn(rng, N), crandn(rng, 2, M)
        mc = mc_interference(0, v, W, est, pat, p_u, eps2, s2, 100_000, rng)
        assert psi_d(0, v, W, est, s2) == pytest.approx(mc, rel=0.02)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), N=st.integers(1, 6), K=st.integers(1, 3))
    def test_above_noise(self, seed, N, K):
        r = np.random.default_rng(seed)
        est = random_estimate(r, N, 2)
        W = crandn(r, K, 2)
        assert psi_d(0, crandn(r, N), W, est, 0.5) >= 0.5 - 1e-12


class TestRate:
    def test_zero_precoder(self, rng):
        est = random_estimate(rng, 3, 2)
        assert achievable_rate(0, crandn(rng, 3), np.zeros((1, 2)), est, 1.0) == 0.0
        assert weighted_sum_rate(crandn(rng, 3), np.zeros((2, 2)), [est, est], 1.0) == 0.0

    def test_mrt_closed_form(self):
        h = np.array([0.6, 0.8j])
        est = _single_path_estimate(h)
        w = np.sqrt(10) * h
        assert achievable_rate(0, np.zeros(1), w, est, 1.0) == pytest.approx(np.log2(11), rel=1e-12)

    def test_more_error_less_rate(self, rng):
        est = random_estimate(rng, 4, 3)
        worse = ChannelEstimate(est.H_bar, 2 * est.V_bar)
        v, W = crandn(rng, 4), crandn(rng, 1, 3)
        assert achievable_rate(0, v, W, worse, 0.1) < achievable_rate(0, v, W, est, 0.1)

    def test_single_user_sum(self, rng):
        est = random_estimate(rng, 3, 2)
        v, W = crandn(rng, 3), crandn(rng, 1, 2)
        assert weighted_sum_rate(v, W, [est], 0.3) == achievable_rate(0, v, W, est, 0.3)

    def test_weights(self, rng):
        ests = [random_estimate(rng, 3, 2) for _ in range(2)]
        v, W = crandn(rng, 3), crandn(rng, 2, 2)
        r = user_rates(v, W, ests, 0.3)
        assert weighted_sum_rate(v, W, ests, 0.3, [2.0, 0.5]) == pytest.approx(2 * r[0] + 0.5 * r[1])

    def test_symmetric_users(self, rng):
        # user 2 sees the channel of user 1 with its precoders swapped
        N, M = 3, 2
        H_bar = crandn(rng, N + 1, M)
        Vb = random_estimate(rng, N, M).V_bar
        swap = np.array([[0, 1], [1, 0]])
        e1, e2 = ChannelEstimate(H_bar, Vb), ChannelEstimate(H_bar @ swap, Vb)
        w = crandn(rng, M)
        W = np.stack([w, swap @ w])
        v = crandn(rng, N)
        r = user_rates(v, W, [e1, e2], 0.1)
        assert r[0] == pytest.approx(r[1], rel=1e-12)


class TestWmmse:
    def test_zero_precoder_receiver(self, rng):
        est = random_estimate(rng, 3, 2)
        W = np.vstack([np.zeros(2), crandn(rng, 2)])
        assert mmse_receiver(0, crandn(rng, 3), W, est, 1.0) == 0

    def test_scalar_closed_form(self):
        h, P, s2 = 0.7, 4.0, 0.3
        est = _single_path_estimate(np.array([h]))
        w = np.array([[np.sqrt(P)]])
        g = mmse_receiver(0, np.zeros(1), w, est, s2)
        assert g == pytest.approx(h * np.sqrt(P) / (P * h * h + s2))
        e = mse_e_k(0, g, np.zeros(1), w, est, s2)
        assert e == pytest.approx(s2 / (P * h * h + s2))

    def test_mse_at_zero(self, rng):
        est = random_estimate(rng, 3, 2)
        assert mse_e_k(0, 0.0, crandn(rng, 3), crandn(rng, 2, 2), est, 0.4) == 1.0

    def test_receiver_optimal(self, rng):
        est = random_estimate(rng, 4, 3)
        v, W = crandn(rng, 4), crandn(rng, 2, 3)
        g = mmse_receiver(1, v, W, est, 0.2)
        e_opt = mse_e_k(1, g, v, W, est, 0.2)
        for gg in crandn(rng, 100) * abs(g) * 2:
            assert e_opt <= mse_e_k(1, gg, v, W, est, 0.2) + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), K=st.integers(1, 3), N=st.integers(1, 5))
    def test_identity(self, seed, K, N):
        r = np.random.default_rng(seed)
        ests = [random_estimate(r, N, 2) for _ in range(K)]
        v, W = crandn(r, N), crandn(r, K, 2)
        for k, est in enumerate(ests):
            g = mmse_receiver(k, v, W, est, 0.3)
            e = mse_e_k(k, g, v, W, est, 0.3)
            assert e == pytest.approx(1 / (1 + sinr(k, v, W, est, 0.3)), rel=1e-9)
            assert -np.log2(e) == pytest.approx(achievable_rate(k, v, W, est, 0.3), rel=1e-9, abs=1e-12)
            q = 1 / e
            assert q * e - np.log(q) == pytest.approx(1 + np.log(e), abs=1e-12)


class TestAmplitudeProfile:
    def test_zero_precoder(self, rng):
        est = random_estimate(rng, 3, 2)
        prof = amplitude_profile(1, 0.3, crandn(rng, 3), np.zeros(2), est, 1.0)
        assert prof.A == prof.c == prof.d == 0.0

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 31), N=st.integers(1, 6))
    def test_matches_rate_on_grid(self, seed, N):
        r = np.random.default_rng(seed)
        est = random_estimate(r, N, 3)
        v, w = crandn(r, N), crandn(r, 3)
        n, theta = int(r.integers(N)), float(r.uniform(0, 2 * np.pi))
        prof = amplitude_profile(n, theta, v, w, est, 0.4)
        for a in np.linspace(0, 1, 21):
            vv = v.copy()
            vv[n] = a * np.exp(1j * theta)
            assert prof.rate(a) == pytest.approx(achievable_rate(0, vv, w, est, 0.4), rel=1e-9, abs=1e-12)

    def test_no_error_monotone(self, rng):
        hits = 0
        for _ in range(50):
            est = random_estimate(rng, 4, 2).without_error()
            v, w = crandn(rng, 4), crandn(rng, 2)
            prof = amplitude_profile(2, rng.uniform(0, 2 * np.pi), v, w, est, 0.5)
            if prof.c >= 0:
                hits += 1
                assert np.all(np.diff(prof.rate(np.linspace(0, 1, 101))) >= -1e-12)
        assert hits > 0


class TestEop:
    def test_cases(self):
        assert eop(np.zeros(4)) == 100.0
        assert eop(np.exp(1j * np.arange(4))) == 0.0
        assert eop(np.array([0, 1, 0, 1j])) == 50.0
        assert eop(np.array([])) == 0.0

    def test_csi_power_expansion(self, rng):
        est = random_estimate(rng, 4, 2)
        v = crandn(rng, 4)
        expect = est.v11 + 2 * np.real(np.vdot(v, est.r)) + np.real(v.conj() @ est.R @ v)
        assert csi_error_power(v, est) == pytest.approx(expect, rel=1e-12)
