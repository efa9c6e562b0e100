"""Detection-chain reference behaviour: formation, detectors, bound statistics."""

import numpy as np
import pytest

from qsep.channel import CorrelationSpec, build_covariance, complex_normal, make_generator
from qsep.constellation import psk_constellation, quantize, quantize_indices
from qsep.errors import DimensionMismatchError, InvalidParameterError
from qsep.linalg import amrc_weight_matrix
from qsep.receiver import (
    TrialDraw,
    amrc_detect,
    amrc_expansion_residual,
    bound_statistics,
    eta_margin,
    mirror_detect,
    mrc_detect,
    received_signal,
    siso_equivalent_gain,
)

PHI = np.pi / 4
S4 = psk_constellation(4).points
S8 = psk_constellation(8).points


def make_trial(rng, n_r, m, n, rho):
    s_index = int(rng.integers(0, m))
    h = (rng.standard_normal(n_r) + 1j * rng.standard_normal(n_r)) / np.sqrt(2)
    noise = (rng.standard_normal(n_r) + 1j * rng.standard_normal(n_r)) / np.sqrt(2)
    y, r = received_signal(h, psk_constellation(m).point(s_index), noise, rho, n)
    return TrialDraw(s_index, h, noise, y, r)


class TestReceivedSignal:
    def test_noiseless_fixed_point(self):
        y, r = received_signal(np.array([1.0 + 0j]), S4[0], np.zeros(1, complex), 1.0, 2)
        assert y[0] == pytest.approx(S4[0])
        assert r[0] == pytest.approx(S4[0])

    def test_vanishing_signal_leaves_noise_quantization(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            noise = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            _, r = received_signal(h, S4[1], noise, 1e-12, 3)
            expected = psk_constellation(8).points[quantize_indices(noise, 3)]
            assert np.allclose(r, expected)

    def test_elementwise_quantization(self):
        rng = np.random.default_rng(32)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        noise = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        y, r = received_signal(h, S8[3], noise, 5.0, 4)
        for yi, ri in zip(y, r):
            assert ri == pytest.approx(quantize(complex(yi), 4).point)

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(DimensionMismatchError):
            received_signal(np.ones(3, complex), S4[0], np.ones(2, complex), 1.0, 2)

    def test_rejects_nonpositive_rho(self):
        with pytest.raises(InvalidParameterError):
            received_signal(np.ones(1, complex), S4[0], np.zeros(1, complex), 0.0, 2)


class TestMrcDetect:
    def test_scalar_pass_through(self):
        res = mrc_detect(np.array([1.0 + 0j]), np.array([S4[0]]), 4, s_index=0)
        assert res.decision_index == 0 and res.correct

    def test_positive_combining_preserves_phase(self):
        h = np.array([0.5, 1.5, 2.0], dtype=complex)
        r = np.full(3, S4[1])
        res = mrc_detect(h, r, 4, s_index=1)
        assert res.decision_index == 1

    def test_pure_noise_symmetry(self):
        # At vanishing SNR every decision is a fresh coin: SEP -> (M-1)/M.
        rng = np.random.default_rng(33)
        m, trials = 8, 20_000
        errors = 0
        for _ in range(trials):
            trial = make_trial(rng, 4, m, 4, rho=1e-8)
            if not mrc_detect(trial.h, trial.r, m, trial.s_index).correct:
                errors += 1
        sep = errors / trials
        assert abs(sep - 7 / 8) < 0.01

    def test_positive_scaling_invariance(self):
        rng = np.random.default_rng(34)
        for _ in range(50):
            trial = make_trial(rng, 4, 8, 4, rho=3.0)
            base = mrc_detect(trial.h, trial.r, 8, trial.s_index)
            scaled = mrc_detect(7.5 * trial.h, trial.r, 8, trial.s_index)
            assert scaled.decision_index == base.decision_index


class TestAmrcDetect:
    def test_identity_covariance_matches_mrc_per_trial(self):
        rng = np.random.default_rng(35)
        w = amrc_weight_matrix(np.eye(4), 2.5)
        for _ in range(500):
            trial = make_trial(rng, 4, 8, 4, rho=2.5)
            a = amrc_detect(trial.h, trial.r, w, 8, trial.s_index)
            m = mrc_detect(trial.h, trial.r, 8, trial.s_index)
            assert a.decision_index == m.decision_index

    def test_dimension_mismatch(self):
        w = amrc_weight_matrix(np.eye(2), 1.0)
        with pytest.raises(DimensionMismatchError):
            amrc_detect(np.ones(2, complex), np.ones(3, complex), w, 4, 0)


class TestMirrorDetect:
    def test_noiseless_limit_decides_transmitted(self):
        rng = np.random.default_rng(36)
        model = build_covariance(CorrelationSpec("exponential", alpha=0.7, phi=PHI), 4)
        rho = 1e8
        w = amrc_weight_matrix(model.k, rho, model.eig)
        for _ in range(100):
            s_index = int(rng.integers(0, 8))
            h = model.chol.lower @ complex_normal(make_generator(1, rng.integers(1 << 30)), 4)
            noise = 1e-9 * complex_normal(make_generator(2, rng.integers(1 << 30)), 4)
            y, r = received_signal(h, S8[s_index], noise, rho, 4)
            trial = TrialDraw(s_index, h, noise, y, r)
            assert mirror_detect(trial, w, 8, 4).correct
            assert amrc_detect(h, r, w, 8, s_index).correct


class TestBoundStatistics:
    def test_single_antenna_hand_value(self):
        stats = bound_statistics(np.array([np.exp(1j * np.pi / 4)]), 4, 2)
        assert stats.thetas[0] == pytest.approx(0.0, abs=1e-12)
        assert stats.z[0] == pytest.approx(np.sqrt(2) / 2, abs=1e-12)
        assert stats.u == pytest.approx(1.0, abs=1e-12)

    def test_u_definition(self):
        rng = np.random.default_rng(37)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        stats = bound_statistics(h, 8, 4)
        assert stats.u == pytest.approx(2.0 * stats.t**2 / 4)

    def test_strict_regime_margins_positive(self):
        # M < 2^n: each term is at least |h_i| sin(pi/M - pi/2^n) > 0.
        rng = np.random.default_rng(38)
        floor_angle = np.sin(np.pi / 8 - np.pi / 16)
        for _ in range(200):
            h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            stats = bound_statistics(h, 8, 4)
            assert np.all(stats.z >= np.abs(h) * floor_angle - 1e-12)
            assert np.all(stats.z > 0)

    def test_boundary_regime_margins_approach_zero(self):
        # M = 2^n: margins stay nonnegative but become arbitrarily small.
        rng = np.random.default_rng(39)
        zmin = np.inf
        for _ in range(3000):
            h = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            stats = bound_statistics(h, 8, 3)
            assert np.all(stats.z >= 0)
            zmin = min(zmin, float(np.min(stats.z / np.abs(h))))
        assert zmin < 1e-2

    def test_rejects_oversized_m(self):
        with pytest.raises(InvalidParameterError):
            bound_statistics(np.ones(2, complex), 16, 3)


class TestEtaMargin:
    def test_margin_positive_in_strict_regime(self):
        rng = np.random.default_rng(40)
        for _ in range(200):
            h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            eta = eta_margin(siso_equivalent_gain(h, 4), 8)
            assert eta > 0.0

    def test_aligned_channel_gain(self):
        # Real positive h rotates onto the pi/4 bin centre, so quantization
        # is exact and the aggregate gain is the plain sum of amplitudes.
        h = np.array([0.5, 2.0], dtype=complex)
        ht = siso_equivalent_gain(h, 2)
        assert ht == pytest.approx(2.5 + 0j, abs=1e-12)


class TestExpansionResidual:
    def test_identity_covariance_closed_form(self):
        rng = np.random.default_rng(41)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        for rho in (10.0, 100.0, 1e4):
            expected = abs(np.sqrt((rho + 1) / rho) - 1 - 1 / (2 * rho)) * np.linalg.norm(h)
            got = amrc_expansion_residual(h, np.eye(4), rho)
            assert got == pytest.approx(expected, rel=1e-9)

    def test_log_log_slope_is_minus_two(self):
        rng = np.random.default_rng(42)
        model = build_covariance(CorrelationSpec("exponential", alpha=0.7, phi=PHI), 4)
        h = model.chol.lower @ (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        rhos = np.logspace(2, 6, 5)
        resid = [amrc_expansion_residual(h, model.k, rho, model.eig) for rho in rhos]
        slope = np.polyfit(np.log10(rhos), np.log10(resid), 1)[0]
        assert slope == pytest.approx(-2.0, abs=0.1)

    def test_decreasing_at_high_snr(self):
        rng = np.random.default_rng(43)
        model = build_covariance(CorrelationSpec("exponential", alpha=0.9, phi=0.1), 3)
        h = model.chol.lower @ (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        resid = [amrc_expansion_residual(h, model.k, rho, model.eig) for rho in
                 np.logspace(2, 8, 7)]
        assert np.all(np.diff(resid) < 0)


class TestCombinerQuantizationAgreement:
    def test_quantization_agrees_beyond_threshold(self):
        # Once the SNR passes a realization-dependent threshold, the scaled
        # combiner and the channel land in identical quantizer bins.
        rng = np.random.default_rng(44)
        model = build_covariance(CorrelationSpec("exponential", alpha=0.9, phi=PHI), 4)
        s = S8[0]
        for _ in range(20):
            h = model.chol.lower @ complex_normal(make_generator(7, rng.integers(1 << 30)), 4)
            agreed_from = None
            for exp in range(0, 13):
                rho = 10.0**exp
                g = amrc_weight_matrix(model.k, rho, model.eig) @ h
                agree = np.array_equal(
                    quantize_indices(g * s, 4), quantize_indices(h * s, 4)
                )
                if agree and agreed_from is None:
                    agreed_from = exp
                if agreed_from is not None:
                    assert agree, f"agreement lost at rho=1e{exp}"
            assert agreed_from is not None
