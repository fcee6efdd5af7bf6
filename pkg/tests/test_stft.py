import numpy as np
import pytest

from bregman_pr import (Measurements, StftConfig, StftGrid, TimeSignal, istft,
                        make_window, proj_consistency, proj_magnitude, stft,
                        tight_normalize)

from conftest import hermitian_grid


def naive_stft(x, cfg):
    """Direct evaluation of the frame-local analysis sum (test oracle)."""
    pad = cfg.pad
    xp = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    n = cfg.num_frames(len(x))
    M, W, H = cfg.fft_size, cfg.win_len, cfg.hop
    out = np.zeros((M, n), dtype=complex)
    for fr in range(n):
        for m in range(M):
            acc = 0.0 + 0.0j
            for j in range(W):
                acc += (xp[fr * H + j] * cfg.window[j]
                        * np.exp(-2j * np.pi * m * j / M))
            out[m, fr] = acc
    return out


def naive_istft(coeffs, cfg, signal_len):
    """Direct evaluation of the overlap-add synthesis sum (test oracle)."""
    M, W, H, pad = cfg.fft_size, cfg.win_len, cfg.hop, cfg.pad
    out = np.zeros(signal_len + 2 * pad, dtype=complex)
    for fr in range(coeffs.shape[1]):
        for j in range(W):
            acc = 0.0 + 0.0j
            for m in range(M):
                acc += coeffs[m, fr] * np.exp(2j * np.pi * m * j / M)
            out[fr * H + j] += acc * cfg.window[j]
    return out[pad:pad + signal_len].real


class TestWindow:
    def test_hann_closed_form_w4(self):
        np.testing.assert_allclose(make_window("hann", 4), [0.0, 0.5, 1.0, 0.5],
                                   atol=1e-15)

    def test_hann_w2(self):
        np.testing.assert_allclose(make_window("hann", 2), [0.0, 1.0], atol=1e-15)

    def test_hann_sum(self):
        assert abs(make_window("hann", 512).sum() - 256.0) < 1e-10

    def test_unsupported_kind(self):
        with pytest.raises(ValueError, match="kind"):
            make_window("kaiser", 16)

    def test_too_short(self):
        with pytest.raises(ValueError):
            make_window("hann", 1)


class TestTightNormalize:
    def test_hand_computed_hann4(self):
        w = np.array([0.0, 0.5, 1.0, 0.5])
        got = tight_normalize(w, 2, 4)
        expect = np.array([0.0, 0.5 / np.sqrt(2), 0.5, 0.5 / np.sqrt(2)])
        np.testing.assert_allclose(got, expect, atol=1e-15)

    def test_rectangular_no_overlap(self):
        got = tight_normalize(np.array([1.0, 1.0]), 2, 2)
        np.testing.assert_allclose(got, [1 / np.sqrt(2)] * 2, atol=1e-15)

    def test_all_zero_window_rejected(self):
        with pytest.raises(ValueError, match="cannot form a frame"):
            tight_normalize(np.zeros(4), 2, 4)

    def test_tight_condition_holds(self, cfg):
        cover = np.array([np.sum(cfg.window[p::cfg.hop] ** 2)
                          for p in range(cfg.hop)])
        assert np.max(np.abs(cfg.fft_size * cover - 1.0)) < 1e-12


class TestConfig:
    def test_rejects_bad_geometry(self):
        with pytest.raises(ValueError):
            StftConfig(512, 600, 512)
        with pytest.raises(ValueError):
            StftConfig(512, 256, 500)
        with pytest.raises(ValueError):
            StftConfig(512, 0, 512)

    def test_grid_shape_validation(self, small_cfg):
        with pytest.raises(ValueError, match="expected"):
            StftGrid(np.zeros((64, 3), complex), small_cfg, 1000, 8000)


class TestAnalysisSynthesis:
    def test_matches_naive_dft_sum(self):
        cfg = StftConfig(8, 4, 8)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(32)
        got = stft(TimeSignal(x, 8000), cfg).coeffs
        expect = naive_stft(x, cfg)
        np.testing.assert_allclose(got, expect, atol=1e-12)

    def test_istft_matches_naive_sum(self):
        cfg = StftConfig(8, 4, 8)
        rng = np.random.default_rng(1)
        g = hermitian_grid(rng, cfg, 32)
        grid = StftGrid(g, cfg, 32, 8000)
        got = istft(grid).samples
        expect = naive_istft(g, cfg, 32)
        np.testing.assert_allclose(got, expect, atol=1e-12)

    def test_zero_signal_zero_grid(self, cfg):
        g = stft(TimeSignal(np.zeros(4000), 22050), cfg)
        assert np.all(g.coeffs == 0)

    def test_roundtrip_identity(self, cfg):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(2048)
        back = istft(stft(TimeSignal(x, 22050), cfg))
        assert np.max(np.abs(back.samples - x)) < 1e-10

    def test_linearity(self, cfg):
        rng = np.random.default_rng(3)
        g1 = hermitian_grid(rng, cfg, 3000)
        g2 = hermitian_grid(rng, cfg, 3000)
        s = istft(StftGrid(g1 + g2, cfg, 3000, 22050)).samples
        s1 = istft(StftGrid(g1, cfg, 3000, 22050)).samples
        s2 = istft(StftGrid(g2, cfg, 3000, 22050)).samples
        assert np.max(np.abs(s - s1 - s2)) < 1e-12

    def test_impulse_at_frame_start(self):
        cfg = StftConfig(8, 4, 8)
        x = np.zeros(32)
        # original index 4 sits at padded position pad + 4 = 3 * hop
        x[4] = 1.0
        g = stft(TimeSignal(x, 8000), cfg).coeffs
        np.testing.assert_allclose(g[:, 3], np.full(8, cfg.window[0]),
                                   atol=1e-14)

    def test_dc_bin_real(self, cfg):
        rng = np.random.default_rng(4)
        g = stft(TimeSignal(rng.standard_normal(3000), 22050), cfg)
        assert np.max(np.abs(g.coeffs[0].imag)) < 1e-12

    def test_adjoint_identity(self, cfg):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = rng.standard_normal(4096)
            g = hermitian_grid(rng, cfg, 4096)
            lhs = np.vdot(g, stft(TimeSignal(x, 22050), cfg).coeffs).real
            rhs = float(np.dot(x, istft(StftGrid(g, cfg, 4096, 22050)).samples))
            assert abs(lhs - rhs) < 1e-8 * max(abs(lhs), abs(rhs))

    def test_parseval(self, cfg):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(5000)
        g = stft(TimeSignal(x, 22050), cfg)
        e_grid = np.sum(np.abs(g.coeffs) ** 2)
        e_sig = np.sum(x ** 2)
        assert abs(e_grid - e_sig) < 1e-9 * e_sig

    def test_istft_rejects_asymmetric_grid(self, cfg):
        rng = np.random.default_rng(7)
        z = rng.standard_normal((512, cfg.num_frames(2000))) + \
            1j * rng.standard_normal((512, cfg.num_frames(2000)))
        with pytest.raises(ValueError, match="Hermitian"):
            istft(StftGrid(z, cfg, 2000, 22050))


class TestProjections:
    def _measurements(self, mags, cfg, power=1):
        vals = mags if power == 1 else mags ** 2
        return Measurements(vals, power, 22050, cfg.hop, cfg.win_len)

    def test_magnitude_exact(self, cfg):
        rng = np.random.default_rng(8)
        x = TimeSignal(rng.standard_normal(3000), 22050)
        grid = stft(x, cfg)
        target = stft(TimeSignal(rng.standard_normal(3000), 22050),
                      cfg).magnitudes()
        out = proj_magnitude(grid, self._measurements(target, cfg))
        mags = np.abs(out.coeffs)
        nz = target > 0
        # unit-phase factor is correct to a couple of ulp
        assert np.max(np.abs(mags[nz] / target[nz] - 1.0)) < 5e-16
        np.testing.assert_array_equal(mags[~nz], 0.0)

    def test_phase_preserved(self, small_cfg):
        n = small_cfg.num_frames(100)
        coeffs = np.zeros((64, n), complex)
        coeffs[5, 2] = 3.0 + 4.0j
        grid = StftGrid(coeffs, small_cfg, 100, 8000)
        target = np.zeros((64, n))
        target[5, 2] = 10.0
        out = proj_magnitude(grid, self._measurements(target, small_cfg))
        assert out.coeffs[5, 2] == pytest.approx(6.0 + 8.0j, abs=1e-12)

    def test_zero_coefficient_phase_convention(self, small_cfg):
        n = small_cfg.num_frames(100)
        grid = StftGrid(np.zeros((64, n), complex), small_cfg, 100, 8000)
        target = np.full((64, n), 2.0)
        out = proj_magnitude(grid, self._measurements(target, small_cfg))
        np.testing.assert_array_equal(out.coeffs, np.full((64, n), 2.0 + 0.0j))

    def test_power_measurements_take_sqrt(self, small_cfg):
        n = small_cfg.num_frames(100)
        coeffs = np.ones((64, n), complex)
        grid = StftGrid(coeffs, small_cfg, 100, 8000)
        r = Measurements(np.full((64, n), 9.0), 2, 8000, small_cfg.hop,
                         small_cfg.win_len)
        out = proj_magnitude(grid, r)
        np.testing.assert_allclose(np.abs(out.coeffs), 3.0, atol=1e-12)

    def test_shape_mismatch(self, cfg, small_cfg):
        rng = np.random.default_rng(9)
        grid = stft(TimeSignal(rng.standard_normal(2000), 22050), cfg)
        bad = Measurements(np.ones((64, 3)), 1, 22050, 32, 64)
        with pytest.raises(ValueError, match="does not match"):
            proj_magnitude(grid, bad)

    def test_consistency_fixed_point(self, cfg):
        rng = np.random.default_rng(10)
        g = stft(TimeSignal(rng.standard_normal(4096), 22050), cfg)
        out = proj_consistency(g)
        assert np.max(np.abs(out.coeffs - g.coeffs)) < 1e-10

    def test_consistency_idempotent(self, cfg):
        rng = np.random.default_rng(11)
        g = StftGrid(hermitian_grid(rng, cfg, 3000), cfg, 3000, 22050)
        p1 = proj_consistency(g)
        p2 = proj_consistency(p1)
        assert np.max(np.abs(p2.coeffs - p1.coeffs)) < 1e-9

    def test_consistency_nonexpansive(self, cfg):
        rng = np.random.default_rng(12)
        g = StftGrid(hermitian_grid(rng, cfg, 3000), cfg, 3000, 22050)
        out = proj_consistency(g)
        assert np.linalg.norm(out.coeffs) <= np.linalg.norm(g.coeffs) * (1 + 1e-12)

    def test_zero_grid(self, cfg):
        n = cfg.num_frames(2000)
        g = StftGrid(np.zeros((512, n), complex), cfg, 2000, 22050)
        assert np.all(proj_consistency(g).coeffs == 0)
