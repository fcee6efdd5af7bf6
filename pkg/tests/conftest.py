from pathlib import Path

import numpy as np
import pytest

from bregman_pr import Measurements, StftConfig, TimeSignal, stft

FIXTURE_DIR = Path(__file__).parent / "fixtures"
FIXTURE_NAMES = ("tone440", "chirp", "speechlike")


@pytest.fixture
def cfg():
    return StftConfig(512, 256, 512)


@pytest.fixture
def small_cfg():
    return StftConfig(64, 32, 64)


def speechlike(rng, n, sr=22050):
    """Filtered, amplitude-modulated noise; broadband like voiced speech."""
    x = rng.standard_normal(n + 64)
    kernel = np.hanning(24)
    x = np.convolve(x, kernel / kernel.sum(), mode="same")[:n]
    t = np.arange(n) / sr
    x *= 0.6 + 0.4 * np.sin(2 * np.pi * 3.0 * t + rng.uniform(0, 2 * np.pi))
    x = x / np.max(np.abs(x))
    return TimeSignal(0.5 * x, sr)


def self_measurements(x, cfg, power=1):
    """Exact |Ax|**d measurement grid for a known signal."""
    mags = stft(x, cfg).magnitudes()
    values = mags if power == 1 else mags ** 2
    return Measurements(values, power, x.sample_rate, cfg.hop, cfg.win_len)


def hermitian_grid(rng, cfg, signal_len):
    """Random Hermitian-symmetric coefficient grid (synthesizes real)."""
    m = cfg.fft_size
    n = cfg.num_frames(signal_len)
    z = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    mirror = (m - np.arange(m)) % m
    return 0.5 * (z + np.conj(z[mirror]))
