"""Degradation and evaluation protocol: white noise at a target SNR,
oracle spectral subtraction to form nonnegative measurements, and the
spectral-convergence metric."""

import math
from dataclasses import dataclass

import numpy as np

from .audio_io import Measurements, TimeSignal
from .stft import stft


@dataclass
class DegradeConfig:
    snr_db: float
    seed: int = 0
    subtraction_floor: float = 0.0

    def __post_init__(self):
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"snr_db must be finite or +inf, got {self.snr_db}")
        if self.subtraction_floor < 0:
            raise ValueError("subtraction_floor must be >= 0")


def add_noise(x, cfg):
    """Add white Gaussian noise at the target SNR.

    Returns the noisy signal and the noise standard deviation sigma (the
    oracle value spectral subtraction uses).  snr_db=inf passes the
    signal through unchanged with sigma=0.
    """
    if math.isinf(cfg.snr_db):
        return TimeSignal(x.samples.copy(), x.sample_rate), 0.0
    signal_power = float(np.mean(x.samples ** 2))
    if signal_power == 0.0:
        raise ValueError("cannot set a finite SNR on a silent signal")
    sigma = math.sqrt(signal_power * 10.0 ** (-cfg.snr_db / 10.0))
    rng = np.random.default_rng(cfg.seed)
    noise = sigma * rng.standard_normal(x.samples.size)
    return TimeSignal(x.samples + noise, x.sample_rate), sigma


def empirical_snr(clean, noisy):
    """Measured 10*log10 signal-to-noise power ratio; inf for equal inputs."""
    noise_power = float(np.mean((noisy.samples - clean.samples) ** 2))
    signal_power = float(np.mean(clean.samples ** 2))
    if noise_power == 0.0:
        return math.inf
    return 10.0 * math.log10(signal_power / noise_power)


def spectral_subtract(noisy, sigma, stft_cfg, power, subtraction_floor=0.0):
    """Oracle power-domain spectral subtraction.

    Subtracts the expected per-bin noise power sigma**2 * sum(window**2)
    from the observed power spectrogram, half-wave rectifies against the
    floor, and returns the result raised to power/2 (magnitudes for d=1,
    powers for d=2).
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if power not in (1, 2):
        raise ValueError(f"power must be 1 or 2, got {power}")
    grid = stft(noisy, stft_cfg)
    observed = np.abs(grid.coeffs) ** 2
    noise_floor = sigma ** 2 * stft_cfg.window_energy()
    subtracted = np.maximum(observed - noise_floor, subtraction_floor)
    values = np.sqrt(subtracted) if power == 1 else subtracted
    return Measurements(values, power, noisy.sample_rate, stft_cfg.hop,
                        stft_cfg.win_len)


def spectral_convergence(r, x, stft_cfg):
    """Relative magnitude mismatch ||r^(1/d) - |Ax|||_2 / ||r^(1/d)||_2."""
    target = r.target_magnitudes()
    denom = float(np.linalg.norm(target))
    if denom == 0.0:
        raise ValueError("spectral convergence is undefined for all-zero "
                         "measurements")
    grid = stft(x, stft_cfg)
    if grid.coeffs.shape != target.shape:
        raise ValueError(
            f"signal of {len(x)} samples yields a {grid.coeffs.shape} grid, "
            f"measurements are {target.shape}")
    return float(np.linalg.norm(target - grid.magnitudes())) / denom
