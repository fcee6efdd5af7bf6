"""Tight-frame STFT analysis/synthesis and the two Griffin-Lim projections.

The analysis operator zero-pads the signal by one window length on each
side, slides a normalized window with the configured hop and takes an
M-point FFT per frame (phase referenced to the frame start).  The window
normalization makes the frame tight, so the synthesis operator built from
the SAME window is both the adjoint and the left inverse: istft(stft(x))
reproduces x to machine precision, and consistency projection is plain
analysis-after-synthesis.
"""

from dataclasses import dataclass, field

import numpy as np

from .backend import kernels

EPS_MAG = 1e-12       # |coefficient| below this counts as zero phase
TIGHT_TOL = 1e-12     # allowed deviation from the tight-frame condition
IMAG_TOL = 1e-8       # max imaginary-to-total norm ratio in synthesis output


def make_window(kind, win_len):
    """Periodic analysis window of the given kind ('hann') and length."""
    if win_len < 2:
        raise ValueError(f"window length must be >= 2, got {win_len}")
    if kind != "hann":
        raise ValueError(f"unsupported window kind {kind!r}")
    l = np.arange(win_len, dtype=np.float64)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * l / win_len))


def tight_normalize(window, hop, fft_size):
    """Rescale a window so the resulting STFT frame is tight.

    Divides each sample by sqrt(fft_size * s(l mod hop)) where s(p) is the
    hop-periodic overlap power sum(window[p::hop]**2).  Raises if any
    phase has zero overlap power (the pair cannot form a frame).
    """
    window = np.asarray(window, dtype=np.float64)
    win_len = window.shape[0]
    if not (0 < hop <= win_len <= fft_size):
        raise ValueError(
            f"need 0 < hop <= win_len <= fft_size, got "
            f"hop={hop} win_len={win_len} fft_size={fft_size}")
    s = np.array([np.sum(window[p::hop] ** 2) for p in range(hop)])
    if np.any(s <= 0.0):
        p = int(np.argmin(s))
        raise ValueError(
            f"window/hop pair cannot form a frame: zero overlap power "
            f"at phase {p} (mod {hop})")
    return window / np.sqrt(fft_size * s[np.arange(win_len) % hop])


@dataclass
class StftConfig:
    """STFT geometry plus the tight-normalized window derived from it.

    The signal is zero-padded by ``win_len`` samples on each side so every
    original sample gets full window coverage; synthesis trims the padding
    back off.
    """

    win_len: int = 512
    hop: int = 256
    fft_size: int = 512
    window_kind: str = "hann"
    window: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not (0 < self.hop <= self.win_len <= self.fft_size):
            raise ValueError(
                f"need 0 < hop <= win_len <= fft_size, got hop={self.hop} "
                f"win_len={self.win_len} fft_size={self.fft_size}")
        if self.window is None:
            raw = make_window(self.window_kind, self.win_len)
            self.window = tight_normalize(raw, self.hop, self.fft_size)
        cover = np.array([np.sum(self.window[p::self.hop] ** 2)
                          for p in range(self.hop)])
        if np.max(np.abs(self.fft_size * cover - 1.0)) > TIGHT_TOL:
            raise ValueError("window does not satisfy the tight-frame condition")

    @property
    def pad(self):
        return self.win_len

    def num_frames(self, signal_len):
        """Frames covering a signal of the given length after padding."""
        padded = signal_len + 2 * self.pad
        return (padded - self.win_len) // self.hop + 1

    def min_signal_len(self, n_frames):
        """Shortest signal length whose frame count is ``n_frames``."""
        return (n_frames - 1) * self.hop - self.win_len

    def window_energy(self):
        """sum(window**2); the flat per-bin response to unit white noise."""
        return float(np.sum(self.window ** 2))


@dataclass
class StftGrid:
    """Complex STFT coefficients, fft_size x n_frames.

    ``coeffs[m, n]`` is frequency bin m of frame n; the conceptual
    vectorized index is m + n*fft_size.  ``signal_len`` remembers the
    original (pre-padding) sample count so synthesis can trim exactly.
    """

    coeffs: np.ndarray
    config: StftConfig
    signal_len: int
    sample_rate: int

    def __post_init__(self):
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        expected = (self.config.fft_size, self.config.num_frames(self.signal_len))
        if self.coeffs.shape != expected:
            raise ValueError(
                f"coefficient grid is {self.coeffs.shape}, expected {expected} "
                f"for signal_len={self.signal_len}")

    @property
    def n_frames(self):
        return self.coeffs.shape[1]

    def magnitudes(self):
        return np.abs(self.coeffs)


def stft(x, cfg):
    """Analyze a TimeSignal into an StftGrid (linear, tight-frame).

    The transform of a real signal is computed over the nonnegative
    frequencies and mirrored by conjugation, so the returned two-sided
    grid is Hermitian-symmetric exactly (not just to rounding).
    """
    xs = x.samples
    pad = cfg.pad
    xp = np.concatenate([np.zeros(pad), xs, np.zeros(pad)])
    n_frames = cfg.num_frames(xs.size)
    frames = kernels().windowed_frames(xp, cfg.window, cfg.hop, n_frames)
    M = cfg.fft_size
    start = M // 2 + 1
    half = np.fft.rfft(frames, n=M, axis=1)
    spec = np.empty((n_frames, M), dtype=np.complex128)
    spec[:, :start] = half
    spec[:, start:] = np.conj(half[:, M - start:0:-1])
    return StftGrid(spec.T, cfg, xs.size, x.sample_rate)


def istft(grid):
    """Synthesize a real TimeSignal by windowed overlap-add.

    Uses the same normalized window as analysis (the frame is tight, so
    the synthesis operator is the adjoint).  The grid must be Hermitian-
    consistent: its anti-Hermitian energy - which is what would surface
    as an imaginary residue in the output - must stay below IMAG_TOL of
    the total, and the real part is then synthesized exactly.
    """
    from .audio_io import TimeSignal

    cfg = grid.config
    c = grid.coeffs
    M = cfg.fft_size
    mirror = (M - np.arange(M)) % M
    total = np.linalg.norm(c)
    asym = 0.5 * np.linalg.norm(c - np.conj(c[mirror]))
    if total > 0 and asym > IMAG_TOL * total:
        raise ValueError(
            f"synthesis imaginary residue {asym / total:.3e} exceeds "
            f"{IMAG_TOL:.0e}; grid is not Hermitian-consistent")

    start = M // 2 + 1
    frames = M * np.fft.irfft(np.ascontiguousarray(c[:start].T), n=M, axis=1)
    padded_len = grid.signal_len + 2 * cfg.pad
    sig = kernels().overlap_add(frames[:, :cfg.win_len], cfg.window, cfg.hop,
                                padded_len)
    return TimeSignal(sig[cfg.pad:cfg.pad + grid.signal_len],
                      grid.sample_rate)


def apply_magnitudes(coeffs, target_mag):
    """Replace coefficient magnitudes, keeping phases (1+0j at zero bins)."""
    flat = coeffs.ravel()
    phase = kernels().unit_phase(flat, EPS_MAG)
    return (target_mag.ravel() * phase).reshape(coeffs.shape)


def proj_magnitude(grid, r):
    """Project onto the measurement-magnitude set: r**(1/d) * phase."""
    target = r.target_magnitudes()
    if target.shape != grid.coeffs.shape:
        raise ValueError(
            f"measurement grid {target.shape} does not match "
            f"coefficient grid {grid.coeffs.shape}")
    out = apply_magnitudes(grid.coeffs, target)
    return StftGrid(out, grid.config, grid.signal_len, grid.sample_rate)


def proj_consistency(grid):
    """Project onto the set of consistent grids (synthesis then analysis)."""
    return stft(istft(grid), grid.config)
