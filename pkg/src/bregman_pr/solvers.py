"""Iterative reconstruction: Griffin-Lim, Fast Griffin-Lim and Bregman
gradient descent with Nesterov momentum.

All solvers are deterministic functions of (measurements, configs, seed):
repeated runs produce bit-identical iterates.  Step sizes follow the
Griffin-Lim-compatible convention - with the quadratic magnitude
objective (d=1) a unit step reproduces exactly one Griffin-Lim iteration,
so internally the update applies step/2 times the Euclidean gradient.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .audio_io import TimeSignal
from .divergences import Objective, gradient_from_grid, objective_from_magnitudes
from .stft import StftConfig, StftGrid, apply_magnitudes, istft, stft

_ALGORITHMS = ("gla", "fgla", "bregman_gd")
_INITS = ("random_phase", "zero_phase", "given_signal")


class SolverDivergenceError(RuntimeError):
    """Raised when the objective blows up past the divergence guard."""


@dataclass
class SolverConfig:
    algorithm: str
    objective: Optional[Objective] = None
    step: float = 1.0
    acceleration: float = 0.0
    iterations: int = 1000
    init: str = "random_phase"
    seed: int = 0
    warm_start: Optional[TimeSignal] = None

    def __post_init__(self):
        if self.algorithm not in _ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0.0 <= self.acceleration < 1.0:
            raise ValueError("acceleration must lie in [0, 1)")
        if self.init not in _INITS:
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "given_signal" and self.warm_start is None:
            raise ValueError("init='given_signal' requires warm_start")
        if self.algorithm == "bregman_gd" and self.objective is None:
            raise ValueError("bregman_gd requires an objective")


@dataclass
class IterTrace:
    """Per-iteration history: index, objective J, E_SC and wall-clock ms."""

    iterations: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    spectral_convergence: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)

    def append(self, k, j, sc, ms):
        self.iterations.append(int(k))
        self.objective.append(float(j))
        self.spectral_convergence.append(float(sc))
        self.wall_ms.append(float(ms))

    def __len__(self):
        return len(self.iterations)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("iter,J,SC,ms\n")
            for k, j, sc, ms in zip(self.iterations, self.objective,
                                    self.spectral_convergence, self.wall_ms):
                fh.write(f"{k},{j!r},{sc!r},{ms:.3f}\n")


def _hermitian_phase_field(rng, n_bins, n_frames):
    """Uniform random phases with phi[(M-m) % M] = -phi[m] symmetry."""
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_bins, n_frames))
    mirror = (n_bins - np.arange(n_bins)) % n_bins
    out = np.zeros_like(phases)
    lower = np.arange(n_bins) < mirror
    out[lower] = phases[lower]
    out[mirror[lower]] = -phases[lower]
    return out


def init_signal(r, cfg, stft_cfg, signal_len=None):
    """Build the starting signal for a solver run.

    random_phase and zero_phase synthesize the target magnitudes with
    uniform-random (seeded) or all-zero phases; the grid is Hermitian-
    symmetrized first so the synthesized signal is exactly real.
    """
    if cfg.init == "given_signal":
        return cfg.warm_start

    target = r.target_magnitudes()
    n_bins, n_frames = target.shape
    if signal_len is None:
        signal_len = stft_cfg.min_signal_len(n_frames)
    if signal_len < 1:
        raise ValueError(
            f"measurement grid with {n_frames} frames is too small to "
            f"synthesize a signal")

    mirror = (n_bins - np.arange(n_bins)) % n_bins
    sym_mag = 0.5 * (target + target[mirror])
    if cfg.init == "zero_phase":
        coeffs = sym_mag.astype(np.complex128)
    else:
        rng = np.random.default_rng(cfg.seed)
        phases = _hermitian_phase_field(rng, n_bins, n_frames)
        coeffs = sym_mag * np.exp(1j * phases)
    grid = StftGrid(coeffs, stft_cfg, signal_len, r.sample_rate)
    return istft(grid)


def _mag_mismatch_sq(target_mag, mags):
    diff = target_mag - mags
    return float(np.sum(diff * diff))


def _esc(target_mag, mags, denom):
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(target_mag - mags)) / denom


def _projection_loop(r, stft_cfg, cfg, gamma, signal_len):
    """Shared Griffin-Lim core: iterate P_C(P_M(.)) with optional momentum."""
    target = r.target_magnitudes()
    denom = float(np.linalg.norm(target))
    x = init_signal(r, cfg, stft_cfg, signal_len)

    t_start = time.perf_counter()
    trace = IterTrace()
    c_grid = stft(x, stft_cfg)
    if c_grid.coeffs.shape != target.shape:
        raise ValueError(
            f"measurement grid {target.shape} does not match the "
            f"{c_grid.coeffs.shape} coefficient grid of the init signal")
    mags = c_grid.magnitudes()
    trace.append(0, _mag_mismatch_sq(target, mags), _esc(target, mags, denom),
                 1000.0 * (time.perf_counter() - t_start))

    t_prev = None
    for k in range(cfg.iterations):
        pm = apply_magnitudes(c_grid.coeffs, target)
        x = istft(StftGrid(pm, stft_cfg, c_grid.signal_len, c_grid.sample_rate))
        t_grid = stft(x, stft_cfg)
        mags = t_grid.magnitudes()
        trace.append(k + 1, _mag_mismatch_sq(target, mags),
                     _esc(target, mags, denom),
                     1000.0 * (time.perf_counter() - t_start))
        if gamma > 0.0 and t_prev is not None:
            accel = t_grid.coeffs + gamma * (t_grid.coeffs - t_prev.coeffs)
            c_grid = StftGrid(accel, stft_cfg, t_grid.signal_len,
                              t_grid.sample_rate)
        else:
            c_grid = t_grid
        t_prev = t_grid
    return x, trace


def run_gla(r, stft_cfg, cfg, signal_len=None):
    """Griffin-Lim: alternate magnitude and consistency projections.

    Works on magnitude targets; power measurements (d=2) are converted to
    magnitudes r**(1/2) before projecting.
    """
    return _projection_loop(r, stft_cfg, cfg, 0.0, signal_len)


def run_fgla(r, stft_cfg, cfg, signal_len=None):
    """Fast Griffin-Lim: projections plus fixed-parameter momentum."""
    return _projection_loop(r, stft_cfg, cfg, cfg.acceleration, signal_len)


def run_bregman_gd(cfg, signal_len=None):
    """Gradient descent on the Bregman objective with Nesterov momentum.

    Iterates y_k = x_k + gamma*(x_k - x_{k-1}); x_{k+1} = y_k - (step/2) *
    gradient(y_k).  The analysis grid of the extrapolated point is formed
    by the same linear combination of the stored grids (the transform is
    linear), so each iteration runs one analysis and one synthesis.
    Aborts with SolverDivergenceError when the objective exceeds 1e6
    times its starting value.
    """
    obj = cfg.objective
    r = obj.measurements
    stft_cfg = obj.stft_config
    target = r.target_magnitudes()
    denom = float(np.linalg.norm(target))
    mu = cfg.step / 2.0
    gamma = cfg.acceleration

    x = init_signal(r, cfg, stft_cfg, signal_len).samples
    sample_rate = r.sample_rate

    t_start = time.perf_counter()
    trace = IterTrace()
    grid = stft(TimeSignal(x, sample_rate), stft_cfg)
    if grid.coeffs.shape != target.shape:
        raise ValueError(
            f"measurement grid {target.shape} does not match the "
            f"{grid.coeffs.shape} coefficient grid of the init signal")
    mags = grid.magnitudes()
    j0 = objective_from_magnitudes(mags, obj)
    guard = 1e6 * j0 if j0 > 0 else 1e-6
    trace.append(0, j0, _esc(target, mags, denom),
                 1000.0 * (time.perf_counter() - t_start))

    x_prev, grid_prev = x, grid
    for k in range(cfg.iterations):
        if gamma > 0.0:
            y = x + gamma * (x - x_prev)
            y_grid = StftGrid(grid.coeffs + gamma * (grid.coeffs
                                                     - grid_prev.coeffs),
                              stft_cfg, grid.signal_len, sample_rate)
        else:
            y, y_grid = x, grid
        try:
            g = gradient_from_grid(y_grid, obj)
            x_next = y - mu * g.samples
            grid_next = stft(TimeSignal(x_next, sample_rate), stft_cfg)
        except ValueError as exc:
            raise SolverDivergenceError(
                f"iterate blew up at iteration {k + 1} with step "
                f"{cfg.step}: {exc}") from exc
        mags = grid_next.magnitudes()
        j = objective_from_magnitudes(mags, obj)
        if not np.isfinite(j) or j > guard:
            raise SolverDivergenceError(
                f"objective {j:.3e} exceeded the divergence guard at "
                f"iteration {k + 1}; step {cfg.step} is too large")
        trace.append(k + 1, j, _esc(target, mags, denom),
                     1000.0 * (time.perf_counter() - t_start))
        x_prev, x = x, x_next
        grid_prev, grid = grid, grid_next
    return TimeSignal(x, sample_rate), trace
