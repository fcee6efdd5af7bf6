"""Bregman divergence family and the phase-retrieval objective gradient.

Supported generating functions (all separable, so Hessians are diagonal):

=============  ==========================================
kind           psi per element
=============  ==========================================
l2             x**2
kl             x*log(x)
is             -log(x)
beta           x**b/(b*(b-1)) - x/(b-1) + 1/b
=============  ==========================================

kl and is are the beta->1 and beta->0 limits.  Inputs are floored at
``eps`` before any log or negative power, which keeps every divergence
finite on silent bins.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .audio_io import Measurements, TimeSignal
from .backend import kernels
from .stft import EPS_MAG, StftConfig, StftGrid, istft, stft

_KIND_CODES = {"l2": 0, "kl": 1, "is": 2, "beta": 3}


@dataclass(frozen=True)
class DivergenceSpec:
    """Generating-function choice plus argument orientation.

    ``right`` measures D(r | |Ax|^d) - the measurements sit in the first
    slot; ``left`` swaps the arguments, D(|Ax|^d | r).
    """

    kind: str
    beta: Optional[float] = None
    orientation: str = "right"
    eps: float = 1e-12

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown divergence kind {self.kind!r}")
        if self.kind == "beta":
            if self.beta is None:
                raise ValueError("beta kind requires a beta value")
            if self.beta in (0.0, 1.0):
                raise ValueError(
                    "beta in {0, 1} is singular; use kind='is' or 'kl'")
        elif self.beta is not None:
            raise ValueError(f"kind {self.kind!r} takes no beta value")
        if self.orientation not in ("right", "left"):
            raise ValueError(f"orientation must be right/left, got "
                             f"{self.orientation!r}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def code(self):
        return _KIND_CODES[self.kind]

    @property
    def beta_value(self):
        return 0.0 if self.beta is None else float(self.beta)

    def label(self):
        """Stable text label, e.g. 'l2', 'beta0.5', 'klleft'."""
        base = self.kind if self.kind != "beta" else f"beta{self.beta:g}"
        return base + ("left" if self.orientation == "left" else "")


def _as_vector(values):
    v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if np.any(v < 0):
        raise ValueError("divergence inputs must be nonnegative")
    return v


def psi(values, spec):
    """Sum of the generating function over all elements (floored at eps)."""
    return kernels().psi_sum(_as_vector(values), spec.code,
                             spec.beta_value, spec.eps)


def psi_grad(values, spec):
    """Elementwise first derivative of the generating function."""
    return kernels().psi_grad(_as_vector(values), spec.code,
                              spec.beta_value, spec.eps)


def psi_hess_diag(values, spec):
    """Elementwise second derivative (the Hessian diagonal)."""
    return kernels().psi_hess(_as_vector(values), spec.code,
                              spec.beta_value, spec.eps)


def bregman(p, q, spec):
    """D_psi(p | q) = psi(p) - psi(q) - <grad psi(q), p - q>, elementwise-summed."""
    pv = _as_vector(p)
    qv = _as_vector(q)
    if pv.shape != qv.shape:
        raise ValueError(f"length mismatch: {pv.size} vs {qv.size}")
    return kernels().bregman_sum(pv, qv, spec.code, spec.beta_value, spec.eps)


@dataclass
class Objective:
    """The reconstruction criterion: divergence between measurements and |Ax|^d."""

    divergence: DivergenceSpec
    power: int
    measurements: Measurements
    stft_config: StftConfig

    def __post_init__(self):
        if self.power not in (1, 2):
            raise ValueError(f"power must be 1 or 2, got {self.power}")
        if self.measurements.power != self.power:
            raise ValueError(
                f"measurements carry power {self.measurements.power}, "
                f"objective expects {self.power}")


def _measured_powers(mags, power):
    y = mags.ravel()
    if power == 2:
        y = y * y
    return y


def objective_from_magnitudes(mags, obj):
    """Objective value given precomputed |Ax| magnitudes (solver hot path)."""
    r = obj.measurements.values
    if mags.shape != r.shape:
        raise ValueError(f"magnitude grid {mags.shape} does not match "
                         f"measurements {r.shape}")
    y = _measured_powers(mags, obj.power)
    spec = obj.divergence
    if spec.orientation == "left":
        return kernels().bregman_sum(y, np.ascontiguousarray(r).ravel(),
                                     spec.code, spec.beta_value, spec.eps)
    return kernels().bregman_sum(np.ascontiguousarray(r).ravel(), y,
                                 spec.code, spec.beta_value, spec.eps)


def objective_value(x, obj):
    """Evaluate the divergence between the measurements and |Ax|^d."""
    grid = stft(x, obj.stft_config)
    return objective_from_magnitudes(grid.magnitudes(), obj)


def gradient(x, obj):
    """Euclidean gradient of the objective over real signals.

    The chain is: elementwise divergence weight on the measured powers,
    scaled back through |Ax|^d onto the coefficients, then synthesis (the
    adjoint).  It satisfies <gradient(x), u> = d/dt objective(x + t*u) for
    every direction u; a unit-magnitude-target quadratic objective at d=1
    yields gradient(x) = 2*(x - istft(proj_magnitude(stft(x)))).
    """
    return gradient_from_grid(stft(x, obj.stft_config), obj)


def gradient_from_grid(grid, obj):
    """Gradient given the precomputed analysis grid of x (solver hot path)."""
    cfg = obj.stft_config
    c = grid.coeffs
    mags = np.abs(c)
    y = _measured_powers(mags, obj.power)
    r = np.ascontiguousarray(obj.measurements.values).ravel()
    if y.shape != r.shape:
        raise ValueError(
            f"coefficient grid {c.shape} does not match measurements "
            f"{obj.measurements.values.shape}")
    spec = obj.divergence
    w = kernels().gradient_weights(y, r, spec.code, spec.beta_value,
                                   spec.eps, spec.orientation == "left")
    if obj.power == 1:
        # (d/2)|c|^(d-2) * c collapses to half the unit phase vector;
        # shares the zero-bin phase convention with proj_magnitude.
        u = kernels().unit_phase(c.ravel(), EPS_MAG)
        gg = (u * (0.5 * w)).reshape(c.shape)
    else:
        gg = (c.ravel() * w).reshape(c.shape)
    # The grid is Hermitian in exact arithmetic (real x, symmetric r), but
    # singular divergence weights can amplify FFT rounding asymmetry
    # between mirror bins; re-symmetrizing is a no-op mathematically and
    # equals taking the real part after synthesis.
    mirror = (c.shape[0] - np.arange(c.shape[0])) % c.shape[0]
    gg = 0.5 * (gg + np.conj(gg[mirror]))
    g_grid = StftGrid(gg, cfg, grid.signal_len, grid.sample_rate)
    half = istft(g_grid)
    return TimeSignal(2.0 * half.samples, grid.sample_rate)
