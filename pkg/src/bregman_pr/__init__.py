"""Phase retrieval from STFT magnitude/power measurements by Bregman
divergence minimization, with Griffin-Lim baselines and a degradation/
evaluation pipeline."""

from .audio_io import (Measurements, TimeSignal, WavFormatError,
                       read_measurements, read_wav, write_measurements,
                       write_wav)
from .backend import active_backend, set_backend
from .divergences import (DivergenceSpec, Objective, bregman, gradient,
                          objective_value, psi, psi_grad, psi_hess_diag)
from .pipeline import (DegradeConfig, add_noise, empirical_snr,
                       spectral_convergence, spectral_subtract)
from .solvers import (IterTrace, SolverConfig, SolverDivergenceError,
                      init_signal, run_bregman_gd, run_fgla, run_gla)
from .stft import (StftConfig, StftGrid, istft, make_window, proj_consistency,
                   proj_magnitude, stft, tight_normalize)

__version__ = "0.1.0"

__all__ = [
    "Measurements", "TimeSignal", "WavFormatError", "read_measurements",
    "read_wav", "write_measurements", "write_wav",
    "active_backend", "set_backend",
    "DivergenceSpec", "Objective", "bregman", "gradient", "objective_value",
    "psi", "psi_grad", "psi_hess_diag",
    "DegradeConfig", "add_noise", "empirical_snr", "spectral_convergence",
    "spectral_subtract",
    "IterTrace", "SolverConfig", "SolverDivergenceError", "init_signal",
    "run_bregman_gd", "run_fgla", "run_gla",
    "StftConfig", "StftGrid", "istft", "make_window", "proj_consistency",
    "proj_magnitude", "stft", "tight_normalize",
]
