"""Differential graphs of two stationary Gaussian time series in the frequency domain."""
from specdiff._kernels import BACKEND
from specdiff.penalties import PenaltySpec, lla_weights, penalty_value
from specdiff.solver import (
    DifferentialEstimate,
    SolverConfig,
    admm_solve,
    estimate,
    estimate_iid,
)
from specdiff.spectral import (
    FrequencyGrid,
    SpectralStatistics,
    build_grid,
    compute_dft,
    smoothed_psd,
    spectral_statistics,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DifferentialEstimate",
    "FrequencyGrid",
    "PenaltySpec",
    "SolverConfig",
    "SpectralStatistics",
    "admm_solve",
    "build_grid",
    "compute_dft",
    "estimate",
    "estimate_iid",
    "lla_weights",
    "penalty_value",
    "smoothed_psd",
    "spectral_statistics",
]
