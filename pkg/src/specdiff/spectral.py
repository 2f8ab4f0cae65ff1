"""Normalized DFTs, the block frequency grid and smoothed PSD estimates."""
from dataclasses import dataclass

import numpy as np

from specdiff import _kernels
from specdiff.linalg import NumericalError, as_hermitian


@dataclass(frozen=True)
class FrequencyGrid:
    """Disjoint blocks of ``K = 2 m_t + 1`` consecutive DFT bins.

    Block ``k`` (0-based here) covers bins ``k K + 1 ... (k + 1) K`` and is
    centred on ``center_frequencies[k] = (k K + m_t + 1) / n``.
    """

    n: int
    M: int
    K: int

    def __post_init__(self):
        if self.K < 1 or self.K % 2 == 0:
            raise ValueError(f"K must be a positive odd integer, got {self.K}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.M * self.K > self.n // 2 - 1:
            raise ValueError(
                f"M*K = {self.M * self.K} exceeds n/2 - 1 = {self.n // 2 - 1}; "
                "bins 0 and n/2 are excluded"
            )

    @property
    def m_t(self):
        return (self.K - 1) // 2

    @property
    def center_frequencies(self):
        k = np.arange(self.M)
        return (k * self.K + self.m_t + 1) / self.n

    @property
    def block_indices(self):
        return 1 + np.arange(self.M * self.K).reshape(self.M, self.K)


@dataclass
class SpectralStatistics:
    """Smoothed PSD estimates ``Sx_hat[k]``, ``Sy_hat[k]`` of shape ``(M, p, p)``.

    ``grid`` is None for time-domain (i.i.d.) statistics.
    """

    grid: FrequencyGrid
    Sx_hat: np.ndarray
    Sy_hat: np.ndarray

    def __post_init__(self):
        self.Sx_hat = as_hermitian(self.Sx_hat, "Sx_hat")
        self.Sy_hat = as_hermitian(self.Sy_hat, "Sy_hat")
        if self.Sx_hat.ndim != 3 or self.Sx_hat.shape != self.Sy_hat.shape:
            raise ValueError(
                f"Sx_hat/Sy_hat must be matching (M, p, p) stacks, got "
                f"{self.Sx_hat.shape} and {self.Sy_hat.shape}"
            )

    @property
    def p(self):
        return self.Sx_hat.shape[1]

    @property
    def M(self):
        return self.Sx_hat.shape[0]

    @property
    def K(self):
        return None if self.grid is None else self.grid.K


def compute_dft(values):
    """Normalized DFT ``d(f_m) = n^{-1/2} sum_t x(t) exp(-i 2 pi m (t-1) / n)``.

    ``values`` is ``(p, n)`` with column ``t`` holding the sample at time ``t``.
    Returns a complex ``(p, n)`` array indexed by ``m``.
    """
    x = np.atleast_2d(np.asarray(values, dtype=float))
    n = x.shape[1]
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("time series contains non-finite values")
    return np.fft.fft(x, axis=1) / np.sqrt(n)


def build_grid(n, M=None, K=None):
    """Frequency grid for ``n`` samples.

    With ``M`` only, ``K`` is the largest odd integer ``<= n / (2 M)``. Passing
    ``K`` explicitly (with or without ``M``) is the expert mode; ``M`` then
    defaults to ``floor((n/2 - m_t - 1) / K)``.
    """
    if n % 2:
        raise ValueError(f"n must be even, got {n}")
    if K is None:
        if M is None or M < 1:
            raise ValueError("M must be a positive integer")
        K = n // (2 * M)
        if K % 2 == 0:
            K -= 1
        if K < 3:
            raise ValueError(
                f"M={M} is too large for n={n} (smoothing span K={K} < 3); use a smaller M"
            )
    elif M is None:
        m_t = (K - 1) // 2
        M = (n // 2 - m_t - 1) // K
        if M < 1:
            raise ValueError(f"K={K} is too large for n={n}")
    return FrequencyGrid(n=n, M=M, K=K)


def smoothed_psd(dft_x, dft_y, grid):
    """Average of ``d d^H`` over each block of the grid, for x and y."""
    for name, d in (("dft_x", dft_x), ("dft_y", dft_y)):
        if d.shape[1] != grid.n:
            raise ValueError(f"{name} has {d.shape[1]} bins, grid expects n={grid.n}")
    blocks = np.ascontiguousarray(grid.block_indices)
    Sx = _kernels.psd_blocks(np.ascontiguousarray(dft_x, dtype=complex), blocks)
    Sy = _kernels.psd_blocks(np.ascontiguousarray(dft_y, dtype=complex), blocks)
    for name, S in (("Sx_hat", Sx), ("Sy_hat", Sy)):
        if not np.all(np.isfinite(S)):
            raise NumericalError(f"{name}: smoothed periodogram overflowed (rescale the data)")
    return SpectralStatistics(grid, Sx, Sy)


def spectral_statistics(x, y, M=None, K=None):
    """``(p, n)`` series pair to :class:`SpectralStatistics` in one call."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"x and y shapes differ: {x.shape} vs {y.shape}")
    grid = build_grid(x.shape[1], M=M, K=K)
    return smoothed_psd(compute_dft(x), compute_dft(y), grid)
