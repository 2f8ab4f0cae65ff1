"""Penalty-level selection: the empty-model lambda heuristic and a BIC-type criterion."""
from dataclasses import dataclass

import numpy as np

from specdiff.linalg import group_norms
from specdiff.solver import SolverConfig, estimate

LAMBDA_FLOOR = 1e-6
LAMBDA_CEIL = 1e6


@dataclass
class LambdaGrid:
    lam_sm: float
    values: np.ndarray
    degenerate: bool = False

    @property
    def lam_u(self):
        return self.lam_sm / 2

    @property
    def lam_l(self):
        return self.lam_u / 10


def _rescale(stats, scale, mode):
    """Rescaled ``(Sx, Sy)`` and the matching left/right factors for Delta."""
    scale = np.asarray(scale, dtype=float)
    if np.any(scale <= 0):
        raise ValueError("scale entries must be positive")
    if mode == "symmetric":
        d = 1.0 / np.sqrt(scale)
        Sx = d[:, None] * stats.Sx_hat * d[None, :]
        Sy = d[:, None] * stats.Sy_hat * d[None, :]
        return Sx, Sy, 1.0 / d, 1.0 / d
    if mode == "left":
        d = 1.0 / scale
        return d[:, None] * stats.Sx_hat, d[:, None] * stats.Sy_hat, np.ones_like(scale), scale
    raise ValueError(f"unknown scaling mode {mode!r}")


def bic(est, stats, scale=None, mode="symmetric"):
    """``4K sum_k ||Sx D_k Sy - (Sx - Sy)||_F + ln(4K) sum_k |D_k|_0`` on rescaled inputs.

    ``scale`` is the diagonal of the time-domain covariance of x (ones if
    omitted). ``mode="symmetric"`` rescales ``S -> s^{-1/2} S s^{-1/2}`` and
    ``Delta -> s^{1/2} Delta s^{1/2}``; ``mode="left"`` uses ``S -> s^{-1} S``
    and ``Delta -> Delta s``. The sparse (thresholded) estimate is used for
    both terms.
    """
    K = stats.K if stats.K is not None else est.K
    if K is None:
        raise ValueError("BIC needs the smoothing span K")
    scale = np.ones(stats.p) if scale is None else scale
    Sx, Sy, left, right = _rescale(stats, scale, mode)
    D = left[:, None] * est.sparse * right[None, :]
    resid = Sx @ D @ Sy - (Sx - Sy)
    fit = np.sum(np.sqrt(np.sum(np.abs(resid) ** 2, axis=(1, 2))))
    nnz = np.count_nonzero(est.sparse)
    return float(4 * K * fit + np.log(4 * K) * nnz)


def zero_model_bound(stats):
    """Smallest lasso weight for which ``Delta = 0`` is optimal for every group.

    The real gradient of the loss at zero is ``-2 (Sx_k - Sy_k)``, so zero
    is optimal once ``lambda >= 2 max_ij ||(Sx - Sy)^(ij)||``.
    """
    return 2.0 * float(np.max(group_norms(stats.Sx_hat - stats.Sy_hat)))


def lambda_grid(stats, penalty, cfg=None, n_points=10, rtol=0.02):
    """Geometric grid on ``[lam_sm / 20, lam_sm / 2]``.

    ``lam_sm`` is the smallest lambda giving an empty edge set, located by
    halving down from the zero-model bound and then geometric bisection to
    relative precision ``rtol``.
    """
    cfg = cfg or SolverConfig()

    def empty(lam):
        return not estimate(stats, penalty.with_lambda(lam), cfg).edges

    hi = min(zero_model_bound(stats) * 1.001, LAMBDA_CEIL)
    if hi <= LAMBDA_FLOOR:
        hi = LAMBDA_FLOOR
    if not empty(hi):
        if hi >= LAMBDA_CEIL:
            raise RuntimeError(f"no empty model for lambda <= {LAMBDA_CEIL:g}")
        # diagonal groups can keep off-diagonal ones alive past the bound
        while not empty(hi):
            hi *= 2
            if hi > LAMBDA_CEIL:
                raise RuntimeError(f"no empty model for lambda <= {LAMBDA_CEIL:g}")
    lo = hi
    degenerate = False
    while True:
        lo = lo / 2
        if lo < LAMBDA_FLOOR:
            lo = LAMBDA_FLOOR
            degenerate = empty(lo)
            break
        if not empty(lo):
            break
        hi = lo
    if degenerate:
        lam_sm = LAMBDA_FLOOR
    else:
        while hi / lo > 1 + rtol:
            mid = np.sqrt(lo * hi)
            if empty(mid):
                hi = mid
            else:
                lo = mid
        lam_sm = hi
    lam_u = lam_sm / 2
    values = np.geomspace(lam_u / 10, lam_u, n_points)
    return LambdaGrid(lam_sm=lam_sm, values=values, degenerate=degenerate)


def select_lambda(stats, penalty, cfg=None, grid=None, scale=None, mode="symmetric"):
    """Minimize BIC over the grid; ties go to the larger lambda.

    Returns ``(lambda_star, estimate, bic_trace)`` with ``bic_trace`` aligned
    to ``grid.values``.
    """
    cfg = cfg or SolverConfig()
    if grid is None:
        grid = lambda_grid(stats, penalty, cfg)
    values = grid.values if isinstance(grid, LambdaGrid) else np.atleast_1d(grid)
    trace = []
    best = None
    for lam in values:
        est = estimate(stats, penalty.with_lambda(float(lam)), cfg)
        score = bic(est, stats, scale, mode)
        trace.append(score)
        if best is None or score < best[0] or (score == best[0] and lam > best[1]):
            best = (score, float(lam), est)
    return best[1], best[2], np.array(trace)
