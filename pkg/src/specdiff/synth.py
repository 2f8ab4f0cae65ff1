"""Block-diagonal VAR(3)/VMA(3) model pairs, simulation, exact spectra and
ground-truth differential edges."""
from dataclasses import dataclass, field, replace

import numpy as np

from specdiff import _kernels

BURN_IN = 100
ORDER = 3
TRUTH_FREQS = np.round(np.arange(0, 51) * 0.01, 2)
PEAKY_LIMIT = 50_000.0

# p -> (number of blocks, block size)
LAYOUTS = {60: (6, 10), 120: (8, 15), 240: (8, 30)}

_AR_RANGE = (0.3, 0.8)
_MA_RANGE = (0.2, 0.4)
_AR_FILL = 0.20
_MA_FILL = 0.25
_STABILITY = 0.95


@dataclass
class SynthModel:
    """Linear Gaussian model ``x = H(L) w`` with ``w ~ N(0, omega^{-1})``.

    ``kind`` is ``"ar"`` (``x(t) = sum_i A_i x(t-i) + w(t)``) or ``"ma"``
    (``x(t) = 0.5 w(t) + sum_i (B_i / i) w(t-i)``). ``coefs[i-1]`` holds
    ``A_i`` or ``B_i``.
    """

    kind: str
    coefs: np.ndarray
    omega: np.ndarray
    block_size: int = 1
    replaced_block: int | None = None
    _chol: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("ar", "ma"):
            raise ValueError(f"kind must be 'ar' or 'ma', got {self.kind!r}")
        self.coefs = np.asarray(self.coefs, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        if self.coefs.ndim != 3 or self.coefs.shape[1:] != self.omega.shape:
            raise ValueError("coefs must be (order, p, p) and match omega (p, p)")

    @property
    def p(self):
        return self.omega.shape[0]

    @property
    def noise_cov(self):
        return np.linalg.inv(self.omega)

    def noise_factor(self):
        if self._chol is None:
            self._chol = np.linalg.cholesky(self.noise_cov)
        return self._chol


@dataclass
class GroundTruth:
    edges: set
    d: np.ndarray
    b: float
    tau: float
    F: int
    redraw: bool = False

    def density(self):
        p = self.d.shape[0]
        return len(self.edges) / (p * (p - 1) / 2)


def _signed_uniform(rng, size, low, high):
    mag = rng.uniform(low, high, size)
    return np.where(rng.random(size) < 0.5, -mag, mag)


def gen_er_precision(p, rng, p_er=0.001, diag=0.5, low=0.1, high=0.4, max_tries=100):
    """ER-patterned precision matrix with constant diagonal.

    Each off-diagonal pair is connected with probability ``p_er`` and gets a
    value uniform on ``[-high, -low] U [low, high]``. Redrawn until the
    smallest eigenvalue exceeds 1e-6.
    """
    if not 0 <= p_er <= 1:
        raise ValueError("p_er must lie in [0, 1]")
    iu = np.triu_indices(p, k=1)
    for _ in range(max_tries):
        omega = np.eye(p) * diag
        connected = rng.random(iu[0].size) < p_er
        vals = _signed_uniform(rng, iu[0].size, low, high) * connected
        omega[iu] = vals
        omega[(iu[1], iu[0])] = vals
        if np.linalg.eigvalsh(omega)[0] > 1e-6:
            return omega
    raise RuntimeError(f"no positive definite draw in {max_tries} attempts (p={p}, p_er={p_er})")


def companion_radius(coefs):
    """Spectral radius of the VAR companion matrix."""
    order, p, _ = coefs.shape
    comp = np.zeros((order * p, order * p))
    comp[:p, :] = np.concatenate(list(coefs), axis=1)
    comp[p:, :-p] = np.eye((order - 1) * p)
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def stabilize(coefs, target=_STABILITY, tol=1e-3):
    """Shrink ``coefs`` uniformly by the largest ``c <= 1`` with radius ``<= target``."""
    if companion_radius(coefs) <= target:
        return coefs
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if companion_radius(mid * coefs) <= target:
            lo = mid
        else:
            hi = mid
    return lo * coefs


def _draw_block(kind, b, rng, ma_replacement=False):
    fill = _AR_FILL if kind == "ar" else _MA_FILL
    mask = rng.random((ORDER, b, b)) < fill
    if kind == "ar":
        vals = _signed_uniform(rng, (ORDER, b, b), *_AR_RANGE)
    elif ma_replacement:
        vals = rng.uniform(-0.2, 0.2, (ORDER, b, b))
    else:
        vals = _signed_uniform(rng, (ORDER, b, b), *_MA_RANGE)
    return vals * mask


def _layout(p, block_size):
    if block_size is None:
        if p not in LAYOUTS:
            raise ValueError(f"no default block layout for p={p}; pass block_size")
        return LAYOUTS[p]
    if p % block_size:
        raise ValueError(f"p={p} is not divisible by block_size={block_size}")
    return p // block_size, block_size


def gen_model_pair(kind, p, rng, block_size=None, p_er=0.001, max_redraws=100):
    """Draw an (x, y) model pair that differs in one randomly chosen block.

    The block index is shared by all three lag matrices. AR coefficients of x
    are shrunk uniformly to companion radius 0.95; the replacement block gets
    the same shrink factor and, if y is still unstable, is shrunk further on
    its own so the other blocks stay identical. Pairs whose inverse spectrum
    of x is too peaky (``b > 50000``) are redrawn from scratch.
    """
    if kind not in ("ar", "ma"):
        raise ValueError(f"kind must be 'ar' or 'ma', got {kind!r}")
    n_blocks, b = _layout(p, block_size)
    for _ in range(max_redraws):
        omega = gen_er_precision(p, rng, p_er=p_er)
        coefs = np.zeros((ORDER, p, p))
        for q in range(n_blocks):
            sl = slice(q * b, (q + 1) * b)
            coefs[:, sl, sl] = _draw_block(kind, b, rng)
        shrink = 1.0
        if kind == "ar":
            raw_max = np.max(np.abs(coefs))
            coefs = stabilize(coefs)
            shrink = np.max(np.abs(coefs)) / raw_max if raw_max > 0 else 1.0
        q = int(rng.integers(n_blocks))
        sl = slice(q * b, (q + 1) * b)
        new_block = shrink * _draw_block(kind, b, rng, ma_replacement=True)
        if kind == "ar":
            new_block = stabilize(new_block)
        coefs_y = coefs.copy()
        coefs_y[:, sl, sl] = new_block
        mx = SynthModel(kind, coefs, omega, block_size=b)
        my = SynthModel(kind, coefs_y, omega.copy(), block_size=b, replaced_block=q)
        if _peakiness(mx) <= PEAKY_LIMIT:
            return mx, my
    raise RuntimeError(f"could not draw a non-peaky model pair in {max_redraws} attempts")


def simulate(model, n, rng):
    """Simulate ``n`` samples after discarding ``BURN_IN``; returns ``(p, n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    L = model.noise_factor()
    total = n + BURN_IN
    if model.kind == "ar":
        w = rng.standard_normal((total, model.p)) @ L.T
        x = _kernels.var_filter(np.ascontiguousarray(model.coefs), np.ascontiguousarray(w))
    else:
        w = rng.standard_normal((total + ORDER, model.p)) @ L.T
        x = 0.5 * w[ORDER:]
        for i in range(1, ORDER + 1):
            x = x + w[ORDER - i:ORDER - i + total] @ (model.coefs[i - 1] / i).T
    return np.ascontiguousarray(x[BURN_IN:].T)


def transfer(model, freqs):
    """``(F, p, p)`` lag polynomial ``I - sum A_i z^i`` (AR) or ``0.5 I + sum B_i/i z^i`` (MA),
    with ``z = exp(-i 2 pi f)``."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    lags = np.arange(1, ORDER + 1)
    z = np.exp(-2j * np.pi * np.outer(freqs, lags))  # (F, order)
    eye = np.eye(model.p)
    if model.kind == "ar":
        return eye - np.einsum("fi,iab->fab", z, model.coefs)
    scaled = model.coefs / lags[:, None, None]
    return 0.5 * eye + np.einsum("fi,iab->fab", z, scaled)


def true_psd(model, freqs):
    """Exact PSD ``S(f)`` at each frequency; ``(F, p, p)`` (or ``(p, p)`` for scalar f)."""
    scalar = np.ndim(freqs) == 0
    T = transfer(model, freqs)
    sigma = model.noise_cov
    if model.kind == "ar":
        try:
            H = np.linalg.inv(T)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("AR lag polynomial is singular (unstable model)") from exc
    else:
        H = T
    S = H @ sigma @ np.conj(np.swapaxes(H, 1, 2))
    S = 0.5 * (S + np.conj(np.swapaxes(S, 1, 2)))
    return S[0] if scalar else S


def inverse_psd(model, freqs):
    """Exact ``S(f)^{-1}``; computed from the lag polynomial without inverting S."""
    scalar = np.ndim(freqs) == 0
    T = transfer(model, freqs)
    if model.kind == "ma":
        T = np.linalg.inv(T)
    Sinv = np.conj(np.swapaxes(T, 1, 2)) @ model.omega @ T
    Sinv = 0.5 * (Sinv + np.conj(np.swapaxes(Sinv, 1, 2)))
    return Sinv[0] if scalar else Sinv


def _peakiness(model):
    return float(np.max(np.mean(np.abs(inverse_psd(model, TRUTH_FREQS)), axis=0)))


def default_threshold(kind):
    return 0.01 if kind == "ar" else 0.001


def ground_truth_edges(model_x, model_y, tau=None, freqs=TRUTH_FREQS):
    """Edges ``{i, j}`` with ``mean_f |Delta(f)_ij| > tau * b`` on the 0:0.01:0.5 grid."""
    tau = default_threshold(model_x.kind) if tau is None else tau
    try:
        Kx = inverse_psd(model_x, freqs)
        Ky = inverse_psd(model_y, freqs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"spectrum not invertible on the truth grid: {exc}") from exc
    d = np.mean(np.abs(Ky - Kx), axis=0)
    b = float(np.max(np.mean(np.abs(Kx), axis=0)))
    i, j = np.nonzero(np.triu(d > tau * b, k=1))
    edges = {(int(a), int(c)) for a, c in zip(i, j)}
    return GroundTruth(edges, d, b, tau, len(freqs), redraw=b > PEAKY_LIMIT)


def white_noise_model(omega, kind="ar"):
    """Model with all lag coefficients zero (flat spectrum; AR gives ``omega^{-1}``)."""
    omega = np.asarray(omega, dtype=float)
    return SynthModel(kind, np.zeros((ORDER,) + omega.shape), omega)


def with_coefs(model, coefs):
    return replace(model, coefs=np.asarray(coefs, dtype=float), _chol=None)
