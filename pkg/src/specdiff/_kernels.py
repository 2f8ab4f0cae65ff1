"""Hot numeric kernels with a numba path and a pure-numpy path.

Each kernel exists twice with identical signatures. ``get_kernels`` returns
the set for a backend; the module-level names are bound to the backend chosen
by ``specdiff._accel.USE_NUMBA`` at import time.

Status codes returned by ``admm_loop``: 0 finished (converged or hit the
iteration cap), 1 a non-finite iterate appeared.
"""
import numpy as np

from specdiff import _accel

RHO_MIN = 1e-4
RHO_MAX = 1e6


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def _group_shrink_numpy(A, weights, rho):
    norms = np.sqrt(np.sum(A.real**2 + A.imag**2, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = 1.0 - weights / (rho * norms)
    factor = np.where(norms > 0.0, np.maximum(factor, 0.0), 0.0)
    return factor[None, :, :] * A


def _admm_loop_numpy(Qx, Dx, Qy, Dy, G, weights, W, U, rho,
                     mu_bar, tau_abs, tau_rel, m_max):
    M, p, _ = G.shape
    QxH = np.conj(np.swapaxes(Qx, 1, 2))
    QyH = np.conj(np.swapaxes(Qy, 1, 2))
    DxDy = Dx[:, :, None] * Dy[:, None, :]
    W = W.copy()
    U = U.copy()
    Delta = np.zeros_like(G)
    abs_term = p * np.sqrt(M) * tau_abs
    converged = False
    status = 0
    r_pri = r_dual = eps_pri = eps_dual = np.inf
    m = 0
    while m < m_max:
        half = 0.5 * rho
        C = G + half * (W - U)
        T = (QxH @ C @ Qy) / (DxDy + half)
        Delta = Qx @ T @ QyH
        W_new = _group_shrink_numpy(Delta + U, weights, rho)
        R = Delta - W_new
        U = U + R
        r_pri = np.linalg.norm(R)
        r_dual = rho * np.linalg.norm(W_new - W)
        W = W_new
        m += 1
        if not (np.isfinite(r_pri) and np.isfinite(r_dual)):
            status = 1
            break
        e1 = np.linalg.norm(Delta)
        e2 = np.linalg.norm(W)
        e3 = np.linalg.norm(U)
        eps_pri = abs_term + tau_rel * max(e1, e2)
        eps_dual = abs_term + tau_rel * e3 / rho
        if r_pri <= eps_pri and r_dual <= eps_dual:
            converged = True
            break
        if r_pri > mu_bar * r_dual and 2.0 * rho <= RHO_MAX:
            rho *= 2.0
            U = U / 2.0
        elif r_dual > mu_bar * r_pri and 0.5 * rho >= RHO_MIN:
            rho *= 0.5
            U = U * 2.0
    return Delta, W, U, rho, m, converged, status, r_pri, r_dual, eps_pri, eps_dual


def _psd_blocks_numpy(dft, blocks):
    K = blocks.shape[1]
    d = dft[:, blocks]  # (p, M, K)
    d = np.transpose(d, (1, 0, 2))
    S = (d @ np.conj(np.swapaxes(d, 1, 2))) / K
    # exact Hermitian symmetry regardless of BLAS rounding
    return 0.5 * (S + np.conj(np.swapaxes(S, 1, 2)))


def _var_filter_numpy(coefs, noise):
    order, p, _ = coefs.shape
    total = noise.shape[0]
    x = np.zeros((total, p))
    for t in range(total):
        acc = noise[t].copy()
        for i in range(order):
            if t - i - 1 >= 0:
                acc += coefs[i] @ x[t - i - 1]
        x[t] = acc
    return x


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------


def _group_shrink_loops(A, weights, rho, out):
    M, p, _ = A.shape
    for i in range(p):
        for j in range(p):
            s = 0.0
            for k in range(M):
                s += abs(A[k, i, j]) ** 2
            norm = np.sqrt(s)
            if norm > 0.0:
                factor = 1.0 - weights[i, j] / (rho * norm)
                if factor < 0.0:
                    factor = 0.0
            else:
                factor = 0.0
            for k in range(M):
                out[k, i, j] = factor * A[k, i, j]
    return out


def _group_shrink_numba_impl(A, weights, rho):
    out = np.empty_like(A)
    return _group_shrink_loops(A, weights, rho, out)


def _frob(A):
    s = 0.0
    for v in A.ravel():
        s += abs(v) ** 2
    return np.sqrt(s)


def _admm_loop_numba_impl(Qx, Dx, Qy, Dy, G, weights, W, U, rho,
                          mu_bar, tau_abs, tau_rel, m_max):
    M, p, _ = G.shape
    QxH = np.empty_like(Qx)
    QyH = np.empty_like(Qy)
    for k in range(M):
        QxH[k] = np.ascontiguousarray(np.conj(Qx[k]).T)
        QyH[k] = np.ascontiguousarray(np.conj(Qy[k]).T)
    W = W.copy()
    U = U.copy()
    Delta = np.zeros_like(G)
    A = np.empty_like(G)
    W_new = np.empty_like(G)
    C = np.empty((p, p), dtype=G.dtype)
    abs_term = p * np.sqrt(M) * tau_abs
    converged = False
    status = 0
    r_pri = np.inf
    r_dual = np.inf
    eps_pri = np.inf
    eps_dual = np.inf
    m = 0
    while m < m_max:
        half = 0.5 * rho
        for k in range(M):
            for i in range(p):
                for j in range(p):
                    C[i, j] = G[k, i, j] + half * (W[k, i, j] - U[k, i, j])
            T = np.dot(np.dot(QxH[k], C), Qy[k])
            for i in range(p):
                for j in range(p):
                    T[i, j] = T[i, j] / (Dx[k, i] * Dy[k, j] + half)
            Delta[k] = np.dot(np.dot(Qx[k], T), QyH[k])
        for k in range(M):
            for i in range(p):
                for j in range(p):
                    A[k, i, j] = Delta[k, i, j] + U[k, i, j]
        _group_shrink_loops(A, weights, rho, W_new)
        s_pri = 0.0
        s_dual = 0.0
        for k in range(M):
            for i in range(p):
                for j in range(p):
                    r = Delta[k, i, j] - W_new[k, i, j]
                    s_pri += abs(r) ** 2
                    s_dual += abs(W_new[k, i, j] - W[k, i, j]) ** 2
                    U[k, i, j] = U[k, i, j] + r
                    W[k, i, j] = W_new[k, i, j]
        r_pri = np.sqrt(s_pri)
        r_dual = rho * np.sqrt(s_dual)
        m += 1
        if not (np.isfinite(r_pri) and np.isfinite(r_dual)):
            status = 1
            break
        e1 = _frob(Delta)
        e2 = _frob(W)
        e3 = _frob(U)
        eps_pri = abs_term + tau_rel * max(e1, e2)
        eps_dual = abs_term + tau_rel * e3 / rho
        if r_pri <= eps_pri and r_dual <= eps_dual:
            converged = True
            break
        if r_pri > mu_bar * r_dual and 2.0 * rho <= RHO_MAX:
            rho *= 2.0
            U *= 0.5
        elif r_dual > mu_bar * r_pri and 0.5 * rho >= RHO_MIN:
            rho *= 0.5
            U *= 2.0
    return Delta, W, U, rho, m, converged, status, r_pri, r_dual, eps_pri, eps_dual


def _psd_blocks_numba_impl(dft, blocks):
    p = dft.shape[0]
    M, K = blocks.shape
    out = np.zeros((M, p, p), dtype=np.complex128)
    for k in range(M):
        for ell in range(K):
            m = blocks[k, ell]
            for i in range(p):
                di = dft[i, m]
                for j in range(i, p):
                    out[k, i, j] += di * np.conj(dft[j, m])
        for i in range(p):
            for j in range(i, p):
                out[k, i, j] /= K
                if j > i:
                    out[k, j, i] = np.conj(out[k, i, j])
                else:
                    out[k, i, i] = out[k, i, i].real
    return out


def _var_filter_numba_impl(coefs, noise):
    order, p, _ = coefs.shape
    total = noise.shape[0]
    x = np.zeros((total, p))
    for t in range(total):
        for a in range(p):
            x[t, a] = noise[t, a]
        for i in range(order):
            lag = t - i - 1
            if lag < 0:
                break
            for a in range(p):
                s = 0.0
                for b in range(p):
                    s += coefs[i, a, b] * x[lag, b]
                x[t, a] += s
    return x


_NUMPY = {
    "group_shrink": _group_shrink_numpy,
    "admm_loop": _admm_loop_numpy,
    "psd_blocks": _psd_blocks_numpy,
    "var_filter": _var_filter_numpy,
}

if _accel.HAVE_NUMBA:
    # compiled lazily on first call
    _group_shrink_loops = _accel.njit(_group_shrink_loops)
    _frob = _accel.njit(_frob)
    _NUMBA = {
        "group_shrink": _accel.njit(_group_shrink_numba_impl),
        "admm_loop": _accel.njit(_admm_loop_numba_impl),
        "psd_blocks": _accel.njit(_psd_blocks_numba_impl),
        "var_filter": _accel.njit(_var_filter_numba_impl),
    }
else:  # pragma: no cover
    _NUMBA = None


def get_kernels(backend):
    """Return the kernel table for ``"numpy"`` or ``"numba"``."""
    if backend == "numpy":
        return _NUMPY
    if backend == "numba":
        if _NUMBA is None:
            raise RuntimeError("numba is not installed")
        return _NUMBA
    raise ValueError(f"unknown backend {backend!r}")


BACKEND = "numba" if _accel.USE_NUMBA else "numpy"
_active = get_kernels(BACKEND)

group_shrink = _active["group_shrink"]
admm_loop = _active["admm_loop"]
psd_blocks = _active["psd_blocks"]
var_filter = _active["var_filter"]
