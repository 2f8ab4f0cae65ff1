"""Hermitian matrix primitives.

Matrices are plain numpy arrays. ``as_hermitian`` is the gatekeeper that
checks the Hermitian invariant and removes floating-point asymmetry; the
rest of the package assumes its inputs went through it.
"""
from typing import NamedTuple

import numpy as np

HERMITIAN_ATOL = 1e-12


class NumericalError(RuntimeError):
    """Raised when a numerical routine fails (non-convergence, non-finite values)."""


class EigenFactorization(NamedTuple):
    """``A = unitary @ diag(eigenvalues) @ unitary^H`` with eigenvalues descending."""

    unitary: np.ndarray
    eigenvalues: np.ndarray

    def reconstruct(self):
        Q = self.unitary
        return (Q * self.eigenvalues[..., None, :]) @ np.conj(np.swapaxes(Q, -1, -2))


def as_hermitian(A, name="matrix", atol=HERMITIAN_ATOL):
    """Validate and symmetrize a Hermitian matrix (or stack of matrices).

    Asymmetry up to ``atol`` (absolute, elementwise) is averaged away with
    ``(A + A^H) / 2``; anything larger raises ``ValueError``. Real input stays
    real.
    """
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"{name}: expected square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name}: contains non-finite entries")
    if not np.iscomplexobj(A):
        A = A.astype(np.float64, copy=False)
    AH = np.conj(np.swapaxes(A, -1, -2))
    gap = np.max(np.abs(A - AH)) if A.size else 0.0
    if gap > atol:
        raise ValueError(f"{name}: not Hermitian (max |A - A^H| = {gap:.3e})")
    return 0.5 * (A + AH)


def eigendecompose(A, name="matrix"):
    """Eigendecomposition of a Hermitian matrix or a stack of them.

    Eigenvalues are returned in descending order. Works on ``(p, p)`` and
    ``(M, p, p)`` arrays.
    """
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise NumericalError(f"eigendecompose: {name} has non-finite entries")
    try:
        w, Q = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecompose: eigh failed on {name}: {exc}") from exc
    w = w[..., ::-1]
    Q = Q[..., ::-1]
    return EigenFactorization(np.ascontiguousarray(Q), np.ascontiguousarray(w))


def frobenius(A):
    return float(np.linalg.norm(np.ravel(A)))


def group_norms(stack):
    """Norm over the leading (frequency) axis: ``(M, p, p) -> (p, p)``."""
    stack = np.asarray(stack)
    return np.sqrt(np.sum(stack.real**2 + stack.imag**2, axis=0))


def kronecker_solve_oracle(Sx, Sy, rhs, rho):
    """Dense solve of ``(Sy^* kron Sx + rho/2 I) vec(Delta) = vec(rhs)``.

    Test oracle for the eigen-based Delta update; only meant for p <= 8.
    ``vec`` is column-stacking.
    """
    Sx = np.atleast_2d(np.asarray(Sx, dtype=complex))
    Sy = np.atleast_2d(np.asarray(Sy, dtype=complex))
    rhs = np.atleast_2d(np.asarray(rhs, dtype=complex))
    p = Sx.shape[0]
    if p > 8:
        raise ValueError("kronecker_solve_oracle is limited to p <= 8")
    if rho <= 0:
        raise ValueError("rho must be positive")
    H = np.kron(np.conj(Sy), Sx) + 0.5 * rho * np.eye(p * p)
    b = rhs.reshape(-1, order="F")
    try:
        d = np.linalg.solve(H, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"kronecker system is singular: {exc}") from exc
    return d.reshape(p, p, order="F")
