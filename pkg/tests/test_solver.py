import numpy as np
import pytest
from conftest import random_complex, random_hermitian_pd, random_stack

from specdiff.linalg import eigendecompose, group_norms, kronecker_solve_oracle
from specdiff.penalties import PenaltySpec
from specdiff.solver import (
    SolverConfig,
    admm_solve,
    delta_update,
    dtrace_gradient,
    dtrace_loss,
    estimate,
    estimate_iid,
    group_soft_threshold,
    iid_statistics,
    kkt_residual,
    objective,
)
from specdiff.spectral import SpectralStatistics
from specdiff.tuning import zero_model_bound


def _stats(Sx, Sy):
    return SpectralStatistics(None, Sx, Sy)


def _random_pair(rng, M, p, floor=0.3):
    return _stats(random_stack(rng, M, p, floor), random_stack(rng, M, p, floor))


def fista_reference(stats, lam, iters=20000):
    """Accelerated proximal gradient on the same objective, written independently."""
    Sx, Sy = stats.Sx_hat, stats.Sy_hat
    lip = 2 * np.max(np.linalg.eigvalsh(Sx)) * np.max(np.linalg.eigvalsh(Sy))
    step = 1.0 / lip
    X = np.zeros_like(Sx, dtype=complex)
    Z, t = X.copy(), 1.0
    for _ in range(iters):
        grad = 2 * (Sx @ Z @ Sy - (Sx - Sy))  # real gradient packed as complex
        V = Z - step * grad
        nrm = np.sqrt(np.sum(np.abs(V) ** 2, axis=0))
        with np.errstate(divide="ignore", invalid="ignore"):
            shrink = np.where(nrm > 0, np.maximum(1 - step * lam / nrm, 0), 0)
        X_new = shrink * V
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        Z = X_new + (t - 1) / t_new * (X_new - X)
        X, t = X_new, t_new
    return X


# ---- loss and gradient ------------------------------------------------------


def test_loss_zero_delta(rng):
    Sx, Sy = random_hermitian_pd(rng, 3), random_hermitian_pd(rng, 3)
    assert dtrace_loss(np.zeros((3, 3)), Sx, Sy) == 0.0


def test_loss_equal_inputs_is_quadratic(rng):
    Sx = random_hermitian_pd(rng, 3)
    D = random_complex(rng, 3, 3)
    val = dtrace_loss(D, Sx, Sx)
    assert val == pytest.approx(np.trace(Sx @ D @ Sx @ D.conj().T).real)
    assert val >= 0


def test_loss_matches_kronecker_quadratic_form(rng):
    for _ in range(10):
        Sx, Sy = random_hermitian_pd(rng, 3), random_hermitian_pd(rng, 3)
        D = random_complex(rng, 3, 3)
        theta = D.reshape(-1, order="F")
        H = np.kron(Sy.T, Sx)
        b = (Sx - Sy).T.reshape(-1, order="F")
        expected = (theta.conj() @ H @ theta).real - 2 * (b @ theta).real
        assert dtrace_loss(D, Sx, Sy) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def _fd_gradient(D, Sx, Sy, h=1e-6):
    g = np.zeros_like(D)
    for idx in np.ndindex(D.shape):
        for unit in (1.0, 1j):
            E = np.zeros_like(D)
            E[idx] = unit * h
            diff = (dtrace_loss(D + E, Sx, Sy) - dtrace_loss(D - E, Sx, Sy)) / (2 * h)
            g[idx] += diff * unit
    return g / 2  # Wirtinger convention: dL/dD* = (dL/dRe + i dL/dIm) / 2


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(10):
        p = int(rng.integers(1, 6))
        Sx, Sy = random_hermitian_pd(rng, p), random_hermitian_pd(rng, p)
        D = random_complex(rng, p, p)
        G = dtrace_gradient(D, Sx, Sy)
        err = np.linalg.norm(G - _fd_gradient(D, Sx, Sy)) / np.linalg.norm(G)
        assert err < 1e-6


def test_gradient_at_zero(rng):
    Sx, Sy = random_hermitian_pd(rng, 4), random_hermitian_pd(rng, 4)
    np.testing.assert_allclose(dtrace_gradient(np.zeros((4, 4)), Sx, Sy), -(Sx - Sy))


def test_gradient_vanishes_at_population_difference(rng):
    Sx, Sy = random_hermitian_pd(rng, 4, 1.0), random_hermitian_pd(rng, 4, 1.0)
    D = np.linalg.inv(Sy) - np.linalg.inv(Sx)
    assert np.max(np.abs(dtrace_gradient(D, Sx, Sy))) < 1e-10


# ---- Delta-update and shrinkage ----------------------------------------------


def test_delta_update_identity_zero_rhs():
    I = np.eye(3, dtype=complex)
    e = eigendecompose(I)
    np.testing.assert_array_equal(delta_update(e, e, I, I, np.zeros((3, 3)), 2.0), 0)


def test_delta_update_scalar():
    a, b, w, rho = 2.0, 0.5, 0.3 - 0.2j, 3.0
    Sx, Sy = np.array([[a]]), np.array([[b]])
    out = delta_update(eigendecompose(Sx), eigendecompose(Sy), Sx, Sy, np.array([[w]]), rho)
    assert out[0, 0] == pytest.approx((a - b + rho * w / 2) / (a * b + rho / 2))


def test_delta_update_matches_oracle(rng):
    for _ in range(20):
        p = int(rng.integers(1, 7))
        Sx, Sy = random_hermitian_pd(rng, p, 0.0), random_hermitian_pd(rng, p, 0.0)
        WU = random_complex(rng, p, p)
        rho = float(rng.uniform(0.1, 5))
        got = delta_update(eigendecompose(Sx), eigendecompose(Sy), Sx, Sy, WU, rho)
        ref = kronecker_solve_oracle(Sx, Sy, (Sx - Sy) + 0.5 * rho * WU, rho)
        assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 1e-8


def test_delta_update_commutes_with_unitary_conjugation(rng):
    p = 4
    Sx, Sy = random_hermitian_pd(rng, p), random_hermitian_pd(rng, p)
    WU = random_complex(rng, p, p)
    Q, _ = np.linalg.qr(random_complex(rng, p, p))
    base = delta_update(eigendecompose(Sx), eigendecompose(Sy), Sx, Sy, WU, 1.5)
    cx, cy, cw = (Q @ A @ Q.conj().T for A in (Sx, Sy, WU))
    cx, cy = 0.5 * (cx + cx.conj().T), 0.5 * (cy + cy.conj().T)
    rot = delta_update(eigendecompose(cx), eigendecompose(cy), cx, cy, cw, 1.5)
    np.testing.assert_allclose(rot, Q @ base @ Q.conj().T, atol=1e-10)


def test_group_shrink_examples():
    A = np.zeros((2, 2, 2), dtype=complex)
    A[:, 0, 1] = [3, 4]
    A[:, 1, 0] = [0.6, 0.8]  # norm 1: exactly at the threshold
    out = group_soft_threshold(A, 1.0, 1.0)
    np.testing.assert_allclose(out[:, 0, 1], [2.4, 3.2])
    np.testing.assert_array_equal(out[:, 1, 0], 0)
    np.testing.assert_array_equal(group_soft_threshold(A, 0.0, 1.0), A)


# ---- ADMM ---------------------------------------------------------------------


def test_equal_spectra_give_zero(rng):
    S = random_stack(rng, 2, 3)
    res = admm_solve(_stats(S, S.copy()), 0.1)
    np.testing.assert_array_equal(res.W, 0)


def test_above_zero_bound_gives_zero(rng):
    st = _random_pair(rng, 2, 4)
    res = admm_solve(st, zero_model_bound(st) * 1.01)
    np.testing.assert_array_equal(res.W, 0)
    assert res.converged
    # with a razor-thin margin exact zeros may need more iterations, but the
    # solution is numerically zero
    thin = admm_solve(st, zero_model_bound(st) * 1.0001)
    assert np.max(np.abs(thin.W)) < 1e-5
    # just below the bound the model is not empty
    assert np.any(admm_solve(st, 0.9 * zero_model_bound(st), SolverConfig(max_iter=2000)).W != 0)


def test_admm_matches_reference_and_kkt():
    rng = np.random.default_rng(5)
    cfg = SolverConfig(tau_abs=1e-8, tau_rel=1e-8, max_iter=2000)
    for _ in range(3):
        st = _random_pair(rng, 2, 4)
        lam = 0.3 * zero_model_bound(st)
        res = admm_solve(st, lam, cfg)
        ref = fista_reference(st, lam)
        w = np.full((4, 4), lam)
        assert objective(st, w, res.W) == pytest.approx(objective(st, w, ref), abs=1e-5)
        assert kkt_residual(st, w, res.W) <= 1e-4


def test_converged_residuals_satisfy_thresholds(rng):
    st = _random_pair(rng, 3, 4)
    res = admm_solve(st, 0.2 * zero_model_bound(st))
    assert res.converged
    assert res.r_pri <= res.eps_pri and res.r_dual <= res.eps_dual


def test_objective_not_above_start(rng):
    for _ in range(5):
        st = _random_pair(rng, 2, 5)
        w = np.full((5, 5), 0.2 * zero_model_bound(st))
        res = admm_solve(st, w)
        assert objective(st, w, res.W) <= objective(st, w, np.zeros_like(res.W)) + 1e-8


def test_non_finite_input_raises():
    S = np.eye(2)[None].astype(complex)
    bad = S.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(Exception):
        admm_solve(_stats(S, bad), 0.1)


def test_max_iter_is_not_an_error(rng):
    st = _random_pair(rng, 2, 4)
    res = admm_solve(st, 0.1 * zero_model_bound(st), SolverConfig(max_iter=1))
    assert res.iterations == 1 and not res.converged


def test_negative_weights_rejected(rng):
    with pytest.raises(ValueError):
        admm_solve(_random_pair(rng, 1, 2), -1.0)


# ---- LLA driver ---------------------------------------------------------------


def test_lasso_one_pass_logsum_two(rng):
    st = _random_pair(rng, 2, 5)
    lam = 0.3 * zero_model_bound(st)
    assert len(estimate(st, PenaltySpec("lasso", lam)).inner_iterations) == 1
    est = estimate(st, PenaltySpec("logsum", lam, epsilon=0.05))
    assert len(est.inner_iterations) == 2
    assert est.weights.max() <= lam and est.weights.min() < lam


def test_estimate_outputs_are_hermitian(rng):
    est = estimate(_random_pair(rng, 3, 5), PenaltySpec("scad", 0.05))
    for A in (est.delta, est.sparse):
        np.testing.assert_array_equal(A, np.conj(np.swapaxes(A, 1, 2)))
    for i, j in est.edges:
        assert i < j and est.group_norms[i, j] > 0 and est.group_norms[j, i] > 0


def test_diagonal_never_an_edge(rng):
    S = random_stack(rng, 2, 3)
    Sy = S.copy()
    Sy[:, 0, 0] += 1.0
    est = estimate(_stats(S, Sy), PenaltySpec("lasso", 1e-3))
    assert all(i != j for i, j in est.edges)
    assert est.group_norms[0, 0] > 0


def test_iid_identical_inputs_give_zero(rng):
    x = rng.standard_normal((4, 100))
    est = estimate_iid(x, x.copy(), PenaltySpec("lasso", 0.1))
    np.testing.assert_array_equal(est.sparse, 0)
    assert est.edges == set()


def test_iid_identical_distributions_empty_model():
    rng = np.random.default_rng(3)
    empty = 0
    for _ in range(10):
        x, y = rng.standard_normal((5, 2000)), rng.standard_normal((5, 2000))
        empty += not estimate_iid(x, y, PenaltySpec("lasso", 0.3)).edges
    assert empty >= 9


def test_iid_matches_complex_path(rng):
    x, y = rng.standard_normal((2, 50)), rng.standard_normal((2, 50))
    st = iid_statistics(x, y)
    pen = PenaltySpec("lasso", 0.05)
    real = estimate(st, pen)
    cplx = estimate(_stats(st.Sx_hat.astype(complex), st.Sy_hat.astype(complex)), pen)
    assert not np.iscomplexobj(real.delta)
    np.testing.assert_allclose(real.delta, cplx.delta, atol=1e-10, rtol=0)
    assert real.edges == cplx.edges


def test_group_norms_of_estimate(rng):
    est = estimate(_random_pair(rng, 2, 4), PenaltySpec("lasso", 0.05))
    np.testing.assert_allclose(est.group_norms, group_norms(est.sparse))
