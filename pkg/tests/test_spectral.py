import numpy as np
import pytest

from specdiff.spectral import (
    FrequencyGrid,
    SpectralStatistics,
    build_grid,
    compute_dft,
    smoothed_psd,
    spectral_statistics,
)


def test_impulse_has_flat_dft():
    x = np.array([[2.0, 0.0, 0.0, 0.0]])
    np.testing.assert_allclose(compute_dft(x), np.ones((1, 4)), atol=1e-15)


def test_constant_series_concentrates_at_zero():
    n, c = 16, 1.7
    d = compute_dft(np.full((2, n), c))
    np.testing.assert_allclose(d[:, 0], np.sqrt(n) * c)
    np.testing.assert_allclose(d[:, 1:], 0, atol=1e-12)


def test_matches_direct_sum(rng):
    x = rng.standard_normal((3, 10))
    n = x.shape[1]
    t = np.arange(n)
    F = np.exp(-2j * np.pi * np.outer(t, t) / n) / np.sqrt(n)
    np.testing.assert_allclose(compute_dft(x), x @ F.T, atol=1e-12)


@pytest.mark.parametrize("n", [2, 7, 64, 1000])
def test_parseval(rng, n):
    x = rng.standard_normal((4, n)) * 10
    d = compute_dft(x)
    assert np.sum(np.abs(d) ** 2) == pytest.approx(np.sum(x**2), rel=1e-10)


def test_inverse_recovers_series(rng):
    x = rng.standard_normal((3, 128))
    d = compute_dft(x)
    back = np.fft.ifft(d * np.sqrt(128), axis=1)
    np.testing.assert_allclose(back.real, x, atol=1e-10)
    assert np.max(np.abs(back.imag)) < 1e-10


def test_dft_rejects_bad_input():
    with pytest.raises(ValueError):
        compute_dft(np.ones((2, 1)))
    with pytest.raises(ValueError, match="non-finite"):
        compute_dft(np.array([[1.0, np.inf]]))


@pytest.mark.parametrize("n,M,K,m_t", [(512, 2, 127, 63), (4096, 6, 341, 170), (8, 1, 3, 1),
                                       (2048, 4, 255, 127), (4096, 5, 409, 204)])
def test_grid_rule(n, M, K, m_t):
    g = build_grid(n, M)
    assert (g.K, g.m_t, g.M) == (K, m_t, M)


def test_grid_centers_and_blocks():
    g = build_grid(8, 1)
    np.testing.assert_allclose(g.center_frequencies, [2 / 8])
    g = build_grid(512, 2)
    idx = g.block_indices
    assert idx.shape == (2, 127)
    np.testing.assert_array_equal(idx.ravel(), np.arange(1, 2 * 127 + 1))
    assert idx.max() < 512 // 2
    np.testing.assert_allclose(g.center_frequencies, (idx[:, 63]) / 512)


def test_grid_errors():
    with pytest.raises(ValueError, match="smaller M"):
        build_grid(16, 4)
    with pytest.raises(ValueError, match="even"):
        build_grid(15, 1)
    with pytest.raises(ValueError, match="odd"):
        FrequencyGrid(100, 2, 4)
    with pytest.raises(ValueError, match="exceeds"):
        FrequencyGrid(100, 10, 5)


def test_grid_expert_K():
    g = build_grid(100, K=7)
    assert g.M == (50 - 3 - 1) // 7
    assert build_grid(100, M=2, K=5).M == 2


def test_K1_is_rank_one(rng):
    x = rng.standard_normal((3, 8))
    grid = FrequencyGrid(8, 3, 1)
    d = compute_dft(x)
    st = smoothed_psd(d, d, grid)
    for k in range(3):
        dk = d[:, k + 1]
        np.testing.assert_allclose(st.Sx_hat[k], np.outer(dk, dk.conj()), atol=1e-14)
        assert np.linalg.matrix_rank(st.Sx_hat[k], tol=1e-10) == 1


def test_psd_and_hermitian(rng):
    x = rng.standard_normal((5, 256)) * 1e4
    y = rng.standard_normal((5, 256))
    st = spectral_statistics(x, y, M=3)
    for S in (st.Sx_hat, st.Sy_hat):
        np.testing.assert_array_equal(S, np.conj(np.swapaxes(S, 1, 2)))
        lam = np.linalg.eigvalsh(S)
        assert lam.min() >= -1e-10 * max(1.0, lam.max())


def test_reordering_within_block_is_invariant(rng):
    x = rng.standard_normal((3, 64))
    grid = build_grid(64, 2)
    d = compute_dft(x)
    ref = smoothed_psd(d, d, grid).Sx_hat
    perm = d.copy()
    for block in grid.block_indices:
        perm[:, block] = d[:, rng.permutation(block)]
    np.testing.assert_allclose(smoothed_psd(perm, perm, grid).Sx_hat, ref, atol=1e-13)


def test_statistics_validation():
    with pytest.raises(ValueError, match="shapes differ"):
        spectral_statistics(np.ones((2, 16)), np.ones((3, 16)), M=1)
    with pytest.raises(ValueError, match="not Hermitian"):
        SpectralStatistics(None, np.array([[[1.0, 1.0], [0.0, 1.0]]]), np.eye(2)[None])
    with pytest.raises(ValueError, match="bins"):
        smoothed_psd(np.ones((2, 16)), np.ones((2, 32)), build_grid(16, 1))


def test_white_noise_mean_within_standard_errors():
    # one check per distinct real parameter: diagonal (real) and the upper
    # triangle (real and imaginary parts); each is a 3-SE test
    p, n, draws = 3, 256, 500
    rng = np.random.default_rng(2024)
    L = np.array([[1.0, 0, 0], [0.5, 1.0, 0], [-0.3, 0.2, 0.8]])
    Sigma = L @ L.T
    samples = np.array([spectral_statistics(x, x, M=2).Sx_hat
                        for x in (L @ rng.standard_normal((p, n)) for _ in range(draws))])
    iu = np.triu_indices(p)
    for k in range(samples.shape[1]):
        vals = samples[:, k][:, iu[0], iu[1]]
        for part, target in ((np.real, Sigma[iu]), (np.imag, np.zeros(len(iu[0])))):
            v = part(vals)
            se = v.std(axis=0, ddof=1) / np.sqrt(draws)
            keep = se > 0
            z = np.abs(v.mean(axis=0) - target)[keep] / se[keep]
            assert z.max() <= 3.0, z
