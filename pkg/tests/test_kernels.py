import os
import subprocess
import sys

import numpy as np
import pytest
from conftest import random_complex, random_stack

from specdiff import _accel, _kernels
from specdiff.linalg import eigendecompose

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")

NP = _kernels.get_kernels("numpy")


@pytest.fixture(scope="module")
def NB():
    return _kernels.get_kernels("numba")


def test_group_shrink_agree(NB, rng):
    A = random_complex(rng, 3, 5, 5)
    A[:, 1, 2] = 0
    w = rng.uniform(0, 2, (5, 5))
    np.testing.assert_allclose(NB["group_shrink"](A, w, 1.7), NP["group_shrink"](A, w, 1.7),
                               rtol=1e-14, atol=1e-15)


def test_psd_blocks_agree(NB, rng):
    d = random_complex(rng, 4, 64)
    blocks = np.ascontiguousarray(1 + np.arange(15).reshape(3, 5))
    a, b = NB["psd_blocks"](d, blocks), NP["psd_blocks"](d, blocks)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-13)
    for S in (a, b):
        np.testing.assert_array_equal(S, np.conj(np.swapaxes(S, 1, 2)))


def test_var_filter_agree(NB, rng):
    coefs = 0.2 * rng.standard_normal((3, 4, 4))
    noise = rng.standard_normal((200, 4))
    np.testing.assert_allclose(NB["var_filter"](coefs, noise), NP["var_filter"](coefs, noise),
                               rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("complex_", [True, False])
def test_admm_loop_agree(NB, rng, complex_):
    Sx, Sy = random_stack(rng, 2, 4, 0.3, complex_), random_stack(rng, 2, 4, 0.3, complex_)
    ex, ey = eigendecompose(Sx), eigendecompose(Sy)
    dtype = complex if complex_ else float
    args = (np.ascontiguousarray(ex.unitary.astype(dtype)), ex.eigenvalues,
            np.ascontiguousarray(ey.unitary.astype(dtype)), ey.eigenvalues,
            (Sx - Sy).astype(dtype), np.full((4, 4), 0.05),
            np.zeros_like(Sx, dtype=dtype), np.zeros_like(Sx, dtype=dtype),
            2.0, 10.0, 1e-4, 1e-4, 200)
    a, b = NB["admm_loop"](*args), NP["admm_loop"](*args)
    assert a[4] == b[4] and a[5] == b[5]  # iterations, converged
    for x, y in zip(a[:3], b[:3]):
        np.testing.assert_allclose(x, y, atol=1e-10)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.get_kernels("cuda")


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("0", "numba"), ("true", "numpy")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, SPECDIFF_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from specdiff import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
