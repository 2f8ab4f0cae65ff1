"""Time the numba and numpy kernel paths on the same inputs.

    python3 benchmarks/bench_kernels.py [--p 60] [--M 4] [--repeat 5]

The first numba call per kernel is excluded (compilation / cache load).
"""
import argparse
import time

import numpy as np

from specdiff import _kernels, synth
from specdiff.linalg import eigendecompose
from specdiff.spectral import build_grid, compute_dft


def _best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def make_inputs(p, M, n, seed):
    rng = np.random.default_rng(seed)
    mx, my = synth.gen_model_pair("ar", p, rng, block_size=p // 6 if p % 6 == 0 else None)
    x = synth.simulate(mx, n, rng)
    y = synth.simulate(my, n, rng)
    grid = build_grid(n, M=M)
    dx, dy = compute_dft(x), compute_dft(y)
    blocks = np.ascontiguousarray(grid.block_indices)
    Sx = _kernels.get_kernels("numpy")["psd_blocks"](dx, blocks)
    Sy = _kernels.get_kernels("numpy")["psd_blocks"](dy, blocks)
    ex, ey = eigendecompose(Sx, "Sx"), eigendecompose(Sy, "Sy")
    lam = 0.1 * 2 * np.max(np.sqrt(np.sum(np.abs(Sx - Sy) ** 2, axis=0)))
    admm_args = (
        np.ascontiguousarray(ex.unitary), np.ascontiguousarray(ex.eigenvalues),
        np.ascontiguousarray(ey.unitary), np.ascontiguousarray(ey.eigenvalues),
        np.ascontiguousarray(Sx - Sy), np.full((p, p), lam),
        np.zeros_like(Sx), np.zeros_like(Sx), 2.0, 10.0, 1e-4, 1e-4, 200,
    )
    A = rng.standard_normal((M, p, p)) + 1j * rng.standard_normal((M, p, p))
    noise = rng.standard_normal((n + synth.BURN_IN, p))
    return {
        "group_shrink": (A, np.full((p, p), 1.0), 2.0),
        "admm_loop": admm_args,
        "psd_blocks": (dx, blocks),
        "var_filter": (np.ascontiguousarray(mx.coefs), noise),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=60)
    ap.add_argument("--M", type=int, default=4)
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    try:
        nb = _kernels.get_kernels("numba")
    except RuntimeError as exc:
        print(f"numba path unavailable: {exc}")
        return 1
    npk = _kernels.get_kernels("numpy")
    inputs = make_inputs(args.p, args.M, args.n, args.seed)
    print(f"p={args.p} M={args.M} n={args.n}, best of {args.repeat}")
    print(f"{'kernel':14s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, kargs in inputs.items():
        nb[name](*kargs)  # compile or load from cache
        t_np = _best_of(lambda: npk[name](*kargs), args.repeat)
        t_nb = _best_of(lambda: nb[name](*kargs), args.repeat)
        print(f"{name:14s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
