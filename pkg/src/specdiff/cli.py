"""Command-line entry point: ``specdiff <command> [options]``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""
import argparse
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from specdiff import __version__, evaluation, io, synth, tuning
from specdiff.linalg import NumericalError
from specdiff.penalties import PenaltySpec
from specdiff.solver import SolverConfig, estimate, iid_statistics
from specdiff.spectral import spectral_statistics

log = logging.getLogger("specdiff")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_solver_args(p):
    g = p.add_argument_group("solver")
    g.add_argument("--rho", type=float, default=2.0)
    g.add_argument("--mu", type=float, default=10.0)
    g.add_argument("--tau-abs", type=float, default=1e-4)
    g.add_argument("--tau-rel", type=float, default=1e-4)
    g.add_argument("--max-iter", type=int, default=200)
    g.add_argument("--lla-passes", type=int, default=None)


def _add_penalty_args(p, need_lambda):
    p.add_argument("--penalty", choices=["lasso", "logsum", "scad"], default="logsum")
    p.add_argument("--lambda", dest="lam", type=float, required=need_lambda)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--scad-a", type=float, default=3.7)


def _add_data_args(p):
    p.add_argument("--x", required=True, help="CSV for the first condition")
    p.add_argument("--y", required=True, help="CSV for the second condition")
    p.add_argument("--transpose", action="store_true", help="rows are variables")
    p.add_argument("--header", action="store_true", help="first row holds names")
    p.add_argument("--log-return", action="store_true")
    p.add_argument("--center", action="store_true")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--m", dest="M", type=int, default=None, help="number of frequency blocks")
    p.add_argument("--k", dest="K", type=int, default=None, help="smoothing span (odd)")


def _add_model_args(p, p_default=60, n_default=2048):
    p.add_argument("--kind", choices=["ar", "ma"], default="ar")
    p.add_argument("--p", type=int, default=p_default)
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--block-size", type=int, default=None)


def build_parser():
    parser = _Parser(prog="specdiff", description="Differential graphs of two time series from inverse spectra.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1, help="worker processes for Monte Carlo commands")
    parser.add_argument("--out", default="specdiff_out", help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw a synthetic model pair and samples")
    _add_model_args(p)

    p = sub.add_parser("estimate", help="estimate the differential graph at a fixed lambda")
    _add_data_args(p)
    _add_penalty_args(p, need_lambda=True)
    _add_solver_args(p)
    p.add_argument("--iid", action="store_true", help="time-domain baseline on sample covariances")
    p.add_argument("--dump-delta", action="store_true")

    p = sub.add_parser("tune", help="select lambda by BIC on the heuristic grid")
    _add_data_args(p)
    _add_penalty_args(p, need_lambda=False)
    _add_solver_args(p)
    p.add_argument("--n-lambda", type=int, default=10)
    p.add_argument("--bic-scaling", choices=["symmetric", "left"], default="symmetric")
    p.add_argument("--dump-delta", action="store_true")

    p = sub.add_parser("bench", help="Monte Carlo benchmark on synthetic pairs")
    _add_model_args(p)
    p.add_argument("--m", dest="M", type=int, default=4)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--penalty", nargs="+", default=["logsum"], choices=["lasso", "logsum", "scad"])
    p.add_argument("--iid", action="store_true", help="also run the time-domain lasso baseline")
    p.add_argument("--lambda-mode", choices=["oracle", "bic"], default="oracle")
    p.add_argument("--n-lambda", type=int, default=10)
    _add_solver_args(p)

    p = sub.add_parser("roc", help="ROC points over a lambda sweep")
    _add_model_args(p)
    p.add_argument("--m", dest="M", type=int, default=4)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--penalty", choices=["lasso", "logsum", "scad"], default="logsum")
    p.add_argument("--iid", action="store_true")
    p.add_argument("--points", type=int, default=15)
    _add_solver_args(p)

    p = sub.add_parser("diagnose", help="finite-sample constants for a synthetic pair")
    _add_model_args(p)
    p.add_argument("--m", dest="M", type=int, default=4)
    p.add_argument("--k", dest="K", type=int, default=None)
    p.add_argument("--tau", type=float, default=3.0)
    p.add_argument("--penalty", choices=["lasso", "logsum"], default="lasso")
    p.add_argument("--epsilon", type=float, default=1e-3)
    return parser


def _solver_cfg(a):
    return SolverConfig(rho=a.rho, mu=a.mu, tau_abs=a.tau_abs, tau_rel=a.tau_rel,
                        max_iter=a.max_iter, lla_passes=a.lla_passes)


def _penalty(a, lam=1.0):
    return PenaltySpec(a.penalty, lam if a.lam is None else a.lam, epsilon=a.epsilon, a=a.scad_a)


def _load_pair(a):
    xs = io.load_timeseries(a.x, transpose=a.transpose, header=a.header)
    ys = io.load_timeseries(a.y, transpose=a.transpose, header=a.header)
    opts = dict(log_return=a.log_return, center=a.center, standardize=a.standardize)
    xs, ys = io.preprocess(xs, **opts), io.preprocess(ys, **opts)
    return io.align_pair(xs, ys)


def _stats(a, xs, ys):
    if a.M is None and a.K is None:
        raise UsageError("give --m (number of frequency blocks) or --k")
    return spectral_statistics(xs.values, ys.values, M=a.M, K=a.K)


def _config_echo(a):
    return {k: v for k, v in sorted(vars(a).items()) if k != "func"}


def cmd_simulate(a, rng):
    mx, my = synth.gen_model_pair(a.kind, a.p, rng, block_size=a.block_size)
    gt = synth.ground_truth_edges(mx, my)
    x = synth.simulate(mx, a.n, rng)
    y = synth.simulate(my, a.n, rng)
    io.write_series_csv(x, os.path.join(a.out, "x.csv"))
    io.write_series_csv(y, os.path.join(a.out, "y.csv"))
    io.write_json({
        "edges": [{"i": i, "j": j} for i, j in sorted(gt.edges)],
        "p": a.p, "density": gt.density(), "b": gt.b, "tau": gt.tau,
        "replaced_block": my.replaced_block, "block_size": my.block_size, "d": gt.d,
    }, os.path.join(a.out, "truth.json"))
    io.write_json(_config_echo(a), os.path.join(a.out, "config.json"))
    print(f"wrote {a.out}/x.csv, y.csv, truth.json ({len(gt.edges)} true edges)")


def cmd_estimate(a, rng):
    xs, ys = _load_pair(a)
    cfg = _solver_cfg(a)
    stats = iid_statistics(xs.values, ys.values) if a.iid else _stats(a, xs, ys)
    est = estimate(stats, _penalty(a), cfg)
    io.emit_results(est, a.out, config=_config_echo(a), dump_delta=a.dump_delta)
    print(f"{len(est.edges)} edges; converged={est.converged}; wrote {a.out}/edges.json")


def cmd_tune(a, rng):
    xs, ys = _load_pair(a)
    cfg = _solver_cfg(a)
    stats = _stats(a, xs, ys)
    pen = _penalty(a)
    grid = tuning.lambda_grid(stats, pen, cfg, n_points=a.n_lambda)
    scale = np.mean(xs.values**2, axis=1)
    lam, est, trace = tuning.select_lambda(stats, pen, cfg, grid, scale, mode=a.bic_scaling)
    io.emit_results(est, a.out, config=_config_echo(a), lam=lam, dump_delta=a.dump_delta)
    io.write_json({
        "lambda_grid": grid.values, "bic_trace": trace, "lambda_star": lam,
        "lambda_sm": grid.lam_sm, "degenerate": grid.degenerate,
        "edges": [[i, j] for i, j in sorted(est.edges)],
    }, os.path.join(a.out, "tune.json"))
    print(f"lambda*={lam:.6g}; {len(est.edges)} edges; wrote {a.out}/tune.json")


def cmd_bench(a, rng):
    methods = [evaluation.MethodSpec(f"fd-{pen}", pen, "fd", a.lambda_mode) for pen in a.penalty]
    if a.iid:
        methods.append(evaluation.MethodSpec("iid-lasso", "lasso", "iid", "oracle"))
    spec = evaluation.BenchmarkSpec(kind=a.kind, p=a.p, n=a.n, M=a.M, runs=a.runs, seed=a.seed,
                                    methods=tuple(methods), n_lambda=a.n_lambda,
                                    block_size=a.block_size, cfg=_solver_cfg(a))
    rep = evaluation.run_benchmark(spec, workers=a.threads)
    io.write_json(rep.to_dict(), os.path.join(a.out, "bench.json"))
    cols = ["method", "runs", "failures", "f1_mean", "f1_std", "hamming_mean", "hamming_std",
            "normalized_hamming_mean", "time_mean", "time_median"]
    with open(os.path.join(a.out, "bench.csv"), "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for s in rep.methods.values():
            row = [s.label] + [io._fmt(getattr(s, c)) for c in cols[1:]]
            fh.write(",".join(row) + "\n")
    for s in rep.methods.values():
        print(f"{s.label:14s} F1 {s.f1_mean:.3f} ({s.f1_std:.3f})  Hamming {s.hamming_mean:.1f}  "
              f"{s.time_mean:.2f}s/run  failures {s.failures}")


# fractions of the empty-model lambda used for ROC sweeps
def _roc_multipliers(points):
    return np.geomspace(1.0, 1e-2, points)


def cmd_roc(a, rng):
    cfg = _solver_cfg(a)
    pen = PenaltySpec(a.penalty)
    mult = _roc_multipliers(a.points)
    tpr = np.zeros(a.points)
    fpr = np.zeros(a.points)
    used = 0
    for _ in range(a.runs):
        mx, my = synth.gen_model_pair(a.kind, a.p, rng, block_size=a.block_size)
        gt = synth.ground_truth_edges(mx, my)
        if not gt.edges:
            continue
        x, y = synth.simulate(mx, a.n, rng), synth.simulate(my, a.n, rng)
        stats = iid_statistics(x, y) if a.iid else spectral_statistics(x, y, M=a.M)
        lam_sm = tuning.lambda_grid(stats, pen, cfg).lam_sm
        pts = np.array(evaluation.roc_sweep(stats, pen, cfg, gt.edges, lam_sm * mult))
        tpr += pts[:, 0]
        fpr += pts[:, 1]
        used += 1
    if not used:
        raise UsageError("every draw had an empty true edge set")
    with open(os.path.join(a.out, "roc.csv"), "w", encoding="utf-8") as fh:
        fh.write("lambda_fraction,fpr,tpr\n")
        for m, f, t in zip(mult, fpr / used, tpr / used):
            fh.write(f"{io._fmt(m)},{io._fmt(f)},{io._fmt(t)}\n")
    print(f"wrote {a.out}/roc.csv ({a.points} points, {used} runs)")


def cmd_diagnose(a, rng):
    mx, my = synth.gen_model_pair(a.kind, a.p, rng, block_size=a.block_size)
    pen = PenaltySpec(a.penalty, epsilon=a.epsilon)
    tc = evaluation.theory_diagnostics(mx, my, a.n, M=a.M, K=a.K, tau=a.tau, penalty=pen)
    io.write_json(asdict(tc), os.path.join(a.out, "diagnostics.json"))
    print(f"nu={tc.nu:.4g}  error bound={tc.error_bound:.4g}  N4={tc.N4}")


COMMANDS = {
    "simulate": cmd_simulate, "estimate": cmd_estimate, "tune": cmd_tune,
    "bench": cmd_bench, "roc": cmd_roc, "diagnose": cmd_diagnose,
}


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if a.threads < 1:
        parser.error("--threads must be >= 1")
    rng = np.random.default_rng(a.seed)
    try:
        os.makedirs(a.out, exist_ok=True)
        COMMANDS[a.command](a, rng)
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"specdiff: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError, OSError) as exc:
        print(f"specdiff: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
