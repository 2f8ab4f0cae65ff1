"""Edge-set metrics, ROC sweeps, the Monte Carlo benchmark harness and
computable finite-sample constants for the consistency/recovery bounds."""
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from specdiff import synth
from specdiff.linalg import group_norms
from specdiff.penalties import PenaltySpec
from specdiff.solver import SolverConfig, estimate, iid_statistics, sample_covariance
from specdiff.spectral import build_grid, spectral_statistics
from specdiff.tuning import lambda_grid, select_lambda

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- metrics


@dataclass
class MetricReport:
    f1: float
    precision: float
    recall: float
    hamming: int
    normalized_hamming: float  # percent of the p(p-1)/2 pairs
    n_estimated: int = 0
    n_true: int = 0


def _check_pairs(edges, p):
    for i, j in edges:
        if not (0 <= i < j < p):
            raise ValueError(f"invalid edge ({i}, {j}) for p={p}; need 0 <= i < j < p")


def score_edges(estimated, truth, p):
    """Precision, recall, F1 (0/0 -> 0) and Hamming distance of two edge sets."""
    estimated, truth = set(estimated), set(truth)
    _check_pairs(estimated, p)
    _check_pairs(truth, p)
    tp = len(estimated & truth)
    precision = tp / len(estimated) if estimated else 0.0
    recall = tp / len(truth) if truth else 0.0
    denom = precision + recall
    f1 = 2 * precision * recall / denom if denom > 0 else 0.0
    hamming = len(estimated ^ truth)
    pairs = p * (p - 1) / 2
    return MetricReport(
        f1=f1, precision=precision, recall=recall, hamming=hamming,
        normalized_hamming=100.0 * hamming / pairs if pairs else 0.0,
        n_estimated=len(estimated), n_true=len(truth),
    )


def roc_sweep(stats, penalty, cfg, truth, lambdas):
    """``(TPR, FPR)`` for each lambda, in input order."""
    truth = set(truth)
    if not truth:
        raise ValueError("ROC is undefined for an empty true edge set")
    if isinstance(penalty, str):
        penalty = PenaltySpec(penalty)
    p = stats.p
    negatives = p * (p - 1) // 2 - len(truth)
    points = []
    for lam in lambdas:
        est = estimate(stats, penalty.with_lambda(float(lam)), cfg).edges
        tpr = len(est & truth) / len(truth)
        fpr = len(est - truth) / negatives if negatives else 0.0
        points.append((tpr, fpr))
    return points


def thresholded_recovery(est, gamma):
    """Pairs ``i < j`` whose group norm exceeds ``gamma``."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    i, j = np.nonzero(np.triu(est.group_norms > gamma, k=1))
    return {(int(a), int(b)) for a, b in zip(i, j)}


# ---------------------------------------------------------------- benchmark


@dataclass(frozen=True)
class MethodSpec:
    """One column of the benchmark: penalty, domain (``fd`` or ``iid``) and
    how lambda is picked (``oracle`` = best F1 on the grid, ``bic``)."""

    label: str
    penalty: str = "logsum"
    domain: str = "fd"
    lambda_mode: str = "oracle"

    def __post_init__(self):
        if self.domain not in ("fd", "iid"):
            raise ValueError(f"domain must be 'fd' or 'iid', got {self.domain!r}")
        if self.lambda_mode not in ("oracle", "bic"):
            raise ValueError(f"lambda_mode must be 'oracle' or 'bic', got {self.lambda_mode!r}")
        if self.domain == "iid" and self.lambda_mode == "bic":
            raise ValueError("BIC selection needs frequency-domain statistics")


@dataclass(frozen=True)
class BenchmarkSpec:
    kind: str = "ar"
    p: int = 60
    n: int = 2048
    M: int = 4
    runs: int = 20
    seed: int = 0
    methods: tuple = (MethodSpec("fd-logsum"),)
    n_lambda: int = 10
    block_size: int | None = None
    cfg: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class MethodSummary:
    label: str
    runs: int
    failures: int
    f1_mean: float
    f1_std: float
    hamming_mean: float
    hamming_std: float
    normalized_hamming_mean: float
    time_mean: float
    time_median: float
    f1: list
    hamming: list
    lambdas: list


@dataclass
class BenchmarkReport:
    spec: BenchmarkSpec
    methods: dict
    truth_density: list
    degenerate_runs: int = 0

    def to_dict(self):
        spec = asdict(self.spec)
        return {
            "spec": spec,
            "truth_density_mean": float(np.mean(self.truth_density)) if self.truth_density else None,
            "degenerate_runs": self.degenerate_runs,
            "methods": {k: asdict(v) for k, v in self.methods.items()},
        }


def _pick_oracle(stats, penalty, cfg, grid_values, truth, p):
    best = None
    for lam in grid_values:
        est = estimate(stats, penalty.with_lambda(float(lam)), cfg)
        rep = score_edges(est.edges, truth, p)
        if best is None or rep.f1 > best[0].f1 or (rep.f1 == best[0].f1 and lam > best[1]):
            best = (rep, float(lam))
    return best


def _run_method(method, x, y, stats_fd, truth, spec):
    p = spec.p
    penalty = PenaltySpec(method.penalty)
    stats = stats_fd if method.domain == "fd" else iid_statistics(x, y)
    t0 = time.perf_counter()
    grid = lambda_grid(stats, penalty, spec.cfg, n_points=spec.n_lambda)
    if method.lambda_mode == "oracle":
        rep, lam = _pick_oracle(stats, penalty, spec.cfg, grid.values, truth, p)
    else:
        scale = np.diag(sample_covariance(x))
        lam, est, _ = select_lambda(stats, penalty, spec.cfg, grid, scale)
        rep = score_edges(est.edges, truth, p)
    return rep, lam, time.perf_counter() - t0


def _one_run(spec, seed_seq):
    rng = np.random.default_rng(seed_seq)
    mx, my = synth.gen_model_pair(spec.kind, spec.p, rng, block_size=spec.block_size)
    gt = synth.ground_truth_edges(mx, my)
    x = synth.simulate(mx, spec.n, rng)
    y = synth.simulate(my, spec.n, rng)
    out = {"density": gt.density(), "degenerate": not gt.edges, "methods": {}}
    if not gt.edges:
        return out
    stats_fd = spectral_statistics(x, y, M=spec.M)
    for method in spec.methods:
        try:
            out["methods"][method.label] = _run_method(method, x, y, stats_fd, gt.edges, spec)
        except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("run failed for %s: %s", method.label, exc)
            out["methods"][method.label] = exc
    return out


def _summarize(label, results, runs):
    ok = [r for r in results if not isinstance(r, Exception)]
    failures = runs - len(ok)
    f1 = [r[0].f1 for r in ok]
    ham = [r[0].hamming for r in ok]
    nham = [r[0].normalized_hamming for r in ok]
    times = [r[2] for r in ok]
    stat = lambda v, fn: float(fn(v)) if v else float("nan")  # noqa: E731
    return MethodSummary(
        label=label, runs=len(ok), failures=failures,
        f1_mean=stat(f1, np.mean), f1_std=stat(f1, np.std),
        hamming_mean=stat(ham, np.mean), hamming_std=stat(ham, np.std),
        normalized_hamming_mean=stat(nham, np.mean),
        time_mean=stat(times, np.mean), time_median=stat(times, np.median),
        f1=f1, hamming=ham, lambdas=[r[1] for r in ok],
    )


def run_benchmark(spec, workers=1, progress=None):
    """Monte Carlo replicate of the synthetic protocol.

    Every method sees the same model draws and samples. Runs with an empty
    true edge set are flagged (``degenerate_runs``) and skipped; runs where a
    method raises are counted in that method's ``failures``.
    """
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.runs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_one_run, [spec] * spec.runs, seeds))
    else:
        outs = []
        for r, s in enumerate(seeds):
            outs.append(_one_run(spec, s))
            if progress is not None:
                progress(r, outs[-1])
    degenerate = sum(o["degenerate"] for o in outs)
    if degenerate:
        warnings.warn(f"{degenerate} run(s) had an empty true edge set and were skipped", stacklevel=2)
    valid = [o for o in outs if not o["degenerate"]]
    summaries = {}
    for m in spec.methods:
        results = [o["methods"][m.label] for o in valid]
        summary = _summarize(m.label, results, len(valid))
        if summary.failures:
            warnings.warn(f"{m.label}: {summary.failures} run(s) failed", stacklevel=2)
        summaries[m.label] = summary
    return BenchmarkReport(spec, summaries, [o["density"] for o in outs], degenerate)


# ---------------------------------------------------------------- theory constants


@dataclass
class TheoryConstants:
    B_xy: float
    B_d: float
    phi_min: float
    sigma_xy: float
    C0: float
    B_init: float
    N1: int
    N2: int
    N3: int
    N4: int
    lambda_lower: float
    error_bound: float
    nu: float
    gamma: float
    s: int
    K: int
    M: int


def _smallest_odd_at_least(x):
    k = max(1, math.ceil(x))
    return k if k % 2 else k + 1


def _n_for_K(K, M):
    # smallest even n whose grid holds M blocks of K bins (bins 0 and n/2 excluded)
    return 2 * M * K + 2


def theory_diagnostics(model_x, model_y, n, M=None, K=None, s=None, tau=3.0,
                       penalty="lasso", lla_init_norm=None, freqs=synth.TRUTH_FREQS):
    """Finite-sample constants for a synthetic model pair.

    Maxima and minima over ``f`` are taken on ``freqs`` (the truth grid);
    ``nu`` and the true edge count ``s`` use the block-centre frequencies of
    the ``(n, M, K)`` grid. ``N1..N4`` are the smallest ``n = 2 M K + 2`` (odd K,
    M held fixed) meeting each sample-size condition. For log-sum,
    ``lla_init_norm`` is the largest group norm of the LLA initializer; it
    defaults to the largest true group norm.
    """
    if isinstance(penalty, str):
        penalty = PenaltySpec(penalty)
    if penalty.kind == "scad":
        raise ValueError("the bounds do not cover SCAD (its weights can vanish)")
    if tau <= 2:
        raise ValueError("tau must exceed 2")
    p = model_x.p
    if p < 2:
        raise ValueError("need p >= 2 (the constants involve ln p)")
    grid = build_grid(n, M=M, K=K)
    M, K = grid.M, grid.K
    try:
        Sx = synth.true_psd(model_x, freqs)
        Sy = synth.true_psd(model_y, freqs)
        Kx = synth.inverse_psd(model_x, freqs)
        Ky = synth.inverse_psd(model_y, freqs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"true spectrum is singular: {exc}") from exc

    B_xy = float(max(np.max(np.abs(Sx)), np.max(np.abs(Sy))))
    B_d = float(np.max(np.abs(Ky - Kx)))
    phi_min = float(np.min(np.linalg.eigvalsh(Sx)[:, 0] * np.linalg.eigvalsh(Sy)[:, 0]))
    if phi_min <= 0:
        raise np.linalg.LinAlgError("true spectrum is not positive definite on the grid")
    sigma_xy = float(max(np.max(np.real(np.diagonal(Sx, axis1=1, axis2=2))),
                         np.max(np.real(np.diagonal(Sy, axis1=1, axis2=2)))))
    log_term = math.log(16 * p**tau * M)
    lnp = math.log(p)
    C0 = 80 * sigma_xy * math.sqrt(2 * log_term / lnp)

    fk = grid.center_frequencies
    D = synth.inverse_psd(model_y, fk) - synth.inverse_psd(model_x, fk)
    norms = group_norms(D)
    tol = 1e-10 * max(float(np.max(norms)), 1.0)
    iu = np.triu_indices(p, k=1)
    edge_norms = norms[iu][norms[iu] > tol]
    s_true = int(edge_norms.size)
    s = s_true if s is None else int(s)
    nu = float(np.min(edge_norms)) if edge_norms.size else 0.0

    if penalty.kind == "lasso":
        B_init = 1.0
    else:
        init = float(np.max(norms)) if lla_init_norm is None else float(lla_init_norm)
        B_init = 1.0 + init / penalty.epsilon

    lam_coef = 2 * B_init * math.sqrt(M) * (6 * B_xy * B_d * s + 4) * C0 * math.sqrt(lnp)
    lambda_lower = lam_coef / math.sqrt(K)
    error_bound = 4 * math.sqrt(s) * lambda_lower / phi_min

    N1 = _n_for_K(_smallest_odd_at_least(np.nextafter(2 * log_term, np.inf)), M)
    N2 = _n_for_K(_smallest_odd_at_least(np.nextafter(C0**2 * lnp / B_xy, np.inf)), M)
    rhs3 = 768 * B_xy * B_init**2 * s * C0 * math.sqrt(lnp) / phi_min
    N3 = _n_for_K(_smallest_odd_at_least((M * rhs3) ** 2), M)
    if nu > 0:
        # error_bound(K) <= 0.4 nu  <=>  sqrt(K) >= 4 sqrt(s) lam_coef / (0.4 nu phi_min)
        N4 = _n_for_K(_smallest_odd_at_least((4 * math.sqrt(s) * lam_coef / (0.4 * nu * phi_min)) ** 2), M)
    else:
        N4 = 0
    return TheoryConstants(
        B_xy=B_xy, B_d=B_d, phi_min=phi_min, sigma_xy=sigma_xy, C0=C0, B_init=B_init,
        N1=int(N1), N2=int(N2), N3=int(N3), N4=int(N4),
        lambda_lower=lambda_lower, error_bound=error_bound,
        nu=nu, gamma=0.5 * nu, s=s, K=K, M=M,
    )
