"""Sample covariance experiments.

Trials run on independent streams ``(seed, *prefix, trial_index)`` and are
aggregated in trial order, so results do not depend on the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .constants import compute_constants, edge_bounds, trace_sample_threshold
from .distributions import Kind, SamplerSpec, draw_batch
from .errors import EdgewalkError, PreconditionError
from .rng import make_stream
from .symmat import SymMatrix, eigendecompose

CHUNK_ROWS = 4096
N_CAP = 10**6
SWEEP_RESOLUTION = 1.05
_IDENTITY_RTOL = 1e-10


def sample_covariance(samples) -> SymMatrix:
    """``(1/N) sum_i x_i x_i^T`` for the rows ``x_i`` of ``samples``."""
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise PreconditionError("need a non-empty sequence of equal-length vectors")
    return SymMatrix(X.T @ X / X.shape[0])


def spectral_error(S: SymMatrix, target: SymMatrix) -> float:
    """Operator norm ``||S - target||``."""
    if S.dim != target.dim:
        raise PreconditionError(f"dimension mismatch: {S.dim} vs {target.dim}")
    lam = np.linalg.eigvalsh(S.entries - target.entries)
    return float(max(abs(lam[0]), abs(lam[-1])))


def _stderr(v: np.ndarray) -> float:
    return float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        import os

        threads = os.cpu_count() or 1
    if threads < 1:
        raise PreconditionError(f"thread count must be positive, got {threads!r}")
    return int(threads)


def _parallel_map(fn, items, threads: int | None):
    items = list(items)
    t = resolve_threads(threads)
    if t == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=t) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------- experiments


@dataclass(frozen=True)
class ExperimentConfig:
    sampler: SamplerSpec
    N: int
    trials: int
    seed: int
    target_eps: float | None = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise PreconditionError(f"N must be a positive integer, got {self.N!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise PreconditionError(f"trials must be a positive integer, got {self.trials!r}")

    @property
    def n(self) -> int:
        return self.sampler.dim

    def to_dict(self) -> dict:
        return {
            "sampler": self.sampler.to_dict(),
            "N": int(self.N),
            "trials": int(self.trials),
            "seed": int(self.seed),
            "target_eps": self.target_eps,
        }


@dataclass
class ExperimentResult:
    """Aggregates over trials.

    ``lambda_min``/``lambda_max``/``spectral_error``/``trace_gap`` refer to the
    whitened covariance (the plain one unless the sampler is ``colored``);
    ``colored_errors`` holds ``||Sigma_N - Sigma||`` for ``colored`` runs.
    ``identity_violations`` counts trials breaking each exact per-trial identity.
    """

    config: ExperimentConfig
    mean_spectral_error: float
    stderr_spectral_error: float
    mean_lambda_min: float
    stderr_lambda_min: float
    mean_lambda_max: float
    stderr_lambda_max: float
    mean_trace_gap: float
    stderr_trace_gap: float
    quantiles: tuple[float, float, float]
    spectral_errors: np.ndarray
    lambda_mins: np.ndarray
    lambda_maxs: np.ndarray
    trace_gaps: np.ndarray
    colored_errors: np.ndarray | None = None
    sigma_norm: float | None = None
    identity_violations: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def mean_colored_error(self) -> float | None:
        return None if self.colored_errors is None else float(np.mean(self.colored_errors))

    def summary(self) -> dict:
        return {
            "mean_spectral_error": self.mean_spectral_error,
            "mean_lambda_min": self.mean_lambda_min,
            "mean_lambda_max": self.mean_lambda_max,
            "mean_trace_gap": self.mean_trace_gap,
            "q05_spectral_error": self.quantiles[0],
            "q50_spectral_error": self.quantiles[1],
            "q95_spectral_error": self.quantiles[2],
        }

    def stderrs(self) -> dict:
        return {
            "stderr_spectral_error": self.stderr_spectral_error,
            "stderr_lambda_min": self.stderr_lambda_min,
            "stderr_lambda_max": self.stderr_lambda_max,
            "stderr_trace_gap": self.stderr_trace_gap,
        }

    def to_dict(self) -> dict:
        d = {"config": self.config.to_dict(), **self.summary(), **self.stderrs()}
        d["mean_colored_error"] = self.mean_colored_error
        d["sigma_norm"] = self.sigma_norm
        d["identity_violations"] = dict(self.identity_violations)
        d["per_trial"] = {
            "spectral_error": self.spectral_errors.tolist(),
            "lambda_min": self.lambda_mins.tolist(),
            "lambda_max": self.lambda_maxs.tolist(),
            "trace_gap": self.trace_gaps.tolist(),
        }
        if self.colored_errors is not None:
            d["per_trial"]["colored_error"] = self.colored_errors.tolist()
        return d


@dataclass(frozen=True)
class _Trial:
    lam_min: float
    lam_max: float
    error: float
    trace_gap: float
    colored_error: float | None
    violations: tuple[str, ...]


def _gram(sampler: SamplerSpec, rng: np.random.Generator, N: int) -> tuple[np.ndarray, float]:
    n = sampler.dim
    G = np.zeros((n, n))
    sq = 0.0
    done = 0
    while done < N:
        m = min(CHUNK_ROWS, N - done)
        X = draw_batch(sampler, rng, m)
        G += X.T @ X
        sq += float(np.sum(X * X))
        done += m
    return G, sq


def _whitener(sampler: SamplerSpec) -> np.ndarray | None:
    if sampler.kind is not Kind.COLORED:
        return None
    spec = eigendecompose(SymMatrix(sampler.sigma))
    q = spec.eigenvectors
    return (q / np.sqrt(spec.eigenvalues)) @ q.T


def _run_trial(sampler: SamplerSpec, N: int, rng: np.random.Generator, whitener) -> _Trial:
    n = sampler.dim
    G, sq = _gram(sampler, rng, N)
    S = SymMatrix(G / N)
    violations = []
    colored = None
    if whitener is not None:
        sigma = SymMatrix(sampler.sigma)
        colored = spectral_error(S, sigma)
        W = SymMatrix(whitener @ S.entries @ whitener)
        trace_norm = W.trace() / n
    else:
        W = S
        trace_norm = S.trace() / n
        if abs(trace_norm - sq / (n * N)) > _IDENTITY_RTOL * (1.0 + abs(trace_norm)):
            violations.append("trace")
    lam = np.linalg.eigvalsh(W.entries)
    lmin, lmax = float(lam[0]), float(lam[-1])
    err = spectral_error(W, SymMatrix.identity(n))
    tol = _IDENTITY_RTOL * (1.0 + abs(lmin) + abs(lmax))
    if abs(err - max(lmax - 1.0, 1.0 - lmin)) > tol:
        violations.append("norm_equals_U_or_minus_L")
    M = trace_norm - 1.0
    if not (lmin - 1.0 - tol <= M <= lmax - 1.0 + tol):
        violations.append("L_le_M_le_U")
    if colored is not None:
        sigma_norm = float(np.max(np.abs(np.linalg.eigvalsh(sampler.sigma))))
        if colored > sigma_norm * err * (1.0 + _IDENTITY_RTOL) + _IDENTITY_RTOL:
            violations.append("whitening")
    return _Trial(lmin, lmax, err, abs(trace_norm - 1.0), colored, tuple(violations))


def run_experiment(cfg: ExperimentConfig, threads: int | None = 1, stream_prefix: tuple[int, ...] = ()) -> ExperimentResult:
    """Run ``cfg.trials`` independent trials of ``Sigma_N`` with ``N = cfg.N``."""
    whitener = _whitener(cfg.sampler)

    def one(i: int) -> _Trial:
        try:
            return _run_trial(cfg.sampler, cfg.N, make_stream(cfg.seed, *stream_prefix, i), whitener)
        except EdgewalkError as exc:
            raise type(exc)(f"trial {i}: {exc}") from exc

    trials = _parallel_map(one, range(cfg.trials), threads)
    err = np.array([t.error for t in trials])
    lmin = np.array([t.lam_min for t in trials])
    lmax = np.array([t.lam_max for t in trials])
    gap = np.array([t.trace_gap for t in trials])
    names = ("trace", "norm_equals_U_or_minus_L", "L_le_M_le_U", "whitening")
    violations = {k: sum(k in t.violations for t in trials) for k in names}
    colored = None
    sigma_norm = None
    if whitener is not None:
        colored = np.array([t.colored_error for t in trials])
        sigma_norm = float(np.max(np.abs(np.linalg.eigvalsh(cfg.sampler.sigma))))
    q = np.quantile(err, [0.05, 0.5, 0.95])
    return ExperimentResult(
        config=cfg,
        mean_spectral_error=float(np.mean(err)),
        stderr_spectral_error=_stderr(err),
        mean_lambda_min=float(np.mean(lmin)),
        stderr_lambda_min=_stderr(lmin),
        mean_lambda_max=float(np.mean(lmax)),
        stderr_lambda_max=_stderr(lmax),
        mean_trace_gap=float(np.mean(gap)),
        stderr_trace_gap=_stderr(gap),
        quantiles=(float(q[0]), float(q[1]), float(q[2])),
        spectral_errors=err,
        lambda_mins=lmin,
        lambda_maxs=lmax,
        trace_gaps=gap,
        colored_errors=colored,
        sigma_norm=sigma_norm,
        identity_violations=violations,
    )


# --------------------------------------------------------------------------- scaling sweep


@dataclass(frozen=True)
class SweepPoint:
    n: int
    N_min: int | None
    censored: bool
    evaluations: tuple[tuple[int, float, float], ...]
    main_threshold: float | None = None
    main_checked: int = 0
    main_violations: int = 0


def scaling_sweep(
    sampler: SamplerSpec,
    eps: float,
    n_values,
    trials: int,
    seed: int,
    threads: int | None = 1,
    N_cap: int = N_CAP,
) -> list[SweepPoint]:
    """Minimal ``N`` with Monte Carlo mean ``||Sigma_N - I|| <= eps``, for each ``n``.

    The search doubles from ``N = n`` (or halves when ``n`` already suffices) and
    then bisects geometrically until consecutive candidates differ by at most 5%.
    All candidates for one ``n`` share the trial streams ``(seed, n, trial)``.
    Where the sampler carries known ``(C, eta)``, every evaluated ``N`` at or above
    the main-theorem sample size is also checked against ``eps``.
    """
    if not 0 < eps < 1:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps!r}")
    out = []
    for n in n_values:
        n = int(n)
        spec_n = sampler.with_dim(n)
        cache: dict[int, tuple[float, float]] = {}

        def mean_err(N: int) -> float:
            if N not in cache:
                r = run_experiment(ExperimentConfig(spec_n, N, trials, seed), threads, stream_prefix=(n,))
                cache[N] = (r.mean_spectral_error, r.stderr_spectral_error)
            return cache[N][0]

        censored = False
        N = max(1, n)
        if mean_err(N) <= eps:
            hi = N
            lo = 0
            while hi > 1:
                cand = hi // 2
                if mean_err(cand) <= eps:
                    hi = cand
                else:
                    lo = cand
                    break
        else:
            lo = N
            hi = None
            while hi is None:
                cand = 2 * lo
                if cand > N_cap:
                    censored = True
                    break
                if mean_err(cand) <= eps:
                    hi = cand
                else:
                    lo = cand
        if not censored and lo > 0:
            while hi > SWEEP_RESOLUTION * lo and hi - lo > 1:
                mid = int(round(math.sqrt(lo * hi)))
                mid = min(max(mid, lo + 1), hi - 1)
                if mean_err(mid) <= eps:
                    hi = mid
                else:
                    lo = mid
        threshold = None
        checked = violated = 0
        if spec_n.known_params is not None:
            C, eta = spec_n.known_params
            threshold = compute_constants(C, eta, eps).n_main(n)
            for N_eval, (m, _) in cache.items():
                if N_eval >= threshold:
                    checked += 1
                    violated += m > eps
        evals = tuple((N_eval, m, s) for N_eval, (m, s) in sorted(cache.items()))
        out.append(SweepPoint(n, None if censored else hi, censored, evals, threshold, checked, violated))
    return out


# --------------------------------------------------------------------------- fixed-N edges


@dataclass(frozen=True)
class FixedNRow:
    y: float
    N: int
    mean_lambda_min: float
    stderr_lambda_min: float
    mean_lambda_max: float
    stderr_lambda_max: float
    lower_bound: float | None
    upper_bound: float | None
    bai_yin_min: float
    bai_yin_max: float


def fixedN_check(
    sampler: SamplerSpec,
    y_values,
    n: int,
    trials: int,
    seed: int,
    threads: int | None = 1,
    params: tuple[float, float] | None = None,
) -> list[FixedNRow]:
    """Extreme eigenvalue means at ``N = round(n/y)`` with the fixed-``y`` bounds.

    Bounds use ``params`` or else the sampler's known ``(C, eta)``; they are
    ``None`` when neither is available.
    """
    spec_n = sampler.with_dim(n)
    params = params if params is not None else spec_n.known_params
    rows = []
    for j, y in enumerate(y_values):
        y = float(y)
        if not y > 0:
            raise PreconditionError(f"aspect ratios must be positive, got {y!r}")
        N = max(1, int(round(n / y)))
        r = run_experiment(ExperimentConfig(spec_n, N, trials, seed), threads, stream_prefix=(j,))
        lo = hi = None
        if params is not None:
            lo, hi = edge_bounds(params[0], params[1], y)
        rows.append(
            FixedNRow(
                y, N, r.mean_lambda_min, r.stderr_lambda_min, r.mean_lambda_max, r.stderr_lambda_max,
                lo, hi, (1 - math.sqrt(y)) ** 2 if y <= 1 else 0.0, (1 + math.sqrt(y)) ** 2,
            )
        )
    return rows


# --------------------------------------------------------------------------- trace concentration


def scalar_law_scale(C: float, eta: float) -> float:
    """Pareto scale ``x_m`` for ``Z = 1 + S W`` (``S`` a fair sign, ``W ~ Pareto(1+eta, x_m)``).

    ``x_m`` solves ``(1+x)^a/2 + x^a/2 = C`` with ``a = 1 + eta``, which makes
    ``P{|Z| > t} <= C t^(-1-eta)`` for every ``t > 0`` (given ``C >= 1``) and
    ``E Z = 1``.
    """
    if not C >= 1:
        raise PreconditionError(f"the scalar law needs C >= 1, got {C!r}")
    if not eta > 0:
        raise PreconditionError("eta must be positive")
    a = 1.0 + eta
    f = lambda x: 0.5 * (1 + x) ** a + 0.5 * x**a - C  # noqa: E731
    hi = 1.0
    while f(hi) < 0:
        hi *= 2
    return float(optimize.brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-14))


def draw_scalar_law(rng: np.random.Generator, size: int, C: float, eta: float) -> np.ndarray:
    xm = scalar_law_scale(C, eta)
    a = 1.0 + eta
    w = xm * (1.0 - rng.random(size)) ** (-1.0 / a)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return 1.0 + sign * w


@dataclass(frozen=True)
class TraceRow:
    N: int
    mean_abs_dev: float
    stderr: float


@dataclass(frozen=True)
class TraceTable:
    law: str
    tail_C: float
    eta: float
    eps: float
    threshold: float
    rows: tuple[TraceRow, ...]


def trace_concentration_check(
    tail_C: float,
    eta: float,
    eps: float,
    N_values,
    trials: int,
    seed: int,
    law: str = "scalar",
    dim: int = 16,
    alpha: float = 4.5,
) -> TraceTable:
    """``E|mean(Z_1..Z_N) - 1|`` per ``N`` alongside the sample-size threshold.

    ``law`` is ``"scalar"`` (the symmetric Pareto law of :func:`draw_scalar_law`),
    ``"pareto_norm"`` (``Z = ||X||^2/dim`` for a Pareto product vector) or
    ``"constant"`` (``Z = 1``).
    """
    threshold = trace_sample_threshold(tail_C, eta, eps)
    if law == "pareto_norm":
        spec = SamplerSpec(Kind.PARETO, dim, alpha=alpha)
    elif law not in ("scalar", "constant"):
        raise PreconditionError(f"unknown law {law!r}")
    rows = []
    for N in N_values:
        N = int(N)
        if N < 1:
            raise PreconditionError("N values must be positive")
        dev = np.empty(trials)
        for i in range(trials):
            rng = make_stream(seed, N, i)
            if law == "scalar":
                z = draw_scalar_law(rng, N, tail_C, eta)
            elif law == "pareto_norm":
                X = draw_batch(spec, rng, N)
                z = np.sum(X * X, axis=1) / dim
            else:
                z = np.ones(N)
            dev[i] = abs(float(np.mean(z)) - 1.0)
        rows.append(TraceRow(N, float(np.mean(dev)), _stderr(dev)))
    return TraceTable(law, float(tail_C), float(eta), float(eps), float(threshold), tuple(rows))


# --------------------------------------------------------------------------- counterexamples


@dataclass(frozen=True)
class AubrunRow:
    N: int
    mean_error: float
    stderr_error: float
    mean_max_norm_term: float
    stderr_max_norm_term: float
    bound_violations: int


@dataclass(frozen=True)
class AubrunTable:
    rows: tuple[AubrunRow, ...]
    error_slope: float
    error_slope_stderr: float
    norm_slope: float
    norm_slope_stderr: float


def counterexample_aubrun(N_values, trials: int, seed: int, threads: int | None = 1) -> AubrunTable:
    """``X = xi Z`` with ``Z`` uniform on the sphere of radius ``sqrt(n)`` and ``n = N``.

    Per trial records ``||Sigma_N - I||`` and ``max_i ||X_i||^2 / N - 1``; the first
    is never below the second. Slopes come from least squares of the trial means
    against ``ln N``.
    """
    rows = []
    for N in N_values:
        N = int(N)
        if N < 1:
            raise PreconditionError("N values must be positive")
        spec = SamplerSpec(Kind.AUBRUN, N)

        def one(i: int, N=N, spec=spec):
            X = draw_batch(spec, make_stream(seed, N, i), N)
            S = X.T @ X / N
            lam = np.linalg.eigvalsh(S)
            err = float(max(abs(lam[0] - 1.0), abs(lam[-1] - 1.0)))
            term = float(np.max(np.sum(X * X, axis=1))) / N - 1.0
            ok = err >= term - 1e-12 * (1.0 + abs(term))
            return err, term, ok

        res = _parallel_map(one, range(trials), threads)
        err = np.array([r[0] for r in res])
        term = np.array([r[1] for r in res])
        bad = sum(not r[2] for r in res)
        rows.append(AubrunRow(N, float(np.mean(err)), _stderr(err), float(np.mean(term)), _stderr(term), bad))
    logN = np.log([r.N for r in rows])
    if len(rows) >= 3:
        fe = stats.linregress(logN, [r.mean_error for r in rows])
        fn = stats.linregress(logN, [r.mean_max_norm_term for r in rows])
        slopes = (float(fe.slope), float(fe.stderr), float(fn.slope), float(fn.stderr))
    else:
        slopes = (math.nan,) * 4
    return AubrunTable(tuple(rows), *slopes)


@dataclass(frozen=True)
class CouponRow:
    N: int
    singular_fraction: float
    eigen_singular_fraction: float
    disagreements: int
    oracle_full_rank: float


def coupon_check(n: int, N_values, trials: int, seed: int) -> list[CouponRow]:
    """Singularity of ``Sigma_N`` for the basis coupon sampler.

    Each trial is classified twice: combinatorially (some basis direction never
    drawn) and spectrally (``lambda_min(Sigma_N)`` at rounding level). The oracle
    is the coupon collector approximation ``P(full rank) ~ exp(-n e^(-N/n))``.
    """
    spec = SamplerSpec(Kind.COUPON, n)
    rows = []
    for N in N_values:
        N = int(N)
        comb = eig = disagree = 0
        for i in range(trials):
            X = draw_batch(spec, make_stream(seed, N, i), N)
            hit = np.any(X != 0.0, axis=0)
            s1 = not bool(np.all(hit))
            lam = np.linalg.eigvalsh(X.T @ X / N)
            s2 = bool(lam[0] <= 1e-10 * max(1.0, lam[-1]))
            comb += s1
            eig += s2
            disagree += s1 != s2
        rows.append(CouponRow(N, comb / trials, eig / trials, disagree, math.exp(-n * math.exp(-N / n))))
    return rows
