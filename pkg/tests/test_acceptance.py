"""Acceptance criteria, one test per criterion.

Each test prints a single ``[acceptance k] ... PASS|FAIL`` line (also repeated in
the pytest terminal summary) and then asserts the criterion at its stated
tolerance and runtime budget.
"""

import json
import math
import os
import time

import numpy as np
from scipy import stats

from conftest import record_acceptance
from edgewalk.cli import run as cli_run
from edgewalk.constants import compute_constants
from edgewalk.distributions import Kind, SamplerSpec, thin_shell_check
from edgewalk.estimator import (
    coupon_check,
    counterexample_aubrun,
    fixedN_check,
    scaling_sweep,
    trace_concentration_check,
)
from edgewalk.rng import make_stream
from edgewalk.shifts import (
    LowerShiftParams,
    UpperShiftParams,
    check_lower_feasibility,
    check_upper_feasibility,
    delta1,
    delta2,
    explicit_lower_shift,
    lower_forms,
    upper_forms,
)
from edgewalk.stieltjes import lower_edge, sherman_morrison_transform, upper_edge, upper_stieltjes
from edgewalk.symmat import SymMatrix, eigendecompose, rank_one_add
from edgewalk.walk import barrier_walk

SLACK = 1e-9


def report(k: int, title: str, ok: bool, detail: str) -> None:
    record_acceptance(f"[acceptance {k}] {title}: {'PASS' if ok else 'FAIL'} ({detail})")


# --------------------------------------------------------------------------- 1


def _random_instance(rng):
    n = int(rng.integers(1, 31))
    scale = float(np.exp(rng.normal(0.0, 1.0)))
    if rng.random() < 0.5:
        m = int(rng.integers(1, 2 * n + 1))
        g = rng.standard_normal((n, m))
        a = scale * g @ g.T / m
    else:
        g = rng.standard_normal((n, n))
        a = scale * (g + g.T) / 2
    x = rng.standard_normal(n) * float(np.exp(rng.normal(0.0, 1.0)))
    phi = float(10 ** rng.uniform(-2.0, 0.5))
    return SymMatrix(a), x, phi


def test_acceptance_1_deterministic_lemmas():
    t0 = time.perf_counter()
    counts = dict.fromkeys(
        ["lower_implication", "lower_sandwich", "upper_implication", "q2_q2prime", "q2prime_regularity", "sherman_morrison"], 0
    )
    active = {"lower": 0, "upper": 0}
    instances = 10_000
    for i in range(instances):
        rng = make_stream(20240101, i)
        A, x, phi = _random_instance(rng)
        spec = eigendecompose(A)
        updated = eigendecompose(rank_one_add(A, x))

        # lower side at the soft edge, so m_A(ell) = phi
        ell = lower_edge(spec, phi).edge
        t = float(rng.uniform(0.01, 0.99))
        d_explicit = explicit_lower_shift(spec, ell, LowerShiftParams(phi, t), x)
        d_random = float(rng.uniform(0.0, 1.0)) / phi
        for d in (d_explicit, d_random):
            if d > 0:
                res = check_lower_feasibility(spec, ell, d, x, updated=updated, slack=SLACK)
                active["lower"] += bool(res.barrier_condition)
                counts["lower_implication"] += not res.implication_ok
        q1_0, q2_0 = lower_forms(spec, ell, 0.0, x)
        q1_d, q2_d = lower_forms(spec, ell, d_random, x)
        r = 1.0 - d_random * phi
        sandwich = (
            q1_0 <= q1_d * (1 + SLACK) + SLACK
            and q1_d <= q1_0 / r * (1 + SLACK) + SLACK
            and r * r * q2_0 <= q2_d * (1 + SLACK) + SLACK
            and q2_d <= q2_0 / (r * r) * (1 + SLACK) + SLACK
        )
        counts["lower_sandwich"] += not sandwich

        # upper side at the soft edge, so m_A(u) = phi
        u = upper_edge(spec, phi).edge
        tau = float(rng.uniform(0.01, 0.49))
        D_combined = max(delta1(spec, u, tau, x), delta2(spec, u, tau, x))
        D_random = float(10 ** rng.uniform(-3.0, 2.0)) / phi
        for D in (D_combined, D_random):
            if D > 0:
                res = check_upper_feasibility(spec, u, D, x, updated=updated, slack=SLACK)
                active["upper"] += res.certified
                counts["upper_implication"] += not res.implication_ok
        _, Q2, Q2p = upper_forms(spec, u, D_random, x)
        counts["q2_q2prime"] += not (Q2 <= Q2p / D_random * (1 + SLACK) + SLACK)
        c, g = spec.coefficients(x), u - spec.eigenvalues
        Q2p0 = float(np.sum(c / g**2) / np.sum(1.0 / g**2))
        counts["q2prime_regularity"] += not (Q2p <= (1 + phi * D_random) ** 2 * Q2p0 * (1 + SLACK) + SLACK)

        # Sherman-Morrison against the direct transform of A + x x^T
        top = updated.lambda_max
        u_sm = top + float(10 ** rng.uniform(-2.0, 1.0)) * (1.0 + abs(top))
        sm = sherman_morrison_transform(spec, x, u_sm)
        direct = upper_stieltjes(updated, u_sm)
        counts["sherman_morrison"] += not (abs(sm - direct) <= 1e-8 * abs(direct))
    elapsed = time.perf_counter() - t0
    total = sum(counts.values())
    ok = total == 0 and elapsed < 120
    detail = ", ".join(f"{k}={v}" for k, v in counts.items())
    report(1, "deterministic lemma suite", ok,
           f"{instances} instances, violations: {detail}; certified lower={active['lower']} upper={active['upper']}; {elapsed:.1f}s")
    assert total == 0, counts
    assert active["lower"] > 0 and active["upper"] > 0
    assert elapsed < 120


# --------------------------------------------------------------------------- 2


def test_acceptance_2_shift_theorem_means():
    t0 = time.perf_counter()
    C, eta, eps = 2 * math.sqrt(2 / math.pi), 1.0, 0.3
    k = compute_constants(C, eta, eps)
    sampler = SamplerSpec(Kind.GAUSSIAN, 40)
    steps = 20_000
    lo = barrier_walk(sampler, steps, "lower", LowerShiftParams(k.phi_lower, eps / 5), seed=71)
    up = barrier_walk(sampler, steps, "upper", UpperShiftParams(k.phi_upper, eps / 16), seed=72)
    li, ui = lo.increments(), up.increments()
    l_mean, l_se = li.mean(), li.std(ddof=1) / math.sqrt(steps)
    u_mean, u_se = ui.mean(), ui.std(ddof=1) / math.sqrt(steps)
    elapsed = time.perf_counter() - t0
    lower_ok = l_mean >= 1 - eps - 5 * l_se
    upper_ok = u_mean <= 1 + eps + 5 * u_se
    certs = lo.certificates_ok() and up.certificates_ok()
    ok = lower_ok and upper_ok and elapsed < 600
    report(2, "shift-theorem means", ok,
           f"phi_lower={k.phi_lower:.3e} mean={l_mean:.4f}+-{l_se:.4f} >= {1 - eps}; "
           f"phi_upper={k.phi_upper:.3e} mean={u_mean:.4f}+-{u_se:.4f} <= {1 + eps}; "
           f"step certificates {'hold' if certs else 'broken'}; {elapsed:.1f}s")
    assert lower_ok and upper_ok
    assert elapsed < 600


# --------------------------------------------------------------------------- 3


def test_acceptance_3_linear_scaling():
    t0 = time.perf_counter()
    eps = 0.5
    details, ok = [], True
    main_checked = main_viol = 0
    for kind in (Kind.GAUSSIAN, Kind.CUBE):
        pts = scaling_sweep(SamplerSpec(kind, 25), eps, [25, 50, 100], trials=40, seed=31)
        if any(p.censored for p in pts):
            ok = False
            details.append(f"{kind.value}: censored")
            continue
        ratios = [pts[i + 1].N_min / pts[i].N_min for i in range(len(pts) - 1)]
        ok &= all(1.5 <= r <= 2.7 for r in ratios)
        main_checked += sum(p.main_checked for p in pts)
        main_viol += sum(p.main_violations for p in pts)
        details.append(f"{kind.value}: N_min={[p.N_min for p in pts]} ratios={[round(r, 3) for r in ratios]}")
    elapsed = time.perf_counter() - t0
    ok &= main_viol == 0 and elapsed < 1800
    threshold = compute_constants(3.0, 2.0, eps).n_main(25)
    report(3, "O(n) scaling", ok,
           "; ".join(details) + f"; main-theorem N threshold at n=25 is {threshold:.3e}, "
           f"tested (n,N) at or above it: {main_checked}, violations {main_viol}; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------------------- 4


def test_acceptance_4_coupon_collector():
    t0 = time.perf_counter()
    n = 100
    N_lo = math.floor(0.5 * n * math.log(n))
    N_hi = math.ceil(3 * n * math.log(n))
    rows = coupon_check(n, [N_lo, N_hi], trials=200, seed=41)
    elapsed = time.perf_counter() - t0
    ok = rows[0].singular_fraction >= 0.9 and rows[1].singular_fraction <= 0.1 and elapsed < 120
    agree = all(r.disagreements == 0 for r in rows)
    report(4, "coupon collector", ok,
           f"P(singular) at N={N_lo}: {rows[0].singular_fraction} (oracle {1 - rows[0].oracle_full_rank:.5f}), "
           f"at N={N_hi}: {rows[1].singular_fraction} (oracle {1 - rows[1].oracle_full_rank:.2e}); "
           f"eigen/combinatorial agree: {agree}; {elapsed:.1f}s")
    assert ok and agree


# --------------------------------------------------------------------------- 5


def test_acceptance_5_aubrun():
    t0 = time.perf_counter()
    tab = counterexample_aubrun([64, 128, 256, 512, 1024], trials=60, seed=51)
    elapsed = time.perf_counter() - t0
    violations = sum(r.bound_violations for r in tab.rows)
    z = tab.error_slope / tab.error_slope_stderr
    ok = tab.error_slope > 0 and z >= 3 and violations == 0 and elapsed < 900
    means = [round(r.mean_error, 3) for r in tab.rows]
    report(5, "Aubrun counterexample", ok,
           f"mean errors {means}; slope on ln N {tab.error_slope:.3f} (se {tab.error_slope_stderr:.3f}, z={z:.1f}); "
           f"per-trial bound violations {violations}; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------------------- 6


def test_acceptance_6_fixed_aspect_ratio():
    t0 = time.perf_counter()
    rows = fixedN_check(SamplerSpec(Kind.GAUSSIAN, 64), [1.0, 0.5, 0.25, 0.125], 64, trials=200, seed=61,
                        params=(3.0, 2.0))
    elapsed = time.perf_counter() - t0
    dec = all(
        a.mean_lambda_max - b.mean_lambda_max > 5 * math.hypot(a.stderr_lambda_max, b.stderr_lambda_max)
        for a, b in zip(rows, rows[1:])
    )
    inc = all(
        b.mean_lambda_min - a.mean_lambda_min > 5 * math.hypot(a.stderr_lambda_min, b.stderr_lambda_min)
        for a, b in zip(rows, rows[1:])
    )
    toward_one = all(r.mean_lambda_min < 1 < r.mean_lambda_max for r in rows)
    inside = all(r.lower_bound <= r.mean_lambda_min <= r.mean_lambda_max <= r.upper_bound for r in rows)
    ok = dec and inc and toward_one and inside and elapsed < 300
    table = "; ".join(f"y={r.y}: [{r.mean_lambda_min:.4f}, {r.mean_lambda_max:.4f}]" for r in rows)
    report(6, "fixed-y edge corollary", ok,
           f"{table}; lambda_max decreasing {dec}, lambda_min increasing {inc}, inside bounds {inside}; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------------------- 7


def test_acceptance_7_thin_shell():
    t0 = time.perf_counter()
    ranks = [1, 4, 16, 64]
    samples = 200_000
    details, ok = [], True
    for j, spec in enumerate([SamplerSpec(Kind.CUBE, 128), SamplerSpec(Kind.PARETO, 128, alpha=4.5)]):
        r = thin_shell_check(spec, 2, ranks, samples, make_stream(71, j))
        res = stats.spearmanr(ranks, r, alternative="greater")
        ok &= bool(np.all(r <= 10)) and res.pvalue >= 0.05
        details.append(f"{spec.kind.value}: {np.round(r, 3).tolist()} (spearman rho={res.statistic:.2f}, p={res.pvalue:.2f})")
    g = thin_shell_check(SamplerSpec(Kind.GAUSSIAN, 128), 2, ranks, samples, make_stream(71, 9))
    ok &= bool(np.all(np.abs(g - 2) <= 0.1))
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    report(7, "thin shell", ok, "; ".join(details) + f"; gaussian {np.round(g, 3).tolist()}; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------------------- 8


def test_acceptance_8_trace_concentration():
    t0 = time.perf_counter()
    C, eta, eps = 1.0, 2.0, 0.5
    N_values = [6, 12, 24, 48, 96, 192, 384]
    details, ok = [], True
    for law in ("scalar", "pareto_norm"):
        tab = trace_concentration_check(C, eta, eps, N_values, trials=4000, seed=81, law=law)
        m = [r.mean_abs_dev for r in tab.rows]
        nonincreasing = all(b <= a for a, b in zip(m, m[1:]))
        at = {r.N: r.mean_abs_dev for r in tab.rows}[int(tab.threshold)]
        ok &= nonincreasing and at <= eps
        details.append(f"{law}: {np.round(m, 4).tolist()} nonincreasing {nonincreasing}, at N={int(tab.threshold)}: {at:.4f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    report(8, "trace concentration", ok, "; ".join(details) + f"; {elapsed:.1f}s")
    assert ok


# --------------------------------------------------------------------------- 9


MANIFESTS = {
    "estimate": {"seed": 91, "sampler": {"kind": "pareto_product", "dim": 12, "alpha": 4.5}, "N": 300, "trials": 24},
    "sweep": {"seed": 92, "sampler": {"kind": "cube", "dim": 4}, "eps": 0.5, "n_values": [4, 8], "trials": 8},
    "walk": {"seed": 93, "sampler": {"kind": "gaussian", "dim": 6}, "N": 50, "side": "upper", "phi": 0.2, "tau": 0.05},
    "counterexample": {"seed": 94, "kind": "aubrun", "N_values": [8, 16, 32], "trials": 12},
    "fixedn": {"seed": 95, "sampler": {"kind": "gaussian", "dim": 8}, "n": 8, "y_values": [1.0, 0.5], "trials": 10},
}


def test_acceptance_9_reproducibility(tmp_path):
    t0 = time.perf_counter()
    thread_counts = sorted({1, 4, os.cpu_count() or 1})
    mismatches = []
    files = 0
    for sub, manifest in MANIFESTS.items():
        cfg = tmp_path / f"{sub}.json"
        cfg.write_text(json.dumps(manifest))
        outputs = []
        for t in thread_counts + [1]:
            out = tmp_path / f"{sub}-{t}-{len(outputs)}"
            assert cli_run([sub, "--config", str(cfg), "--out", str(out), "--threads", str(t)]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        files += len(outputs[0])
        if any(o != outputs[0] for o in outputs[1:]):
            mismatches.append(sub)
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 300
    report(9, "reproducibility", ok,
           f"{len(MANIFESTS)} manifests, {files} output files compared across threads {thread_counts} and a rerun; "
           f"mismatches {mismatches}; {elapsed:.1f}s")
    assert ok
