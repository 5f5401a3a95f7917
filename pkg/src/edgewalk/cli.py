"""Command-line interface.

Every subcommand reads one JSON config, writes ``<subcommand>.json`` (version,
seed, resolved config, config hash and result) plus CSV tables into ``--out``.
Exit codes: 0 success, 1 numeric non-convergence, 2 config error.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .distributions import SamplerSpec, draw_batch, estimate_sr_tail, estimate_wr_moment, thin_shell_check
from .errors import NearSingularResolventError, NonConvergenceError, PreconditionError
from .estimator import (
    ExperimentConfig,
    coupon_check,
    counterexample_aubrun,
    fixedN_check,
    run_experiment,
    sample_covariance,
    scaling_sweep,
    trace_concentration_check,
)
from .output import config_hash, to_jsonable, write_csv, write_json
from .rng import make_stream
from .shifts import LowerShiftParams, UpperShiftParams
from .stieltjes import lower_edge, upper_edge
from .symmat import SymMatrix, eigendecompose
from .walk import barrier_walk

THREADS_ENV = "EDGEWALK_THREADS"


class ConfigError(Exception):
    """Invalid or unreadable configuration (exit code 2)."""


# --------------------------------------------------------------------------- schemas

_INT = {"type": "integer"}
_POS_INT = {"type": "integer", "minimum": 1}
_NUM = {"type": "number"}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

SAMPLER_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["gaussian", "cube", "sphere", "pareto_product", "aubrun", "basis_coupon", "colored"]},
        "dim": _POS_INT,
        "alpha": _NUM,
        "base": {"$ref": "#/$defs/sampler"},
        "sigma": {"type": "array", "items": {"type": "array", "items": _NUM}},
    },
    "required": ["kind", "dim"],
    "additionalProperties": False,
}


def _schema(properties: dict, required: list[str]) -> dict:
    return {
        "type": "object",
        "$defs": {"sampler": SAMPLER_SCHEMA},
        "properties": {"seed": _INT, **properties},
        "required": ["seed", *required],
        "additionalProperties": False,
    }


_SAMPLER = {"$ref": "#/$defs/sampler"}

SCHEMAS = {
    "edges": _schema(
        {
            "matrix": {
                "type": "object",
                "properties": {
                    "file": {"type": "string"},
                    "entries": {"type": "array", "items": {"type": "array", "items": _NUM}},
                    "generator": {"enum": ["zeros", "identity", "diag", "sample_covariance"]},
                    "dim": _POS_INT,
                    "values": {"type": "array", "items": _NUM},
                    "sampler": _SAMPLER,
                    "N": _POS_INT,
                },
                "additionalProperties": False,
            },
            "phi": {"type": "array", "items": _POS_NUM, "minItems": 1},
        },
        ["matrix", "phi"],
    ),
    "walk": _schema(
        {
            "sampler": _SAMPLER,
            "N": {"type": "integer", "minimum": 0},
            "side": {"enum": ["lower", "upper"]},
            "phi": _POS_NUM,
            "t": _POS_NUM,
            "tau": _POS_NUM,
            "stream_id": {"type": "integer", "minimum": 0},
        },
        ["sampler", "N", "side", "phi"],
    ),
    "estimate": _schema(
        {"sampler": _SAMPLER, "N": _POS_INT, "trials": _POS_INT, "target_eps": _POS_NUM},
        ["sampler", "N", "trials"],
    ),
    "sweep": _schema(
        {
            "sampler": _SAMPLER,
            "eps": _POS_NUM,
            "n_values": {"type": "array", "items": _POS_INT, "minItems": 1},
            "trials": _POS_INT,
            "N_cap": _POS_INT,
        },
        ["sampler", "eps", "n_values", "trials"],
    ),
    "tails": _schema(
        {
            "sampler": _SAMPLER,
            "ranks": {"type": "array", "items": _POS_INT, "minItems": 1},
            "sample_count": _POS_INT,
            "thresholds": {"type": "array", "items": _POS_NUM, "minItems": 1},
            "wr_eta": _POS_NUM,
            "wr_directions": _POS_INT,
            "thin_shell_p": _NUM,
            "thin_shell_ranks": {"type": "array", "items": _POS_INT},
            "projection": {"enum": ["haar", "coordinate"]},
        },
        ["sampler", "ranks", "sample_count", "thresholds"],
    ),
    "counterexample": _schema(
        {
            "kind": {"enum": ["aubrun", "coupon"]},
            "N_values": {"type": "array", "items": _POS_INT, "minItems": 1},
            "trials": _POS_INT,
            "n": _POS_INT,
        },
        ["kind", "N_values", "trials"],
    ),
    "fixedn": _schema(
        {
            "sampler": _SAMPLER,
            "n": _POS_INT,
            "y_values": {"type": "array", "items": _POS_NUM, "minItems": 1},
            "trials": _POS_INT,
            "params": {"type": "array", "items": _POS_NUM, "minItems": 2, "maxItems": 2},
        },
        ["sampler", "n", "y_values", "trials"],
    ),
    "trace": _schema(
        {
            "tail_C": _POS_NUM,
            "eta": _POS_NUM,
            "eps": _POS_NUM,
            "N_values": {"type": "array", "items": _POS_INT, "minItems": 1},
            "trials": _POS_INT,
            "law": {"enum": ["scalar", "pareto_norm", "constant"]},
            "dim": _POS_INT,
            "alpha": _POS_NUM,
        },
        ["tail_C", "eta", "eps", "N_values", "trials"],
    ),
}

DEFAULTS = {
    "walk": {"stream_id": 0},
    "sweep": {"N_cap": 10**6},
    "tails": {"projection": "haar"},
    "trace": {"law": "scalar", "dim": 16, "alpha": 4.5},
}


def _error_text(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path)
    if err.validator == "required":
        key = err.message.split("'")[1] if "'" in err.message else err.message
        prefix = f"{where}: " if where else ""
        return f"{prefix}missing required key '{key}'"
    if err.validator == "additionalProperties":
        return f"{where or 'config'}: {err.message}"
    return f"{where or 'config'}: {err.message}"


def resolve_config(subcommand: str, raw: dict, seed: int | None = None) -> dict:
    """Validate ``raw`` against the subcommand schema and fill defaults.

    ``seed`` (from ``--seed``) takes precedence over the config's own seed.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = copy.deepcopy(raw)
    if seed is not None:
        cfg["seed"] = int(seed)
    schema = SCHEMAS[subcommand]
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(cfg), key=lambda e: (str(list(e.absolute_path)), e.message))
    if errors:
        raise ConfigError("invalid config:\n  " + "\n  ".join(_error_text(e) for e in errors))
    for k, v in DEFAULTS.get(subcommand, {}).items():
        cfg.setdefault(k, v)
    return cfg


def _sampler(d: dict) -> SamplerSpec:
    return SamplerSpec.from_dict(d)


def _prov(h: str, seed: int) -> list:
    return [h, seed, __version__]


_PROV = ["config_hash", "seed", "version"]


# --------------------------------------------------------------------------- subcommands


def _load_matrix(m: dict, seed: int) -> SymMatrix:
    sources = [k for k in ("file", "entries", "generator") if k in m]
    if len(sources) != 1:
        raise ConfigError("matrix needs exactly one of 'file', 'entries', 'generator'")
    if "file" in m:
        path = Path(m["file"])
        try:
            a = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, delimiter=None, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read matrix file {str(path)!r}: {exc}") from exc
        return SymMatrix(a)
    if "entries" in m:
        return SymMatrix(np.asarray(m["entries"], dtype=float))
    gen = m["generator"]
    if gen in ("zeros", "identity"):
        if "dim" not in m:
            raise ConfigError(f"matrix generator {gen!r} needs 'dim'")
        return SymMatrix.zeros(m["dim"]) if gen == "zeros" else SymMatrix.identity(m["dim"])
    if gen == "diag":
        if "values" not in m:
            raise ConfigError("matrix generator 'diag' needs 'values'")
        return SymMatrix.diag(m["values"])
    if "sampler" not in m or "N" not in m:
        raise ConfigError("matrix generator 'sample_covariance' needs 'sampler' and 'N'")
    return sample_covariance(draw_batch(_sampler(m["sampler"]), make_stream(seed, 0), m["N"]))


def cmd_edges(cfg, h, threads):
    A = _load_matrix(cfg["matrix"], cfg["seed"])
    spec = eigendecompose(A)
    rows = []
    for phi in cfg["phi"]:
        lo, up = lower_edge(spec, phi), upper_edge(spec, phi)
        rows.append([phi, lo.edge, up.edge, spec.lambda_min, spec.lambda_max])
    header = ["phi", "lower_edge", "upper_edge", "lambda_min", "lambda_max"]
    result = {"dim": A.dim, "rows": [dict(zip(header, r)) for r in rows]}
    return result, {"edges.csv": (_PROV + header, [_prov(h, cfg["seed"]) + r for r in rows])}


def cmd_walk(cfg, h, threads):
    sampler = _sampler(cfg["sampler"])
    phi = cfg["phi"]
    if cfg["side"] == "lower":
        if "t" not in cfg:
            raise ConfigError("lower walk needs 't'")
        params = LowerShiftParams(phi, cfg["t"])
    else:
        if "tau" not in cfg:
            raise ConfigError("upper walk needs 'tau'")
        params = UpperShiftParams(phi, cfg["tau"])
    state = barrier_walk(sampler, cfg["N"], cfg["side"], params, cfg["seed"], cfg["stream_id"])
    header = [
        "k", "edge", "increment", "explicit_shift", "form1", "form2",
        "indicator1", "indicator2", "certificate_ok", "delta1", "delta2", "lambda_min", "lambda_max",
    ]
    p = _prov(h, cfg["seed"])
    spec0 = eigendecompose(SymMatrix.zeros(sampler.dim))
    start_edge = (lower_edge if cfg["side"] == "lower" else upper_edge)(spec0, phi).edge
    rows = [p + [0, start_edge, 0.0, 0.0, None, None, None, None, True, None, None, 0.0, 0.0]]
    for r in state.shift_log:
        rows.append(
            p + [r.k, r.edge, r.increment, r.explicit_shift, r.form1, r.form2, r.indicators[0], r.indicators[1],
                 r.certificate_ok, r.delta1, r.delta2, r.lambda_min, r.lambda_max]
        )
    inc = state.increments()
    sh = state.explicit_shifts()
    result = {
        "steps": state.step,
        "final_edge": state.edge,
        "final_lambda_min": state.spec.lambda_min,
        "final_lambda_max": state.spec.lambda_max,
        "mean_increment": float(np.mean(inc)) if inc.size else None,
        "mean_explicit_shift": float(np.mean(sh)) if sh.size else None,
        "certificates_ok": state.certificates_ok(),
    }
    return result, {"walk.csv": (_PROV + header, rows)}


def cmd_estimate(cfg, h, threads):
    ec = ExperimentConfig(_sampler(cfg["sampler"]), cfg["N"], cfg["trials"], cfg["seed"], cfg.get("target_eps"))
    res = run_experiment(ec, threads)
    summary, errs = res.summary(), res.stderrs()
    p = _prov(h, cfg["seed"])
    tables = {
        "estimate.csv": (_PROV + list(summary) + list(errs), [p + list(summary.values()) + list(errs.values())]),
        "estimate_trials.csv": (
            _PROV + ["trial", "spectral_error", "lambda_min", "lambda_max", "trace_gap"],
            [p + [i, e, a, b, g] for i, (e, a, b, g) in
             enumerate(zip(res.spectral_errors, res.lambda_mins, res.lambda_maxs, res.trace_gaps))],
        ),
    }
    out = res.to_dict()
    out.pop("config")
    return out, tables


def cmd_sweep(cfg, h, threads):
    pts = scaling_sweep(_sampler(cfg["sampler"]), cfg["eps"], cfg["n_values"], cfg["trials"], cfg["seed"],
                        threads, cfg["N_cap"])
    header = ["n", "N_min", "censored", "N_min_over_n", "main_threshold", "main_checked", "main_violations"]
    p = _prov(h, cfg["seed"])
    rows = [p + [q.n, q.N_min, q.censored, None if q.N_min is None else q.N_min / q.n, q.main_threshold,
                 q.main_checked, q.main_violations] for q in pts]
    result = {"points": [to_jsonable(q) for q in pts]}
    return result, {"sweep.csv": (_PROV + header, rows)}


def cmd_tails(cfg, h, threads):
    sampler = _sampler(cfg["sampler"])
    seed = cfg["seed"]
    p = _prov(h, seed)
    rows, ests = [], []
    for j, k in enumerate(cfg["ranks"]):
        est = estimate_sr_tail(sampler, k, cfg["sample_count"], cfg["thresholds"], make_stream(seed, 0, j))
        ests.append(est)
        for t, pr in zip(est.thresholds, est.empirical_probs):
            rows.append(p + [k, t, pr, est.fitted_C, est.fitted_eta, est.status])
    result = {"sr_tails": [to_jsonable(e) for e in ests]}
    if "wr_eta" in cfg:
        result["wr_moment"] = estimate_wr_moment(
            sampler, cfg["wr_eta"], cfg.get("wr_directions", 32), cfg["sample_count"], make_stream(seed, 1)
        )
    if "thin_shell_p" in cfg:
        ranks = cfg.get("thin_shell_ranks", cfg["ranks"])
        ratios = thin_shell_check(sampler, cfg["thin_shell_p"], ranks, cfg["sample_count"], make_stream(seed, 2),
                                  cfg["projection"])
        result["thin_shell"] = {"ranks": list(ranks), "ratios": ratios}
    header = ["rank_k", "threshold", "empirical_prob", "fitted_C", "fitted_eta", "status"]
    return result, {"tails.csv": (_PROV + header, rows)}


def cmd_counterexample(cfg, h, threads):
    p = _prov(h, cfg["seed"])
    if cfg["kind"] == "aubrun":
        tab = counterexample_aubrun(cfg["N_values"], cfg["trials"], cfg["seed"], threads)
        header = ["N", "mean_error", "mean_max_norm_term", "bound_violations", "stderr_error",
                  "stderr_max_norm_term"]
        rows = [p + [r.N, r.mean_error, r.mean_max_norm_term, r.bound_violations, r.stderr_error,
                     r.stderr_max_norm_term] for r in tab.rows]
        return to_jsonable(tab), {"counterexample.csv": (_PROV + header, rows)}
    if "n" not in cfg:
        raise ConfigError("coupon counterexample needs 'n'")
    tab = coupon_check(cfg["n"], cfg["N_values"], cfg["trials"], cfg["seed"])
    header = ["N", "singular_fraction", "eigen_singular_fraction", "disagreements", "oracle_full_rank"]
    rows = [p + [r.N, r.singular_fraction, r.eigen_singular_fraction, r.disagreements, r.oracle_full_rank]
            for r in tab]
    return {"rows": to_jsonable(tab)}, {"counterexample.csv": (_PROV + header, rows)}


def cmd_fixedn(cfg, h, threads):
    tab = fixedN_check(_sampler(cfg["sampler"]), cfg["y_values"], cfg["n"], cfg["trials"], cfg["seed"], threads,
                       tuple(cfg["params"]) if "params" in cfg else None)
    header = ["y", "N", "mean_lambda_min", "mean_lambda_max", "lower_bound", "upper_bound", "bai_yin_min",
              "bai_yin_max", "stderr_lambda_min", "stderr_lambda_max"]
    p = _prov(h, cfg["seed"])
    rows = [p + [r.y, r.N, r.mean_lambda_min, r.mean_lambda_max, r.lower_bound, r.upper_bound, r.bai_yin_min,
                 r.bai_yin_max, r.stderr_lambda_min, r.stderr_lambda_max] for r in tab]
    return {"rows": to_jsonable(tab)}, {"fixedn.csv": (_PROV + header, rows)}


def cmd_trace(cfg, h, threads):
    tab = trace_concentration_check(cfg["tail_C"], cfg["eta"], cfg["eps"], cfg["N_values"], cfg["trials"],
                                    cfg["seed"], cfg["law"], cfg["dim"], cfg["alpha"])
    p = _prov(h, cfg["seed"])
    rows = [p + [r.N, r.mean_abs_dev, tab.threshold, r.stderr] for r in tab.rows]
    header = ["N", "mean_abs_dev", "threshold", "stderr"]
    return to_jsonable(tab), {"trace.csv": (_PROV + header, rows)}


COMMANDS = {
    "edges": (cmd_edges, "soft edges of a matrix over a list of sensitivities"),
    "walk": (cmd_walk, "barrier walk along a sample with per-step certificates"),
    "estimate": (cmd_estimate, "Monte Carlo spectral error of the sample covariance"),
    "sweep": (cmd_sweep, "minimal sample size per dimension"),
    "tails": (cmd_tails, "empirical projection tails, marginal moments and thin shell ratios"),
    "counterexample": (cmd_counterexample, "Aubrun and coupon collector examples"),
    "fixedn": (cmd_fixedn, "extreme eigenvalue means at fixed aspect ratio"),
    "trace": (cmd_trace, "concentration of the normalized trace"),
}


# --------------------------------------------------------------------------- entry point


def resolve_thread_count(flag: int | None) -> int:
    """``--threads`` if given, else ``$EDGEWALK_THREADS``, else the CPU count."""
    if flag is not None:
        value = flag
    elif os.environ.get(THREADS_ENV):
        try:
            value = int(os.environ[THREADS_ENV])
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {os.environ[THREADS_ENV]!r}") from exc
    else:
        value = os.cpu_count() or 1
    if value < 1:
        raise ConfigError(f"thread count must be positive, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgewalk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--threads", type=int, default=None, help=f"worker threads (else ${THREADS_ENV}, else CPUs)")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
        cfg = resolve_config(args.subcommand, raw, args.seed)
        threads = resolve_thread_count(args.threads)
        h = config_hash(cfg)
        handler = COMMANDS[args.subcommand][0]
        try:
            result, tables = handler(cfg, h, threads)
        except PreconditionError as exc:
            raise ConfigError(str(exc)) from exc
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        doc = {
            "version": __version__,
            "subcommand": args.subcommand,
            "seed": cfg["seed"],
            "config": cfg,
            "config_hash": h,
            "result": result,
        }
        write_json(out / f"{args.subcommand}.json", doc)
        for name, (header, rows) in tables.items():
            write_csv(out / name, header, rows)
    except ConfigError as exc:
        print(f"edgewalk: config error: {exc}", file=sys.stderr)
        return 2
    except (NonConvergenceError, NearSingularResolventError) as exc:
        print(f"edgewalk: numeric failure: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
