"""Command-line front end.

Every run prints one document (JSON by default, CSV with ``--format csv``)
holding the tool version, the fully resolved configuration, the results,
a provenance tag per result and a pass flag per checked bound.  Output is
a pure function of the arguments and the seed.

Exit codes: 0 success, 1 a checked bound failed (selftest only),
2 usage or argument error, 3 numerical domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import __version__
from .ensembles import sample_haar_unitary
from .errors import DomainError, InvalidArgument, SizeLimitError
from .extrapolation import reduction_params, reduction_trials, truncation_lemma_experiment
from .hafnian import Outcome
from .probabilities import (
    GbsConfig,
    enumerate_distribution,
    postselect_lower_bound_check,
    prob_no_postselect,
    prob_postselect_N,
    prob_postselected,
    q_factor,
    q_upper_bound_check,
)
from .stats import hafnian_moment_mc, tvd_bound_report

SCHEMA = 1
SEED_ENV = "LOSSYGBS_SEED"
EXACT = "exact"
SERIES = "truncated-series(+bound)"
MC = "monte-carlo(+stderr)"

LOG_NOTE = "All logarithms are natural logarithms."


class UsageError(Exception):
    pass


def _even(name):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}")
        if v < 0 or v % 2:
            raise argparse.ArgumentTypeError(f"{name} must be a non-negative even integer, got {v}")
        return v

    return parse


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer")


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output-path", default=None, help="write the report here instead of stdout")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads; results do not depend on it")


def _add_gbs(p, need_eta=True):
    p.add_argument("--M", type=_even("M"), required=True, help="number of modes (even)")
    p.add_argument("--N", type=_even("N"), required=True, help="photon number (even)")
    if need_eta:
        p.add_argument("--eta", type=float, required=True, help="transmission rate in [0, 1]")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--r", type=float, help="squeezing parameter")
    g.add_argument("--auto-r", action="store_true", help="choose r with N = eta M sinh^2 r")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lossy-gbs",
        description="Exact and Monte Carlo checks for lossy Gaussian boson sampling. " + LOG_NOTE,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probability", help="probability of one outcome for a seeded Haar unitary")
    _add_gbs(p)
    p.add_argument("--outcome", type=_int_list, required=True, help="1-based mode labels, e.g. 1,2")
    _add_common(p)

    p = sub.add_parser("distribution", help="every N-photon outcome with its post-selected probability")
    _add_gbs(p)
    _add_common(p)

    p = sub.add_parser("qfactor", help="hypergeometric normalisation Q(eta) with its truncation bound")
    _add_gbs(p)
    p.add_argument("--terms", type=int, default=None, help="series cut-off (default: adaptive)")
    _add_common(p)

    p = sub.add_parser("postselect", help="Pr[N] sqrt(N) with M = N^gamma and eta = 1 - 1/(12 sqrt N)")
    p.add_argument("--N-values", type=_int_list, default=[2, 4, 6, 8, 10, 12])
    p.add_argument("--gamma", type=int, default=3)
    _add_common(p)

    p = sub.add_parser("extrapolate", help="noisy-oracle reduction to the ideal probability")
    p.add_argument("--N", type=_even("N"), required=True)
    p.add_argument("--M", type=_even("M"), required=True)
    p.add_argument("--k-star", type=float, required=True, help="mean lost photons, k* = (1/eta* - 1) N")
    p.add_argument("--eps0", type=float, required=True)
    p.add_argument("--delta0", type=float, required=True)
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--noise-mode", choices=("uniform", "adversarial"), default="uniform")
    p.add_argument("--l", type=int, default=None, help="override the truncation degree")
    _add_common(p)

    p = sub.add_parser("truncation", help="Monte Carlo check of the truncation-error bound")
    p.add_argument("--N", type=_even("N"), required=True)
    p.add_argument("--M", type=_even("M"), required=True)
    p.add_argument("--k-star", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--l", type=int, required=True, help="even truncation degree, k_max < l <= N")
    p.add_argument("--trials", type=_positive_int, default=500)
    _add_common(p)

    p = sub.add_parser("moments", help="Monte Carlo squared-hafnian moment against its closed form")
    p.add_argument("--N", type=_even("N"), required=True)
    p.add_argument("--M", type=_even("M"), required=True)
    p.add_argument("--samples", type=_positive_int, default=10_000)
    p.add_argument("--blocks", type=_positive_int, default=20)
    p.add_argument("--submatrix", action="store_true", help="use N-2 rows of each draw")
    _add_common(p)

    p = sub.add_parser("tvd", help="exact TVD against the fidelity and loss bounds")
    _add_gbs(p)
    _add_common(p)

    p = sub.add_parser("selftest", help="run the built-in sanity checks")
    _add_common(p)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    if args.seed is None:
        args.seed = _default_seed()
    if args.seed < 0 or args.seed >= 2**64:
        raise UsageError(f"seed must be a 64-bit unsigned integer, got {args.seed}")
    return args


def _gbs_config(args) -> GbsConfig:
    if args.auto_r:
        return GbsConfig.auto_r(args.M, args.N, args.eta)
    return GbsConfig(args.M, args.N, args.r, args.eta)


def _resolved(args, **extra) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("output_path", "format")}
    cfg.update(extra)
    return cfg


def _check(ok, **detail) -> dict:
    return {"pass": bool(ok), **detail}


def cmd_probability(args):
    cfg = _gbs_config(args)
    S = Outcome(tuple(args.outcome))
    U = sample_haar_unitary(args.seed, cfg.M)
    q = q_factor(cfg)
    p_s = prob_postselected(U, S, cfg, q=q.value)
    q_s = prob_no_postselect(U, S, cfg)
    pr_n = prob_postselect_N(cfg)
    results = {"outcome": str(S), "mu": S.mu, "p_S": p_s, "q_S": q_s, "pr_N": pr_n, "Q": q.value, "Q_error_bound": q.error_bound}
    prov = {"p_S": SERIES, "q_S": EXACT, "pr_N": SERIES, "Q": SERIES, "Q_error_bound": EXACT}
    checks = {"consistency": _check(abs(p_s * pr_n - q_s) <= 1e-10 * max(q_s, 1e-300) + 1e-300, residual=p_s * pr_n - q_s)}
    return _resolved(args, r=cfg.r), results, prov, checks, None


def cmd_distribution(args):
    cfg = _gbs_config(args)
    U = sample_haar_unitary(args.seed, cfg.M)
    dist = enumerate_distribution(U, cfg)
    total = math.fsum(p for _, p in dist)
    rows = [{"outcome": str(S), "mu": S.mu, "p_S": p} for S, p in dist]
    results = {"outcomes": len(rows), "total": total}
    checks = {"normalised": _check(abs(total - 1.0) <= 1e-9, total=total)}
    return _resolved(args, r=cfg.r), results, {"p_S": SERIES, "total": SERIES}, checks, rows


def cmd_qfactor(args):
    cfg = _gbs_config(args)
    if cfg.N > 0 and cfg.eta == 0.0:
        raise DomainError("Q(eta) normalises a post-selected probability that is undefined at eta = 0")
    q = q_factor(cfg, m=args.terms)
    value, envelope = q_upper_bound_check(cfg)
    results = {"Q": q.value, "terms": q.terms, "error_bound": q.error_bound, "bound_kind": q.bound_kind, "upper_envelope": envelope}
    checks = {"upper_envelope": _check(value <= envelope, C=4.0)}
    prov = {"Q": SERIES, "error_bound": EXACT, "upper_envelope": EXACT}
    return _resolved(args, r=cfg.r, z=cfg.z), results, prov, checks, None


def cmd_postselect(args):
    bad = [n for n in args.N_values if n < 2 or n % 2]
    if bad:
        raise InvalidArgument(f"N values must be positive and even, got {bad}")
    rows = postselect_lower_bound_check(args.N_values, gamma=args.gamma)
    worst = min(r["pr_N_sqrt_N"] for r in rows)
    results = {"min_pr_N_sqrt_N": worst}
    return _resolved(args), results, {"pr_N": SERIES, "pr_N_sqrt_N": SERIES}, {}, rows


def cmd_extrapolate(args):
    params = reduction_params(args.N, args.M, args.k_star, args.eps0, args.delta0, l=args.l)
    rep = reduction_trials(params, args.trials, args.seed, mode=args.noise_mode)
    rows = [dict(trial=i, **r) for i, r in enumerate(rep.pop("runs"))]
    checks = {
        "success_fraction": _check(rep["pass"], wilson_low=rep["wilson_low"], target=rep["target"]),
        "budget": _check(rep["budget_respected"]),
    }
    prov = {k: MC for k in ("fraction", "wilson_low", "wilson_high", "max_error_over_scale")}
    prov.update({"estimate": EXACT, "truth": EXACT})
    return _resolved(args, **params.as_dict()), rep, prov, checks, rows


def cmd_truncation(args):
    params = reduction_params(args.N, args.M, args.k_star, 0.1, 0.25, l=args.l, delta=args.delta)
    rep = truncation_lemma_experiment(params, args.trials, args.seed)
    checks = {"exceedance_below_delta": _check(rep["pass"], wilson_high=rep["wilson_high"], delta=args.delta)}
    prov = {k: MC for k in ("fraction", "wilson_low", "wilson_high", "tail_p95", "tail_max")}
    prov.update({"eps1": EXACT, "expected_tail": EXACT, "markov_bound": EXACT})
    cfg = _resolved(args, k_max=params.k_max, eta_min=params.eta_min, scale=params.scale, warnings=list(params.warnings))
    return cfg, rep, prov, {**checks}, None


def cmd_moments(args):
    rep = hafnian_moment_mc(args.N, args.M, args.samples, args.seed, blocks=args.blocks, submatrix=args.submatrix)
    results = rep.as_dict()
    prov = {"empirical_mean": MC, "median_of_means": MC, "standard_error": MC, "z_score": MC, "analytic": EXACT}
    checks = {"z_within_4": _check(abs(rep.z_score) <= 4.0, z=rep.z_score)}
    return _resolved(args), results, prov, checks, None


def cmd_tvd(args):
    cfg = _gbs_config(args)
    U = sample_haar_unitary(args.seed, cfg.M)
    rep = tvd_bound_report(U, cfg.r, cfg.eta, cfg.N)
    checks = {
        "tvd_below_fidelity_bound": _check(rep.tvd_below_fidelity),
        "fidelity_bound_below_loss_bound": _check(rep.fidelity_below_loss_bound),
    }
    prov = {"exact_tvd": SERIES, "fidelity": EXACT, "fidelity_bound": EXACT, "lemma_bound": EXACT}
    return _resolved(args, r=cfg.r), rep.as_dict(), prov, checks, None


def cmd_selftest(args):
    from .selftest import run_selftest

    checks = run_selftest()
    results = {"passed": sum(c["pass"] for c in checks.values()), "total": len(checks)}
    return _resolved(args), results, {"passed": EXACT, "total": EXACT}, checks, None


COMMANDS = {
    "probability": cmd_probability,
    "distribution": cmd_distribution,
    "qfactor": cmd_qfactor,
    "postselect": cmd_postselect,
    "extrapolate": cmd_extrapolate,
    "truncation": cmd_truncation,
    "moments": cmd_moments,
    "tvd": cmd_tvd,
    "selftest": cmd_selftest,
}


def _document(command, config, results, provenance, checks, rows=None) -> dict:
    doc = {
        "schema": SCHEMA,
        "tool": "lossy-gbs",
        "version": __version__,
        "command": command,
        "config": config,
        "results": results,
        "provenance": provenance,
        "checks": checks,
    }
    if rows is not None:
        doc["rows"] = rows
    return doc


def _clean(obj):
    """Replace non-finite floats so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def render(doc: dict, fmt: str) -> str:
    doc = _clean(doc)
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    for key in ("schema", "tool", "version", "command"):
        buf.write(f"# {key}={doc[key]}\n")
    for key, value in sorted(doc["config"].items()):
        buf.write(f"# config.{key}={json.dumps(value, sort_keys=True)}\n")
    for key, value in sorted(doc["checks"].items()):
        buf.write(f"# check.{key}={json.dumps(value, sort_keys=True)}\n")
    rows = doc.get("rows") or [doc["results"]]
    fields = sorted({k for row in rows for k in row})
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"lossy-gbs: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config, results, prov, checks, rows = COMMANDS[args.command](args)
    except DomainError as exc:
        doc = _document(args.command, _resolved(args), {}, {}, {}, None)
        doc["error"] = {"kind": "domain", "message": str(exc)}
        _emit(render(doc, "json"), args.output_path)
        print(f"lossy-gbs: domain error: {exc}", file=sys.stderr)
        return 3
    except (InvalidArgument, SizeLimitError) as exc:
        print(f"lossy-gbs: error: {exc}", file=sys.stderr)
        return 2
    doc = _document(args.command, config, results, prov, checks, rows)
    _emit(render(doc, args.format), args.output_path)
    if args.command == "selftest" and not all(c["pass"] for c in checks.values()):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
