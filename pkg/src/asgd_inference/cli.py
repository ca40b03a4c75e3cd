"""Command line entry point.

    asgd-inference run        replicated simulation, or a single pass over --data
    asgd-inference sweep-c    the same simulation repeated for several scale constants C

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .batching import BatchScheme
from .exceptions import ConfigError, DataError, EmptyStateError, InvalidEstimateError
from .harness import (
    ExperimentConfig,
    Report,
    StreamSchema,
    emit,
    ingest_stream,
    report_to_text,
    run_replicated,
    run_stream,
    write_metadata,
)
from .inference import ci_coordinate, joint_region
from .sgd import StepSchedule

log = logging.getLogger("asgd_inference")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


def _int_list(text: str) -> list[int]:
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _beta(text: str):
    return None if text == "auto" else float(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["linear", "mean"], default="linear")
    p.add_argument("--d", type=int, default=1, help="parameter dimension (default 1)")
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.501)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--scheme-c", type=float, default=2.0)
    p.add_argument("--beta", type=_beta, default=None, help="boundary exponent, or 'auto' for 2/(1-alpha)")
    p.add_argument("--estimator", choices=["overlapping", "nonoverlapping"], default="overlapping")
    p.add_argument("--n", type=int, default=10**6, help="steps per replication")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q", type=float, default=0.05, help="one minus the nominal coverage")
    p.add_argument("--checkpoints", type=_int_list, default=None,
                   help="comma-separated steps; default 20 log-spaced steps from 100 to --n")
    p.add_argument("--w", type=_float_list, default=None, help="linear functional, default all ones")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replications")
    p.add_argument("--out", type=Path, default=None, help="output table; stdout when omitted")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asgd-inference", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replicated simulation or a pass over a data file")
    _add_common(run)
    run.add_argument("--data", type=Path, default=None, help="delimited data file to stream instead of simulating")
    run.add_argument("--target", default="-1", help="response column name or index (default last)")
    run.add_argument("--features", default=None, help="comma-separated covariate columns (default all others)")
    run.add_argument("--delimiter", default=",")
    run.add_argument("--no-header", action="store_true")
    run.add_argument("--joint", action="store_true", help="also report the joint confidence ellipsoid")

    sweep = sub.add_parser("sweep-c", help="repeat the simulation for several scale constants")
    _add_common(sweep)
    sweep.add_argument("--c-values", type=_float_list, default=[1.0, 2.0, 4.0])
    return parser


def _config(args, **overrides) -> ExperimentConfig:
    kw = dict(
        model=args.model, d=args.d, noise_sd=args.noise_sd, eta=args.eta, alpha=args.alpha,
        scheme_c=args.scheme_c, beta=args.beta, estimator=args.estimator, n_max=args.n,
        checkpoints=args.checkpoints, reps=args.reps, master_seed=args.seed, q=args.q, w=args.w,
    )
    kw.update(overrides)
    return ExperimentConfig(**kw)


def _write(report: Report, args, meta: dict) -> None:
    if args.out is None:
        sys.stdout.write(report_to_text(report, args.format))
        return
    emit(report, args.out, args.format)
    write_metadata(meta, args.out.with_name(args.out.name + ".meta.json"))
    log.info("wrote %s", args.out)


def _meta(args, config: dict) -> dict:
    return {"version": __version__, "command": args.command, "master_seed": args.seed,
            "format": args.format, "config": config}


def _cmd_run(args) -> int:
    if args.data is not None:
        return _cmd_run_data(args)
    config = _config(args)
    report = run_replicated(config, n_jobs=args.jobs)
    _write(report, args, _meta(args, report.config))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    rows, configs = [], []
    for c in args.c_values:
        config = _config(args, scheme_c=c)
        rep = run_replicated(config, n_jobs=args.jobs)
        configs.append(rep.config)
        rows.extend((c,) + row for row in rep.rows)
        columns = ("C",) + rep.columns
    report = Report(columns, rows)
    _write(report, args, _meta(args, {"sweep": configs}))
    return EXIT_OK


def _cmd_run_data(args) -> int:
    try:
        target = int(args.target)
    except ValueError:
        target = args.target
    features = None
    if args.features:
        features = tuple(int(f) if f.lstrip("-").isdigit() else f for f in args.features.split(","))
    schema = StreamSchema(kind=args.model, target=target, features=features,
                          delimiter=args.delimiter, header=not args.no_header)
    schedule = StepSchedule(args.eta, args.alpha)
    scheme = BatchScheme(C=args.scheme_c, beta=args.beta, alpha_hint=args.alpha)
    checkpoints = args.checkpoints or []
    tracker, records = run_stream(ingest_stream(args.data, schema), args.model, schedule, scheme,
                                  args.estimator, checkpoints, args.q, args.w)
    est = tracker.estimate()
    summary = {
        "n": est.n,
        "xbar": tracker.xbar.tolist(),
        "sigma": est.sigma.tolist(),
        "coordinate_ci": [[ci.lo, ci.hi] for ci in
                          (ci_coordinate(tracker.xbar, est, est.n, i, args.q) for i in range(est.dim))],
        "level": 1.0 - args.q,
    }
    if args.joint:
        region = joint_region(tracker.xbar, est, est.n, args.q)
        summary["joint_region"] = {"center": region.center.tolist(), "shape": region.shape.tolist(),
                                   "radius_sq": region.radius_sq}
    columns = ("n", "w_xbar", "ci_lo", "ci_hi") + tuple(f"sigma_{k}" for k in range(est.dim * (est.dim + 1) // 2))
    w = np.ones(est.dim) if args.w is None else np.asarray(args.w)
    rows = [(r.n, float(w @ r.xbar), r.ci_lo, r.ci_hi) + tuple(float(s) for s in r.sigma_tril) for r in records]
    report = Report(columns, rows)
    meta = _meta(args, {"data": str(args.data), "schema": schema.__dict__, "eta": args.eta, "alpha": args.alpha,
                        "scheme": scheme.describe(), "estimator": args.estimator, "checkpoints": checkpoints,
                        "q": args.q})
    meta["summary"] = summary
    if args.out is None:
        sys.stdout.write(json.dumps(summary, indent=1) + "\n")
        if rows:
            sys.stdout.write(report_to_text(report, args.format))
    else:
        emit(report, args.out, args.format)
        write_metadata(meta, args.out.with_name(args.out.name + ".meta.json"))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "sweep-c": _cmd_sweep}[args.command]
    try:
        return handler(args)
    except DataError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (InvalidEstimateError, EmptyStateError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
