"""Replicated simulation runs, data streaming and result tables."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .batching import BatchScheme
from .exceptions import ConfigError, DataError
from .inference import ci_linear
from .models import MeanObservation, RegressionObservation, make_model, replication_rng
from .sgd import StepSchedule
from .tracker import AsgdTracker

log = logging.getLogger(__name__)

BLOCK = 1 << 16
DATA_BLOCK = 4096

REPORT_COLUMNS = (
    "n", "reps", "mean_loss", "mse", "mean_bias", "coverage", "mean_ci_length", "sd_ci_length",
)


def default_checkpoints(n_max: int, count: int = 20, start: int = 100) -> list[int]:
    """``count`` log-spaced steps from ``start`` to ``n_max`` (deduplicated)."""
    start = min(start, n_max)
    pts = np.unique(np.round(np.logspace(math.log10(start), math.log10(n_max), count)).astype(np.int64))
    pts[-1] = n_max
    return sorted(set(int(p) for p in pts))


@dataclass
class ExperimentConfig:
    model: str = "linear"
    d: int = 1
    noise_sd: float = 1.0
    eta: float = 0.1
    alpha: float = 0.501
    scheme_c: float = 2.0
    beta: float | None = None
    estimator: str = "overlapping"
    n_max: int = 10**6
    checkpoints: list[int] | None = None
    reps: int = 200
    master_seed: int = 0
    q: float = 0.05
    w: list[float] | None = None
    x_star: list[float] | None = None

    def __post_init__(self):
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not (0.5 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0.5, 1), got {self.alpha}")
        if not (0.0 < self.q < 1.0):
            raise ConfigError(f"q must lie in (0, 1), got {self.q}")
        if self.estimator not in ("overlapping", "nonoverlapping"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.model == "mean" and self.d != 1:
            raise ConfigError("the mean model is one-dimensional")
        if self.checkpoints is None:
            self.checkpoints = default_checkpoints(self.n_max)
        else:
            cps = [int(c) for c in self.checkpoints]
            if cps != sorted(cps) or len(set(cps)) != len(cps):
                raise ConfigError("checkpoints must be strictly increasing")
            if cps and (cps[0] < 1 or cps[-1] > self.n_max):
                raise ConfigError(f"checkpoints must lie in [1, {self.n_max}]")
            self.checkpoints = cps
        if self.w is not None and len(self.w) != self.d:
            raise ConfigError(f"w has length {len(self.w)}, expected {self.d}")
        # fail early on an invalid schedule or scheme
        self.schedule()
        self.scheme()

    def schedule(self) -> StepSchedule:
        try:
            return StepSchedule(self.eta, self.alpha)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def scheme(self) -> BatchScheme:
        return BatchScheme(C=self.scheme_c, beta=self.beta, alpha_hint=self.alpha)

    def functional(self) -> np.ndarray:
        return np.ones(self.d) if self.w is None else np.asarray(self.w, dtype=np.float64)

    def build_model(self):
        return make_model(self.model, self.d, self.noise_sd, self.x_star, self.master_seed)

    def resolved(self) -> dict:
        out = asdict(self)
        out["beta"] = self.scheme().beta
        out["w"] = self.functional().tolist()
        out["x_star"] = np.atleast_1d(self.build_model().optimum).tolist()
        return out


@dataclass
class RunRecord:
    rep: int
    n: int
    xbar: np.ndarray
    sigma_tril: np.ndarray
    ci_lo: float
    ci_hi: float
    loss: float = math.nan
    bias: float = math.nan
    covered: bool | None = None

    @property
    def ci_length(self) -> float:
        return self.ci_hi - self.ci_lo


def _blocks_from_model(model, rng, n_max: int) -> Iterator[tuple]:
    done = 0
    while done < n_max:
        # fixed-size draws keep the stream independent of n_max and checkpoints
        A, b = model.draw_block(rng, BLOCK)
        take = min(BLOCK, n_max - done)
        yield (None if A is None else A[:take]), b[:take]
        done += take


def _drive(tracker: AsgdTracker, blocks: Iterable[tuple], checkpoints: Sequence[int], unit_design: bool,
           on_checkpoint) -> None:
    cps = list(checkpoints)
    ci = 0
    for A, b in blocks:
        pos = 0
        k = b.shape[0]
        while pos < k:
            stop = k
            if ci < len(cps):
                stop = min(k, pos + cps[ci] - tracker.n)
            tracker.step_least_squares(None if unit_design else A[pos:stop], b[pos:stop], unit_design)
            pos = stop
            while ci < len(cps) and tracker.n == cps[ci]:
                on_checkpoint(tracker)
                ci += 1


def _record(tracker: AsgdTracker, rep: int, w: np.ndarray, q: float, truth=None, optimum=None) -> RunRecord:
    est = tracker.estimate()
    ci = ci_linear(tracker.xbar, est, est.n, w, q)
    rec = RunRecord(
        rep=rep, n=est.n, xbar=tracker.xbar.copy(), sigma_tril=est.sigma[np.tril_indices(est.dim)],
        ci_lo=ci.lo, ci_hi=ci.hi,
    )
    if truth is not None:
        rec.bias = float(w @ (est.sigma - truth) @ w)
        rec.loss = abs(rec.bias)
    if optimum is not None:
        rec.covered = ci.contains(float(w @ optimum))
    return rec


def run_single(config: ExperimentConfig, rep_index: int) -> list[RunRecord]:
    """One replication: ``n_max`` samples streamed through SGD and the estimator."""
    model = config.build_model()
    tracker = AsgdTracker(model.dim, config.schedule(), config.scheme(), config.estimator)
    rng = replication_rng(config.master_seed, rep_index)
    w = config.functional()
    truth, optimum = model.true_sigma(), np.atleast_1d(model.optimum)
    records: list[RunRecord] = []
    _drive(
        tracker, _blocks_from_model(model, rng, config.n_max), config.checkpoints, model.kind == "mean",
        lambda t: records.append(_record(t, rep_index, w, config.q, truth, optimum)),
    )
    return records


@dataclass
class Report:
    columns: tuple
    rows: list[tuple]
    config: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows], dtype=np.float64)


def aggregate(records_by_rep: Sequence[list[RunRecord]], checkpoints: Sequence[int]) -> Report:
    rows = []
    for j, n in enumerate(checkpoints):
        recs = [reps[j] for reps in records_by_rep]
        assert all(r.n == n for r in recs)
        bias = np.array([r.bias for r in recs])
        lengths = np.array([r.ci_length for r in recs])
        covered = [r.covered for r in recs]
        coverage = math.nan if any(c is None for c in covered) else float(np.mean(covered))
        rows.append((
            int(n), len(recs), float(np.mean(np.abs(bias))), float(np.mean(bias**2)), float(np.mean(bias)),
            coverage, float(np.mean(lengths)), float(np.std(lengths, ddof=1)) if len(recs) > 1 else 0.0,
        ))
    return Report(REPORT_COLUMNS, rows)


def _run_rep(args):
    config, rep = args
    return run_single(config, rep)


def run_replicated(config: ExperimentConfig, n_jobs: int = 1) -> Report:
    """Run ``config.reps`` independent replications and summarise each checkpoint.

    Replications are reduced in index order, so the result does not depend
    on ``n_jobs``.
    """
    tasks = [(config, r) for r in range(config.reps)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_run_rep, tasks))
    else:
        results = []
        for t in tasks:
            results.append(_run_rep(t))
            log.debug("replication %d done", t[1])
    report = aggregate(results, config.checkpoints)
    report.config = config.resolved()
    return report


def fit_slope(points: Iterable[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(value)`` against ``log(n)``."""
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    n = np.array([p[0] for p in pts], dtype=np.float64)
    v = np.array([p[1] for p in pts], dtype=np.float64)
    if np.any(n <= 0) or np.any(v <= 0):
        raise ValueError("n and values must be positive to take logs")
    lx, ly = np.log(n), np.log(v)
    lx -= lx.mean()
    return float(lx @ (ly - ly.mean()) / (lx @ lx))


# -- data ingestion -------------------------------------------------------------


@dataclass(frozen=True)
class StreamSchema:
    """Maps columns of a delimited file to observations.

    ``kind="linear"``: ``target`` is the response column and ``features``
    the covariate columns (all other columns when omitted). ``kind="mean"``:
    ``target`` is the single sample column. Columns are named when the file
    has a header, otherwise 0-based integer positions.
    """

    kind: str = "linear"
    target: str | int = -1
    features: tuple | None = None
    delimiter: str = ","
    header: bool = True


def _parse_float(text: str, path, lineno: int, col) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: column {col!r}: cannot parse {text!r} as a number") from None


def ingest_stream(path, schema: StreamSchema = StreamSchema()) -> Iterator:
    """Yield one observation per data row, reading the file lazily."""
    path = Path(path)
    if schema.kind not in ("linear", "mean"):
        raise ConfigError(f"unknown schema kind {schema.kind!r}")
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        names = None
        width = None
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if schema.header and names is None:
                names = [c.strip() for c in row]
                width = len(names)
                target, features = _resolve_columns(schema, names, path)
                continue
            if width is None:
                width = len(row)
                target, features = _resolve_columns(schema, list(range(width)), path)
            if len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
            y = _parse_float(row[target], path, lineno, target)
            if schema.kind == "mean":
                yield MeanObservation(y)
            else:
                a = np.array([_parse_float(row[j], path, lineno, j) for j in features])
                yield RegressionObservation(a, y)


def _resolve_columns(schema: StreamSchema, names: list, path):
    def index_of(col):
        if isinstance(col, int) and not isinstance(col, bool):
            j = col if col >= 0 else len(names) + col
            if not 0 <= j < len(names):
                raise DataError(f"{path}: column index {col} out of range")
            return j
        if col in names:
            return names.index(col)
        if isinstance(col, str) and col.lstrip("-").isdigit():
            return index_of(int(col))
        raise DataError(f"{path}: no column named {col!r}")

    target = index_of(schema.target)
    if schema.kind == "mean":
        return target, ()
    if schema.features is None:
        features = tuple(j for j in range(len(names)) if j != target)
    else:
        features = tuple(index_of(c) for c in schema.features)
    if not features:
        raise DataError(f"{path}: no feature columns")
    return target, features


def _blocks_from_observations(observations: Iterable, kind: str) -> Iterator[tuple]:
    buf_a, buf_b = [], []
    for obs in observations:
        if kind == "mean":
            buf_b.append(obs.y)
        else:
            buf_a.append(obs.a)
            buf_b.append(obs.b)
        if len(buf_b) == DATA_BLOCK:
            yield (np.array(buf_a) if buf_a else None), np.array(buf_b)
            buf_a, buf_b = [], []
    if buf_b:
        yield (np.array(buf_a) if buf_a else None), np.array(buf_b)


def run_stream(observations: Iterable, kind: str, schedule: StepSchedule, scheme: BatchScheme,
               estimator: str = "overlapping", checkpoints: Sequence[int] = (), q: float = 0.05,
               w=None, dim: int | None = None):
    """Stream observed data through the tracker.

    Returns ``(tracker, records)`` with one record per checkpoint reached.
    Memory stays bounded by the block size.
    """
    it = iter(observations)
    try:
        first = next(it)
    except StopIteration:
        raise DataError("no observations in stream") from None
    if dim is None:
        dim = 1 if kind == "mean" else len(first.a)

    def chained():
        yield first
        for obs in it:
            if kind == "linear" and len(obs.a) != dim:
                raise DataError(f"observation has {len(obs.a)} covariates, expected {dim}")
            yield obs

    tracker = AsgdTracker(dim, schedule, scheme, estimator)
    wv = np.ones(dim) if w is None else np.asarray(w, dtype=np.float64)
    records: list[RunRecord] = []
    _drive(tracker, _blocks_from_observations(chained(), kind), checkpoints, kind == "mean",
           lambda t: records.append(_record(t, 0, wv, q)))
    return tracker, records


# -- output ---------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_to_text(report: Report, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        rows = [dict(zip(report.columns, row)) for row in report.rows]
        return json.dumps({"columns": list(report.columns), "rows": rows}, indent=1, allow_nan=True) + "\n"
    raise ConfigError(f"unknown output format {fmt!r}; choose 'csv' or 'json'")


def emit(report: Report, path, fmt: str = "csv") -> None:
    """Write the checkpoint table. Columns follow ``report.columns``."""
    Path(path).write_text(report_to_text(report, fmt))


def read_table(path, fmt: str = "csv") -> Report:
    text = Path(path).read_text()
    if fmt == "json":
        obj = json.loads(text)
        cols = tuple(obj["columns"])
        return Report(cols, [tuple(r[c] for c in cols) for r in obj["rows"]])
    reader = csv.reader(io.StringIO(text))
    cols = tuple(next(reader))
    rows = [tuple(int(v) if c in ("n", "reps") else float(v) for c, v in zip(cols, r)) for r in reader]
    return Report(cols, rows)


def write_metadata(meta: dict, path) -> None:
    Path(path).write_text(json.dumps(meta, indent=1, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
