"""Experiment runner: width tuning, recall, query time and hash-evaluation
time for the three schemes on one dataset."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import platform
import time
import tracemalloc
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import hashing
from ._validation import check_positive_int, check_seed
from .data import brute_force_knn, gen_synthetic, read_fvecs, split_queries
from .exceptions import ConfigError, InvalidArgumentError
from .index import LSHIndex, recall_at_k

__all__ = [
    "ExperimentConfig",
    "TimingResult",
    "TuneResult",
    "load_config",
    "derive_seed",
    "prepare_data",
    "time_hashing",
    "tune_width",
    "width_grid",
    "run_experiment",
    "emit_report",
    "report_to_csv",
    "validate_report",
    "REPORT_SCHEMA",
    "CSV_COLUMNS",
    "CSV_HEADER",
]

REPORT_VERSION = 1

CSV_COLUMNS = (
    "scheme", "k", "L", "width", "width_tuned", "m", "density", "recall_at_10",
    "avg_query_time_s", "hash_eval_time_s", "build_time_s", "mean_candidates",
    "median_candidates", "max_candidates", "empty_queries", "seed", "dataset_fingerprint",
)
CSV_HEADER = ",".join(CSV_COLUMNS)


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description (one JSON object, scalar or list values).

    ``dataset`` is ``"synthetic"`` or the path of an ``.fvecs`` file. For
    real files, ``queries`` may name a query file; otherwise queries are
    held out at random, as are the ``n_validation`` points used for width
    tuning. Any ``width_<scheme>`` left as null is tuned on a geometric grid
    from ``grid_lo`` to ``grid_hi`` times a reference distance, with
    ``grid_per_octave`` points per doubling.
    """

    name: str = "experiment"
    dataset: str = "synthetic"
    queries: str | None = None
    kind: str = "clustered"
    n_points: int = 10_000
    dim: int = 128
    n_queries: int = 200
    n_validation: int = 100
    normalize: bool = False
    schemes: tuple = ("e2lsh", "fastlsh", "achash")
    k: int = 10
    L: int = 50
    m: int = 30
    density: float = hashing.ACHASH_DEFAULT_DENSITY
    width_e2lsh: float | None = None
    width_fastlsh: float | None = None
    width_achash: float | None = None
    grid_lo: float = 1.0
    grid_hi: float = 8.0
    grid_per_octave: int = 8
    target_recall: float = 0.9
    topk: int = 10
    timing_repetitions: int = 5
    seed: int = 0

    def __post_init__(self):
        try:
            for name in ("n_points", "dim", "n_queries", "n_validation", "k", "L", "m",
                         "grid_per_octave", "topk", "timing_repetitions"):
                check_positive_int(getattr(self, name), name)
            object.__setattr__(self, "seed", check_seed(self.seed))
            schemes = self.schemes
            if isinstance(schemes, str):
                schemes = (schemes,)
            schemes = tuple(hashing.Scheme.parse(s).value for s in schemes)
            if not schemes:
                raise ConfigError("schemes must list at least one scheme")
            object.__setattr__(self, "schemes", schemes)
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(self.normalize, bool):
            raise ConfigError("normalize must be true or false")
        if not 0 < self.target_recall <= 1:
            raise ConfigError("target_recall must lie in (0, 1]")
        if not 0 < self.density <= 1:
            raise ConfigError("density must lie in (0, 1]")
        if not 0 < self.grid_lo < self.grid_hi:
            raise ConfigError("need 0 < grid_lo < grid_hi")
        for s in hashing.Scheme:
            w = getattr(self, f"width_{s.value}")
            if w is not None and not (isinstance(w, (int, float)) and w > 0):
                raise ConfigError(f"width_{s.value} must be a positive number or null")
        if self.dataset != "synthetic" and not os.path.exists(self.dataset):
            raise ConfigError(f"dataset file not found: {self.dataset}")
        if self.queries is not None and not os.path.exists(self.queries):
            raise ConfigError(f"query file not found: {self.queries}")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        d = dict(d)
        if "schemes" in d and isinstance(d["schemes"], list):
            d["schemes"] = tuple(d["schemes"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["schemes"] = list(self.schemes)
        return d

    def width_for(self, scheme):
        return getattr(self, f"width_{hashing.Scheme.parse(scheme).value}")


def _parse_flat(text):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition(sep)
        value = value.strip()
        try:
            out[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            out[key.strip()] = value
    return out


def load_config(path, overrides=None):
    """Read an :class:`ExperimentConfig` from a JSON object or from
    ``key = value`` lines (values parsed as JSON where possible)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        d = json.loads(text)
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    except json.JSONDecodeError:
        d = _parse_flat(text)
    d.update(overrides or {})
    return ExperimentConfig.from_dict(d)


def derive_seed(seed, tag):
    """Independent 64-bit child seed of ``seed`` for stream ``tag``."""
    ss = np.random.SeedSequence(seed, spawn_key=(tag,))
    return int(ss.generate_state(1, np.uint64)[0])


# --------------------------------------------------------------------------
# Data preparation
# --------------------------------------------------------------------------


@dataclass
class PreparedData:
    base: np.ndarray
    queries: np.ndarray
    validation: np.ndarray
    gt: np.ndarray
    gt_dist: np.ndarray
    val_gt: np.ndarray
    val_gt_dist: np.ndarray
    name: str
    fingerprint: str


def prepare_data(cfg):
    """Base set, test queries, validation queries and exact ground truth."""
    if cfg.dataset == "synthetic":
        total = cfg.n_points + cfg.n_queries + cfg.n_validation
        ds = gen_synthetic(total, cfg.dim, cfg.kind, derive_seed(cfg.seed, 0),
                           normalize=cfg.normalize)
    else:
        ds = read_fvecs(cfg.dataset)
        if cfg.normalize:
            ds = ds.normalize()
    if cfg.queries is not None:
        qs = read_fvecs(cfg.queries)
        if qs.dim != ds.dim:
            raise ConfigError("query file and dataset differ in dimension")
        if cfg.normalize:
            qs = qs.normalize()
        rest, val = split_queries(ds, cfg.n_validation, derive_seed(cfg.seed, 1))
        base, queries = rest, qs
    else:
        rest, queries = split_queries(ds, cfg.n_queries, derive_seed(cfg.seed, 1))
        base, val = split_queries(rest, cfg.n_validation, derive_seed(cfg.seed, 2))
    if base.n_points < cfg.topk:
        raise ConfigError("dataset smaller than topk after holding out queries")
    gt, gd = brute_force_knn(base, queries, cfg.topk)
    vgt, vgd = brute_force_knn(base, val, cfg.topk)
    return PreparedData(base.X, queries.X, val.X, gt, gd, vgt, vgd, ds.name,
                        base.fingerprint())


# --------------------------------------------------------------------------
# Timing
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TimingResult:
    """Hash-evaluation wall time in nanoseconds (median and samples)."""

    median_ns: int
    samples_ns: tuple
    n_points: int
    n_hashes: int
    peak_alloc_bytes: int
    dataset_bytes: int

    @property
    def seconds(self):
        return self.median_ns / 1e9

    @property
    def isolated(self):
        """No allocation as large as the dataset happened while hashing."""
        return self.peak_alloc_bytes < self.dataset_bytes


def time_hashing(X, family, repetitions=5):
    """Median wall time of hashing every row of ``X`` with every function of
    the fitted ``family``.

    The output buffer is allocated once, one warmup pass runs first (it
    also triggers compilation), and a separate traced pass records the
    peak Python-visible allocation so tests can confirm the timed region
    never copies the dataset. Only ``family.transform`` is inside the timer.
    """
    repetitions = check_positive_int(repetitions, "repetitions")
    X = np.ascontiguousarray(X)
    out = np.empty((X.shape[0], family.n_functions_), dtype=np.int64)
    family.transform(X, out=out)
    tracemalloc.start()
    try:
        tracemalloc.reset_peak()
        family.transform(X, out=out)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter_ns()
        family.transform(X, out=out)
        samples.append(time.perf_counter_ns() - t0)
    return TimingResult(int(np.median(samples)), tuple(samples), X.shape[0],
                        family.n_functions_, int(peak), int(X.nbytes))


# --------------------------------------------------------------------------
# Width tuning
# --------------------------------------------------------------------------


@dataclass
class TuneResult:
    """Outcome of a width sweep.

    ``achieved`` is False when no grid width reached the target; ``width``
    is then the best-recall width. ``monotone`` flags whether recall was
    nondecreasing over the evaluated prefix of the grid.
    """

    width: float
    achieved: bool
    monotone: bool
    widths: list = field(default_factory=list)
    recalls: list = field(default_factory=list)
    mean_candidates: list = field(default_factory=list)


def width_grid(reference, lo=0.5, hi=8.0, per_octave=8):
    """Geometric grid ``reference * 2**(j / per_octave)`` covering [lo, hi]."""
    n = int(round(math.log2(hi / lo) * per_octave))
    return [float(reference * lo * 2.0 ** (j / per_octave)) for j in range(n + 1)]


def tune_width(base, queries, ground_truth, scheme, k, L, grid, target_recall=0.9,
               topk=10, m=30, density=hashing.ACHASH_DEFAULT_DENSITY, seed=0,
               extra=2):
    """Smallest grid width whose index reaches ``target_recall`` on the
    validation queries.

    Projections are computed once; each width only re-quantizes them
    (offsets scale as ``b = u w``), so every candidate index is exactly the
    one a fresh build at that width would produce. The sweep runs in
    ascending order and stops ``extra`` points after the first achiever
    (or once recall reaches 1).
    """
    grid = sorted(float(w) for w in grid)
    if not grid:
        raise InvalidArgumentError("width grid is empty")
    est = LSHIndex(scheme, k, L, grid[0], m, density, seed)
    fam = est._family().fit(base)
    P = fam.project(base)
    res = TuneResult(grid[0], False, True)
    first = None
    for i, w in enumerate(grid):
        fw = fam.with_width(w)
        idx = LSHIndex(scheme, k, L, w, m, density, seed)._fit_codes(base, fw, fw.quantize(P))
        out = idx.query_batch(queries, topk)
        rec = recall_at_k(out, ground_truth, topk)
        res.widths.append(w)
        res.recalls.append(rec)
        res.mean_candidates.append(float(np.mean([r.candidate_count for r in out])))
        if first is None and rec >= target_recall:
            first = i
        if (first is not None and i - first >= extra) or rec >= 1.0:
            break
    res.monotone = bool(np.all(np.diff(res.recalls) >= 0))
    if first is not None:
        res.width, res.achieved = res.widths[first], True
    else:
        j = int(np.argmax(res.recalls))
        res.width, res.achieved = res.widths[j], False
    return res


# --------------------------------------------------------------------------
# Experiment
# --------------------------------------------------------------------------


def _reference_distance(data):
    """Median distance from a validation query to its ``topk``-th neighbour."""
    return float(np.median(data.val_gt_dist[:, -1]))


def _scheme_scale(cfg, scheme, dim):
    # FastLSH projects m sampled coordinates, shrinking distances by sqrt(m/n).
    return math.sqrt(min(cfg.m, dim) / dim) if scheme == "fastlsh" else 1.0


def run_scheme(cfg, data, scheme, timing=True):
    scheme = hashing.Scheme.parse(scheme).value
    hseed = derive_seed(cfg.seed, 3)
    dim = data.base.shape[1]
    width = cfg.width_for(scheme)
    tuning = None
    if width is None:
        ref = _reference_distance(data) * _scheme_scale(cfg, scheme, dim)
        grid = width_grid(ref, cfg.grid_lo, cfg.grid_hi, cfg.grid_per_octave)
        tuning = tune_width(data.base, data.validation, data.val_gt, scheme, cfg.k, cfg.L,
                            grid, cfg.target_recall, cfg.topk, cfg.m, cfg.density, hseed)
        width = tuning.width
    t0 = time.perf_counter()
    idx = LSHIndex(scheme, cfg.k, cfg.L, width, cfg.m, cfg.density, hseed).fit(data.base)
    build = time.perf_counter() - t0
    res = idx.query_batch(data.queries, cfg.topk)
    cands = np.array([r.candidate_count for r in res])
    rec = {
        "scheme": scheme,
        "k": cfg.k,
        "L": cfg.L,
        "width": float(width),
        "width_tuned": tuning is not None,
        "m": cfg.m if scheme == "fastlsh" else None,
        "density": cfg.density if scheme == "achash" else None,
        "recall_at_10": recall_at_k(res, data.gt, min(10, cfg.topk)),
        "avg_query_time_s": float(np.mean([r.hash_time + r.scan_time for r in res])),
        "hash_eval_time_s": None,
        "build_time_s": build,
        "mean_candidates": float(cands.mean()),
        "median_candidates": float(np.median(cands)),
        "max_candidates": int(cands.max()),
        "empty_queries": int(np.count_nonzero(cands == 0)),
        "candidate_counts": [int(c) for c in cands],
        "seed": int(hseed),
        "dataset_fingerprint": data.fingerprint,
        "tuning": None if tuning is None else {
            "achieved": tuning.achieved, "monotone": tuning.monotone,
            "widths": tuning.widths, "recalls": tuning.recalls,
            "mean_candidates": tuning.mean_candidates,
        },
    }
    if timing:
        tr = time_hashing(data.base, idx.family_, cfg.timing_repetitions)
        rec["hash_eval_time_s"] = tr.seconds
    return rec


def run_experiment(config, timing=True):
    """Run every configured scheme on identical data and ground truth.

    ``config`` is an :class:`ExperimentConfig`, a dict, or a config path.
    With ``timing=False`` hash-evaluation times are left null (useful when
    only recall and candidate counts matter).
    """
    if isinstance(config, (str, os.PathLike)):
        cfg = load_config(config)
    elif isinstance(config, dict):
        cfg = ExperimentConfig.from_dict(config)
    else:
        cfg = config
    data = prepare_data(cfg)
    records = [run_scheme(cfg, data, s, timing) for s in cfg.schemes]
    return {
        "version": REPORT_VERSION,
        "config": cfg.to_dict(),
        "dataset": {
            "name": data.name,
            "n_points": int(data.base.shape[0]),
            "dim": int(data.base.shape[1]),
            "n_queries": int(data.queries.shape[0]),
            "n_validation": int(data.validation.shape[0]),
            "fingerprint": data.fingerprint,
        },
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "machine": platform.machine(),
        },
        "records": records,
    }


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------

_NUM_OR_NULL = {"type": ["number", "null"]}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "config", "dataset", "environment", "records"],
    "properties": {
        "version": {"const": REPORT_VERSION},
        "config": {"type": "object"},
        "dataset": {
            "type": "object",
            "required": ["name", "n_points", "dim", "n_queries", "fingerprint"],
            "properties": {
                "n_points": {"type": "integer", "minimum": 1},
                "dim": {"type": "integer", "minimum": 1},
                "n_queries": {"type": "integer", "minimum": 1},
                "fingerprint": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
            },
        },
        "environment": {"type": "object"},
        "records": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": list(CSV_COLUMNS) + ["candidate_counts"],
                "properties": {
                    "scheme": {"enum": [s.value for s in hashing.Scheme]},
                    "k": {"type": "integer", "minimum": 1},
                    "L": {"type": "integer", "minimum": 1},
                    "width": {"type": "number", "exclusiveMinimum": 0},
                    "width_tuned": {"type": "boolean"},
                    "m": {"type": ["integer", "null"]},
                    "density": _NUM_OR_NULL,
                    "recall_at_10": {"type": "number", "minimum": 0, "maximum": 1},
                    "avg_query_time_s": {"type": "number", "minimum": 0},
                    "hash_eval_time_s": {"type": ["number", "null"], "minimum": 0},
                    "build_time_s": {"type": "number", "minimum": 0},
                    "mean_candidates": {"type": "number", "minimum": 0},
                    "median_candidates": {"type": "number", "minimum": 0},
                    "max_candidates": {"type": "integer", "minimum": 0},
                    "empty_queries": {"type": "integer", "minimum": 0},
                    "candidate_counts": {"type": "array", "items": {"type": "integer"}},
                    "seed": {"type": "integer", "minimum": 0},
                    "dataset_fingerprint": {"type": "string"},
                },
            },
        },
    },
}


def validate_report(report):
    """Raise ``jsonschema.ValidationError`` if ``report`` breaks the schema."""
    jsonschema.validate(report, REPORT_SCHEMA)


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_to_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in report["records"]:
        w.writerow([_csv_cell(rec[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def report_to_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def emit_report(report, path=None, format="json"):
    """Serialize ``report`` as JSON or CSV; write to ``path`` if given.

    Returns the serialized text.
    """
    if format == "json":
        text = report_to_json(report)
    elif format == "csv":
        text = report_to_csv(report)
    else:
        raise InvalidArgumentError("format must be 'json' or 'csv'")
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise InvalidArgumentError(f"cannot write report to {path}: {exc}") from exc
    return text
