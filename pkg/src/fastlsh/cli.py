"""Command-line entry point: ``fastlsh <group> <command> [options]``.

Exit codes: 0 on success, 2 for invalid configuration or arguments,
3 when a numerical routine fails to converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import bench, data, theory
from .exceptions import (ConfigError, FormatError, InvalidArgumentError,
                         NumericFailureError, UndefinedRhoError)
from .index import LSHIndex, recall_at_k

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _floats(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidArgumentError(f"expected comma-separated numbers, got {text!r}") from exc


def _emit_rows(columns, rows, fmt, out):
    if fmt == "json":
        rows = [[float(v) if isinstance(v, np.floating) else
                 int(v) if isinstance(v, np.integer) else v for v in r] for r in rows]
        text = json.dumps([dict(zip(columns, r)) for r in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in r])
        text = buf.getvalue()
    _write(text, out)


def _write(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_points(path, normalize=False):
    ds = data.read_fvecs(path)
    return ds.normalize() if normalize else ds


# -- data -----------------------------------------------------------------


def cmd_data_gen(a):
    ds = data.gen_synthetic(a.n_points + a.n_queries, a.dim, a.kind, a.seed,
                            normalize=a.normalize)
    if a.n_queries:
        base, qs = data.split_queries(ds, a.n_queries, bench.derive_seed(a.seed, 1))
        data.write_fvecs(qs, a.queries_out or a.out.replace(".fvecs", "") + "_query.fvecs")
    else:
        base = ds
    data.write_fvecs(base, a.out)


def cmd_data_stats(a):
    ds = _load_points(a.data, a.normalize)
    prof = data.dataset_sigma_profile(ds, a.pairs, a.buckets, a.seed)
    _emit_rows(data.PROFILE_COLUMNS, list(prof.rows()), a.format, a.out)


def cmd_data_gt(a):
    base = _load_points(a.data, a.normalize)
    qs = _load_points(a.queries, a.normalize)
    ids, dist = data.brute_force_knn(base, qs, a.k)
    data.write_ivecs(ids.astype(np.int32), a.out)


# -- index ----------------------------------------------------------------


def _index_params(a):
    params = {"scheme": a.scheme, "n_hashes": a.k, "n_tables": a.L, "width": a.width,
              "m": a.m, "density": a.density, "random_state": a.seed}
    if a.config:
        cfg = bench.load_config(a.config)
        params.update(scheme=cfg.schemes[0], n_hashes=cfg.k, n_tables=cfg.L, m=cfg.m,
                      density=cfg.density, random_state=cfg.seed)
        w = cfg.width_for(cfg.schemes[0])
        if w is not None:
            params["width"] = w
    return params


def cmd_index_build(a):
    base = _load_points(a.data, a.normalize)
    LSHIndex(**_index_params(a)).fit(base).save(a.out)


def cmd_index_query(a):
    base = _load_points(a.data, a.normalize)
    qs = _load_points(a.queries, a.normalize)
    idx = LSHIndex.load(a.index, base.X)
    res = idx.query_batch(qs.X, a.topk)
    rows = [(qi, rank, int(i), float(d)) for qi, r in enumerate(res)
            for rank, (i, d) in enumerate(zip(r.ids, r.distances))]
    _emit_rows(("query", "rank", "id", "distance"), rows, a.format, a.out)
    if a.gt:
        gt = data.read_ivecs(a.gt)
        k = min(10, a.topk, gt.shape[1])
        sys.stderr.write(f"recall@{k}: {recall_at_k(res, gt, k):.4f}\n")


# -- theory ---------------------------------------------------------------


def cmd_theory_pcollision(a):
    rows = []
    for s in _floats(a.s):
        for sig in _floats(a.sigma):
            if a.scheme == "e2lsh":
                p = theory.collision_prob_e2lsh(s, a.width)
            else:
                cm = theory.CollisionModel(s, sig, a.m, a.n)
                p = theory.collision_prob_fast(cm, a.width)
            rows.append((a.scheme, s, sig, a.m, a.n, a.width, float(p)))
    _emit_rows(("scheme", "s", "sigma", "m", "n", "width", "p"), rows, a.format, a.out)


def cmd_theory_rho(a):
    cs = np.round(np.arange(a.c_min, a.c_max + 0.5 * a.c_step, a.c_step), 10)
    template = theory.CollisionModel(1.0, 0.0, a.m, a.n) if a.scheme == "fastlsh" else None

    def sigma_of_s(s):
        return a.cv * s * s / a.n

    pts = theory.rho_curve(cs, a.scheme, a.width, template, sigma_of_s, on_undefined="nan")
    rows = [(a.scheme, a.width, p.c, p.rho, p.p1, p.p2) for p in pts]
    _emit_rows(("scheme", "width", "c", "rho", "p1", "p2"), rows, a.format, a.out)


def cmd_theory_moments(a):
    rows = []
    for m in [int(x) for x in _floats(a.m)]:
        cm = theory.CollisionModel(a.s, a.sigma, m, a.n)
        mo = theory.moments_stx(cm)
        rows.append((m, a.n, a.s, a.sigma, cm.mu_t, cm.sigma_t, mo.m2, mo.m4,
                     mo.epsilon, mo.lam))
    _emit_rows(("m", "n", "s", "sigma", "mu_t", "sigma_t", "m2", "m4", "epsilon", "lambda"),
               rows, a.format, a.out)


# -- bench ----------------------------------------------------------------


def cmd_bench_run(a):
    overrides = {}
    if a.seed is not None:
        overrides["seed"] = a.seed
    if a.normalize:
        overrides["normalize"] = True
    cfg = (bench.load_config(a.config, overrides) if a.config
           else bench.ExperimentConfig.from_dict(overrides))
    report = bench.run_experiment(cfg, timing=not a.no_timing)
    bench.validate_report(report)
    _write(bench.emit_report(report, format=a.format), a.out)


def cmd_bench_time_hash(a):
    from . import hashing

    rng = np.random.default_rng(a.seed)
    X = rng.standard_normal((a.points, a.n)).astype(np.float32)
    width = a.width if a.width else (4.0 * math.sqrt(min(a.m, a.n) / a.n)
                                     if a.scheme == "fastlsh" else 4.0)
    fam = hashing.make_hasher(a.scheme, n_hashes=a.hashes, n_tables=1, width=width,
                              m=a.m, density=a.density, random_state=a.seed).fit(X)
    tr = bench.time_hashing(X, fam, a.reps)
    rows = [(a.scheme, a.n, a.m if a.scheme == "fastlsh" else None, a.points, a.hashes,
             tr.median_ns, int(tr.isolated))]
    _emit_rows(("scheme", "n", "m", "points", "hashes", "median_ns", "isolated"), rows,
               a.format, a.out)


# -- parser ---------------------------------------------------------------


def _common(p, seed_default=0):
    p.add_argument("--seed", type=int, default=seed_default, help="64-bit seed")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser():
    ap = argparse.ArgumentParser(prog="fastlsh", description=__doc__.splitlines()[0])
    groups = ap.add_subparsers(dest="group", required=True)

    g = groups.add_parser("data", help="datasets and statistics").add_subparsers(
        dest="command", required=True)
    p = g.add_parser("gen", help="write a synthetic dataset as .fvecs")
    p.add_argument("--kind", choices=data.SYNTHETIC_KINDS, default="clustered")
    p.add_argument("--n-points", type=int, default=10_000)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--n-queries", type=int, default=0,
                   help="also hold out this many queries into a query file")
    p.add_argument("--queries-out", default=None)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_data_gen)

    p = g.add_parser("stats", help="sigma profile per distance bucket")
    p.add_argument("--data", required=True)
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--buckets", type=int, default=50)
    p.add_argument("--normalize", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_data_stats)

    p = g.add_parser("gt", help="exact k-NN ground truth as .ivecs")
    p.add_argument("--data", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_data_gt)

    g = groups.add_parser("index", help="build and query indexes").add_subparsers(
        dest="command", required=True)
    p = g.add_parser("build", help="build an index file")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--scheme", choices=("fastlsh", "e2lsh", "achash"), default="fastlsh")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--L", type=int, default=50)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--m", type=int, default=30)
    p.add_argument("--density", type=float, default=0.25)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index_build)

    p = g.add_parser("query", help="query an index file")
    p.add_argument("--index", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("--gt", default=None, help="ground truth .ivecs; prints recall")
    p.add_argument("--normalize", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_index_query)

    g = groups.add_parser("theory", help="analytic curves").add_subparsers(
        dest="command", required=True)
    p = g.add_parser("pcollision", help="collision probabilities")
    p.add_argument("--scheme", choices=("fastlsh", "e2lsh"), default="fastlsh")
    p.add_argument("--s", default="1", help="distance(s), comma separated")
    p.add_argument("--sigma", default="0", help="spread(s), comma separated")
    p.add_argument("--m", type=int, default=30)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--width", type=float, required=True)
    _common(p)
    p.set_defaults(func=cmd_theory_pcollision)

    p = g.add_parser("rho", help="rho(c) curve")
    p.add_argument("--scheme", choices=("fastlsh", "e2lsh"), default="fastlsh")
    p.add_argument("--width", type=float, required=True)
    p.add_argument("--m", type=int, default=30)
    p.add_argument("--n", type=int, default=960)
    p.add_argument("--cv", type=float, default=0.0,
                   help="sigma / mu of the squared differences (sigma = cv s^2 / n)")
    p.add_argument("--c-min", type=float, default=1.0)
    p.add_argument("--c-max", type=float, default=20.0)
    p.add_argument("--c-step", type=float, default=0.1)
    _common(p)
    p.set_defaults(func=cmd_theory_rho)

    p = g.add_parser("moments", help="second/fourth moments, epsilon and lambda")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--m", default="30", help="sample size(s), comma separated")
    p.add_argument("--n", type=int, default=128)
    _common(p)
    p.set_defaults(func=cmd_theory_moments)

    g = groups.add_parser("bench", help="experiments").add_subparsers(
        dest="command", required=True)
    p = g.add_parser("run", help="run an experiment config")
    p.add_argument("--config", default=None)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--no-timing", action="store_true", help="skip hash-time measurement")
    _common(p, seed_default=None)
    p.set_defaults(func=cmd_bench_run, format="json")

    p = g.add_parser("time-hash", help="time hash evaluation on random data")
    p.add_argument("--scheme", choices=("fastlsh", "e2lsh", "achash"), default="fastlsh")
    p.add_argument("--n", type=int, default=960)
    p.add_argument("--m", type=int, default=30)
    p.add_argument("--density", type=float, default=0.25)
    p.add_argument("--points", type=int, default=100_000)
    p.add_argument("--hashes", type=int, default=500)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--width", type=float, default=None)
    _common(p)
    p.set_defaults(func=cmd_bench_time_hash)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, InvalidArgumentError, FormatError, UndefinedRhoError,
            FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except NumericFailureError as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        if exc.diagnostics:
            sys.stderr.write(json.dumps(exc.diagnostics, default=str) + "\n")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
