import json
import math

import jsonschema
import numpy as np
import pytest

from fastlsh import bench, data, hashing
from fastlsh.bench import ExperimentConfig
from fastlsh.exceptions import ConfigError

SMOKE = {"n_points": 100, "dim": 16, "n_queries": 10, "n_validation": 10, "k": 1, "L": 1,
         "timing_repetitions": 1, "seed": 3}


@pytest.fixture(scope="module")
def smoke_report():
    return bench.run_experiment(dict(SMOKE))


@pytest.fixture(scope="module")
def small_report():
    cfg = {"n_points": 3000, "dim": 128, "n_queries": 40, "n_validation": 40, "k": 6,
           "L": 16, "seed": 11, "timing_repetitions": 1}
    return bench.run_experiment(cfg, timing=False)


# -- configuration ---------------------------------------------------------


def test_config_rejects_unknown_and_bad_values():
    with pytest.raises(ConfigError, match="unknown config keys: bogus"):
        ExperimentConfig.from_dict({"bogus": 1})
    for bad in ({"k": 0}, {"schemes": ["nope"]}, {"target_recall": 1.5},
                {"width_fastlsh": -1}, {"density": 0}, {"grid_lo": 4, "grid_hi": 2},
                {"normalize": "yes"}, {"dataset": "/nonexistent.fvecs"}):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(bad)


def test_load_config_json_and_flat(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"k": 3, "schemes": ["e2lsh"]}))
    cfg = bench.load_config(p, {"L": 7})
    assert (cfg.k, cfg.L, cfg.schemes) == (3, 7, ("e2lsh",))
    q = tmp_path / "c.cfg"
    q.write_text('# comment\nk = 4\nname = run-a\nschemes = ["fastlsh", "achash"]\n'
                 "width_e2lsh: 2.5\n")
    cfg = bench.load_config(q)
    assert cfg.k == 4 and cfg.name == "run-a" and cfg.schemes == ("fastlsh", "achash")
    assert cfg.width_for("e2lsh") == 2.5
    q.write_text("k 4\n")
    with pytest.raises(ConfigError):
        bench.load_config(q)
    with pytest.raises(ConfigError):
        bench.load_config(tmp_path / "missing.json")


def test_config_dict_roundtrip():
    cfg = ExperimentConfig(k=2, schemes=("fastlsh",))
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_derive_seed_streams_differ():
    seeds = {bench.derive_seed(0, t) for t in range(4)}
    assert len(seeds) == 4
    assert bench.derive_seed(5, 1) == bench.derive_seed(5, 1)


# -- reports -----------------------------------------------------------------


def test_smoke_report_complete_and_valid(smoke_report):
    bench.validate_report(smoke_report)
    assert [r["scheme"] for r in smoke_report["records"]] == ["e2lsh", "fastlsh", "achash"]
    for rec in smoke_report["records"]:
        assert set(bench.CSV_COLUMNS) <= set(rec)
        assert rec["hash_eval_time_s"] >= 0 and rec["avg_query_time_s"] >= 0
        assert 0 <= rec["recall_at_10"] <= 1
        assert len(rec["candidate_counts"]) == 10
    assert smoke_report["config"] == ExperimentConfig.from_dict(SMOKE).to_dict()


def test_schema_rejects_broken_report(smoke_report):
    broken = json.loads(bench.report_to_json(smoke_report))
    broken["records"][0]["recall_at_10"] = 1.5
    with pytest.raises(jsonschema.ValidationError):
        bench.validate_report(broken)


def test_json_fixed_point(smoke_report, tmp_path):
    text = bench.emit_report(smoke_report, tmp_path / "r.json", "json")
    again = bench.report_to_json(json.loads(text))
    assert again == text
    assert (tmp_path / "r.json").read_text() == text


def test_csv_header_exact(smoke_report):
    text = bench.emit_report(smoke_report, format="csv")
    lines = text.strip().split("\n")
    assert lines[0] == ("scheme,k,L,width,width_tuned,m,density,recall_at_10,"
                        "avg_query_time_s,hash_eval_time_s,build_time_s,mean_candidates,"
                        "median_candidates,max_candidates,empty_queries,seed,"
                        "dataset_fingerprint")
    assert lines[0] == bench.CSV_HEADER
    assert len(lines) == 4


def test_reproducible_recall_and_candidates(smoke_report):
    again = bench.run_experiment(dict(SMOKE))
    strip = ("avg_query_time_s", "hash_eval_time_s", "build_time_s")
    for a, b in zip(smoke_report["records"], again["records"]):
        assert {k: v for k, v in a.items() if k not in strip} == \
            {k: v for k, v in b.items() if k not in strip}


def test_fair_inputs_across_schemes(smoke_report):
    recs = smoke_report["records"]
    assert len({(r["k"], r["L"], r["seed"], r["dataset_fingerprint"]) for r in recs}) == 1


# -- tuning --------------------------------------------------------------------


def test_width_grid():
    g = bench.width_grid(2.0, 1.0, 8.0, 8)
    assert len(g) == 25 and g[0] == 2.0 and g[-1] == pytest.approx(16.0)
    assert np.allclose(np.diff(np.log2(g)), 1 / 8)


def test_tune_single_width_grid():
    ds = data.gen_synthetic(300, 8, "gaussian", seed=0)
    base, q = data.split_queries(ds, 10, seed=0)
    gt, _ = data.brute_force_knn(base, q, 10)
    res = bench.tune_width(base.X, q.X, gt, "e2lsh", 2, 2, [3.0])
    assert res.width == 3.0 and res.widths == [3.0]


def test_tune_reports_unachieved_target():
    ds = data.gen_synthetic(300, 8, "gaussian", seed=0)
    base, q = data.split_queries(ds, 10, seed=0)
    gt, _ = data.brute_force_knn(base, q, 10)
    res = bench.tune_width(base.X, q.X, gt, "e2lsh", 8, 1, [1e-3, 2e-3], target_recall=0.99)
    assert not res.achieved and res.width in (1e-3, 2e-3)


def test_tuned_widths_reach_target_and_scale(small_report):
    by = {r["scheme"]: r for r in small_report["records"]}
    for rec in by.values():
        assert rec["width_tuned"] and rec["tuning"]["achieved"]
        assert rec["tuning"]["monotone"]
    ratio = by["fastlsh"]["width"] / by["e2lsh"]["width"]
    assert 1 / 1.5 <= ratio / math.sqrt(30 / 128) <= 1.5


def test_requantized_sweep_equals_fresh_build():
    ds = data.gen_synthetic(500, 32, "clustered", seed=1)
    base, q = data.split_queries(ds, 10, seed=1)
    gt, _ = data.brute_force_knn(base, q, 10)
    res = bench.tune_width(base.X, q.X, gt, "fastlsh", 3, 4, [2.0, 4.0, 8.0], seed=5,
                           target_recall=1.0)
    from fastlsh.index import LSHIndex, recall_at_k
    for w, r in zip(res.widths, res.recalls):
        idx = LSHIndex("fastlsh", 3, 4, w, 30, random_state=5).fit(base.X)
        assert recall_at_k(idx.query_batch(q.X), gt) == r


# -- timing -------------------------------------------------------------------


def test_time_hashing_median_and_isolation():
    X = np.random.default_rng(0).standard_normal((2000, 256)).astype(np.float32)
    fam = hashing.make_hasher("fastlsh", n_hashes=10, n_tables=5, random_state=0).fit(X)
    tr = bench.time_hashing(X, fam, repetitions=3)
    assert len(tr.samples_ns) == 3
    assert tr.median_ns == int(np.median(tr.samples_ns))
    assert tr.n_points == 2000 and tr.n_hashes == 50
    assert tr.isolated


def test_missing_dataset_fails_before_timing(tmp_path):
    with pytest.raises(ConfigError):
        bench.run_experiment({"dataset": str(tmp_path / "absent.fvecs")})


def test_run_on_fvecs_file(tmp_path):
    ds = data.gen_synthetic(150, 12, "gaussian", seed=2)
    data.write_fvecs(ds, tmp_path / "d.fvecs")
    rep = bench.run_experiment({"dataset": str(tmp_path / "d.fvecs"), "n_queries": 10,
                                "n_validation": 10, "k": 1, "L": 2, "schemes": ["e2lsh"],
                                "width_e2lsh": 3.0}, timing=False)
    bench.validate_report(rep)
    assert rep["dataset"]["n_points"] == 130
    assert rep["records"][0]["hash_eval_time_s"] is None
    assert rep["records"][0]["width_tuned"] is False
