import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fastlsh import data, theory
from fastlsh.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def files(tmp_path, capsys):
    d, q = tmp_path / "d.fvecs", tmp_path / "q.fvecs"
    code, _, _ = run(capsys, "data", "gen", "--kind", "clustered", "--n-points", 600,
                     "--dim", 24, "--n-queries", 5, "--queries-out", q, "--seed", 1,
                     "--out", d)
    assert code == 0
    return tmp_path, d, q


def test_data_gen_and_gt(files, capsys):
    tmp, d, q = files
    assert data.read_fvecs(d).X.shape == (600, 24)
    assert data.read_fvecs(q).X.shape == (5, 24)
    code, _, _ = run(capsys, "data", "gt", "--data", d, "--queries", q, "--k", 4, "--out",
                     tmp / "gt.ivecs")
    assert code == 0
    ref, _ = data.brute_force_knn(data.read_fvecs(d), data.read_fvecs(q), 4)
    np.testing.assert_array_equal(data.read_ivecs(tmp / "gt.ivecs"), ref)


def test_data_stats_csv(files, capsys):
    _, d, _ = files
    code, out, _ = run(capsys, "data", "stats", "--data", d, "--pairs", 2000, "--buckets", 5)
    assert code == 0
    assert out.splitlines()[0] == "s_bucket,sigma_min,sigma_mean,sigma_max,count"
    assert sum(int(r["count"]) for r in rows(out)) == 2000


def test_index_build_and_query(files, capsys):
    tmp, d, q = files
    code, _, _ = run(capsys, "data", "gt", "--data", d, "--queries", q, "--k", 10, "--out",
                     tmp / "gt.ivecs")
    code, _, _ = run(capsys, "index", "build", "--data", d, "--scheme", "e2lsh", "--k", 2,
                     "--L", 8, "--width", 40, "--out", tmp / "i.idx")
    assert code == 0
    code, out, err = run(capsys, "index", "query", "--index", tmp / "i.idx", "--data", d,
                         "--queries", q, "--topk", 10, "--gt", tmp / "gt.ivecs")
    assert code == 0
    got = rows(out)
    assert list(got[0]) == ["query", "rank", "id", "distance"]
    assert {int(r["query"]) for r in got} == set(range(5))
    assert "recall" in err


def test_index_query_wrong_dataset_exits_2(files, capsys, tmp_path):
    tmp, d, q = files
    run(capsys, "index", "build", "--data", d, "--k", 2, "--L", 2, "--out", tmp / "i.idx")
    code, _, err = run(capsys, "index", "query", "--index", tmp / "i.idx", "--data", q,
                       "--queries", q)
    assert code == 2 and "error" in err


def test_theory_pcollision(capsys):
    code, out, _ = run(capsys, "theory", "pcollision", "--scheme", "fastlsh", "--s", "1,2",
                       "--sigma", "0.01", "--m", 30, "--n", 128, "--width", 2.0)
    assert code == 0
    got = rows(out)
    assert [float(r["s"]) for r in got] == [1.0, 2.0]
    expect = theory.collision_prob_fast(theory.CollisionModel(2.0, 0.01, 30, 128), 2.0)
    assert float(got[1]["p"]) == expect
    code, out, _ = run(capsys, "theory", "pcollision", "--scheme", "e2lsh", "--s", "1",
                       "--width", 4, "--format", "json")
    assert json.loads(out)[0]["p"] == theory.collision_prob_e2lsh(1.0, 4.0)


def test_theory_rho_and_moments(capsys):
    code, out, _ = run(capsys, "theory", "rho", "--scheme", "e2lsh", "--width", 4,
                       "--c-min", 1, "--c-max", 3, "--c-step", 0.5)
    assert code == 0
    got = rows(out)
    assert [float(r["c"]) for r in got] == [1.0, 1.5, 2.0, 2.5, 3.0]
    assert float(got[0]["rho"]) == 1.0
    code, out, _ = run(capsys, "theory", "moments", "--s", 2, "--sigma", 0.05, "--m",
                       "15,30", "--n", 128)
    got = rows(out)
    mo = theory.moments_stx(theory.CollisionModel(2.0, 0.05, 30, 128))
    assert float(got[1]["lambda"]) == mo.lam and float(got[1]["epsilon"]) == mo.epsilon


def test_theory_rho_undefined_points_are_nan(capsys):
    code, out, _ = run(capsys, "theory", "rho", "--scheme", "e2lsh", "--width", 1e20,
                       "--c-max", 2)
    assert code == 0
    assert all(math.isnan(float(r["rho"])) for r in rows(out))


def test_invalid_model_exits_2(capsys):
    code, _, _ = run(capsys, "theory", "pcollision", "--s", "1", "--m", 200, "--n", 100,
                     "--width", 1)
    assert code == 2


def test_bench_run_and_config_errors(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_points": 120, "dim": 8, "n_queries": 5,
                               "n_validation": 5, "k": 1, "L": 1, "timing_repetitions": 1}))
    code, out, _ = run(capsys, "bench", "run", "--config", cfg, "--seed", 4)
    assert code == 0
    rep = json.loads(out)
    assert rep["config"]["seed"] == 4 and len(rep["records"]) == 3
    code, out, _ = run(capsys, "bench", "run", "--config", cfg, "--format", "csv",
                       "--no-timing")
    assert out.splitlines()[0].startswith("scheme,k,L,width")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"frobnicate": 1}))
    code, _, err = run(capsys, "bench", "run", "--config", bad)
    assert code == 2 and "frobnicate" in err
    code, _, _ = run(capsys, "bench", "run", "--config", tmp_path / "nope.json")
    assert code == 2


def test_bench_time_hash(capsys):
    code, out, _ = run(capsys, "bench", "time-hash", "--scheme", "fastlsh", "--n", 64,
                       "--points", 500, "--hashes", 20, "--reps", 2)
    assert code == 0
    r = rows(out)[0]
    assert r["scheme"] == "fastlsh" and int(r["median_ns"]) > 0


def test_numeric_failure_exits_3(monkeypatch, capsys):
    from fastlsh import cli
    from fastlsh.exceptions import NumericFailureError

    def boom(*a, **k):
        raise NumericFailureError("did not converge", {"abserr": 1.0})

    monkeypatch.setattr(cli.theory, "collision_prob_fast", boom)
    code, _, err = run(capsys, "theory", "pcollision", "--s", "1", "--sigma", "0.1",
                       "--width", 1)
    assert code == 3 and "abserr" in err


def test_console_entry_point_module():
    out = subprocess.run([sys.executable, "-m", "fastlsh.cli", "theory", "pcollision",
                          "--scheme", "e2lsh", "--s", "2", "--width", "2"],
                         capture_output=True, text=True, check=True).stdout
    assert math.isclose(float(rows(out)[0]["p"]), theory.collision_prob_e2lsh(2.0, 2.0),
                        rel_tol=1e-15)
