import numpy as np
import pytest
from sklearn.base import clone

from fastlsh import data, hashing
from fastlsh.exceptions import FormatError, InvalidArgumentError
from fastlsh.index import IndexConfig, LSHIndex, QueryResult, build_index, recall_at_k

SCHEMES = ["fastlsh", "e2lsh", "achash"]


@pytest.fixture(scope="module")
def toy():
    ds = data.gen_synthetic(2000, 48, "clustered", seed=1, n_clusters=20)
    base, queries = data.split_queries(ds, 30, seed=2)
    return base, queries


def _fit(base, scheme, width=6.0, k=4, L=8, seed=3):
    return IndexConfig(k, L, scheme, width, m=16, seed=seed).estimator().fit(base.X)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_every_point_once_per_table_in_its_own_bucket(toy, scheme):
    base, _ = toy
    idx = _fit(base, scheme)
    codes = idx.family_.transform(base.X)
    k = idx.n_hashes
    for t, table in enumerate(idx.tables_):
        assert np.array_equal(np.sort(table.ids), np.arange(base.n_points))
        assert table.bucket_sizes().sum() == base.n_points
    # bucket of point p under H_t(p) contains p
    mix = np.empty((base.n_points, idx.n_tables), dtype=np.uint64)
    from fastlsh import _kernels
    _kernels.mix_keys(codes, k, mix)
    for p in range(0, base.n_points, 97):
        for t, table in enumerate(idx.tables_):
            assert p in table.lookup(codes[p, t * k:(t + 1) * k], mix[p, t])


def test_single_point_index():
    idx = LSHIndex("fastlsh", 3, 4, 1.0, m=2, random_state=0).fit(np.ones((1, 5)))
    for t in range(4):
        assert idx.bucket_sizes(t).tolist() == [1]
    r = idx.query(np.ones(5))
    assert r.ids.tolist() == [0] and r.distances.tolist() == [0.0]


@pytest.mark.parametrize("scheme", SCHEMES)
def test_identical_points_share_every_bucket(scheme):
    X = np.random.default_rng(0).standard_normal((10, 16))
    X[7] = X[2]
    idx = LSHIndex(scheme, 3, 6, 1.0, m=8, random_state=1).fit(X)
    codes = idx.family_.transform(X)
    assert np.array_equal(codes[7], codes[2])
    assert {2, 7} <= set(idx.candidates(X[2]).tolist())


def test_bucket_sizes_nondegenerate_on_gaussian():
    X = data.gen_synthetic(10_000, 32, "gaussian", seed=5).X
    idx = LSHIndex("fastlsh", 4, 2, 4.0, m=16, random_state=6).fit(X)
    sizes = idx.bucket_sizes(0)
    assert 1 < sizes.size and sizes.max() < X.shape[0]


@pytest.mark.parametrize("scheme", SCHEMES)
def test_candidate_soundness_and_exact_rerank(toy, scheme):
    base, queries = toy
    idx = _fit(base, scheme)
    for q in queries.X[:10]:
        res = idx.query(q, topk=10)
        cand = idx.candidates(q)
        assert res.candidate_count == cand.size
        assert set(res.ids.tolist()) <= set(cand.tolist())
        assert len(set(res.ids.tolist())) == len(res)
        ref = data.exact_distances(base.X, q, res.ids)
        assert res.distances.tobytes() == ref.tobytes()
        assert np.all(np.diff(res.distances) >= 0)
        # the best candidates are the ones returned
        all_d = data.exact_distances(base.X, q, cand)
        assert np.array_equal(np.sort(all_d)[:len(res)], res.distances)


def test_rerank_bit_exact_with_brute_force(toy):
    base, queries = toy
    idx = _fit(base, "e2lsh", width=50.0, k=1, L=2)
    gt_ids, gt_d = data.brute_force_knn(base, queries, 10)
    dist, ids = idx.kneighbors(queries.X, 10)
    hit = ids == gt_ids
    assert hit.mean() > 0.9
    assert np.array_equal(dist[hit], gt_d[hit])


def test_query_equal_to_indexed_point(toy):
    base, _ = toy
    idx = _fit(base, "fastlsh")
    r = idx.query(base.X[11])
    assert r.ids[0] == 11 and r.distances[0] == 0.0


def test_topk_larger_than_candidates(toy):
    base, queries = toy
    idx = _fit(base, "fastlsh", width=1.0, k=6, L=2)
    r = idx.query(queries.X[0], topk=10_000)
    assert len(r) == r.candidate_count


def test_empty_candidate_set_gives_empty_result():
    X = np.zeros((5, 4))
    idx = LSHIndex("e2lsh", 8, 1, 1e-3, random_state=0).fit(X)
    r = idx.query(np.full(4, 100.0))
    assert len(r) == 0 and r.candidate_count == 0
    dist, ids = idx.kneighbors(np.full((1, 4), 100.0), 3)
    assert ids.tolist() == [[-1, -1, -1]] and np.all(np.isinf(dist))


@pytest.mark.parametrize("scheme", SCHEMES)
def test_candidates_monotone_in_L(toy, scheme):
    base, queries = toy
    counts = []
    for L in (1, 2, 4, 8):
        idx = _fit(base, scheme, L=L)
        counts.append([idx.candidates(q).size for q in queries.X])
    counts = np.array(counts)
    assert np.all(np.diff(counts, axis=0) >= 0)


def test_determinism_and_dimension_mismatch(toy):
    base, queries = toy
    a = _fit(base, "fastlsh").kneighbors(queries.X)
    b = _fit(base, "fastlsh").kneighbors(queries.X)
    assert np.array_equal(a[1], b[1])
    idx = _fit(base, "fastlsh")
    with pytest.raises(InvalidArgumentError):
        idx.query(np.zeros(3))


@pytest.mark.parametrize("scheme", SCHEMES)
def test_persistence_roundtrip_bit_identical(toy, tmp_path, scheme):
    base, queries = toy
    idx = _fit(base, scheme)
    blob = idx.to_bytes()
    idx.save(tmp_path / "i.idx")
    back = LSHIndex.load(tmp_path / "i.idx", base.X)
    assert back.to_bytes() == blob
    assert back.get_params() == idx.get_params()
    d1, i1 = idx.kneighbors(queries.X)
    d2, i2 = back.kneighbors(queries.X)
    assert np.array_equal(i1, i2) and d1.tobytes() == d2.tobytes()


def test_persistence_rejects_corruption(toy):
    base, _ = toy
    blob = bytearray(_fit(base, "fastlsh").to_bytes())
    with pytest.raises(FormatError):
        LSHIndex.from_bytes(b"nope", base.X)
    bad = bytearray(blob)
    bad[0] ^= 1
    with pytest.raises(FormatError):
        LSHIndex.from_bytes(bytes(bad), base.X)
    bad = bytearray(blob)
    bad[-1] ^= 1
    with pytest.raises(FormatError):
        LSHIndex.from_bytes(bytes(bad), base.X)
    with pytest.raises(FormatError):
        LSHIndex.from_bytes(bytes(blob[:-5]), base.X)
    other = base.X.copy()
    other[0, 0] += 1
    with pytest.raises(InvalidArgumentError):
        LSHIndex.from_bytes(bytes(blob), other)


def test_identical_harness_across_schemes(toy):
    base, queries = toy
    for scheme in SCHEMES:
        idx = clone(LSHIndex(n_hashes=2, n_tables=3, width=5.0, m=16)).set_params(
            scheme=scheme, random_state=0).fit(base.X)
        res = idx.query_batch(queries.X[:3])
        assert all(isinstance(r, QueryResult) for r in res)
        assert isinstance(idx.family_, type(hashing.make_hasher(scheme)))


def test_build_index_from_dataset(toy):
    base, _ = toy
    idx = build_index(base, IndexConfig(2, 3, "achash", 4.0, seed=9))
    assert idx.n_tables == 3 and idx.n_points_ == base.n_points
    with pytest.raises(InvalidArgumentError):
        IndexConfig(0, 3)


def test_recall_at_k_cases():
    gt = np.arange(20).reshape(2, 10)
    assert recall_at_k(gt, gt) == 1.0
    assert recall_at_k(gt + 100, gt) == 0.0
    half = gt.copy()
    half[:, 5:] += 100
    assert recall_at_k(half, gt) == 0.5
    padded = np.full((2, 10), -1)
    padded[:, :5] = gt[:, :5]
    assert recall_at_k(padded, gt) == 0.5
    with pytest.raises(InvalidArgumentError):
        recall_at_k(gt, gt[:, :5], k=10)


def test_recall_on_tuned_config():
    from fastlsh import bench
    ds = data.gen_synthetic(5000, 64, "clustered", seed=3)
    rest, queries = data.split_queries(ds, 50, seed=1)
    base, val = data.split_queries(rest, 50, seed=2)
    vgt, vd = data.brute_force_knn(base, val, 10)
    grid = bench.width_grid(float(np.median(vd[:, -1])) * np.sqrt(30 / 64), 1.0, 8.0)
    tuned = bench.tune_width(base.X, val.X, vgt, "fastlsh", 8, 20, grid, seed=2)
    assert tuned.achieved
    gt, _ = data.brute_force_knn(base, queries, 10)
    idx = LSHIndex("fastlsh", 8, 20, tuned.width, m=30, random_state=2).fit(base.X)
    assert recall_at_k(idx.query_batch(queries.X), gt) >= 0.9
