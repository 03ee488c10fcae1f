"""Multi-table LSH index with exact re-ranking of candidates."""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels, hashing
from ._validation import (check_matrix, check_positive_float, check_positive_int,
                          check_seed, check_vector)
from .data import Dataset, exact_distances
from .exceptions import FormatError, InvalidArgumentError

__all__ = [
    "IndexConfig",
    "QueryResult",
    "LSHIndex",
    "build_index",
    "recall_at_k",
    "INDEX_MAGIC",
    "INDEX_VERSION",
]

INDEX_MAGIC = b"FLSHIDX\x00"
INDEX_VERSION = 1
_PREAMBLE = struct.Struct("<8sIQ")


@dataclass(frozen=True)
class IndexConfig:
    """Index shape: ``k`` functions per table, ``L`` tables."""

    k: int
    L: int
    scheme: str = "fastlsh"
    width: float = 1.0
    m: int = 30
    density: float = hashing.ACHASH_DEFAULT_DENSITY
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.k, "k")
        check_positive_int(self.L, "L")
        object.__setattr__(self, "scheme", hashing.Scheme.parse(self.scheme).value)
        check_positive_float(self.width, "width")
        check_positive_int(self.m, "m")
        if not 0 < float(self.density) <= 1:
            raise InvalidArgumentError("density must lie in (0, 1]")
        object.__setattr__(self, "seed", check_seed(self.seed))

    def to_dict(self):
        return asdict(self)

    def estimator(self):
        return LSHIndex(scheme=self.scheme, n_hashes=self.k, n_tables=self.L,
                        width=self.width, m=self.m, density=self.density,
                        random_state=self.seed)


@dataclass
class QueryResult:
    """Neighbours sorted by (distance, id) plus bookkeeping."""

    ids: np.ndarray
    distances: np.ndarray
    candidate_count: int
    hash_time: float = 0.0
    scan_time: float = 0.0
    timing: dict = field(default_factory=dict)

    def __len__(self):
        return self.ids.shape[0]


class _Table:
    """Buckets of one table in CSR form.

    ``keys[b]`` is the code tuple of bucket ``b`` and its point ids are
    ``ids[offsets[b]:offsets[b + 1]]`` in ascending order. Buckets are found
    through a sorted array of 64-bit key mixes; the candidate bucket's full
    tuple is always compared before use, so lookups are exact.
    """

    __slots__ = ("keys", "offsets", "ids", "mix_sorted", "mix_order")

    def __init__(self, keys, offsets, ids):
        self.keys = np.ascontiguousarray(keys, dtype=np.int64)
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        self.ids = np.ascontiguousarray(ids, dtype=np.int64)
        mix = np.empty((self.keys.shape[0], 1), dtype=np.uint64)
        _kernels.mix_keys(self.keys, self.keys.shape[1], mix)
        mix = mix.ravel()
        self.mix_order = np.argsort(mix, kind="stable")
        self.mix_sorted = mix[self.mix_order]

    @classmethod
    def from_codes(cls, codes):
        N = codes.shape[0]
        # lexsort is stable, so ids stay ascending inside each bucket
        order = np.lexsort(codes.T[::-1])
        srt = codes[order]
        change = np.ones(N, dtype=bool)
        if N > 1:
            change[1:] = np.any(srt[1:] != srt[:-1], axis=1)
        starts = np.flatnonzero(change)
        return cls(srt[starts], np.append(starts, N), order)

    @property
    def n_buckets(self):
        return self.keys.shape[0]

    def bucket_sizes(self):
        return np.diff(self.offsets)

    def lookup(self, key, mix):
        lo = np.searchsorted(self.mix_sorted, mix, side="left")
        hi = np.searchsorted(self.mix_sorted, mix, side="right")
        for pos in range(lo, hi):
            b = self.mix_order[pos]
            if np.array_equal(self.keys[b], key):
                return self.ids[self.offsets[b]:self.offsets[b + 1]]
        return None


class LSHIndex(BaseEstimator):
    """L hash tables of k-wise composite keys over a fixed point set.

    Parameters
    ----------
    scheme : {"fastlsh", "e2lsh", "achash"}
    n_hashes : int
        Functions concatenated per table (k).
    n_tables : int
        Tables (L).
    width : float
        Bucket width of the elementary functions.
    m : int
        Sampled coordinates per function (FastLSH only).
    density : float
        Nonzero fraction of the sparse projection (ACHash only).
    random_state : int or None

    Notes
    -----
    The index keeps a reference to the fitted array for re-ranking; it must
    not be modified afterwards.
    """

    def __init__(self, scheme="fastlsh", n_hashes=10, n_tables=50, width=1.0, m=30,
                 density=hashing.ACHASH_DEFAULT_DENSITY, random_state=None):
        self.scheme = scheme
        self.n_hashes = n_hashes
        self.n_tables = n_tables
        self.width = width
        self.m = m
        self.density = density
        self.random_state = random_state

    # -- construction -----------------------------------------------------

    def _family(self):
        return hashing.make_hasher(self.scheme, n_hashes=self.n_hashes,
                                   n_tables=self.n_tables, width=self.width, m=self.m,
                                   density=self.density, random_state=self.random_state)

    def fit(self, X, y=None):
        """Hash every row of ``X`` into every table."""
        X = _points(X)
        fam = self._family().fit(X)
        t0 = time.perf_counter()
        codes = fam.transform(X)
        self.build_hash_time_ = time.perf_counter() - t0
        return self._fit_codes(X, fam, codes)

    def _fit_codes(self, X, family, codes):
        k = family.n_hashes
        self.family_ = family
        self.tables_ = [_Table.from_codes(np.ascontiguousarray(codes[:, t * k:(t + 1) * k]))
                        for t in range(family.n_tables)]
        self._X = X
        self.n_features_in_ = X.shape[1]
        self.n_points_ = X.shape[0]
        self.seed_ = family.seed_
        self.fingerprint_ = _fingerprint(X)
        return self

    @property
    def data_(self):
        check_is_fitted(self, "tables_")
        return self._X

    def bucket_sizes(self, table=0):
        check_is_fitted(self, "tables_")
        return self.tables_[table].bucket_sizes()

    # -- queries ----------------------------------------------------------

    def _query_codes(self, Q):
        codes = self.family_.transform(Q)
        mix = np.empty((Q.shape[0], self.family_.n_tables), dtype=np.uint64)
        _kernels.mix_keys(codes, self.family_.n_hashes, mix)
        return codes, mix

    def _candidates_from(self, codes_row, mix_row):
        k = self.family_.n_hashes
        hits = []
        for t, table in enumerate(self.tables_):
            ids = table.lookup(codes_row[t * k:(t + 1) * k], mix_row[t])
            if ids is not None:
                hits.append(ids)
        if not hits:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(hits))

    def candidates(self, u):
        """Deduplicated ids sharing a bucket with ``u`` in any table."""
        check_is_fitted(self, "tables_")
        u = check_vector(u, self.n_features_in_, "u")[None, :]
        codes, mix = self._query_codes(u)
        return self._candidates_from(codes[0], mix[0])

    def _rank(self, q, cand, topk):
        d = exact_distances(self._X, q, cand)
        order = np.lexsort((cand, d))[:topk]
        return cand[order], d[order]

    def query_batch(self, Q, topk=10):
        """One :class:`QueryResult` per row of ``Q``."""
        check_is_fitted(self, "tables_")
        topk = check_positive_int(topk, "topk")
        Q = check_matrix(Q, self.n_features_in_, dtype=np.float64, name="queries")
        results = []
        for row in Q:
            t0 = time.perf_counter()
            codes, mix = self._query_codes(row[None, :])
            t1 = time.perf_counter()
            cand = self._candidates_from(codes[0], mix[0])
            ids, dist = self._rank(row, cand, topk)
            t2 = time.perf_counter()
            results.append(QueryResult(ids, dist, int(cand.shape[0]), t1 - t0, t2 - t1))
        return results

    def query(self, u, topk=10):
        """Top ``topk`` neighbours of ``u`` among its LSH candidates.

        An empty candidate set gives an empty result; there is no fallback
        scan.
        """
        u = check_vector(u, getattr(self, "n_features_in_", None), "u")
        return self.query_batch(u[None, :], topk)[0]

    def kneighbors(self, X, n_neighbors=10, return_distance=True):
        """Batch interface: arrays padded with ``inf`` distance and id -1."""
        res = self.query_batch(X, n_neighbors)
        ids = np.full((len(res), n_neighbors), -1, dtype=np.int64)
        dist = np.full((len(res), n_neighbors), np.inf)
        for i, r in enumerate(res):
            ids[i, :len(r)] = r.ids
            dist[i, :len(r)] = r.distances
        return (dist, ids) if return_distance else ids

    # -- persistence ------------------------------------------------------

    def _payload_arrays(self):
        scalars, arrays = self.family_.fitted_state()
        items = [(f"family/{k}", v) for k, v in arrays.items()]
        for t, table in enumerate(self.tables_):
            items += [(f"table/{t}/keys", table.keys), (f"table/{t}/offsets", table.offsets),
                      (f"table/{t}/ids", table.ids)]
        return scalars, items

    def to_bytes(self):
        check_is_fitted(self, "tables_")
        scalars, items = self._payload_arrays()
        specs, blobs, off = [], [], 0
        for name, arr in items:
            arr = np.ascontiguousarray(arr)
            le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
            raw = le.tobytes()
            specs.append({"name": name, "dtype": le.dtype.str, "shape": list(arr.shape),
                          "offset": off, "nbytes": len(raw)})
            blobs.append(raw)
            off += len(raw)
        payload = b"".join(blobs)
        header = {
            "params": _jsonable(self.get_params()),
            "seed": int(self.seed_),
            "family": {k: _jsonable(v) for k, v in scalars.items()},
            "dataset": {"fingerprint": self.fingerprint_,
                        "shape": [int(self.n_points_), int(self.n_features_in_)]},
            "arrays": specs,
            "payload_sha256": hashlib.sha256(payload).hexdigest(),
        }
        hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
        return _PREAMBLE.pack(INDEX_MAGIC, INDEX_VERSION, len(hbytes)) + hbytes + payload

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, buf, X):
        """Rebuild an index from :meth:`to_bytes` output and its point set."""
        if len(buf) < _PREAMBLE.size:
            raise FormatError("index file too short for its preamble", 0)
        magic, version, hlen = _PREAMBLE.unpack_from(buf, 0)
        if magic != INDEX_MAGIC:
            raise FormatError("bad magic bytes; not an index file", 0)
        if version != INDEX_VERSION:
            raise FormatError(f"unsupported index version {version}", 8)
        start = _PREAMBLE.size
        if start + hlen > len(buf):
            raise FormatError("header runs past end of file", start)
        try:
            header = json.loads(buf[start:start + hlen].decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"corrupt header: {exc}", start) from exc
        base = start + hlen
        payload = buf[base:]
        if hashlib.sha256(payload).hexdigest() != header.get("payload_sha256"):
            raise FormatError("payload checksum mismatch", base)
        arrays = {}
        for spec in header["arrays"]:
            lo, nb = spec["offset"], spec["nbytes"]
            if lo + nb > len(payload):
                raise FormatError(f"array {spec['name']} runs past end of file", base + lo)
            dt = np.dtype(spec["dtype"])
            count = int(np.prod(spec["shape"]))
            if count * dt.itemsize != nb:
                raise FormatError(f"array {spec['name']} has inconsistent size", base + lo)
            arr = np.frombuffer(payload, dtype=dt, count=count, offset=lo)
            arrays[spec["name"]] = arr.reshape(spec["shape"]).astype(dt.newbyteorder("="))

        X = _points(X)
        fp = _fingerprint(X)
        if fp != header["dataset"]["fingerprint"]:
            raise InvalidArgumentError("point set does not match the one the index was built on")
        est = cls(**header["params"])
        fam = est._family()
        fam.restore_state(header["family"],
                          {k.split("/", 1)[1]: v for k, v in arrays.items()
                           if k.startswith("family/")})
        est.family_ = fam
        est.tables_ = [_Table(arrays[f"table/{t}/keys"], arrays[f"table/{t}/offsets"],
                              arrays[f"table/{t}/ids"]) for t in range(fam.n_tables)]
        est._X = X
        est.n_features_in_ = X.shape[1]
        est.n_points_ = X.shape[0]
        est.seed_ = header["seed"]
        est.fingerprint_ = fp
        return est

    @classmethod
    def load(cls, path, X):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), X)


def _points(X):
    if isinstance(X, Dataset):
        X = X.X
    X = check_matrix(X)
    if X.shape[0] == 0:
        raise InvalidArgumentError("cannot index an empty point set")
    return X


def _fingerprint(X):
    h = hashlib.sha256()
    h.update(np.asarray(X.shape, dtype="<i8").tobytes())
    h.update(X.dtype.str.encode())
    h.update(np.ascontiguousarray(X).tobytes())
    return h.hexdigest()


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def build_index(dataset, cfg):
    """Fit an :class:`LSHIndex` configured by ``cfg`` on ``dataset``."""
    return cfg.estimator().fit(dataset)


def _id_rows(results):
    if isinstance(results, np.ndarray):
        return [r[r >= 0] for r in results]
    return [np.asarray(r.ids if isinstance(r, QueryResult) else r) for r in results]


def recall_at_k(results, ground_truth, k=10):
    """Mean fraction of the true top ``k`` found in the returned top ``k``.

    Parameters
    ----------
    results : sequence of QueryResult, sequence of id arrays, or 2-D array
        Returned neighbours per query (2-D arrays may pad with -1).
    ground_truth : 2-D array of int
        True neighbour ids per query, nearest first, at least ``k`` columns.
    """
    k = check_positive_int(k, "k")
    gt = np.asarray(ground_truth)
    if gt.ndim != 2 or gt.shape[1] < k:
        raise InvalidArgumentError(f"ground truth must hold at least k = {k} ids per query")
    rows = _id_rows(results)
    if len(rows) != gt.shape[0]:
        raise InvalidArgumentError("results and ground truth differ in number of queries")
    if not rows:
        raise InvalidArgumentError("no queries")
    hits = [np.intersect1d(r[:k], g[:k]).size for r, g in zip(rows, gt)]
    return float(np.mean(hits)) / k
