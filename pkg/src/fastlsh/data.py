"""Datasets: vector file formats, synthetic generators, exact ground truth
and per-pair squared-difference statistics."""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._validation import check_matrix, check_positive_int, check_seed, check_vector
from .exceptions import FormatError, InvalidArgumentError

__all__ = [
    "Dataset",
    "PairStats",
    "SigmaProfile",
    "read_fvecs",
    "write_fvecs",
    "read_ivecs",
    "write_ivecs",
    "gen_synthetic",
    "split_queries",
    "normalize_rows",
    "exact_distances",
    "brute_force_knn",
    "pair_stats",
    "synthetic_pair",
    "max_feasible_sigma",
    "dataset_sigma_profile",
    "SYNTHETIC_KINDS",
    "PROFILE_COLUMNS",
]

SYNTHETIC_KINDS = ("unit_hypersphere", "gaussian", "clustered")
PROFILE_COLUMNS = ("s_bucket", "sigma_min", "sigma_mean", "sigma_max", "count")


@dataclass
class Dataset:
    """``N x n`` float32 point set.

    Storage is float32; every distance or projection computed from it
    accumulates in float64.
    """

    X: np.ndarray
    name: str = "dataset"
    normalized: bool = False

    def __post_init__(self):
        X = np.asarray(self.X)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise InvalidArgumentError(f"dataset must be a non-empty 2-D array, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("dataset contains NaN or Inf")
        self.X = np.ascontiguousarray(X, dtype=np.float32)

    @property
    def n_points(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def fingerprint(self):
        """SHA-256 over shape and raw little-endian float32 payload."""
        h = hashlib.sha256()
        h.update(np.asarray(self.X.shape, dtype="<i8").tobytes())
        h.update(self.X.astype("<f4", copy=False).tobytes())
        return h.hexdigest()

    def normalize(self):
        """Copy scaled to unit row norms (zero rows stay zero)."""
        return Dataset(normalize_rows(self.X), self.name, True)


def normalize_rows(X):
    X = np.asarray(X)
    norms = np.sqrt(np.einsum("ij,ij->i", X, X, dtype=np.float64))
    norms[norms == 0] = 1.0
    return (X / norms[:, None]).astype(X.dtype, copy=False)


# --------------------------------------------------------------------------
# fvecs / ivecs
# --------------------------------------------------------------------------


def _read_vecs(path, payload_dtype):
    with open(path, "rb") as fh:
        buf = fh.read()
    size = len(buf)
    if size == 0:
        raise FormatError(f"{path}: empty file", 0)
    if size < 4:
        raise FormatError(f"{path}: truncated dimension header", 0)
    d = int(np.frombuffer(buf, dtype="<i4", count=1)[0])
    if d <= 0:
        raise FormatError(f"{path}: non-positive dimension {d}", 0)
    rec = 4 * (d + 1)
    n_full = size // rec
    if n_full:
        rows = np.frombuffer(buf, dtype="<i4", count=n_full * (d + 1)).reshape(n_full, d + 1)
        bad = np.flatnonzero(rows[:, 0] != d)
        if bad.size:
            r = int(bad[0])
            raise FormatError(
                f"{path}: record {r} has dimension {int(rows[r, 0])}, expected {d}", r * rec
            )
    if size % rec:
        tail = n_full * rec
        if size - tail >= 4:
            hd = int(np.frombuffer(buf, dtype="<i4", count=1, offset=tail)[0])
            if hd != d:
                raise FormatError(
                    f"{path}: record {n_full} has dimension {hd}, expected {d}", tail
                )
        raise FormatError(f"{path}: truncated record {n_full}", tail)
    data = np.frombuffer(buf, dtype=payload_dtype).reshape(n_full, d + 1)[:, 1:]
    return np.ascontiguousarray(data)


def _write_vecs(X, path, payload_dtype):
    X = np.ascontiguousarray(X, dtype=payload_dtype)
    if X.ndim != 2 or X.shape[1] == 0:
        raise InvalidArgumentError("expected a 2-D array with at least one column")
    out = np.empty((X.shape[0], X.shape[1] + 1), dtype=payload_dtype)
    out[:, 1:] = X
    out.view("<i4")[:, 0] = X.shape[1]
    with open(path, "wb") as fh:
        fh.write(out.tobytes())


def read_fvecs(path, name=None):
    """Read a little-endian ``.fvecs`` file into a Dataset.

    Raises
    ------
    FormatError
        On truncation or inconsistent record dimensions; the message
        carries the byte offset of the offending record.
    """
    X = _read_vecs(path, "<f4")
    if not np.all(np.isfinite(X)):
        row = int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0])
        raise FormatError(f"{path}: non-finite value in record {row}", row * 4 * (X.shape[1] + 1))
    return Dataset(X.astype(np.float32), name or os.path.basename(str(path)))


def write_fvecs(dataset, path):
    X = dataset.X if isinstance(dataset, Dataset) else dataset
    _write_vecs(X, path, "<f4")


def read_ivecs(path):
    """Read an ``.ivecs`` file (e.g. ground-truth ids) as an int32 array."""
    return _read_vecs(path, "<i4").astype(np.int32)


def write_ivecs(ids, path):
    _write_vecs(np.asarray(ids), path, "<i4")


# --------------------------------------------------------------------------
# Synthetic data
# --------------------------------------------------------------------------


def gen_synthetic(N, n, kind="gaussian", seed=0, normalize=False, name=None,
                  n_clusters=100, intrinsic_dim=24, center_scale=2.0, noise=0.3):
    """Generate a deterministic synthetic dataset.

    Parameters
    ----------
    N, n : int
        Number of points and dimensionality.
    kind : {"unit_hypersphere", "gaussian", "clustered"}
        ``unit_hypersphere`` draws uniformly from the unit ball;
        ``gaussian`` draws i.i.d. N(0, 1) coordinates; ``clustered`` places
        points on ``n_clusters`` random low-dimensional Gaussian patches
        (latent dimension ``intrinsic_dim``, unit per-coordinate variance)
        around centers of scale ``center_scale``, plus isotropic ``noise``.
    seed : int
    normalize : bool
        Scale every point to unit norm afterwards.
    """
    N = check_positive_int(N, "N")
    n = check_positive_int(n, "n")
    rng = np.random.default_rng(check_seed(seed))
    X = np.empty((N, n), dtype=np.float32)
    step = max(1, (1 << 22) // n)
    if kind == "gaussian":
        for i0 in range(0, N, step):
            X[i0:i0 + step] = rng.standard_normal((min(step, N - i0), n))
    elif kind == "unit_hypersphere":
        for i0 in range(0, N, step):
            rows = min(step, N - i0)
            G = rng.standard_normal((rows, n))
            G /= np.linalg.norm(G, axis=1, keepdims=True)
            X[i0:i0 + rows] = G * rng.random(rows)[:, None] ** (1.0 / n)
    elif kind == "clustered":
        c = min(check_positive_int(n_clusters, "n_clusters"), N)
        r = check_positive_int(intrinsic_dim, "intrinsic_dim")
        centers = center_scale * rng.standard_normal((c, n))
        bases = rng.standard_normal((c, r, n)) / math.sqrt(r)
        labels = rng.integers(0, c, size=N)
        for j in range(c):
            sel = np.flatnonzero(labels == j)
            for a in range(0, sel.size, step):
                part = sel[a:a + step]
                z = rng.standard_normal((part.size, r))
                X[part] = (centers[j] + z @ bases[j]
                           + noise * rng.standard_normal((part.size, n)))
    else:
        raise InvalidArgumentError(f"kind must be one of {SYNTHETIC_KINDS}, got {kind!r}")
    if kind == "unit_hypersphere":
        # float32 rounding must not push a point outside the ball
        norms = np.sqrt(np.einsum("ij,ij->i", X, X, dtype=np.float64))
        over = norms > 1.0
        X[over] = (X[over] / norms[over, None] * (1 - 1e-7)).astype(np.float32)
    ds = Dataset(X, name or f"{kind}-{N}x{n}")
    return ds.normalize() if normalize else ds


def split_queries(dataset, n_queries=200, seed=0):
    """Hold out ``n_queries`` random points as queries.

    Returns ``(base, queries)`` as Datasets; the queries are removed from
    the base set.
    """
    n_queries = check_positive_int(n_queries, "n_queries")
    N = dataset.n_points
    if n_queries >= N:
        raise InvalidArgumentError("need more points than queries")
    rng = np.random.default_rng(check_seed(seed))
    q = np.sort(rng.choice(N, size=n_queries, replace=False))
    keep = np.ones(N, dtype=bool)
    keep[q] = False
    return (Dataset(dataset.X[keep], dataset.name, dataset.normalized),
            Dataset(dataset.X[q], dataset.name + "-queries", dataset.normalized))


# --------------------------------------------------------------------------
# Exact distances and ground truth
# --------------------------------------------------------------------------


def _as_points(data):
    X = data.X if isinstance(data, Dataset) else data
    return check_matrix(X, name="data")


def exact_distances(X, q, ids=None):
    """Euclidean distances from ``q`` to ``X[ids]`` in float64.

    Each squared distance is summed left to right over coordinates, so the
    value for a given (point, query) pair never depends on which other ids
    are requested. The index re-ranks with this same function.
    """
    X = X.X if isinstance(X, Dataset) else X
    q = check_vector(q, X.shape[1], "q")
    ids = (np.arange(X.shape[0], dtype=np.int64) if ids is None
           else np.ascontiguousarray(ids, dtype=np.int64))
    out = np.empty(ids.shape[0])
    _kernels.sq_distances(X, ids, q, out)
    return np.sqrt(out)


def _topk_sorted(ids, dist, k):
    order = np.lexsort((ids, dist))[:k]
    return ids[order], dist[order]


def brute_force_knn(data, queries, k, margin=64):
    """Exact ``k`` nearest neighbours of each query, ties broken by id.

    A BLAS pass ranks all points approximately; the best ``k + margin`` are
    then re-scored with :func:`exact_distances`. When the approximate
    ranking cannot certify the exact top ``k`` (the boundary is within the
    rounding bound) the query falls back to an exact scan of every point.

    Returns
    -------
    ids : ndarray of shape (n_queries, k), int64
    dists : ndarray of shape (n_queries, k), float64
    """
    X = _as_points(data)
    Q = _as_points(queries)
    N, n = X.shape
    if Q.shape[1] != n:
        raise InvalidArgumentError("queries and data differ in dimension")
    k = check_positive_int(k, "k")
    if k > N:
        raise InvalidArgumentError(f"k = {k} exceeds the number of points {N}")
    Q64 = Q.astype(np.float64)
    out_ids = np.empty((Q.shape[0], k), dtype=np.int64)
    out_d = np.empty((Q.shape[0], k))
    c = min(N, k + margin)
    chunk = max(1, (1 << 24) // max(n, 1))
    xnorm = np.empty(N)
    for i0 in range(0, N, chunk):
        blk = X[i0:i0 + chunk].astype(np.float64)
        xnorm[i0:i0 + chunk] = np.einsum("ij,ij->i", blk, blk)
    qnorm = np.einsum("ij,ij->i", Q64, Q64)
    approx = np.empty((Q.shape[0], N))
    for i0 in range(0, N, chunk):
        blk = X[i0:i0 + chunk].astype(np.float64)
        approx[:, i0:i0 + chunk] = xnorm[i0:i0 + chunk] - 2.0 * (Q64 @ blk.T)
    approx += qnorm[:, None]
    bound = 1e-9 * (xnorm.max() + qnorm)
    for qi in range(Q.shape[0]):
        row = approx[qi]
        if c < N:
            part = np.argpartition(row, c)
            cand = part[:c]
            rest_min = row[part[c]]
        else:
            cand = np.arange(N)
            rest_min = np.inf
        cand = cand.astype(np.int64)
        d = exact_distances(X, Q64[qi], cand)
        ids, dist = _topk_sorted(cand, d, k)
        if c < N and not dist[-1] ** 2 < rest_min - 2 * bound[qi]:
            allids = np.arange(N, dtype=np.int64)
            ids, dist = _topk_sorted(allids, exact_distances(X, Q64[qi], allids), k)
        out_ids[qi], out_d[qi] = ids, dist
    return out_ids, out_d


# --------------------------------------------------------------------------
# Pair statistics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PairStats:
    """Distance and squared-difference population statistics of a pair.

    ``mu`` and ``sigma`` are the mean and (population) standard deviation of
    the ``n`` values ``(v_i - u_i)**2``.
    """

    s: float
    mu: float
    sigma: float
    n: int

    @property
    def cv(self):
        """Dimensionless spread ``sigma / mu`` (0 for identical points)."""
        return 0.0 if self.mu == 0 else self.sigma / self.mu


def pair_stats(v, u):
    v = check_vector(v, name="v")
    u = check_vector(u, v.shape[0], "u")
    sq = (v - u) ** 2
    total = float(np.sum(sq))
    mu = total / sq.shape[0]
    sigma = float(np.sqrt(np.mean((sq - mu) ** 2)))
    return PairStats(math.sqrt(total), mu, sigma, sq.shape[0])


def max_feasible_sigma(s, n):
    """Largest squared-difference spread reachable at distance ``s`` in n
    dims: all of ``s**2`` on one coordinate gives ``s**2 sqrt(n - 1) / n``."""
    return s * s * math.sqrt(n - 1) / n


def synthetic_pair(s, sigma, n, seed=0):
    """A pair ``(v, u)`` with distance ``s`` and squared-difference spread
    ``sigma``.

    The squared differences take two levels, ``A`` on ``k`` coordinates and
    ``B >= 0`` on the rest, with ``k`` as large as non-negativity allows
    (which keeps ``B`` near zero). Signs, coordinate order and the base
    point ``u`` are random.

    Raises
    ------
    InvalidArgumentError
        If no set of ``n`` non-negative numbers has mean ``s**2 / n`` and
        standard deviation ``sigma``.
    """
    n = check_positive_int(n, "n")
    if s < 0 or sigma < 0:
        raise InvalidArgumentError("s and sigma must be >= 0")
    mu = s * s / n
    if sigma > max_feasible_sigma(s, n) * (1 + 1e-12):
        raise InvalidArgumentError(
            f"sigma = {sigma:.6g} is unreachable at s = {s:g}, n = {n}: "
            f"the maximum is {max_feasible_sigma(s, n):.6g}"
        )
    rng = np.random.default_rng(check_seed(seed))
    if sigma == 0 or mu == 0:
        levels = np.full(n, mu)
    else:
        k = int(math.floor(n * mu * mu / (mu * mu + sigma * sigma)))
        k = min(max(k, 1), n - 1)
        f = k / n
        B = max(mu - sigma * math.sqrt(f / (1 - f)), 0.0)
        A = (mu - (1 - f) * B) / f
        levels = np.full(n, B)
        levels[:k] = A
    d = np.sqrt(levels) * rng.choice((-1.0, 1.0), size=n)
    d = d[rng.permutation(n)]
    u = rng.standard_normal(n)
    return u + d, u


# --------------------------------------------------------------------------
# sigma profile
# --------------------------------------------------------------------------


@dataclass
class SigmaProfile:
    """min / mean / max of the squared-difference spread per distance bucket.

    ``cv_*`` hold the same statistics of the dimensionless ratio
    ``sigma / mu = sigma n / s**2``.
    """

    edges: np.ndarray
    s_bucket: np.ndarray
    sigma_min: np.ndarray
    sigma_mean: np.ndarray
    sigma_max: np.ndarray
    count: np.ndarray
    cv_min: np.ndarray
    cv_max: np.ndarray
    n: int
    meta: dict = field(default_factory=dict)

    def present(self):
        return self.count > 0

    def sigma_at(self, s, which="max"):
        """Envelope value for distance ``s`` from the nearest populated bucket."""
        arr = {"min": self.sigma_min, "mean": self.sigma_mean, "max": self.sigma_max}[which]
        ok = self.present()
        centers = self.s_bucket[ok]
        j = int(np.argmin(np.abs(centers - s)))
        return float(arr[ok][j])

    def cv_envelope(self):
        """``(min, max)`` of ``sigma / mu`` over all populated buckets."""
        ok = self.present()
        return float(np.min(self.cv_min[ok])), float(np.max(self.cv_max[ok]))

    def rows(self):
        ok = self.present()
        for j in np.flatnonzero(ok):
            yield (float(self.s_bucket[j]), float(self.sigma_min[j]),
                   float(self.sigma_mean[j]), float(self.sigma_max[j]), int(self.count[j]))

    def to_csv(self, path_or_buf=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PROFILE_COLUMNS)
        for r in self.rows():
            w.writerow([repr(r[0]), repr(r[1]), repr(r[2]), repr(r[3]), r[4]])
        text = buf.getvalue()
        if path_or_buf is not None:
            with open(path_or_buf, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def dataset_sigma_profile(dataset, sample_pairs=100_000, n_buckets=50, seed=0,
                          chunk=4096):
    """Spread of squared differences over random pairs, bucketed by distance.

    ``sample_pairs`` pairs ``(i, j)`` with ``i != j`` are drawn uniformly;
    buckets are ``n_buckets`` equal-width intervals spanning the observed
    distances.
    """
    X = _as_points(dataset)
    N, n = X.shape
    if N < 2:
        raise InvalidArgumentError("need at least two points")
    sample_pairs = check_positive_int(sample_pairs, "sample_pairs")
    n_buckets = check_positive_int(n_buckets, "n_buckets")
    rng = np.random.default_rng(check_seed(seed))
    i = rng.integers(0, N, size=sample_pairs)
    j = (i + rng.integers(1, N, size=sample_pairs)) % N
    s = np.empty(sample_pairs)
    sig = np.empty(sample_pairs)
    for a in range(0, sample_pairs, chunk):
        sl = slice(a, a + chunk)
        sq = (X[i[sl]].astype(np.float64) - X[j[sl]].astype(np.float64)) ** 2
        tot = sq.sum(axis=1)
        mu = tot / n
        s[sl] = np.sqrt(tot)
        sig[sl] = np.sqrt(np.mean((sq - mu[:, None]) ** 2, axis=1))
    lo, hi = float(s.min()), float(s.max())
    if hi == lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, n_buckets + 1)
    b = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, n_buckets - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cv = np.where(s > 0, sig * n / (s * s), 0.0)
    count = np.bincount(b, minlength=n_buckets)
    smin = np.full(n_buckets, np.nan)
    smax = np.full(n_buckets, np.nan)
    cmin = np.full(n_buckets, np.nan)
    cmax = np.full(n_buckets, np.nan)
    np.fmin.at(smin, b, sig)
    np.fmax.at(smax, b, sig)
    np.fmin.at(cmin, b, cv)
    np.fmax.at(cmax, b, cv)
    with np.errstate(invalid="ignore"):
        smean = np.bincount(b, weights=sig, minlength=n_buckets) / count
    return SigmaProfile(edges, 0.5 * (edges[:-1] + edges[1:]), smin, smean, smax, count,
                        cmin, cmax, n, {"sample_pairs": sample_pairs, "seed": seed})
