"""Elementary hash functions, the sampling operator and hasher families.

Three schemes share one quantizer ``floor((projection + b) / w)``:

* **E2LSH** projects the full vector onto a standard-normal direction.
* **FastLSH** first keeps ``m`` coordinates drawn uniformly with replacement
  (the sampling operator) and projects the resulting m-vector.
* **ACHash** flips signs with a Rademacher diagonal, applies the normalized
  Walsh-Hadamard transform on the zero-padded vector and projects onto a
  sparse Gaussian vector.

The functional API (``fastlsh_hash`` and friends) evaluates one function on
one vector. The estimator classes (``FastLSHHasher`` etc.) hold many
functions at once and hash whole matrices through the compiled kernels;
both paths produce identical integers.

Randomness is derived from one integer seed. Function ``f`` of table ``t``
gets its own generator seeded with ``SeedSequence(seed, spawn_key=(t, f))``,
so the parameters of a function do not depend on how many other functions
or tables are drawn, nor on the order in which they are drawn.
"""

from __future__ import annotations

import copy
import enum
import struct
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from ._validation import (
    check_matrix,
    check_positive_float,
    check_positive_int,
    check_seed,
    check_vector,
)
from .exceptions import InvalidArgumentError

__all__ = [
    "Scheme",
    "SamplingPlan",
    "HasherParams",
    "MipsTransform",
    "make_sampling_plan",
    "apply_sampling",
    "fastlsh_hash",
    "e2lsh_hash",
    "achash_hash",
    "hash_value",
    "fwht",
    "next_pow2",
    "encode_key",
    "composite_hash_key",
    "mips_transform",
    "function_rng",
    "draw_hasher",
    "E2LSHHasher",
    "FastLSHHasher",
    "ACHasher",
    "make_hasher",
]

# spawn_key tag for draws shared by every function of a family (ACHash signs).
_SHARED_KEY = 2**32 - 1

ACHASH_DEFAULT_DENSITY = 0.25


class Scheme(str, enum.Enum):
    FASTLSH = "fastlsh"
    E2LSH = "e2lsh"
    ACHASH = "achash"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise InvalidArgumentError(
                f"unknown scheme {value!r}; expected one of {names}"
            ) from None


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SamplingPlan:
    """Multiset of ``m`` coordinate indices into an ``n``-dimensional space.

    Indices are 0-based; duplicates are allowed.
    """

    indices: np.ndarray
    n: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size == 0:
            raise InvalidArgumentError("a sampling plan needs at least one index")
        if self.n < 1:
            raise InvalidArgumentError("n must be >= 1")
        if idx.min() < 0 or idx.max() >= self.n:
            raise InvalidArgumentError(f"plan indices must lie in [0, {self.n})")
        object.__setattr__(self, "indices", _readonly(idx))

    @property
    def m(self):
        return int(self.indices.shape[0])

    def __eq__(self, other):
        if not isinstance(other, SamplingPlan):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash((self.n, self.indices.tobytes()))


def make_sampling_plan(n, m, seed):
    """Draw ``m`` indices uniformly with replacement from ``[0, n)``."""
    n = check_positive_int(n, "n")
    m = check_positive_int(m, "m")
    rng = np.random.default_rng(check_seed(seed))
    return SamplingPlan(rng.integers(0, n, size=m), n)


def apply_sampling(v, plan):
    """Apply the sampling operator: ``out[..., j] = v[..., plan.indices[j]]``.

    Works on a single vector or on the rows of a matrix.
    """
    arr = np.asarray(v)
    if arr.ndim not in (1, 2) or arr.shape[-1] != plan.n:
        raise InvalidArgumentError(
            f"expected {plan.n} features, got array of shape {arr.shape}"
        )
    return arr[..., plan.indices]


@dataclass(frozen=True, eq=False)
class HasherParams:
    """Parameters of one elementary hash function.

    ``proj`` has length ``m`` for FastLSH, ``n`` for E2LSH and the padded
    power-of-two length for ACHash. ``signs`` (ACHash) is the Rademacher
    diagonal over the padded length and ``support`` the sorted nonzero
    positions of ``proj``.
    """

    scheme: Scheme
    proj: np.ndarray
    offset_b: float
    width_w: float
    plan: SamplingPlan | None = None
    signs: np.ndarray | None = None
    support: np.ndarray | None = None
    n: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        proj = _readonly(np.asarray(self.proj, dtype=np.float64))
        object.__setattr__(self, "proj", proj)
        w = check_positive_float(self.width_w, "width_w")
        object.__setattr__(self, "width_w", w)
        b = float(self.offset_b)
        if not (0.0 <= b < w):
            raise InvalidArgumentError(f"offset_b must lie in [0, {w}), got {b}")
        object.__setattr__(self, "offset_b", b)
        if self.scheme is Scheme.FASTLSH:
            if self.plan is None or self.plan.m != proj.shape[0]:
                raise InvalidArgumentError("FastLSH needs a plan matching proj")
            object.__setattr__(self, "n", self.plan.n)
        elif self.scheme is Scheme.E2LSH:
            object.__setattr__(self, "n", proj.shape[0])
        else:
            d = proj.shape[0]
            if d != next_pow2(d) or self.signs is None or len(self.signs) != d:
                raise InvalidArgumentError(
                    "ACHash needs power-of-two proj and signs of equal length"
                )
            if not (0 < self.n <= d):
                raise InvalidArgumentError("ACHash needs 0 < n <= padded length")
            object.__setattr__(self, "signs", _readonly(np.asarray(self.signs, float)))
            support = self.support
            if support is None:
                support = np.flatnonzero(proj)
            object.__setattr__(self, "support", _readonly(np.asarray(support, np.int64)))


def _check_finite_input(v, params):
    return check_vector(v, params.n)


def fastlsh_hash(v, params):
    """``floor((a . S(v) + b) / w)`` for one FastLSH function."""
    if params.scheme is not Scheme.FASTLSH:
        raise InvalidArgumentError("params are not a FastLSH function")
    v = _check_finite_input(v, params)
    out = np.empty((1, 1), dtype=np.int64)
    _kernels.gather_hash(
        v[None, :],
        params.plan.indices[None, :].astype(np.int32),
        params.proj[None, :],
        np.array([params.offset_b]),
        np.array([params.width_w]),
        out,
    )
    return int(out[0, 0])


def e2lsh_hash(v, params):
    """``floor((a . v + b) / w)`` for one E2LSH function."""
    if params.scheme is not Scheme.E2LSH:
        raise InvalidArgumentError("params are not an E2LSH function")
    v = _check_finite_input(v, params)
    out = np.empty((1, 1), dtype=np.int64)
    _kernels.dense_hash(
        v[None, :],
        params.proj[:, None].copy(),
        np.array([params.offset_b]),
        np.array([params.width_w]),
        out,
    )
    return int(out[0, 0])


def _achash_transform(X, signs):
    Y = np.empty((X.shape[0], signs.shape[0]))
    _kernels.signed_pad(X, signs, Y)
    _kernels.fwht_rows(Y)
    return Y


def achash_hash(v, params):
    """``floor((p . H D pad(v) + b) / w)`` for one ACHash function."""
    if params.scheme is not Scheme.ACHASH:
        raise InvalidArgumentError("params are not an ACHash function")
    v = _check_finite_input(v, params)
    y = _achash_transform(v[None, :], params.signs)
    support = params.support
    out = np.empty((1, 1), dtype=np.int64)
    _kernels.gather_hash(
        y,
        support[None, :].astype(np.int32),
        params.proj[support][None, :],
        np.array([params.offset_b]),
        np.array([params.width_w]),
        out,
    )
    return int(out[0, 0])


_DISPATCH = {
    Scheme.FASTLSH: fastlsh_hash,
    Scheme.E2LSH: e2lsh_hash,
    Scheme.ACHASH: achash_hash,
}


def hash_value(v, params):
    """Evaluate any elementary hash function on ``v``."""
    return _DISPATCH[params.scheme](v, params)


def next_pow2(n):
    return 1 << max(0, int(n) - 1).bit_length()


def fwht(x):
    """Normalized Walsh-Hadamard transform along the last axis.

    The length must be a power of two. With the ``1/sqrt(d)`` scaling the
    transform is orthonormal and its own inverse.
    """
    arr = np.array(x, dtype=np.float64, ndmin=1)
    d = arr.shape[-1]
    if d != next_pow2(d):
        raise InvalidArgumentError(f"FWHT length must be a power of two, got {d}")
    flat = np.ascontiguousarray(arr.reshape(-1, d))
    _kernels.fwht_rows(flat)
    return flat.reshape(arr.shape)


def encode_key(codes):
    """Length-prefixed little-endian serialization of a tuple of hash codes."""
    codes = [int(c) for c in codes]
    if not codes:
        raise InvalidArgumentError("a key needs at least one code")
    return struct.pack(f"<I{len(codes)}q", len(codes), *codes)


def composite_hash_key(v, hashers):
    """Concatenate ``k`` elementary hashes of ``v`` into one exact bucket key."""
    hashers = list(hashers)
    if not hashers:
        raise InvalidArgumentError("need at least one hasher")
    if len({h.scheme for h in hashers}) != 1:
        raise InvalidArgumentError("all hashers of a key must share a scheme")
    return encode_key(hash_value(v, h) for h in hashers)


# --------------------------------------------------------------------------
# Maximum inner product search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MipsTransform:
    """Asymmetric data/query transforms reducing MIPS to nearest neighbour.

    ``kappa`` bounds the data norms, ``kappa_sampled`` the norms after the
    sampling operator (equal to ``kappa`` when ``plan`` is None).
    """

    kappa: float
    kappa_sampled: float
    mode: str = "data"
    plan: SamplingPlan | None = None

    def __post_init__(self):
        if self.mode not in ("data", "query"):
            raise InvalidArgumentError("mode must be 'data' or 'query'")
        if self.kappa < 0 or self.kappa_sampled < 0:
            raise InvalidArgumentError("kappa must be non-negative")

    @classmethod
    def fit(cls, X, plan=None):
        X = check_matrix(X)
        kappa = float(np.sqrt(np.max(np.einsum("ij,ij->i", X, X, dtype=np.float64))))
        Xs = X if plan is None else apply_sampling(X, plan)
        norms2 = np.einsum("ij,ij->i", Xs, Xs, dtype=np.float64)
        return cls(kappa, float(np.sqrt(norms2.max())), "data", plan)

    def with_mode(self, mode):
        return MipsTransform(self.kappa, self.kappa_sampled, mode, self.plan)

    def delta(self, v):
        """Norm gap ``kappa_sampled**2 - ||S(v)||**2`` of a data vector."""
        sv = self._sample(check_vector(v))
        return self.kappa_sampled**2 - float(sv @ sv)

    def _sample(self, v):
        return v if self.plan is None else apply_sampling(v, self.plan)


def mips_transform(v, t):
    """Map a data vector to ``(sqrt(k~^2 - |S(v)|^2), S(v))`` or a query to
    ``(0, S(u) / |S(u)|)`` depending on ``t.mode``."""
    v = check_vector(v)
    sv = t._sample(v).astype(np.float64)
    norm2 = float(sv @ sv)
    if t.mode == "query":
        norm = np.sqrt(norm2)
        if norm == 0:
            raise InvalidArgumentError("cannot normalize a zero query")
        return np.concatenate(([0.0], sv / norm))
    gap = t.kappa_sampled**2 - norm2
    if abs(gap) <= 1e-12 * t.kappa_sampled**2:
        gap = 0.0  # the vector that defines kappa_sampled, up to round-off
    if gap < 0:
        # Tolerate round-off on the vector that defines kappa_sampled.
        if gap < -1e-9 * max(1.0, t.kappa_sampled**2):
            raise InvalidArgumentError(
                f"|S(v)| = {np.sqrt(norm2)} exceeds kappa_sampled = {t.kappa_sampled}"
            )
        gap = 0.0
    return np.concatenate(([np.sqrt(gap)], sv))


# --------------------------------------------------------------------------
# Drawing functions
# --------------------------------------------------------------------------


def function_rng(seed, table, func):
    """Generator for function ``func`` of table ``table`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(table, func)))


def _shared_rng(seed):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_SHARED_KEY,)))


def _rademacher(seed, d):
    return _shared_rng(seed).choice(np.array([-1.0, 1.0]), size=d)


def draw_hasher(scheme, n, width, seed, table=0, func=0, m=30,
                density=ACHASH_DEFAULT_DENSITY):
    """Draw one elementary function exactly as the families do."""
    fam = make_hasher(scheme, n_hashes=func + 1, n_tables=table + 1, width=width,
                      m=m, density=density, random_state=seed)
    fam.fit(np.zeros((1, n)))
    return fam.hasher(table, func)


class _LSHFamily(TransformerMixin, BaseEstimator):
    """Shared machinery: parameter drawing, batching and elementary views."""

    scheme = None

    def fit(self, X, y=None):
        """Draw ``n_tables * n_hashes`` functions for the feature count of X."""
        X = check_matrix(X)
        self.n_features_in_ = X.shape[1]
        self.seed_ = check_seed(self.random_state)
        k = check_positive_int(self.n_hashes, "n_hashes")
        L = check_positive_int(self.n_tables, "n_tables")
        self.width_ = check_positive_float(self.width, "width")
        self._check_extra_params()
        self.n_functions_ = k * L
        units = np.empty(self.n_functions_)
        draws = []
        for t in range(L):
            for f in range(k):
                rng = function_rng(self.seed_, t, f)
                draws.append(self._draw_one(rng))
                units[t * k + f] = rng.random()
        self._store(draws)
        # b = u * w keeps the same underlying offsets when only w changes.
        self.unit_offsets_ = units
        self.offsets_ = np.minimum(units * self.width_, np.nextafter(self.width_, 0))
        self.widths_ = np.full(self.n_functions_, self.width_)
        return self

    def _check_extra_params(self):
        pass

    def transform(self, X, out=None):
        """Hash every row of X with every function.

        Returns an int64 array of shape ``(n_samples, n_tables * n_hashes)``
        whose column ``t * n_hashes + f`` is function ``f`` of table ``t``.
        ``out`` may be a preallocated array of that shape.
        """
        check_is_fitted(self, "n_functions_")
        X = check_matrix(X, self.n_features_in_)
        shape = (X.shape[0], self.n_functions_)
        if out is None:
            out = np.empty(shape, dtype=np.int64)
        elif out.shape != shape or out.dtype != np.int64:
            raise InvalidArgumentError(f"out must be int64 with shape {shape}")
        self._hash_rows(X, out)
        return out

    def project(self, X):
        """Raw projections (before offset and quantization), float64."""
        check_is_fitted(self, "n_functions_")
        X = check_matrix(X, self.n_features_in_)
        out = np.empty((X.shape[0], self.n_functions_))
        self._project_rows(X, out)
        return out

    def with_width(self, width):
        """Copy of the fitted family with bucket width ``width``.

        Projections and unit offsets are shared, so the copy hashes exactly
        as a fresh fit with the same seed and the new width would.
        """
        check_is_fitted(self, "n_functions_")
        w = check_positive_float(width, "width")
        new = copy.copy(self)
        new.width = w
        new.width_ = w
        new.offsets_ = np.minimum(self.unit_offsets_ * w, np.nextafter(w, 0))
        new.widths_ = np.full(self.n_functions_, w)
        return new

    def quantize(self, P, width=None):
        """Hash codes from precomputed projections ``P`` at bucket width
        ``width`` (default: the fitted width).

        Offsets scale with the width (``b = u w``), so for the fitted width
        this reproduces :meth:`transform` exactly.
        """
        check_is_fitted(self, "n_functions_")
        w = self.width_ if width is None else check_positive_float(width, "width")
        b = np.minimum(self.unit_offsets_ * w, np.nextafter(w, 0))
        return np.floor((P + b) / w).astype(np.int64)

    def hasher(self, table, func):
        """``HasherParams`` view of function ``func`` in table ``table``."""
        check_is_fitted(self, "n_functions_")
        if not (0 <= table < self.n_tables and 0 <= func < self.n_hashes):
            raise InvalidArgumentError("table/function index out of range")
        return self._params(table * self.n_hashes + func)

    @property
    def hashers_(self):
        return [self._params(j) for j in range(self.n_functions_)]

    # Fitted attributes written to / read from index files.
    _scalar_state = ("n_features_in_", "seed_", "width_", "n_functions_")
    _array_state = ("unit_offsets_", "offsets_", "widths_", "components_")

    def fitted_state(self):
        """``(scalars, arrays)`` that fully determine the fitted family."""
        check_is_fitted(self, "n_functions_")
        scalars = {name: getattr(self, name) for name in self._scalar_state}
        arrays = {name: getattr(self, name) for name in self._array_state}
        return scalars, arrays

    def restore_state(self, scalars, arrays):
        """Inverse of :meth:`fitted_state`; returns ``self``."""
        for name in self._scalar_state:
            setattr(self, name, scalars[name])
        for name in self._array_state:
            setattr(self, name, np.array(arrays[name]))
        self._rebuild()
        return self

    def _rebuild(self):
        pass


class E2LSHHasher(_LSHFamily):
    """Random-projection LSH on the full vector.

    Parameters
    ----------
    n_hashes : int
        Functions per table (k).
    n_tables : int
        Number of independent groups of functions (L).
    width : float
        Bucket width w.
    random_state : int or None
        Seed. Functions are derived per (table, function) from it.
    """

    scheme = Scheme.E2LSH

    def __init__(self, n_hashes=1, n_tables=1, width=4.0, random_state=None):
        self.n_hashes = n_hashes
        self.n_tables = n_tables
        self.width = width
        self.random_state = random_state

    def _draw_one(self, rng):
        return rng.standard_normal(self.n_features_in_)

    def _store(self, draws):
        self.components_ = np.asarray(draws)
        self._rebuild()

    def _rebuild(self):
        self._AT = np.ascontiguousarray(self.components_.T)

    def _hash_rows(self, X, out):
        _kernels.dense_hash(X, self._AT, self.offsets_, self.widths_, out)

    def _project_rows(self, X, out):
        _kernels.dense_project(X, self._AT, out)

    def _params(self, j):
        return HasherParams(Scheme.E2LSH, self.components_[j], self.offsets_[j],
                            self.widths_[j])


class FastLSHHasher(_LSHFamily):
    """Random sampling of ``m`` coordinates followed by random projection.

    Parameters
    ----------
    n_hashes, n_tables, width, random_state
        As for :class:`E2LSHHasher`; ``width`` is the sampled-space width.
    m : int
        Coordinates sampled (with replacement) per function. Every function
        owns its own sampling plan.
    """

    scheme = Scheme.FASTLSH

    def __init__(self, n_hashes=1, n_tables=1, width=1.0, m=30, random_state=None):
        self.n_hashes = n_hashes
        self.n_tables = n_tables
        self.width = width
        self.m = m
        self.random_state = random_state

    def _check_extra_params(self):
        self.m_ = check_positive_int(self.m, "m")

    def _draw_one(self, rng):
        idx = rng.integers(0, self.n_features_in_, size=self.m_)
        return idx, rng.standard_normal(self.m_)

    _scalar_state = _LSHFamily._scalar_state + ("m_",)
    _array_state = _LSHFamily._array_state + ("sample_indices_",)

    def _store(self, draws):
        self.sample_indices_ = np.array([d[0] for d in draws], dtype=np.int64)
        self.components_ = np.array([d[1] for d in draws])
        self._rebuild()

    def _rebuild(self):
        self._idx32 = self.sample_indices_.astype(np.int32)

    def _hash_rows(self, X, out):
        _kernels.gather_hash(X, self._idx32, self.components_, self.offsets_,
                             self.widths_, out)

    def _project_rows(self, X, out):
        _kernels.gather_project(X, self._idx32, self.components_, out)

    def _params(self, j):
        plan = SamplingPlan(self.sample_indices_[j], self.n_features_in_)
        return HasherParams(Scheme.FASTLSH, self.components_[j], self.offsets_[j],
                            self.widths_[j], plan=plan)


class ACHasher(_LSHFamily):
    """Hadamard-preconditioned sparse random projection (ACHash baseline).

    One Rademacher diagonal is shared by all functions of the family, so
    each vector is transformed once; every function then has its own sparse
    Gaussian projection with ``round(density * d)`` nonzeros, scaled by
    ``sqrt(d / nnz)`` so the projected variance matches E2LSH.
    """

    scheme = Scheme.ACHASH

    def __init__(self, n_hashes=1, n_tables=1, width=4.0,
                 density=ACHASH_DEFAULT_DENSITY, random_state=None,
                 batch_size=4096):
        self.n_hashes = n_hashes
        self.n_tables = n_tables
        self.width = width
        self.density = density
        self.random_state = random_state
        self.batch_size = batch_size

    def _check_extra_params(self):
        if not (0 < float(self.density) <= 1):
            raise InvalidArgumentError("density must lie in (0, 1]")
        self.padded_dim_ = next_pow2(self.n_features_in_)
        self.nnz_ = max(1, int(round(float(self.density) * self.padded_dim_)))
        self.signs_ = _rademacher(self.seed_, self.padded_dim_)

    def _draw_one(self, rng):
        d = self.padded_dim_
        support = np.sort(rng.choice(d, size=self.nnz_, replace=False))
        vals = rng.standard_normal(self.nnz_) * np.sqrt(d / self.nnz_)
        return support, vals

    _scalar_state = _LSHFamily._scalar_state + ("padded_dim_", "nnz_")
    _array_state = _LSHFamily._array_state + ("support_", "signs_")

    def _store(self, draws):
        self.support_ = np.array([d[0] for d in draws], dtype=np.int64)
        self.components_ = np.array([d[1] for d in draws])
        self._rebuild()

    def _rebuild(self):
        self._idx32 = self.support_.astype(np.int32)

    def _batches(self, X):
        step = check_positive_int(self.batch_size, "batch_size")
        for i0 in range(0, X.shape[0], step):
            sl = slice(i0, min(i0 + step, X.shape[0]))
            yield sl, _achash_transform(X[sl], self.signs_)

    def _hash_rows(self, X, out):
        for sl, Y in self._batches(X):
            _kernels.gather_hash(Y, self._idx32, self.components_, self.offsets_,
                                 self.widths_, out[sl])

    def _project_rows(self, X, out):
        for sl, Y in self._batches(X):
            _kernels.gather_project(Y, self._idx32, self.components_, out[sl])

    def _params(self, j):
        proj = np.zeros(self.padded_dim_)
        proj[self.support_[j]] = self.components_[j]
        return HasherParams(Scheme.ACHASH, proj, self.offsets_[j], self.widths_[j],
                            signs=self.signs_, support=self.support_[j],
                            n=self.n_features_in_)


def make_hasher(scheme, n_hashes=1, n_tables=1, width=4.0, m=30,
                density=ACHASH_DEFAULT_DENSITY, random_state=None):
    """Construct the (unfitted) family for ``scheme``."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.E2LSH:
        return E2LSHHasher(n_hashes, n_tables, width, random_state)
    if scheme is Scheme.FASTLSH:
        return FastLSHHasher(n_hashes, n_tables, width, m, random_state)
    return ACHasher(n_hashes, n_tables, width, density, random_state)
