"""Compiled inner loops for hash evaluation.

Every kernel accumulates each projection sequentially over its coordinates
in float64, without fast-math reassociation, so a projection computed here
is bit-identical to the plain left-to-right dot product. That keeps hash
values reproducible across platforms and lets the tests compare against a
pure-Python scalar evaluation with ``==``.
"""

import numpy as np
from numba import njit

# Points processed per pass over the dense projection matrix.
_DENSE_BLOCK = 4


@njit(cache=True)
def _dense_block(X, i0, nrows, AT, acc):
    n = X.shape[1]
    H = AT.shape[1]
    for r in range(nrows):
        for j in range(H):
            acc[r, j] = 0.0
    for t in range(n):
        row = AT[t]
        for r in range(nrows):
            x = np.float64(X[i0 + r, t])
            a = acc[r]
            for j in range(H):
                a[j] += row[j] * x


@njit(cache=True)
def dense_project(X, AT, out):
    """out[i, j] = sum_t AT[t, j] * X[i, t]."""
    N = X.shape[0]
    acc = np.empty((_DENSE_BLOCK, AT.shape[1]))
    for i0 in range(0, N, _DENSE_BLOCK):
        nrows = min(_DENSE_BLOCK, N - i0)
        _dense_block(X, i0, nrows, AT, acc)
        for r in range(nrows):
            out[i0 + r, :] = acc[r]


@njit(cache=True)
def dense_hash(X, AT, b, w, out):
    """out[i, j] = floor((sum_t AT[t, j] * X[i, t] + b[j]) / w[j])."""
    N = X.shape[0]
    H = AT.shape[1]
    acc = np.empty((_DENSE_BLOCK, H))
    for i0 in range(0, N, _DENSE_BLOCK):
        nrows = min(_DENSE_BLOCK, N - i0)
        _dense_block(X, i0, nrows, AT, acc)
        for r in range(nrows):
            for j in range(H):
                out[i0 + r, j] = np.int64(np.floor((acc[r, j] + b[j]) / w[j]))


@njit(cache=True)
def _load4(X, i0, r, xb):
    # point-interleaved copy: one gathered coordinate serves four points
    n = X.shape[1]
    for c in range(n):
        for p in range(r):
            xb[c, p] = X[i0 + p, c]
        for p in range(r, 4):
            xb[c, p] = 0.0


@njit(cache=True)
def _gather4(xb, aj, ij):
    a0 = 0.0
    a1 = 0.0
    a2 = 0.0
    a3 = 0.0
    for t in range(aj.shape[0]):
        a = aj[t]
        k = ij[t]
        a0 += a * xb[k, 0]
        a1 += a * xb[k, 1]
        a2 += a * xb[k, 2]
        a3 += a * xb[k, 3]
    return a0, a1, a2, a3


@njit(cache=True)
def gather_project(X, idx, A, out):
    """out[i, j] = sum_t A[j, t] * X[i, idx[j, t]]."""
    N, n = X.shape
    H = A.shape[0]
    xb = np.empty((n, 4))
    for i0 in range(0, N, 4):
        r = min(4, N - i0)
        _load4(X, i0, r, xb)
        for j in range(H):
            acc = _gather4(xb, A[j], idx[j])
            for p in range(r):
                out[i0 + p, j] = acc[p]


@njit(cache=True)
def gather_hash(X, idx, A, b, w, out):
    """out[i, j] = floor((sum_t A[j, t] * X[i, idx[j, t]] + b[j]) / w[j])."""
    N, n = X.shape
    H = A.shape[0]
    xb = np.empty((n, 4))
    for i0 in range(0, N, 4):
        r = min(4, N - i0)
        _load4(X, i0, r, xb)
        for j in range(H):
            acc = _gather4(xb, A[j], idx[j])
            bj = b[j]
            wj = w[j]
            for p in range(r):
                out[i0 + p, j] = np.int64(np.floor((acc[p] + bj) / wj))


@njit(cache=True)
def fwht_rows(Y):
    """In-place normalized Walsh-Hadamard transform of each row of ``Y``.

    Row length must be a power of two.
    """
    N, d = Y.shape
    scale = 1.0 / np.sqrt(d)
    for i in range(N):
        y = Y[i]
        h = 1
        while h < d:
            for s in range(0, d, 2 * h):
                for j in range(s, s + h):
                    a = y[j]
                    c = y[j + h]
                    y[j] = a + c
                    y[j + h] = a - c
            h *= 2
        for j in range(d):
            y[j] *= scale


@njit(cache=True)
def signed_pad(X, signs, Y):
    """Y[i, :n] = signs[:n] * X[i]; Y[i, n:] = 0."""
    N, n = X.shape
    d = Y.shape[1]
    for i in range(N):
        for c in range(n):
            Y[i, c] = signs[c] * np.float64(X[i, c])
        for c in range(n, d):
            Y[i, c] = 0.0


@njit(cache=True)
def mix_keys(codes, k, out):
    """64-bit mix of each length-k group of codes (length-prefixed).

    Only used to locate buckets; equality is always re-checked on the full
    code tuple.
    """
    N = codes.shape[0]
    n_groups = codes.shape[1] // k
    for i in range(N):
        for g in range(n_groups):
            h = np.uint64(k) * np.uint64(0x9E3779B97F4A7C15)
            for t in range(k):
                h ^= np.uint64(codes[i, g * k + t])
                h += np.uint64(0x9E3779B97F4A7C15)
                h ^= h >> np.uint64(30)
                h *= np.uint64(0xBF58476D1CE4E5B9)
                h ^= h >> np.uint64(27)
                h *= np.uint64(0x94D049BB133111EB)
                h ^= h >> np.uint64(31)
            out[i, g] = h


@njit(cache=True)
def sq_distances(X, ids, q, out):
    """out[j] = sum_t (X[ids[j], t] - q[t])**2, accumulated left to right."""
    n = X.shape[1]
    for j in range(ids.shape[0]):
        row = X[ids[j]]
        acc = 0.0
        for t in range(n):
            d = np.float64(row[t]) - q[t]
            acc += d * d
        out[j] = acc
