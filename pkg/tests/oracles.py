"""Independent reference implementations used only by the tests.

Nothing here imports the package's numerical code: each function restates
the quantity from first principles (plain loops, dense matrices, mpmath or
direct sampling) so that agreement is meaningful.
"""

import math

import mpmath
import numpy as np
from scipy import integrate, stats

mpmath.mp.dps = 40


def scalar_projection(a, x):
    acc = 0.0
    for ai, xi in zip(a, x):
        acc += float(ai) * float(xi)
    return acc


def scalar_e2lsh(v, a, b, w):
    return math.floor((scalar_projection(a, v) + b) / w)


def scalar_fastlsh(v, indices, a, b, w):
    sampled = [v[i] for i in indices]
    return math.floor((scalar_projection(a, sampled) + b) / w)


def hadamard_matrix(d):
    """Sylvester construction, normalized by 1/sqrt(d)."""
    H = np.array([[1.0]])
    while H.shape[0] < d:
        H = np.block([[H, H], [H, -H]])
    return H / math.sqrt(d)


def dense_achash(v, signs, proj, b, w):
    d = signs.shape[0]
    x = np.zeros(d)
    x[: len(v)] = v
    y = hadamard_matrix(d) @ (signs * x)
    return math.floor((float(proj @ y) + b) / w)


def e2lsh_quadrature(s, w):
    """Collision probability by integrating the folded-normal density of the
    projected distance against the bucket kernel."""
    f = lambda t: 2.0 / s * stats.norm.pdf(t / s) * (1.0 - t / w)
    val, _ = integrate.quad(f, 0.0, w, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def mp_erfcx(x):
    x = mpmath.mpf(x)
    return mpmath.exp(x * x) * mpmath.erfc(x)


def mp_charfn(x, mu, sig):
    """Characteristic function of s~ X in its original product form, evaluated
    in 40-digit arithmetic (no overflow concerns there)."""
    x, mu, sig = mpmath.mpf(x), mpmath.mpf(mu), mpmath.mpf(sig)
    z = (x * x * sig * sig / 2 - mu) / (mpmath.sqrt(2) * sig)
    den = 2 * mpmath.ncdf(mu / sig)
    return mpmath.exp(x**4 * sig**2 / 8 - mu * x * x / 2) * mpmath.erfc(z) / den


def mp_e2lsh(s, w):
    s, w = mpmath.mpf(s), mpmath.mpf(w)
    r = w / s
    return mpmath.erf(r / mpmath.sqrt(2)) - 2 / (mpmath.sqrt(2 * mpmath.pi) * r) * (
        1 - mpmath.exp(-r * r / 2))


def mp_collision_mixture(mu, sig, w):
    """E[p_e2lsh(sqrt(Y), w)] for Y ~ N(mu, sig^2) truncated to [0, inf)."""
    mu, sig, w = mpmath.mpf(mu), mpmath.mpf(sig), mpmath.mpf(w)
    mass = mpmath.ncdf(mu / sig)

    def f(y):
        if y <= 0:
            return mpmath.mpf(0)
        return mp_e2lsh(mpmath.sqrt(y), w) * mpmath.npdf(y, mu, sig)

    return mpmath.quad(f, [0, mu, mu + 10 * sig, mu + 40 * sig]) / mass


def sample_s2(mu, sig, size, rng):
    """Draws of s~^2 from the truncated normal using scipy's sampler."""
    return stats.truncnorm.rvs(-mu / sig, np.inf, loc=mu, scale=sig, size=size,
                               random_state=rng)


def naive_knn(X, Q, k):
    """O(N n) scan per query with explicit loops over points."""
    ids, dists = [], []
    for q in Q:
        d = []
        for i, x in enumerate(X):
            acc = 0.0
            for a, b in zip(x, q):
                diff = float(a) - float(b)
                acc += diff * diff
            d.append((math.sqrt(acc), i))
        d.sort()
        ids.append([i for _, i in d[:k]])
        dists.append([v for v, _ in d[:k]])
    return np.array(ids), np.array(dists)
