"""Collision probabilities, distributions and moments of sampled projections.

Notation used throughout (all for a fixed pair of vectors at distance ``s``):

``mu_t``
    ``m * s**2 / n``, the mean of the squared sampled distance.
``sigma_t``
    ``sqrt(m) * sigma`` where ``sigma`` is the population standard deviation
    of the ``n`` per-coordinate squared differences.

The squared sampled distance is modelled as a normal ``N(mu_t, sigma_t**2)``
truncated to ``[0, inf)``; the projected difference of a FastLSH function is
then ``s~ X`` with ``X`` standard normal and independent of ``s~``.

Two independent numerical routes are provided for the FastLSH collision
probability:

* the Fourier route: closed-form characteristic function of ``s~ X``,
  inverted by cosine quadrature (``pdf_stx``) and integrated against the
  bucket kernel (``collision_prob_fast``);
* the mixture route: average the E2LSH closed form over the truncated
  normal law of ``s~**2`` (``collision_prob_mixture``).

They share no code beyond the E2LSH closed form, and the tests hold them
against each other and against Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from . import hashing
from ._validation import check_positive_float, check_positive_int, check_seed
from .exceptions import InvalidArgumentError, NumericFailureError, UndefinedRhoError

__all__ = [
    "CollisionModel",
    "TruncSpec",
    "QuadratureConfig",
    "RhoPoint",
    "Moments",
    "MonteCarloEstimate",
    "trunc_normal_pdf",
    "trunc_normal_cdf",
    "sdist_pdf",
    "sdist_cdf",
    "charfn_stx",
    "charfn_mips",
    "pdf_stx",
    "cdf_stx",
    "collision_prob_e2lsh",
    "collision_prob_fast",
    "collision_prob_mips",
    "collision_prob_mixture",
    "moments_stx",
    "charfn_gap_to_normal",
    "ks_distance_to_normal",
    "rho_value",
    "rho_curve",
    "mc_collision_oracle",
    "mc_collision_model",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Below this sigma_t / mu_t the truncated normal is treated as a point mass.
DEGENERATE_RATIO = 1e-10


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CollisionModel:
    """Pair statistics ``(s, sigma)`` and sampling sizes ``(m, n)``."""

    s: float
    sigma: float
    m: int = 1
    n: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.s) and self.s >= 0):
            raise InvalidArgumentError(f"s must be finite and >= 0, got {self.s}")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidArgumentError(f"sigma must be finite and >= 0, got {self.sigma}")
        m = check_positive_int(self.m, "m")
        n = check_positive_int(self.n, "n")
        if m > n:
            raise InvalidArgumentError(f"m = {m} exceeds n = {n}")
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_tilde(cls, mu_t, sigma_t):
        """Model with the given ``(mu_t, sigma_t)`` directly (``m = n = 1``)."""
        if mu_t < 0:
            raise InvalidArgumentError("mu_t must be >= 0")
        return cls(math.sqrt(mu_t), sigma_t, 1, 1)

    @property
    def mu(self):
        return self.s**2 / self.n

    @property
    def mu_t(self):
        return self.m * self.s**2 / self.n

    @property
    def sigma_t(self):
        return math.sqrt(self.m) * self.sigma

    @property
    def degenerate(self):
        return _is_degenerate(self.mu_t, self.sigma_t)


@dataclass(frozen=True)
class TruncSpec:
    """Normal ``N(mu, sigma2)`` truncated to the open interval ``(a1, a2)``."""

    mu: float
    sigma2: float
    a1: float = -math.inf
    a2: float = math.inf

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise InvalidArgumentError("sigma2 must be > 0")
        if not self.a1 < self.a2:
            raise InvalidArgumentError("truncation bounds need a1 < a2")
        if self.mass <= 0:
            raise InvalidArgumentError("truncation window carries zero probability mass")

    @property
    def sd(self):
        return math.sqrt(self.sigma2)

    @property
    def mass(self):
        lo = (self.a1 - self.mu) / self.sd
        hi = (self.a2 - self.mu) / self.sd
        # Difference on the side with the smaller tail keeps precision.
        if lo > 0:
            return float(special.ndtr(-lo) - special.ndtr(-hi))
        return float(special.ndtr(hi) - special.ndtr(lo))


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the Fourier-type integrals.

    ``abs_tol`` is the absolute error requested from each integral; nested
    evaluations give the inner integral a tenth of that budget. ``limit``
    and ``limlst`` bound QUADPACK's subdivisions and Fourier cycles.
    """

    abs_tol: float = 1e-9
    limit: int = 500
    limlst: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise InvalidArgumentError("abs_tol must be > 0")

    def inner(self):
        return QuadratureConfig(self.abs_tol / 10, self.limit, self.limlst)


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class RhoPoint:
    c: float
    rho: float
    p1: float
    p2: float


@dataclass(frozen=True)
class Moments:
    """First four raw moments of ``s~ X`` and their relative deviations."""

    m1: float
    m2: float
    m3: float
    m4: float
    epsilon: float
    lam: float


@dataclass(frozen=True)
class MonteCarloEstimate:
    p: float
    stderr: float
    trials: int
    hits: int


# --------------------------------------------------------------------------
# Truncated normal
# --------------------------------------------------------------------------


def trunc_normal_pdf(x, spec):
    """Density of the truncated normal; zero outside ``(a1, a2)``."""
    x = np.asarray(x, dtype=np.float64)
    inside = (x > spec.a1) & (x < spec.a2)
    z = (x - spec.mu) / spec.sd
    val = np.exp(-0.5 * z * z) / (_SQRT2PI * spec.sd * spec.mass)
    out = np.where(inside, val, 0.0)
    return out if out.ndim else float(out)


def trunc_normal_cdf(x, spec):
    """Distribution function of the truncated normal."""
    x = np.asarray(x, dtype=np.float64)
    lo = (spec.a1 - spec.mu) / spec.sd
    z = (np.clip(x, spec.a1, spec.a2) - spec.mu) / spec.sd
    if lo > 0:
        num = special.ndtr(-lo) - special.ndtr(-z)
    else:
        num = special.ndtr(z) - special.ndtr(lo)
    out = np.clip(num / spec.mass, 0.0, 1.0)
    out = np.where(x <= spec.a1, 0.0, np.where(x >= spec.a2, 1.0, out))
    return out if out.ndim else float(out)


def _is_degenerate(mu_t, sigma_t):
    return sigma_t == 0 or sigma_t < DEGENERATE_RATIO * mu_t


def _s2_spec(mu_t, sigma_t):
    return TruncSpec(mu_t, sigma_t**2, 0.0, math.inf)


def sdist_pdf(t, cm):
    """Density of the sampled distance ``s~``: ``2 t psi(t**2)`` for t >= 0."""
    if cm.degenerate:
        raise InvalidArgumentError(
            "sigma_t = 0: s~ is a point mass at sqrt(mu_t) and has no density"
        )
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t > 0, 2 * t * trunc_normal_pdf(t * t, _s2_spec(cm.mu_t, cm.sigma_t)), 0.0)
    return out if out.ndim else float(out)


def sdist_cdf(t, cm):
    t = np.asarray(t, dtype=np.float64)
    if cm.degenerate:
        out = np.where(t >= math.sqrt(cm.mu_t), 1.0, 0.0)
    else:
        out = np.where(t > 0, trunc_normal_cdf(t * t, _s2_spec(cm.mu_t, cm.sigma_t)), 0.0)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# Characteristic function of s~ X
# --------------------------------------------------------------------------


class _CharFn:
    """Scalar-fast evaluator of the characteristic function for fixed
    ``(mu, sig)``.

    With ``a = mu / (sqrt(2) sig)`` and ``z = (x**2 sig**2 / 2 - mu) /
    (sqrt(2) sig)`` the closed form equals ``erfcx(z) / erfcx(-a)``. It is
    evaluated in logs: for ``z < 0`` through ``erfc`` with the (non-positive)
    exponent ``x**4 sig**2 / 8 - mu x**2 / 2`` kept explicit, for ``z >= 0``
    through ``erfcx``. Neither branch can overflow.
    """

    def __init__(self, mu, sig):
        if mu < 0 or sig < 0:
            raise InvalidArgumentError("mu_t and sigma_t must be >= 0")
        self.mu = float(mu)
        self.sig = float(sig)
        self.point_mass = _is_degenerate(mu, sig)
        if not self.point_mass:
            self.a = self.mu / (_SQRT2 * self.sig)
            # erfc(-a) = 2 * Phi(mu / sig)
            self.log_den = math.log(2.0 * special.ndtr(self.mu / self.sig))

    def __call__(self, x):
        x2 = x * x
        if self.point_mass:
            return math.exp(-0.5 * self.mu * x2)
        sig = self.sig
        z = (0.5 * x2 * sig * sig - self.mu) / (_SQRT2 * sig)
        if z < 0:
            expo = 0.5 * x2 * (0.25 * x2 * sig * sig - self.mu)
            return math.exp(expo + math.log(math.erfc(z)) - self.log_den)
        return math.exp(math.log(special.erfcx(z)) - self.a * self.a - self.log_den)

    def vector(self, x):
        x = np.asarray(x, dtype=np.float64)
        x2 = x * x
        if self.point_mass:
            return np.exp(-0.5 * self.mu * x2)
        sig = self.sig
        z = (0.5 * x2 * sig * sig - self.mu) / (_SQRT2 * sig)
        neg = z < 0
        out = np.empty_like(z)
        zn = z[neg]
        x2n = x2[neg]
        out[neg] = np.exp(0.5 * x2n * (0.25 * x2n * sig * sig - self.mu)
                          + np.log(special.erfc(zn)) - self.log_den)
        zp = z[~neg]
        out[~neg] = np.exp(np.log(special.erfcx(zp)) - self.a * self.a - self.log_den)
        return out


def charfn_stx(x, cm):
    """Characteristic function of ``s~ X`` (real and even)."""
    f = _CharFn(cm.mu_t, cm.sigma_t)
    out = f.vector(np.atleast_1d(x))
    return out if np.ndim(x) else float(out[0])


def charfn_mips(x, cm, delta):
    """Characteristic function of ``I X`` where ``I**2`` is the squared
    sampled distance shifted by the norm gap ``delta`` of the MIPS data
    transform."""
    if delta < 0:
        raise InvalidArgumentError("delta must be >= 0")
    f = _CharFn(cm.mu_t + delta, cm.sigma_t)
    out = f.vector(np.atleast_1d(x))
    return out if np.ndim(x) else float(out[0])


# --------------------------------------------------------------------------
# Quadrature helpers
# --------------------------------------------------------------------------


def _quad(f, a, b, q, what, **kw):
    res = integrate.quad(f, a, b, epsabs=q.abs_tol, epsrel=0.0, limit=q.limit,
                         full_output=1, **kw)
    value, err = res[0], res[1]
    if len(res) > 3:
        # QUADPACK flagged a problem; accept only if the error estimate is
        # still comfortably within budget.
        if not (np.isfinite(value) and err <= 10 * q.abs_tol):
            raise NumericFailureError(
                f"quadrature for {what} did not converge",
                {"value": value, "abserr": err, "message": res[3], "interval": (a, b)},
            )
    return value


def _fourier_tail(f, a, omega, q, what, kind="cos"):
    """``int_a^inf f(x) cos|sin(omega x) dx`` by QUADPACK's QAWF."""
    res = integrate.quad(f, a, np.inf, weight=kind, wvar=omega, epsabs=q.abs_tol,
                         limlst=q.limlst, limit=q.limit, full_output=1)
    value, err = res[0], res[1]
    if len(res) > 3 and not (np.isfinite(value) and err <= 10 * q.abs_tol):
        raise NumericFailureError(
            f"Fourier quadrature for {what} did not converge",
            {"value": value, "abserr": err, "message": res[3], "omega": omega},
        )
    return value


def _scale(mu, sig):
    """Characteristic length of x for the integrands (1 / sd of s~ X)."""
    m2 = mu if _is_degenerate(mu, sig) else mu + sig * _epsilon_term(mu, sig)
    return 1.0 / math.sqrt(max(m2, 1e-300))


def _epsilon_term(mu, sig):
    # sig * phi(mu/sig) / Phi(mu/sig) = E[s~^2] - mu
    r = mu / sig
    return sig * math.exp(-0.5 * r * r) / (_SQRT2PI * special.ndtr(r))


# --------------------------------------------------------------------------
# Density and distribution of s~ X by Fourier inversion
# --------------------------------------------------------------------------


def _pdf_from_charfn(t, phi, q):
    t = abs(float(t))
    xs = _scale(phi.mu, phi.sig)
    if t == 0.0:
        # Split so the adaptive rule sees the bulk before the slow tail.
        head = _quad(phi, 0.0, 40 * xs, q, "pdf at 0")
        tail = _quad(phi, 40 * xs, np.inf, q, "pdf tail at 0")
        return (head + tail) / math.pi
    # QAWF alone can miss the bulk when t is small (one cycle spans many
    # decay lengths), so the bulk gets its own cosine-weighted rule.
    head = _quad(phi, 0.0, 40 * xs, q, f"pdf head at t={t}", weight="cos", wvar=t)
    tail = _fourier_tail(phi, 40 * xs, t, q, f"pdf tail at t={t}")
    return (head + tail) / math.pi


def _normal_pdf(t, var):
    return math.exp(-0.5 * t * t / var) / math.sqrt(2 * math.pi * var)


def pdf_stx(t, cm, q=None):
    """Density of ``s~ X`` at ``t``: ``(1/pi) int_0^inf phi(x) cos(t x) dx``.

    Vectorized over ``t``. In the point-mass limit the closed-form normal
    density with variance ``mu_t`` is returned.
    """
    q = q or DEFAULT_QUADRATURE
    if cm.mu_t == 0 and cm.sigma_t == 0:
        raise InvalidArgumentError("identical points: s~ X is a point mass at 0")
    phi = _CharFn(cm.mu_t, cm.sigma_t)
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if phi.point_mass:
        out = np.array([_normal_pdf(v, cm.mu_t) for v in ts])
    else:
        out = np.array([_pdf_from_charfn(v, phi, q) for v in ts])
    return out if np.ndim(t) else float(out[0])


def _cdf_from_charfn(t, phi, q):
    # Gil-Pelaez: F(t) = 1/2 + (1/pi) int_0^inf phi(x) sin(t x) / x dx
    if t == 0:
        return 0.5
    sign = 1.0 if t > 0 else -1.0
    t = abs(t)
    split = max(40 * _scale(phi.mu, phi.sig), 2 * math.pi / t)
    head = _quad(lambda x: phi(x) * t * np.sinc(t * x / math.pi), 0.0, split, q,
                 f"cdf head at t={t}")
    tail = _fourier_tail(lambda x: phi(x) / x, split, t, q, f"cdf tail at t={t}",
                         kind="sin")
    return 0.5 + sign * (head + tail) / math.pi


def cdf_stx(t, cm, q=None):
    """Distribution function of ``s~ X`` by Gil-Pelaez inversion."""
    q = q or DEFAULT_QUADRATURE
    phi = _CharFn(cm.mu_t, cm.sigma_t)
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if phi.point_mass:
        sd = math.sqrt(cm.mu_t)
        out = special.ndtr(ts / sd) if sd > 0 else np.where(ts >= 0, 1.0, 0.0)
    else:
        out = np.array([_cdf_from_charfn(float(v), phi, q) for v in ts])
    return out if np.ndim(t) else float(out[0])


# --------------------------------------------------------------------------
# Collision probabilities
# --------------------------------------------------------------------------


def collision_prob_e2lsh(s, w):
    """Closed-form E2LSH collision probability at distance ``s``, width ``w``.

    ``p = erf(r / sqrt 2) - 2 / (sqrt(2 pi) r) * (1 - exp(-r**2 / 2))`` with
    ``r = w / s``; ``p = 1`` at ``s = 0``. Vectorized over ``s``.
    """
    w = check_positive_float(w, "w")
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise InvalidArgumentError("s must be finite and >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        r = w / s
        p = special.erf(r / _SQRT2) + (2.0 / (_SQRT2PI * r)) * np.expm1(-0.5 * r * r)
    p = np.where(s == 0, 1.0, np.clip(p, 0.0, 1.0))
    return p if p.ndim else float(p)


def _bucket_kernel(x, w):
    # int_0^w cos(t x) (1 - t/w) dt = (1 - cos(w x)) / (w x^2)
    if x == 0.0:
        return 0.5 * w
    h = math.sin(0.5 * w * x)
    return 2.0 * h * h / (w * x * x)


def _collision_fourier(phi, w, q):
    xs = _scale(phi.mu, phi.sig)
    split = max(40 * xs, 8 * math.pi / w)
    # The kernel is integrated as is over its first few periods; past that
    # it is split into a smooth part and a cosine-weighted part, which keeps
    # very wide buckets (many periods inside the bulk) tractable.
    near = min(split, 8 * math.pi / w)
    head = _quad(lambda x: phi(x) * _bucket_kernel(x, w), 0.0, near, q,
                 "collision probability head")
    smooth = _quad(lambda x: phi(x) / (w * x * x), near, np.inf, q,
                   "collision probability tail")
    osc = 0.0
    if near < split:
        osc += _quad(lambda x: phi(x) / (w * x * x), near, split, q,
                     "collision probability middle", weight="cos", wvar=w)
    osc += _fourier_tail(lambda x: phi(x) / (w * x * x), split, w, q,
                         "collision probability oscillating tail")
    return 2.0 / math.pi * (head + smooth - osc)


def _collision_nested(phi, w, q):
    inner = q.inner()

    def integrand(t):
        return 2.0 * _pdf_from_charfn(t, phi, inner) * (1.0 - t / w)

    return _quad(integrand, 0.0, w, q, "nested collision probability")


def _collision_from_phi(phi, w, q, method):
    if phi.point_mass:
        return float(collision_prob_e2lsh(math.sqrt(phi.mu), w))
    if method == "fourier":
        p = _collision_fourier(phi, w, q)
    elif method == "nested":
        p = _collision_nested(phi, w, q)
    else:
        raise InvalidArgumentError("method must be 'fourier' or 'nested'")
    return min(1.0, max(0.0, p))


def collision_prob_fast(cm, w_t, q=None, method="fourier"):
    """FastLSH collision probability ``int_0^w 2 f(t) (1 - t/w) dt``.

    ``f`` is the density of ``s~ X``. ``method="fourier"`` exchanges the
    order of integration and evaluates one integral of the characteristic
    function against the bucket kernel ``(1 - cos(w x)) / (w x**2)``;
    ``method="nested"`` integrates ``pdf_stx`` over ``[0, w]`` directly
    (slower, used as a cross-check).
    """
    w_t = check_positive_float(w_t, "w_t")
    q = q or DEFAULT_QUADRATURE
    if cm.mu_t == 0 and cm.sigma_t == 0:
        return 1.0
    return _collision_from_phi(_CharFn(cm.mu_t, cm.sigma_t), w_t, q, method)


def collision_prob_mips(cm, delta, w, q=None, method="fourier"):
    """Collision probability of FastLSH after the MIPS transforms, for a
    data vector whose norm gap is ``delta``."""
    if delta < 0:
        raise InvalidArgumentError("delta must be >= 0")
    w = check_positive_float(w, "w")
    q = q or DEFAULT_QUADRATURE
    mu = cm.mu_t + delta
    if mu == 0 and cm.sigma_t == 0:
        return 1.0
    return _collision_from_phi(_CharFn(mu, cm.sigma_t), w, q, method)


def collision_prob_mixture(cm, w_t, q=None, delta=0.0):
    """FastLSH collision probability as ``E[p_e2lsh(sqrt(Y), w)]`` over the
    truncated normal law of ``Y = s~**2 (+ delta)``.

    Independent of the characteristic-function route.
    """
    w_t = check_positive_float(w_t, "w_t")
    q = q or DEFAULT_QUADRATURE
    mu, sig = cm.mu_t + delta, cm.sigma_t
    if _is_degenerate(mu, sig):
        return float(collision_prob_e2lsh(math.sqrt(mu), w_t))
    lo = -mu / sig
    mass = special.ndtr(-lo)

    def integrand(z):
        y = mu + sig * z
        return float(collision_prob_e2lsh(math.sqrt(max(y, 0.0)), w_t)) * math.exp(-0.5 * z * z)

    hi = max(lo, 0.0) + 40.0
    val = _quad(integrand, lo, hi, q, "mixture collision probability",
                points=[p for p in (0.0,) if lo < p < hi])
    return val / (_SQRT2PI * mass)


# --------------------------------------------------------------------------
# Moments and asymptotics
# --------------------------------------------------------------------------


def moments_stx(cm):
    """Raw moments ``E[(s~ X)**r]`` for r = 1..4 and the deviations
    ``epsilon``, ``lam`` from ``N(0, mu_t)``.

    ``m2 = mu_t (1 + epsilon)``, ``m4 = 3 mu_t**2 (1 + lam)`` with
    ``epsilon = sigma_t phi(mu_t / sigma_t) / (mu_t Phi(mu_t / sigma_t))``
    and ``lam = (sigma_t / mu_t)**2 + epsilon``.
    """
    mu, sig = cm.mu_t, cm.sigma_t
    if mu == 0:
        raise InvalidArgumentError("mu_t = 0 (identical points): moments are degenerate")
    if sig == 0:
        eps = 0.0
        lam = 0.0
    else:
        eps = _epsilon_term(mu, sig) / mu
        lam = (sig / mu) ** 2 + eps
    return Moments(0.0, mu * (1.0 + eps), 0.0, 3.0 * mu * mu * (1.0 + lam), eps, lam)


def charfn_gap_to_normal(cm, n_grid=2001):
    """``sup |phi(x) - exp(-mu_t x**2 / 2)|`` over ``|x| <= 1 / sqrt(mu_t)``."""
    if cm.mu_t == 0:
        raise InvalidArgumentError("mu_t must be > 0")
    x = np.linspace(0.0, 1.0 / math.sqrt(cm.mu_t), n_grid)
    gap = np.abs(charfn_stx(x, cm) - np.exp(-0.5 * cm.mu_t * x * x))
    return float(gap.max())


def ks_distance_to_normal(cm, q=None, n_grid=81):
    """Kolmogorov-Smirnov distance between ``s~ X`` and ``N(0, mu_t)``.

    The supremum is taken over a grid of ``n_grid`` points on
    ``[0, 6 sqrt(mu_t)]``; both laws are symmetric so ``t >= 0`` suffices.
    """
    q = q or DEFAULT_QUADRATURE
    sd = math.sqrt(cm.mu_t)
    t = np.linspace(0.0, 6.0 * sd, n_grid)
    return float(np.max(np.abs(cdf_stx(t, cm, q) - special.ndtr(t / sd))))


# --------------------------------------------------------------------------
# rho(c)
# --------------------------------------------------------------------------


def rho_value(p1, p2):
    """``log(1/p1) / log(1/p2)``."""
    if p1 >= 1.0 or p2 >= 1.0:
        raise UndefinedRhoError(f"rho undefined for p1={p1}, p2={p2}")
    if p1 <= 0.0 or p2 <= 0.0:
        raise UndefinedRhoError(f"rho undefined for zero probability (p1={p1}, p2={p2})")
    return math.log(p1) / math.log(p2)


def rho_curve(c_grid, scheme, width, template=None, sigma_of_s=None, q=None,
              on_undefined="raise"):
    """rho at each approximation ratio ``c`` with ``s1 = 1`` and ``s2 = c``.

    Parameters
    ----------
    c_grid : sequence of float
        Ratios, each >= 1.
    scheme : {"e2lsh", "fastlsh"}
    width : float
        Bucket width of the scheme (``w`` or ``w~``).
    template : CollisionModel, optional
        For FastLSH, supplies ``m`` and ``n``; its ``s``/``sigma`` are ignored.
    sigma_of_s : callable, optional
        For FastLSH, maps a distance to the pair's ``sigma`` (e.g. a min or
        max envelope measured on a dataset). Defaults to ``sigma = 0``.
    on_undefined : {"raise", "nan"}
        What to do at points where an endpoint probability equals 1.
    """
    scheme = hashing.Scheme.parse(scheme)
    width = check_positive_float(width, "width")
    q = q or DEFAULT_QUADRATURE
    cs = [float(c) for c in c_grid]
    if any(c < 1 for c in cs):
        raise InvalidArgumentError("every c must be >= 1")

    if scheme is hashing.Scheme.E2LSH:
        def prob(s):
            return float(collision_prob_e2lsh(s, width))
    elif scheme is hashing.Scheme.FASTLSH:
        if template is None:
            raise InvalidArgumentError("FastLSH rho needs a CollisionModel template")
        sig_fn = sigma_of_s or (lambda s: 0.0)

        def prob(s):
            cm = CollisionModel(s, sig_fn(s), template.m, template.n)
            return collision_prob_fast(cm, width, q)
    else:
        raise InvalidArgumentError("rho_curve supports e2lsh and fastlsh")

    p1 = prob(1.0)
    points = []
    for c in cs:
        p2 = p1 if c == 1.0 else prob(c)
        try:
            rho = rho_value(p1, p2)
        except UndefinedRhoError:
            if on_undefined == "raise":
                raise
            rho = math.nan
        points.append(RhoPoint(c, rho, p1, p2))
    return points


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


def _estimate(hits, trials):
    p = hits / trials
    return MonteCarloEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / trials), trials, hits)


def mc_collision_oracle(pair, scheme, params, trials=100_000, seed=0, chunk=10_000):
    """Fraction of independently drawn hash functions with ``h(v) == h(u)``.

    Each trial is one function of the requested family (its own sampling
    plan, projection and offset), evaluated through the same code path the
    index uses. ``params`` holds ``width`` and, as applicable, ``m`` or
    ``density``.
    """
    if trials < 1000:
        raise InvalidArgumentError("trials must be >= 1000")
    v, u = (np.asarray(a, dtype=np.float64) for a in pair)
    pts = np.vstack([v, u])
    seed = check_seed(seed)
    hits = 0
    done = 0
    block = 0
    while done < trials:
        size = min(chunk, trials - done)
        block_seed = int(np.random.SeedSequence(seed, spawn_key=(block,)).generate_state(
            1, np.uint64)[0])
        fam = hashing.make_hasher(scheme, n_hashes=size, random_state=block_seed,
                                  **params)
        codes = fam.fit(pts).transform(pts)
        hits += int(np.count_nonzero(codes[0] == codes[1]))
        done += size
        block += 1
    return _estimate(hits, trials)


def mc_collision_model(cm, w_t, trials=100_000, seed=0, delta=0.0):
    """Monte Carlo of the collision event under the truncated-normal model.

    Draws ``s~**2`` from the truncated normal (scipy's sampler), ``X`` from
    N(0, 1) and ``b`` from U[0, w), and counts ``0 <= b + s~ X < w``.
    """
    rng = np.random.default_rng(check_seed(seed))
    mu, sig = cm.mu_t + delta, cm.sigma_t
    if _is_degenerate(mu, sig):
        y = np.full(trials, mu)
    else:
        y = stats.truncnorm.rvs(-mu / sig, np.inf, loc=mu, scale=sig, size=trials,
                                random_state=rng)
    proj = np.sqrt(y) * rng.standard_normal(trials)
    b = rng.random(trials) * w_t
    hits = int(np.count_nonzero(np.floor((b + proj) / w_t) == 0))
    return _estimate(hits, trials)
