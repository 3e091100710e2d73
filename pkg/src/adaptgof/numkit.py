"""Deterministic numerical primitives.

Distribution functions (chi-squared survival, Gaussian quantile), the lower
empirical quantile convention used throughout the package, and a reproducible
random source with derivable child streams.

The chi-squared and Gaussian routines are implemented here rather than
delegated so that the test suite can check them against independent oracles;
accuracy targets are 1e-10 absolute for ``chi2_sf`` (x <= 200, k <= 100) and
1e-8 absolute for ``gaussian_quantile``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

__all__ = [
    "chi2_sf",
    "gaussian_cdf",
    "gaussian_quantile",
    "empirical_quantiles",
    "EmpiricalQuantileSet",
    "RandomSource",
]

_EPS = 1e-15
_ITMAX = 600


# ---------------------------------------------------------------------------
# chi-squared survival function via the regularized incomplete gamma
# ---------------------------------------------------------------------------


def _gamma_p_series(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x) by power series (x < a + 1)."""
    if x <= 0.0:
        return 0.0
    ap = a
    total = 1.0 / a
    term = total
    for _ in range(_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) by Lentz continued fraction (x >= a + 1)."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _ITMAX):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi2_sf(x: float, k: int) -> float:
    """Upper-tail probability P(chi2_k > x).

    Uses the series expansion of the regularized incomplete gamma for small
    arguments and the continued-fraction form for large ones.

    Raises:
        ValueError: if ``x < 0`` or ``k < 1``.
    """
    x = float(x)
    k = int(k)
    if x < 0.0:
        raise ValueError(f"chi2_sf requires x >= 0, got {x}")
    if k < 1:
        raise ValueError(f"chi2_sf requires k >= 1, got {k}")
    if x == 0.0:
        return 1.0
    a = 0.5 * k
    t = 0.5 * x
    if t < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_p_series(a, t)))
    return min(1.0, max(0.0, _gamma_q_contfrac(a, t)))


# ---------------------------------------------------------------------------
# Gaussian CDF and quantile
# ---------------------------------------------------------------------------


def gaussian_cdf(x):
    """Standard normal CDF, computed from the complementary error function."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


# Rational approximation coefficients (Acklam's inverse normal CDF).
_QA = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
       1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_QB = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
       6.680131188771972e01, -1.328068155288572e01)
_QC = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
       -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_QD = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
       3.754408661907416e00)
_P_LOW = 0.02425


def gaussian_quantile(p):
    """Inverse standard normal CDF.

    Rational approximation refined by one Newton step on the erfc-based CDF;
    accepts scalars or arrays. Inputs must lie strictly inside (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("gaussian_quantile requires probabilities strictly in (0, 1)")

    out = np.empty_like(arr)
    lo = arr < _P_LOW
    hi = arr > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if np.any(mid):
        q = arr[mid] - 0.5
        r = q * q
        num = ((((_QA[0] * r + _QA[1]) * r + _QA[2]) * r + _QA[3]) * r + _QA[4]) * r + _QA[5]
        den = ((((_QB[0] * r + _QB[1]) * r + _QB[2]) * r + _QB[3]) * r + _QB[4]) * r + 1.0
        out[mid] = q * num / den
    for mask, prob, sign in ((lo, arr[lo], 1.0), (hi, 1.0 - arr[hi], -1.0)):
        if np.any(mask):
            s = np.sqrt(-2.0 * np.log(prob))
            num = ((((_QC[0] * s + _QC[1]) * s + _QC[2]) * s + _QC[3]) * s + _QC[4]) * s + _QC[5]
            den = (((_QD[0] * s + _QD[1]) * s + _QD[2]) * s + _QD[3]) * s + 1.0
            out[mask] = sign * num / den

    # One Newton step: x <- x - (Phi(x) - p) / phi(x).
    pdf = np.exp(-0.5 * out * out) / math.sqrt(2.0 * math.pi)
    out -= (gaussian_cdf(out) - arr) / pdf
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Empirical quantiles (lower convention, fixed package-wide)
# ---------------------------------------------------------------------------


def empirical_quantiles(values, probs) -> np.ndarray:
    """Lower empirical quantiles of a sample.

    ``quantile(p)`` is the smallest sample value v such that at least a
    fraction p of the sample is <= v, i.e. ``sorted[ceil(n*p) - 1]``.

    Raises:
        ValueError: on an empty sample or probes outside (0, 1).
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empirical_quantiles requires a non-empty sample")
    ps = np.atleast_1d(np.asarray(probs, dtype=float))
    if np.any(ps <= 0.0) or np.any(ps >= 1.0):
        raise ValueError("probe probabilities must lie strictly in (0, 1)")
    srt = np.sort(v)
    n = srt.size
    # The small slack guards against 0.25 * 100 evaluating to 25.000000000000004.
    idx = np.ceil(n * ps - 1e-9).astype(int) - 1
    return srt[np.clip(idx, 0, n - 1)]


@dataclass(frozen=True)
class EmpiricalQuantileSet:
    """A sorted sample together with probe probabilities in (0, 1)."""

    values: tuple
    probs: tuple

    @classmethod
    def from_sample(cls, values, probs) -> "EmpiricalQuantileSet":
        v = tuple(sorted(float(x) for x in np.asarray(values, dtype=float).ravel()))
        ps = tuple(float(p) for p in np.atleast_1d(probs))
        if not v:
            raise ValueError("empty sample")
        if any(p <= 0.0 or p >= 1.0 for p in ps):
            raise ValueError("probe probabilities must lie strictly in (0, 1)")
        return cls(values=v, probs=ps)

    def quantile(self, p: float) -> float:
        return float(empirical_quantiles(self.values, [p])[0])

    @property
    def quantiles(self) -> np.ndarray:
        return empirical_quantiles(self.values, list(self.probs))


# ---------------------------------------------------------------------------
# Random source
# ---------------------------------------------------------------------------


class RandomSource:
    """Reproducible random stream with derivable child streams.

    The raw bit stream is numpy's PCG64 seeded through ``SeedSequence``, which
    is stable across platforms and runs for a fixed seed. Distributional draws
    are built on that stream inside this class: uniforms are affine transforms
    of the raw stream, Gaussians are inverse-CDF transforms (``gaussian_quantile``),
    chi-squared variates are sums of squared Gaussians, and Bernoulli draws are
    threshold tests. Child streams are derived from (seed, label) so that e.g.
    replication r / split s can be reproduced in isolation.

    A RandomSource is single-owner: concurrent users must each hold their own
    child stream.
    """

    __slots__ = ("seed", "_key", "_bits")

    def __init__(self, seed: int, _key: tuple = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self._key = tuple(int(w) for w in _key)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self._key)
        self._bits = np.random.Generator(np.random.PCG64(ss))

    def child(self, label) -> "RandomSource":
        """Derive an independent stream identified by (seed, path, label)."""
        digest = hashlib.blake2b(repr(label).encode("utf-8"), digest_size=8).digest()
        word = int.from_bytes(digest, "big")
        return RandomSource(self.seed, self._key + (word >> 32, word & 0xFFFFFFFF))

    def describe(self) -> str:
        return f"seed={self.seed} path={self._key!r}"

    # -- draws --------------------------------------------------------------

    def random(self, size=None):
        """Raw uniforms on [0, 1)."""
        return self._bits.random(size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return low + (high - low) * self._bits.random(size)

    def normal(self, mean: float = 0.0, sd: float = 1.0, size=None):
        u = np.maximum(self._bits.random(size), 1e-300)
        return mean + sd * gaussian_quantile(u)

    def chisquare(self, df: int, size=None):
        df = int(df)
        if df < 1:
            raise ValueError("df must be a positive integer")
        shape = (df,) if size is None else (df,) + tuple(np.atleast_1d(size))
        z = self.normal(size=shape)
        total = np.sum(z * z, axis=0)
        return float(total) if size is None else total

    def bernoulli(self, p, size=None):
        draws = self._bits.random(size) < np.asarray(p, dtype=float)
        return int(draws) if size is None else draws.astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        return self._bits.permutation(int(n))
