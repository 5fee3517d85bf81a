"""Gamma, Beta, Dirichlet and generalized Mittag-Leffler laws.

Gamma always has unit rate. ``Beta(a, 0)`` is the point mass at 1. The
generalized Mittag-Leffler law ``ML(beta, theta)`` is sampled exactly for
``beta = 1/2`` and, for the family ``beta = 1 - 1/alpha``, through the
Beta-product martingale that defines the first chain value.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, poch

from .errors import ParameterError, RangeError, TruncationWarning
from .params import AlphaParam, as_alpha
from .rng import RngStream

DEFAULT_N_TRUNC = int(os.environ.get("STABLETREE_N_TRUNC", "1000"))
# below these, sample_m1 warns; the uncorrected product needs far more factors
MIN_N_TRUNC = int(os.environ.get("STABLETREE_MIN_N_TRUNC", "1000"))
MIN_N_TRUNC_UNCORRECTED = 10_000

_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class MlParams:
    beta: float
    theta: float

    def __post_init__(self) -> None:
        if not (0.0 < self.beta < 1.0):
            raise ParameterError(f"ML beta must lie in (0, 1), got {self.beta}")
        if not self.theta > -self.beta:
            raise ParameterError(f"ML theta must exceed -beta, got {self.theta}")


@dataclass(frozen=True)
class DirichletParams:
    a: tuple[float, ...]

    def __post_init__(self) -> None:
        a = tuple(float(x) for x in self.a)
        if len(a) < 2:
            raise ParameterError("Dirichlet needs at least two parameters")
        if any(not x > 0 for x in a):
            raise ParameterError(f"Dirichlet parameters must be positive, got {a}")
        object.__setattr__(self, "a", a)

    @property
    def total(self) -> float:
        return math.fsum(self.a)


def _gen(rng: RngStream) -> np.random.Generator:
    return rng.generator


def sample_gamma(shape: float, rng: RngStream, size=None):
    if not shape > 0:
        raise ParameterError(f"Gamma shape must be positive, got {shape}")
    g = _gen(rng)
    x = g.standard_gamma(shape, size)
    if size is None:
        while x <= 0.0:
            x = g.standard_gamma(shape)
        return float(x)
    bad = x <= 0.0
    while bad.any():
        x[bad] = g.standard_gamma(shape, int(bad.sum()))
        bad = x <= 0.0
    return x


def sample_beta(a: float, b: float, rng: RngStream, size=None, strict: bool = False):
    """Beta(a, b) draw in (0, 1]; exactly 1 when ``b == 0``.

    Draws that underflow to 0 are redrawn. A draw may round to 1.0 when ``b``
    is small; ``strict=True`` redraws those too, which is only harmless when
    the rounding probability is negligible.
    """
    if not a > 0 or not b >= 0:
        raise ParameterError(f"Beta parameters need a > 0, b >= 0, got ({a}, {b})")
    if b == 0:
        return 1.0 if size is None else np.ones(size)
    g = _gen(rng)
    hi = 1.0 if strict else math.inf
    if size is None:
        x = g.beta(a, b)
        while not 0.0 < x < hi:
            x = g.beta(a, b)
        return float(x)
    x = g.beta(a, b, size)
    bad = (x <= 0.0) | (x >= hi)
    while bad.any():
        x[bad] = g.beta(a, b, int(bad.sum()))
        bad = (x <= 0.0) | (x >= hi)
    return x


def sample_dirichlet(params: DirichletParams | tuple | list, rng: RngStream, size=None):
    """Normalized independent Gammas; rows sum to one."""
    if not isinstance(params, DirichletParams):
        params = DirichletParams(tuple(params))
    n = 1 if size is None else int(size)
    cols = [sample_gamma(ai, rng, n) for ai in params.a]
    g = np.column_stack(cols)
    out = g / g.sum(axis=1, keepdims=True)
    return out[0] if size is None else out


def ml_log_moment(params: MlParams, k: int) -> float:
    """log E[M^k] for M ~ ML(beta, theta)."""
    if k < 0 or int(k) != k:
        raise ParameterError(f"moment order must be a nonnegative integer, got {k}")
    k = int(k)
    if k == 0:
        return 0.0
    b, t = params.beta, params.theta
    r = t / b
    # Gamma(r + k + 1) / Gamma(r + 1) is a finite product
    num = math.fsum(math.log(r + j) for j in range(1, k + 1))
    den = float(np.log(poch(t + 1.0, k * b)))
    if not math.isfinite(den):
        den = float(gammaln(t + k * b + 1.0) - gammaln(t + 1.0))
    return num - den


def ml_moment(params: MlParams, k: int) -> float:
    """k-th moment Gamma(t+1) Gamma(t/b+k+1) / (Gamma(t/b+1) Gamma(t+k b+1))."""
    lm = ml_log_moment(params, k)
    if lm > 709.0:
        raise RangeError(f"ML moment of order {k} overflows double precision")
    return math.exp(lm)


def sample_ml_beta_half(theta: float, rng: RngStream, size=None):
    """ML(1/2, theta) as 2 sqrt(Gamma(theta + 1/2))."""
    MlParams(0.5, theta)
    g = sample_gamma(theta + 0.5, rng, size)
    return 2.0 * np.sqrt(g) if size is not None else 2.0 * math.sqrt(g)


def sample_ml_half(p: int, rng: RngStream, size=None):
    """ML(1/2, p - 1/2), i.e. the p-th chain value at alpha = 2."""
    if p < 1 or int(p) != p:
        raise ParameterError(f"p must be a positive integer, got {p}")
    return sample_ml_beta_half(p - 0.5, rng, size)


def chain_beta_params(alpha: AlphaParam, p):
    """Beta parameters of the backward factor beta_p; ``p`` may be an array."""
    a = alpha.alpha
    return ((p + 1) * a - 2.0) / (a - 1.0), 1.0 / (a - 1.0)


@lru_cache(maxsize=64)
def _product_constants(alpha: float, n: int) -> tuple[float, float, float]:
    """(log prefactor, lognormal tail variance, log beta normaliser) for truncation n.

    The prefactor turns prod_{i<n} beta_i into the mean-one martingale X_n and
    then into the ML(beta, beta) scale. The tail variance matches the second
    moment of the missing factor X_inf / X_n exactly.
    """
    ap = AlphaParam(alpha)
    inv = 1.0 / alpha
    log_rn = (gammaln(n + 1 - inv) + gammaln(2 - 2 * inv)
              - gammaln(2 - inv) - gammaln(n + 1 - 2 * inv))
    log_c = gammaln(1 - inv) - gammaln(2 - 2 * inv)
    i = np.arange(1, n, dtype=float)
    a, b = chain_beta_params(ap, i)
    log_m2_n = 2 * log_rn + float(np.sum(gammaln(a + b) + gammaln(a + 2) - gammaln(a) - gammaln(a + b + 2)))
    log_m2_inf = ml_log_moment(MlParams(ap.beta_index, ap.beta_index), 2) - 2 * log_c
    s2 = max(log_m2_inf - log_m2_n, 0.0)
    return float(log_rn + log_c), float(s2), float(log_c)


def martingale_product(alpha: AlphaParam | float, n: int, rng: RngStream, size: int) -> np.ndarray:
    """Samples of the mean-one martingale X_n built from beta_1..beta_{n-1}."""
    ap = as_alpha(alpha)
    log_pref, _, log_c = _product_constants(ap.alpha, n)
    out = np.empty(size)
    for start, stop, x in beta_factor_chunks(ap, n, rng, size):
        out[start:stop] = np.log(x).sum(axis=1)
    return np.exp(log_pref - log_c + out)


def beta_factor_chunks(ap: AlphaParam, n: int, rng: RngStream, size: int, first: int = 1):
    """Yield ``(start, stop, block)`` with block[r, j] = beta_{first + j}, j < n - first.

    Every draw lies strictly inside (0, 1).
    """
    k = n - first
    if k <= 0:
        yield 0, size, np.ones((size, 0))
        return
    a, b = chain_beta_params(ap, np.arange(first, n, dtype=float))
    rows = max(1, _CHUNK_ELEMS // k)
    g = _gen(rng)
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        x = g.beta(a, b, size=(stop - start, k))
        bad = (x <= 0.0) | (x >= 1.0)
        while bad.any():
            idx = np.nonzero(bad)
            x[idx] = g.beta(a[idx[1]], b)
            bad = (x <= 0.0) | (x >= 1.0)
        yield start, stop, x


def _check_truncation(n: int, tail: bool) -> None:
    if n < 1:
        raise ParameterError(f"n_trunc must be positive, got {n}")
    floor = MIN_N_TRUNC if tail else MIN_N_TRUNC_UNCORRECTED
    if n < floor:
        warnings.warn(f"n_trunc={n} below configured minimum {floor}", TruncationWarning, stacklevel=3)


def tail_log_factor(alpha: AlphaParam, n: int, rng: RngStream, size: int, tail: bool = True) -> np.ndarray:
    """log of the prefactor times the lognormal stand-in for the factors beyond n."""
    log_pref, s2, _ = _product_constants(alpha.alpha, n)
    out = np.full(size, log_pref)
    if tail and s2 > 0:
        out += _gen(rng).normal(-0.5 * s2, math.sqrt(s2), size)
    return out


def sample_m1(alpha: AlphaParam | float, n_trunc: int | None, rng: RngStream,
              size=None, tail: bool = True):
    """First chain value M_1 ~ ML(1 - 1/alpha, 1 - 1/alpha).

    Exact at alpha = 2. Otherwise the martingale product over ``n_trunc - 1``
    Beta factors, scaled so its mean is exact for every ``n_trunc``; with
    ``tail=True`` an independent mean-one lognormal factor stands in for the
    untruncated remainder, matching its second moment.
    """
    return sample_ml_family(alpha, 1, n_trunc, rng, size, tail)


def sample_ml_family(alpha: AlphaParam | float, p: int, n_trunc: int | None, rng: RngStream,
                     size=None, tail: bool = True):
    """ML(1 - 1/alpha, p - 1/alpha): the law of the p-th chain value.

    Uses the backward factors beta_p, ..., beta_{p + n_trunc - 2}; exact at alpha = 2.
    """
    ap = as_alpha(alpha)
    if p < 1 or int(p) != p:
        raise ParameterError(f"p must be a positive integer, got {p}")
    n = DEFAULT_N_TRUNC if n_trunc is None else int(n_trunc)
    if ap.is_brownian:
        if n < 1:
            raise ParameterError(f"n_trunc must be positive, got {n_trunc}")
        return sample_ml_half(p, rng, size)
    _check_truncation(n, tail)
    m = 1 if size is None else int(size)
    top = n + p - 1
    logs = np.empty(m)
    for start, stop, x in beta_factor_chunks(ap, top, rng, m, first=p):
        logs[start:stop] = np.log(x).sum(axis=1)
    logs += tail_log_factor(ap, top, rng, m, tail)
    out = np.exp(logs)
    return float(out[0]) if size is None else out
