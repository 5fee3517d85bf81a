"""The increasing chain (M_p) driving the line-breaking constructions.

Marginally M_p ~ ML(1 - 1/alpha, p - 1/alpha). Going backwards,
M_p = M_{p+1} * beta_p with beta_p ~ Beta(((p+1) alpha - 2)/(alpha - 1), 1/(alpha - 1))
independent of M_{p+1}, but not of M_p. So a forward step may not use a fresh
beta_p: the chain is realised from one sequence of backward factors, with
M_1 = c * lim n^{1/alpha} beta_1 ... beta_{n-1} and M_{p+1} = M_p / beta_p
dividing by the very factors that built M_1. Only the first ``horizon - 1``
factors are drawn; the rest enter M_1 through the lognormal tail term.

At alpha = 2 the values M_p^2 / 4 are the points of a unit Poisson process,
which gives an exact Markov step with no horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    DEFAULT_N_TRUNC,
    _check_truncation,
    beta_factor_chunks,
    chain_beta_params,
    sample_beta,
    sample_ml_half,
    tail_log_factor,
)
from .errors import DomainError, ParameterError, UnsupportedParameterError
from .params import AlphaParam, as_alpha
from .rng import RngStream

__all__ = [
    "AlphaParam",
    "ChainState",
    "beta_step_params",
    "chain_init",
    "chain_from",
    "chain_next",
    "chain_previous",
    "chain_values",
    "transition_density_brownian",
    "normalized_chain",
    "sample_chain",
    "sample_chain_matrix",
]


def beta_step_params(alpha: AlphaParam | float, p: int) -> tuple[float, float]:
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    return chain_beta_params(as_alpha(alpha), p)


@dataclass(frozen=True, eq=False)
class ChainState:
    """Chain value at step p.

    ``m`` is always ``m1 / prod`` with ``prod = beta_1 ... beta_{p-1}``, so
    stepping back through the stored factors reproduces earlier values bit
    for bit. ``factors`` holds the pre-drawn backward factors (None in the
    exact alpha = 2 mode, where each step draws its own exponential).
    """

    p: int
    m: float
    m1: float
    prod: float = 1.0
    factors: np.ndarray | None = None
    keep_history: bool = False
    drawn: tuple[float, ...] = ()

    @property
    def history(self) -> tuple[float, ...] | None:
        """beta_1, ..., beta_{p-1} when the state was built with keep_history."""
        if not self.keep_history:
            return None
        if self.factors is not None:
            return tuple(self.factors[: self.p - 1].tolist())
        return self.drawn

    @property
    def horizon(self) -> int | None:
        return None if self.factors is None else len(self.factors) + 1


def _factor_path(ap: AlphaParam, horizon: int, rng: RngStream, tail: bool = True):
    """(M_1, [beta_1, ..., beta_{horizon-1}]) for one coupled trajectory."""
    _check_truncation(horizon, tail)
    betas = next(iter(beta_factor_chunks(ap, horizon, rng, 1)))[2][0]
    log_m1 = float(np.log(betas).sum() + tail_log_factor(ap, horizon, rng, 1, tail)[0])
    return math.exp(log_m1), betas


def chain_init(alpha: AlphaParam | float, n_trunc: int | None, rng: RngStream,
               keep_history: bool = False, horizon: int | None = None) -> ChainState:
    """State at p = 1.

    For alpha < 2 the trajectory can be followed up to index
    ``max(n_trunc, horizon)``; at alpha = 2 it is unbounded.
    """
    ap = as_alpha(alpha)
    n = DEFAULT_N_TRUNC if n_trunc is None else int(n_trunc)
    if ap.is_brownian:
        if n < 1:
            raise ParameterError(f"n_trunc must be positive, got {n_trunc}")
        m1 = float(sample_ml_half(1, rng))
        return ChainState(1, m1, m1, 1.0, None, keep_history)
    m1, betas = _factor_path(ap, max(n, horizon or 0), rng)
    return ChainState(1, m1, m1, 1.0, betas, keep_history)


def chain_from(m: float, alpha: AlphaParam | float = 2.0, p: int = 1,
               keep_history: bool = False) -> ChainState:
    """Condition on M_p = m. Only the alpha = 2 chain has a usable Markov step."""
    if not as_alpha(alpha).is_brownian:
        raise UnsupportedParameterError("conditioning on a chain value needs alpha = 2")
    if not m > 0:
        raise ParameterError(f"chain value must be positive, got {m}")
    return ChainState(int(p), float(m), float(m), 1.0, None, keep_history)


def chain_next(state: ChainState, alpha: AlphaParam | float, rng: RngStream) -> ChainState:
    ap = as_alpha(alpha)
    if state.factors is None:
        if not ap.is_brownian:
            raise UnsupportedParameterError("factor-free chain states exist only at alpha = 2")
        while True:
            m_true = math.sqrt(state.m * state.m + 4.0 * rng.generator.standard_exponential())
            beta = state.m / m_true
            prod = state.prod * beta
            m = state.m1 / prod
            if m > state.m:
                break
        drawn = state.drawn + (beta,) if state.keep_history else ()
        return ChainState(state.p + 1, m, state.m1, prod, None, state.keep_history, drawn)
    if state.p > len(state.factors):
        raise DomainError(f"chain horizon {state.horizon} exhausted; initialise with a larger horizon")
    prod = state.prod * float(state.factors[state.p - 1])
    m = state.m1 / prod
    if not m > state.m:
        m = math.nextafter(state.m, math.inf)
    return ChainState(state.p + 1, m, state.m1, prod, state.factors, state.keep_history)


def chain_previous(state: ChainState) -> ChainState:
    """Step back one index using the retained backward factors."""
    hist = state.history
    if hist is None:
        raise ParameterError("chain_previous needs a state built with keep_history=True")
    if state.p == 1:
        raise DomainError("no state precedes p = 1")
    prod = 1.0
    for beta in hist[:-1]:
        prod *= beta
    drawn = state.drawn[:-1] if state.factors is None else ()
    return ChainState(state.p - 1, state.m1 / prod, state.m1, prod, state.factors,
                      state.keep_history, drawn)


def transition_density_brownian(m: float, m_next: float, alpha: AlphaParam | float = 2.0) -> float:
    """Density of M_{p+1} at ``m_next`` given M_p = ``m`` (alpha = 2 only)."""
    ap = as_alpha(alpha)
    if not ap.is_brownian:
        raise UnsupportedParameterError("transition density is only available at alpha = 2")
    if not (0 < m <= m_next):
        raise DomainError(f"need 0 < m <= m_next, got m={m}, m_next={m_next}")
    return 0.5 * m_next * math.exp(-(m_next - m) * (m_next + m) / 4.0)


def chain_values(alpha: AlphaParam | float, p_max: int, rng: RngStream,
                 n_trunc: int | None = None) -> list[float]:
    """One trajectory M_1, ..., M_{p_max}, vectorised."""
    ap = as_alpha(alpha)
    if p_max < 1:
        raise ParameterError(f"p_max must be >= 1, got {p_max}")
    n = DEFAULT_N_TRUNC if n_trunc is None else int(n_trunc)
    if ap.is_brownian:
        if n < 1:
            raise ParameterError(f"n_trunc must be positive, got {n_trunc}")
        gam = np.cumsum(rng.generator.standard_exponential(p_max))
        return (2.0 * np.sqrt(gam)).tolist()
    m1, betas = _factor_path(ap, max(n, p_max), rng)
    return _forward(m1, betas[: p_max - 1]).tolist()


def _forward(m1, betas: np.ndarray) -> np.ndarray:
    """m1 / cumprod(betas), forced strictly increasing along the last axis."""
    m1 = np.asarray(m1, dtype=float)
    out = np.empty(betas.shape[:-1] + (betas.shape[-1] + 1,))
    out[..., 0] = m1
    out[..., 1:] = m1[..., None] / np.cumprod(betas, axis=-1)
    flat = out.reshape(-1, out.shape[-1])
    for row in np.nonzero((np.diff(flat, axis=1) <= 0).any(axis=1))[0]:
        r = flat[row]
        for j in range(1, len(r)):
            if not r[j] > r[j - 1]:
                r[j] = math.nextafter(r[j - 1], math.inf)
    return out


def normalized_chain(alpha: AlphaParam | float, p_max: int, rng: RngStream) -> list[float]:
    """1, 1/beta_1, 1/(beta_1 beta_2), ... with independent factors, up to index p_max."""
    ap = as_alpha(alpha)
    if p_max < 1:
        raise ParameterError(f"p_max must be >= 1, got {p_max}")
    a, b = chain_beta_params(ap, np.arange(1, p_max, dtype=float))
    betas = np.array([sample_beta(ai, b, rng, strict=True) for ai in a]) if p_max > 1 else np.empty(0)
    return _forward(1.0, betas).tolist()


def sample_chain(alpha: AlphaParam | float, p_max: int, rng: RngStream,
                 n_trunc: int | None = None) -> list[float]:
    """One trajectory M_1, ..., M_{p_max} through repeated ``chain_next``."""
    state = chain_init(alpha, n_trunc, rng, horizon=p_max)
    out = [state.m]
    for _ in range(p_max - 1):
        state = chain_next(state, alpha, rng)
        out.append(state.m)
    return out


def sample_chain_matrix(alpha: AlphaParam | float, p_max: int, n_rep: int, rng: RngStream,
                        n_trunc: int | None = None, tail: bool = True) -> np.ndarray:
    """``n_rep`` independent trajectories as rows of an (n_rep, p_max) array."""
    ap = as_alpha(alpha)
    n = DEFAULT_N_TRUNC if n_trunc is None else int(n_trunc)
    if ap.is_brownian:
        gam = np.cumsum(rng.generator.standard_exponential((n_rep, p_max)), axis=1)
        return 2.0 * np.sqrt(gam)
    h = max(n, p_max)
    _check_truncation(h, tail)
    out = np.empty((n_rep, p_max))
    for start, stop, x in beta_factor_chunks(ap, h, rng, n_rep):
        log_m1 = np.log(x).sum(axis=1)
        out[start:stop] = _forward(np.exp(log_m1), x[:, : p_max - 1])
    # the tail factor multiplies every M_p of a trajectory alike
    out *= np.exp(tail_log_factor(ap, h, rng, n_rep, tail))[:, None]
    return out
