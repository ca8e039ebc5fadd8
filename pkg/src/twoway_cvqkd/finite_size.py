"""Finite-size parameter estimation and the finite-key rate envelope.

Channel model used for estimation: ``y = t x + z`` with ``t = sqrt(T)`` and
``z ~ N(0, sigma2)``, ``sigma2 = 1 + T eps``. The failure probability
``eps_pe`` is split evenly between a lower bound on ``t`` and an upper bound
on ``sigma2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcinv

from .errors import InvalidArgumentError

DEFAULT_EPS = 1e-10
# dimension of the raw-key variable's Hilbert space for CV protocols
DIM_HX = 2
MC_CHUNK = 250


@dataclass(frozen=True)
class EstimationBudget:
    """Signal counts and security parameters of one finite-size run.

    ``n_total`` signals are exchanged, ``m`` of them are disclosed for
    parameter estimation and ``n = n_total - m`` are kept for the key.
    """

    n_total: int
    m: int
    eps_pe: float = DEFAULT_EPS
    eps_bar: float = DEFAULT_EPS
    eps_pa: float = DEFAULT_EPS

    def __post_init__(self):
        if self.n_total < 2:
            raise InvalidArgumentError(f"n_total must be >= 2, got {self.n_total}")
        if not 0 < self.m < self.n_total:
            raise InvalidArgumentError(f"need 0 < m < n_total, got m={self.m}, n_total={self.n_total}")
        for name in ("eps_pe", "eps_bar", "eps_pa"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise InvalidArgumentError(f"{name} must lie in (0, 1), got {v}")

    @classmethod
    def split(cls, n_total, fraction=0.5, **kwargs) -> "EstimationBudget":
        """Budget that discloses ``fraction`` of the signals for estimation."""
        n_total = int(n_total)
        return cls(n_total=n_total, m=int(round(n_total * fraction)), **kwargs)

    @property
    def n(self) -> int:
        return self.n_total - self.m


@dataclass(frozen=True)
class ChannelEstimate:
    t_hat: float
    sigma2_hat: float
    v_mod: float

    def __post_init__(self):
        if self.sigma2_hat < 0:
            raise InvalidArgumentError(f"sigma2_hat must be >= 0, got {self.sigma2_hat}")
        if self.v_mod <= 0:
            raise InvalidArgumentError(f"v_mod must be > 0, got {self.v_mod}")


@dataclass(frozen=True)
class WorstCaseChannel:
    t_min: float
    sigma2_max: float

    @property
    def transmittance_min(self) -> float:
        return self.t_min ** 2


def gaussian_tail_quantile(eps: float) -> float:
    """Return ``z`` with ``(1 - erf(z / sqrt 2)) / 2 = eps / 2``.

    Equivalently ``P(|N(0,1)| > z) = eps``; used with the total failure
    probability so each one-sided bound fails with ``eps / 2``.
    """
    if not 0 < eps < 1:
        raise InvalidArgumentError(f"eps must lie in (0, 1), got {eps}")
    return float(math.sqrt(2.0) * erfcinv(eps))


def gaussian_tail_probability(z: float) -> float:
    """Inverse of :func:`gaussian_tail_quantile`: ``erfc(z / sqrt 2)``."""
    return float(erfc(z / math.sqrt(2.0)))


def _check_m(m):
    if m < 2:
        raise InvalidArgumentError(f"m must be >= 2, got {m}")


def t_min_bound(est: ChannelEstimate, m: float, eps_pe: float) -> float:
    _check_m(m)
    z = gaussian_tail_quantile(eps_pe)
    return est.t_hat - z * math.sqrt(est.sigma2_hat / (m * est.v_mod))


def sigma2_max_bound(est: ChannelEstimate, m: float, eps_pe: float) -> float:
    _check_m(m)
    z = gaussian_tail_quantile(eps_pe)
    return est.sigma2_hat + z * est.sigma2_hat * math.sqrt(2.0) / math.sqrt(m)


def worst_case_channel(transmittance: float, excess_noise: float, v_mod: float, m: float, eps_pe: float) -> WorstCaseChannel:
    """Worst-case bounds with the estimators replaced by their expectations."""
    if not 0 < transmittance <= 1:
        raise InvalidArgumentError(f"transmittance must lie in (0, 1], got {transmittance}")
    if excess_noise < 0:
        raise InvalidArgumentError(f"excess noise must be >= 0, got {excess_noise}")
    est = ChannelEstimate(math.sqrt(transmittance), 1.0 + transmittance * excess_noise, v_mod)
    return WorstCaseChannel(t_min_bound(est, m, eps_pe), sigma2_max_bound(est, m, eps_pe))


def delta_n(n: float, eps_bar: float = DEFAULT_EPS, eps_pa: float = DEFAULT_EPS) -> float:
    """Privacy-amplification penalty for ``n`` key signals, in bits."""
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    return ((2 * DIM_HX + 3) * math.sqrt(math.log2(2.0 / eps_bar) / n)
            + 2.0 / n * math.log2(1.0 / eps_pa))


def finite_key_rate(i_ab: float, s_be: float, budget: EstimationBudget, beta: float) -> float:
    """``n/N [beta I_AB - S_BE - Delta(n)]``; negative means no key."""
    d = delta_n(budget.n, budget.eps_bar, budget.eps_pa)
    return budget.n / budget.n_total * (beta * i_ab - s_be - d)


def _coverage_chunk(args):
    seed_seq, size, t, sigma2, v_mod, m, eps_pe = args
    rng = np.random.default_rng(seed_seq)
    z = gaussian_tail_quantile(eps_pe)
    hits = 0
    for _ in range(size):
        x = rng.normal(0.0, math.sqrt(v_mod), m)
        y = t * x + rng.normal(0.0, math.sqrt(sigma2), m) if sigma2 > 0 else t * x
        t_hat = float(x @ y / (x @ x))
        r = y - t_hat * x
        s2_hat = float(r @ r) / m
        t_lo = t_hat - z * math.sqrt(s2_hat / (m * v_mod))
        s2_hi = s2_hat + z * s2_hat * math.sqrt(2.0 / m)
        hits += (t >= t_lo) and (sigma2 <= s2_hi)
    return hits


def monte_carlo_coverage(t: float, sigma2: float, v_mod: float, m: int, eps_pe: float,
                         trials: int, seed: int = 0, jobs: int = 1) -> float:
    """Empirical probability that both worst-case bounds hold.

    Simulates ``trials`` estimation rounds of ``m`` samples each, forms the
    maximum-likelihood estimators and checks ``t >= t_min`` and
    ``sigma2 <= sigma2_max``. Trials are split into fixed chunks with
    spawned seeds, so the result does not depend on ``jobs``.
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    _check_m(m)
    sizes = [MC_CHUNK] * (trials // MC_CHUNK)
    if trials % MC_CHUNK:
        sizes.append(trials % MC_CHUNK)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    tasks = [(s, k, t, sigma2, v_mod, int(m), eps_pe) for s, k in zip(seeds, sizes)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            hits = sum(ex.map(_coverage_chunk, tasks))
    else:
        hits = sum(map(_coverage_chunk, tasks))
    return hits / trials


def t_hat_samples(t: float, sigma2: float, v_mod: float, m: int, trials: int, seed: int = 0) -> np.ndarray:
    """Maximum-likelihood estimates of ``t`` from ``trials`` simulated rounds."""
    rng = np.random.default_rng(seed)
    out = np.empty(trials)
    for i in range(trials):
        x = rng.normal(0.0, math.sqrt(v_mod), m)
        y = t * x + (rng.normal(0.0, math.sqrt(sigma2), m) if sigma2 > 0 else 0.0)
        out[i] = x @ y / (x @ x)
    return out
