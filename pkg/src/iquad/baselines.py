"""Stochastic competitors: IS/SNIS, randomized-QMC IS, AMIS and M-PMC."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .adapt import adaptive_single, population_loop
from .igh import Estimates, igh_estimate, weighted_set

__all__ = [
    "McEstimates",
    "is_estimate",
    "qmc_is_estimate",
    "halton",
    "first_primes",
    "amis",
    "m_pmc",
    "MAX_HALTON_DIM",
]

MAX_HALTON_DIM = 20


@dataclass(frozen=True)
class McEstimates(Estimates):
    seed: Optional[int] = None
    n_samples: int = 0


def _rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def _estimate_on(points, target, q, f, log_z, counter, seed):
    n = points.shape[0]
    log_t = target.log_density(points, counter)
    log_q = q.logpdf(points, counter)
    if counter is not None:
        counter.weight += n
    ws = weighted_set(points, np.full(n, 1.0 / n), log_t, log_q, n)
    est = igh_estimate(ws, f, log_z)
    return McEstimates(est.unnormalized, est.self_normalized, est.z_hat, est.log_z_hat,
                       est.ess_igh, seed, n)


def is_estimate(target, q, f=None, N=100, rng=None, log_z=None, counter=None):
    """Plain importance sampling with ``N`` draws from ``q``.

    Returns the unnormalized estimate (when ``log_z`` is given), the
    self-normalized estimate and ``Z_hat = mean(w)``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    rng, seed = _rng(rng)
    return _estimate_on(q.sample(rng, N), target, q, f, log_z, counter, seed)


def first_primes(n):
    primes = []
    k = 2
    while len(primes) < n:
        if all(k % p for p in primes if p * p <= k):
            primes.append(k)
        k += 1
    return primes


def _radical_inverse(indices, base):
    out = np.zeros(indices.shape, dtype=float)
    scale = 1.0 / base
    i = indices.copy()
    while np.any(i > 0):
        out += (i % base) * scale
        i //= base
        scale /= base
    return out


def halton(n, dim, skip=1):
    """First ``n`` Halton points after skipping ``skip`` points.

    The sequence is indexed from 1 (its first point is ``1/2`` in base 2), so
    ``skip=1`` starts at ``(1/4, 2/9, ...)``. Bases are the first ``dim``
    primes.
    """
    if dim > MAX_HALTON_DIM:
        raise ValueError(f"Halton sequence supports at most {MAX_HALTON_DIM} dimensions")
    idx = np.arange(skip + 1, skip + n + 1, dtype=np.int64)
    return np.column_stack([_radical_inverse(idx, b) for b in first_primes(dim)])


def qmc_is_estimate(target, q, f=None, N=100, rng=None, log_z=None, shift=None, counter=None):
    """Importance sampling on a Cranley-Patterson-rotated Halton set.

    One uniform shift per run (``shift`` overrides it, e.g. zeros for the
    unrotated set); the rotated points go through the inverse normal CDF per
    coordinate and are then scaled by ``mu`` and the Cholesky factor of ``q``.
    """
    rng, seed = _rng(rng)
    u = halton(N, q.dim)
    if shift is None:
        shift = rng.uniform(size=q.dim)
    u = np.mod(u + np.asarray(shift, dtype=float), 1.0)
    tiny = np.finfo(float).tiny
    u = np.clip(u, tiny, 1.0 - np.finfo(float).epsneg)
    x = q.mu + ndtri(u) @ q.chol.T
    return _estimate_on(x, target, q, f, log_z, counter, seed)


def amis(target, mu0, sigma0, N, T, rng=None, f=None, log_z=None, counter=None):
    """Adaptive multiple importance sampling.

    Stochastic mirror of temporal-DM AM-IGH: ``N`` draws per iteration, every
    past sample reweighted against the equal mixture of all proposals so far,
    moment matching on all samples.
    """
    rng, _ = _rng(rng)

    def draw(q, t):
        return q.sample(rng, N), np.full(N, 1.0 / N)

    return adaptive_single(target, mu0, sigma0, T, draw, "temporal_dm", f, log_z,
                           counter, "amis")


def m_pmc(target, inits, N, T, rng=None, f=None, log_z=None, counter=None):
    """Mixture population Monte Carlo with frozen equal kernel weights.

    Sampling analogue of :func:`iquad.adapt.m_pigh`: ``N`` draws per kernel,
    mixture (DM) weights and the same Rao-Blackwellized kernel updates.
    """
    rng, _ = _rng(rng)

    def draw(q, t):
        return q.sample(rng, N), np.full(N, 1.0 / N)

    return population_loop(target, inits, T, draw, f, log_z, counter, "m_pmc")

