"""Adaptive importance quadrature: AM-IGH and M-PIGH.

Both loops are written against a ``draw(q, t)`` callback returning points and
their quadrature weights for proposal ``q`` at iteration ``t``. The
deterministic algorithms plug in Gauss-Hermite grids; the stochastic mirrors
in :mod:`iquad.baselines` plug in random draws through the same engines.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateWeightsError, FactorizationError, IquadError
from .igh import Estimates, igh_estimate, resample_thin, weighted_set
from .proposals import EvalCounter, GaussianProposal

__all__ = [
    "AMIGHVariant",
    "AdaptationError",
    "IterationRecord",
    "AdaptTrace",
    "moment_match",
    "am_igh",
    "m_pigh",
    "RECOVERY_INFLATION",
    "STARVATION_MASS",
]

RECOVERY_INFLATION = 4.0
STARVATION_MASS = 1e-12


class AdaptationError(IquadError):
    """Moment matching could not produce a valid Gaussian."""


class AMIGHVariant(str, Enum):
    LAST_PROPOSAL = "last"
    TEMPORAL_DM = "temporal_dm"


@dataclass(frozen=True)
class IterationRecord:
    """State after iteration ``t`` (1-based).

    ``mu``/``sigma`` are the parameters used to place the points of this
    iteration (stacked over kernels for population schemes). ``estimates``
    pool every point so far; ``estimates_iter`` use this iteration's points
    only. Counts are cumulative.
    """

    t: int
    mu: np.ndarray
    sigma: np.ndarray
    estimates: Optional[Estimates]
    estimates_iter: Optional[Estimates]
    target_evals: int
    proposal_evals: int
    weight_evals: int
    recovered: bool = False

    @property
    def ess_igh(self):
        return np.nan if self.estimates is None else self.estimates.ess_igh


@dataclass
class AdaptTrace:
    method: str
    records: List[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def final(self):
        return self.records[-1]

    def means(self):
        """Stacked proposal means, one row (or block) per iteration."""
        return np.stack([r.mu for r in self.records])


def moment_match(ws):
    """Weighted mean and covariance of a weighted set.

    Uses the self-normalized weights without bias correction. Raises
    :class:`AdaptationError` when the weights are degenerate or the
    covariance stays singular after jitter.
    """
    try:
        wbar = ws.normalized
    except DegenerateWeightsError as exc:
        raise AdaptationError(str(exc)) from exc
    live = wbar > 0
    x, w = ws.points[live], wbar[live]
    mu = w @ x
    diff = x - mu
    sigma = (w[:, None] * diff).T @ diff
    try:
        q = GaussianProposal.regularized(mu, sigma)
    except FactorizationError as exc:
        raise AdaptationError(f"moment-matched covariance is degenerate: {exc}") from exc
    return q.mu.copy(), q.sigma.copy()


def _safe_estimate(ws, f, log_z):
    try:
        return igh_estimate(ws, f, log_z)
    except DegenerateWeightsError:
        return None


def _blocks_set(points, v, log_t, log_den, n_per, n_sets=None):
    try:
        return weighted_set(np.concatenate(points), np.concatenate(v),
                            np.concatenate(log_t), np.concatenate(log_den),
                            n_per, len(points) if n_sets is None else n_sets)
    except DegenerateWeightsError:
        return None


def adaptive_single(target, mu0, sigma0, T, draw, variant, f=None, log_z=None,
                    counter=None, method="am_igh"):
    """Engine behind AM-IGH and AMIS.

    ``draw(q, t)`` returns ``(points, quad_weights)`` for proposal ``q``.
    """
    variant = AMIGHVariant(variant)
    if T < 1:
        raise ValueError("T must be at least 1")
    counter = EvalCounter() if counter is None else counter
    q = GaussianProposal(mu0, sigma0)
    if q.dim != target.dim:
        raise ValueError("initial proposal and target dimensions differ")
    trace = AdaptTrace(method)
    proposals, pts, vs, log_ts = [], [], [], []
    log_q_rows = []  # per block: rows log q_i(x^(tau)) for i <= t
    log_dens = []
    recovered = False
    for t in range(1, T + 1):
        x, v = draw(q, t)
        n = x.shape[0]
        proposals.append(q)
        pts.append(x)
        vs.append(v)
        log_ts.append(target.log_density(x, counter))
        if variant is AMIGHVariant.LAST_PROPOSAL:
            log_dens.append(q.logpdf(x, counter))
            counter.weight += n
        else:
            for tau in range(t - 1):
                log_q_rows[tau].append(q.logpdf(pts[tau], counter))
            log_q_rows.append([p.logpdf(x, counter) for p in proposals])
            log_dens = [logsumexp(np.stack(rows), axis=0) - np.log(t) for rows in log_q_rows]
            counter.weight += n * t
        pooled = _blocks_set(pts, vs, log_ts, log_dens, n)
        latest = _blocks_set(pts[-1:], vs[-1:], log_ts[-1:], log_dens[-1:], n)
        est = None if pooled is None else _safe_estimate(pooled, f, log_z)
        est_iter = None if latest is None else _safe_estimate(latest, f, log_z)
        trace.records.append(IterationRecord(
            t, q.mu.copy(), q.sigma.copy(), est, est_iter, counter.target,
            counter.proposal, counter.weight, recovered))
        if t == T:
            break
        try:
            if pooled is None:
                raise AdaptationError("all weights are zero")
            q = GaussianProposal(*moment_match(pooled))
            recovered = False
        except (AdaptationError, FactorizationError):
            q = GaussianProposal(q.mu, RECOVERY_INFLATION * q.sigma)
            recovered = True
    return trace


def am_igh(target, mu0, sigma0, alpha, T, variant="last", f=None, log_z=None,
           n_prime=None, rng=None, counter=None):
    """Adaptive importance Gauss-Hermite with a single Gaussian proposal.

    Each iteration places ``alpha**d`` Hermite nodes on the current proposal,
    (re)weights every node produced so far and moment-matches the next
    proposal to all of them. ``variant="last"`` divides each node by the
    proposal that produced it; ``"temporal_dm"`` divides every node by the
    equal mixture of all proposals so far, recomputing past weights each
    iteration. With ``n_prime`` set, every grid is thinned to ``n_prime``
    nodes drawn with probability ``v`` (requires ``rng``).
    """
    if n_prime is not None and rng is None:
        raise ValueError("thinning needs an rng")

    def draw(q, t):
        ps = q.points(alpha)
        if n_prime is not None:
            ps = resample_thin(ps, n_prime, rng)
        return ps.points, ps.quad_weights

    name = "am_igh" if AMIGHVariant(variant) is AMIGHVariant.LAST_PROPOSAL else "am_igh_dm"
    return adaptive_single(target, mu0, sigma0, T, draw, variant, f, log_z, counter, name)


def population_loop(target, inits, T, draw, f=None, log_z=None, counter=None,
                    method="m_pigh"):
    """Engine behind M-PIGH and M-PMC.

    Each iteration draws a block per kernel, weights the pooled points against
    the equal-weight mixture of the current kernels and refits every kernel by
    responsibility-weighted moment matching. Kernel weights stay ``1/M``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    kernels = [GaussianProposal(m, s) for m, s in inits]
    if not kernels:
        raise ValueError("need at least one kernel")
    M = len(kernels)
    counter = EvalCounter() if counter is None else counter
    trace = AdaptTrace(method)
    all_pts, all_v, all_lt, all_lden = [], [], [], []
    recovered = False
    for t in range(1, T + 1):
        blocks = [draw(q, t) for q in kernels]
        n = blocks[0][0].shape[0]
        x = np.concatenate([b[0] for b in blocks])
        v = np.concatenate([b[1] for b in blocks])
        log_t = target.log_density(x, counter)
        comp = np.stack([q.logpdf(x, counter) for q in kernels])
        log_psi = logsumexp(comp, axis=0) - np.log(M)
        counter.weight += x.shape[0]
        all_pts.append(x)
        all_v.append(v)
        all_lt.append(log_t)
        all_lden.append(log_psi)
        try:
            ws = weighted_set(x, v, log_t, log_psi, n, M)
        except DegenerateWeightsError:
            ws = None
        pooled = _blocks_set(all_pts, all_v, all_lt, all_lden, n, M * t)
        trace.records.append(IterationRecord(
            t, np.stack([q.mu for q in kernels]), np.stack([q.sigma for q in kernels]),
            None if pooled is None else _safe_estimate(pooled, f, log_z),
            None if ws is None else _safe_estimate(ws, f, log_z),
            counter.target, counter.proposal, counter.weight, recovered))
        if t == T:
            break
        if ws is None:
            kernels = [GaussianProposal(q.mu, RECOVERY_INFLATION * q.sigma) for q in kernels]
            recovered = True
            continue
        recovered = False
        wbar = ws.normalized
        resp = np.exp(comp - logsumexp(comp, axis=0))
        updated = []
        for m, q in enumerate(kernels):
            r = wbar * resp[m]
            mass = r.sum()
            if mass < STARVATION_MASS:
                updated.append(q)
                continue
            r = r / mass
            mu = r @ x
            diff = x - mu
            sigma = (r[:, None] * diff).T @ diff
            try:
                updated.append(GaussianProposal.regularized(mu, sigma))
            except FactorizationError:
                updated.append(q)
        kernels = updated
    return trace


def m_pigh(target, inits, alpha, T, f=None, log_z=None, counter=None):
    """Population adaptive importance Gauss-Hermite with ``M`` Gaussian kernels.

    ``inits`` is a sequence of ``(mu, sigma)`` pairs. Each kernel contributes
    ``alpha**d`` Hermite nodes per iteration; all nodes are weighted against
    the equal-weight mixture of the kernels (deterministic-mixture weights).
    Kernel ``m`` is refit with the Rao-Blackwellized responsibilities
    ``rho_m(x) = q_m(x) / sum_j q_j(x)``:

        mu_m    <- sum_n wbar_n rho_m(x_n) x_n / sum_n wbar_n rho_m(x_n)
        Sigma_m <- sum_n wbar_n rho_m(x_n) (x_n - mu_m)(x_n - mu_m)^T / (same)

    A kernel whose responsibility mass falls below ``STARVATION_MASS`` keeps
    its parameters for that iteration.
    """
    def draw(q, t):
        ps = q.points(alpha)
        return ps.points, ps.quad_weights

    return population_loop(target, inits, T, draw, f, log_z, counter, "m_pigh")
