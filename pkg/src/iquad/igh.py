"""Importance Gauss-Hermite weighting and estimators for a single proposal.

Weights are built in the log domain: ``log w = log pi(x) - log q(x)`` and the
combined weight is ``w' = w * v * N``. With normalized quadrature weights the
unnormalized estimator ``(1 / (Z N)) sum w' f`` reduces to
``(1 / Z) sum v w f``, the plain quadrature estimate of ``E_q[f pi / q] / Z``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .diagnostics import ess_igh
from .errors import DegenerateWeightsError
from .proposals import GaussianProposal
from .quad_rules import PointSet

__all__ = [
    "WeightedSet",
    "Estimates",
    "igh_weights",
    "igh_estimate",
    "resample_thin",
    "error_bound",
]


@dataclass(frozen=True, eq=False)
class WeightedSet:
    """Points with quadrature and importance weights.

    A set may pool ``n_sets`` groups of ``n_per_set`` points (several
    proposals, or several iterations); ``quad_weights`` then sum to one
    within each group.
    """

    points: np.ndarray
    quad_weights: np.ndarray
    log_w: np.ndarray
    n_per_set: int
    n_sets: int = 1

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def is_weights(self):
        return np.exp(self.log_w)

    @property
    def log_combined(self):
        with np.errstate(divide="ignore"):
            return self.log_w + np.log(self.quad_weights) + np.log(self.n_per_set)

    @property
    def combined(self):
        return np.exp(self.log_combined)

    @property
    def log_z_hat(self):
        return float(logsumexp(self.log_combined) - np.log(self.size))

    @property
    def normalized(self):
        lc = self.log_combined
        total = logsumexp(lc)
        if not np.isfinite(total):
            raise DegenerateWeightsError("all combined weights are zero")
        return np.exp(lc - total)


@dataclass(frozen=True)
class Estimates:
    """Estimator outputs; ``unnormalized`` is ``None`` when ``Z`` is unknown."""

    unnormalized: Optional[np.ndarray]
    self_normalized: np.ndarray
    z_hat: float
    log_z_hat: float
    ess_igh: float


def weighted_set(points, quad_weights, log_target, log_denom, n_per_set, n_sets=1):
    """Assemble a :class:`WeightedSet` from log target and log denominator values."""
    log_target = np.asarray(log_target, dtype=float)
    with np.errstate(invalid="ignore"):
        log_w = np.where(np.isneginf(log_target), -np.inf, log_target - log_denom)
    log_w = np.where(np.isnan(log_w), -np.inf, log_w)
    if not np.any(np.isfinite(log_w)):
        raise DegenerateWeightsError(
            "every importance weight is zero: the proposal misses the target mass")
    return WeightedSet(np.asarray(points), np.asarray(quad_weights, dtype=float), log_w,
                       int(n_per_set), int(n_sets))


def igh_weights(ps, target, q=None, counter=None):
    """Importance quadrature weights of ``ps`` for ``target``.

    ``q`` defaults to the Gaussian that generated ``ps``.
    """
    if q is None:
        q = GaussianProposal(ps.mu, ps.sigma)
    if target.dim != q.dim:
        raise ValueError(f"target dimension {target.dim} != proposal dimension {q.dim}")
    log_t = target.log_density(ps.points, counter)
    log_q = q.logpdf(ps.points, counter)
    if counter is not None:
        counter.weight += ps.size
    return weighted_set(ps.points, ps.quad_weights, log_t, log_q, ps.size)


def _apply(f, points):
    if f is None:
        return points
    vals = np.asarray(f(points), dtype=float)
    return vals.reshape(points.shape[0], -1)


def igh_estimate(ws, f=None, log_z=None):
    """Unnormalized, self-normalized and normalizing-constant estimates.

    ``f`` maps an ``(N, d)`` array to ``(N,)`` or ``(N, k)`` values and
    defaults to the identity (posterior mean). The unnormalized estimate is
    only formed when ``log_z`` is given.
    """
    wbar = ws.normalized
    vals = _apply(f, ws.points)
    live = wbar > 0
    self_norm = np.sum(wbar[live, None] * vals[live], axis=0)
    unnorm = None
    if log_z is not None:
        scaled = np.exp(ws.log_combined - np.log(ws.size) - log_z)
        unnorm = np.sum(scaled[live, None] * vals[live], axis=0)
    log_zh = ws.log_z_hat
    return Estimates(unnorm, self_norm, float(np.exp(log_zh)), log_zh, ess_igh(ws).ess_igh)


def resample_thin(obj, n_prime, rng):
    """Draw ``n_prime`` nodes with replacement, proportionally to ``v``.

    Survivors receive quadrature weight ``1 / n_prime``. A :class:`PointSet`
    is returned for a point set (so the target is only evaluated at the
    survivors); a :class:`WeightedSet` keeps the survivors' importance weights.
    """
    n_prime = int(n_prime)
    if n_prime < 1:
        raise ValueError("n_prime must be at least 1")
    if isinstance(obj, PointSet):
        p = obj.quad_weights
    else:
        p = obj.quad_weights / obj.n_sets
    idx = rng.choice(p.size, size=n_prime, replace=True, p=p / p.sum())
    v = np.full(n_prime, 1.0 / n_prime)
    if isinstance(obj, PointSet):
        return PointSet(obj.points[idx], v, obj.mu, obj.sigma)
    return WeightedSet(obj.points[idx], v, obj.log_w[idx], n_prime, 1)


def error_bound(alpha, sup_deriv_2a):
    """``alpha! * sup|h^(2 alpha)| / (2 alpha)!`` evaluated in log space.

    The bound refers to the rule on the standard normal; a supremum of zero
    (``h`` a polynomial of degree below ``2 alpha``) gives zero.
    """
    if sup_deriv_2a < 0:
        raise ValueError("supremum must be non-negative")
    if sup_deriv_2a == 0:
        return 0.0
    if not np.isfinite(sup_deriv_2a):
        return float("inf")
    return float(np.exp(gammaln(alpha + 1) + np.log(sup_deriv_2a) - gammaln(2 * alpha + 1)))
