"""Multiple-proposal importance Gauss-Hermite: standard (SM) and
deterministic-mixture (DM) weighting."""

from enum import Enum

import numpy as np

from .igh import igh_estimate, weighted_set
from .proposals import MixtureProposal

__all__ = ["MIGHScheme", "migh_weights", "migh_estimate", "partitioned_dm_estimate"]


class MIGHScheme(str, Enum):
    SM = "sm"
    DM = "dm"


def _pool(pointsets):
    sizes = {ps.size for ps in pointsets}
    if len(sizes) != 1:
        raise ValueError(f"all proposals must use the same number of points, got {sorted(sizes)}")
    points = np.concatenate([ps.points for ps in pointsets])
    v = np.concatenate([ps.quad_weights for ps in pointsets])
    return points, v, sizes.pop()


def migh_weights(pointsets, target, proposals, scheme, counter=None):
    """Pooled weighted set of ``M * N`` points.

    SM divides each point by the proposal that generated it; DM divides every
    point by the equal-weight mixture of all ``M`` proposals.
    """
    scheme = MIGHScheme(scheme)
    if len(pointsets) != len(proposals) or not proposals:
        raise ValueError("need one point set per proposal")
    if any(q.dim != target.dim for q in proposals):
        raise ValueError("proposal and target dimensions differ")
    points, v, n = _pool(pointsets)
    log_t = target.log_density(points, counter)
    if scheme is MIGHScheme.SM:
        log_den = np.concatenate([q.logpdf(ps.points, counter)
                                  for q, ps in zip(proposals, pointsets)])
    else:
        log_den = MixtureProposal(tuple(proposals)).logpdf(points, counter)
    if counter is not None:
        counter.weight += points.shape[0]
    return weighted_set(points, v, log_t, log_den, n, len(proposals))


def migh_estimate(pooled, f=None, log_z=None, M=None, N=None):
    """Estimates over the pooled set, normalizing across all ``M * N`` weights."""
    if M is not None and pooled.n_sets != M:
        raise ValueError(f"pooled set holds {pooled.n_sets} proposals, expected {M}")
    if N is not None and pooled.n_per_set != N:
        raise ValueError(f"pooled set holds {pooled.n_per_set} points per proposal, expected {N}")
    return igh_estimate(pooled, f, log_z)


def partitioned_dm_estimate(pointsets, target, proposals, groups, f=None, log_z=None):
    """DM estimates within each group of proposal indices, averaged by group size.

    Returns ``(unnormalized, z_hat)``; ``unnormalized`` is ``None`` without
    ``log_z``.
    """
    total = sum(len(g) for g in groups)
    unnorm, z_hat = 0.0, 0.0
    for g in groups:
        ws = migh_weights([pointsets[i] for i in g], target, [proposals[i] for i in g], "dm")
        est = igh_estimate(ws, f, log_z)
        share = len(g) / total
        z_hat += share * est.z_hat
        if log_z is not None:
            unnorm = unnorm + share * est.unnormalized
    return (unnorm if log_z is not None else None), z_hat
