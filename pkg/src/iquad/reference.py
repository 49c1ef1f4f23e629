"""Brute-force posterior moments by staged randomized-QMC importance sampling.

Used to produce the stored oracle means of the exoplanet and GP experiments.
A pilot pass spreads scrambled Sobol points uniformly over a bounding box; a
second pass refines a Gaussian fit ``N(m, 4 C)``; the final pass pools
independent scrambled replicates drawn from the refined Gaussian with a small
defensive share of uniform box points, weighted against the pooled mixture.
The spread of the replicate estimates gives a standard error.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, ndtri
from scipy.stats import qmc

from .proposals import GaussianProposal

__all__ = ["ReferenceResult", "brute_force_reference"]

_CHUNK = 2**15


@dataclass(frozen=True)
class ReferenceResult:
    mean: np.ndarray
    std_error: np.ndarray
    sd: np.ndarray
    log_z: float
    ess: float
    n_evaluations: int
    provenance: dict


def _sobol(dim, log2_n, seed):
    return qmc.Sobol(dim, scramble=True, seed=seed).random_base2(log2_n)


def _eval(target, x):
    return np.concatenate([target.log_density(x[i:i + _CHUNK])
                           for i in range(0, x.shape[0], _CHUNK)])


def _fit(x, log_w):
    w = np.exp(log_w - logsumexp(log_w))
    m = w @ x
    d = x - m
    return m, (w[:, None] * d).T @ d, 1.0 / np.sum(w**2)


def _gauss_points(q, u):
    u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
    return q.mu + ndtri(u) @ q.chol.T


def brute_force_reference(target, box, seed=0, pilot_log2=20, final_log2=20,
                          replicates=8, defensive=1 / 16, inflation=4.0):
    """Posterior mean, standard deviations and ``log Z`` of ``target``.

    Parameters
    ----------
    target : TargetDensity
    box : array_like, shape (d, 2)
        Bounds containing all of the posterior mass that matters.
    seed : int
        Seeds the Sobol scramblings.
    pilot_log2, final_log2 : int
        Each pilot pass uses ``2**pilot_log2`` points, each final replicate
        ``2**final_log2``.
    replicates : int
        Independent scrambles in the final pass.
    defensive : float
        Share of uniform box points in each final replicate.
    """
    box = np.asarray(box, dtype=float)
    d = target.dim
    lo, width = box[:, 0], box[:, 1] - box[:, 0]
    log_box = float(np.sum(np.log(width)))
    ss = np.random.SeedSequence(seed)
    seeds = [int(s.generate_state(1)[0]) for s in ss.spawn(2 + 2 * replicates)]
    stages = []

    x = lo + _sobol(d, pilot_log2, seeds[0]) * width
    lw = _eval(target, x) + log_box
    m, C, ess = _fit(x, lw)
    stages.append({"kind": "uniform box", "points": int(x.shape[0]), "ess": float(ess)})

    q = GaussianProposal.regularized(m, inflation * C)
    x = _gauss_points(q, _sobol(d, pilot_log2, seeds[1]))
    lw = _eval(target, x) - q.logpdf(x)
    m, C, ess = _fit(x, lw)
    stages.append({"kind": "gaussian", "points": int(x.shape[0]), "ess": float(ess)})

    q = GaussianProposal.regularized(m, inflation * C)
    n_u = max(1, int(round(defensive * 2**final_log2)))
    n_g = 2**final_log2
    share_u = n_u / (n_u + n_g)
    rep_means, rep_logz, xs, lws = [], [], [], []
    for r in range(replicates):
        xu = lo + _sobol(d, final_log2, seeds[2 + 2 * r])[:n_u] * width
        xg = _gauss_points(q, _sobol(d, final_log2, seeds[3 + 2 * r]))
        xr = np.concatenate([xu, xg])
        in_box = np.all((xr >= box[:, 0]) & (xr <= box[:, 1]), axis=1)
        log_den = np.logaddexp(np.log(share_u) - log_box + np.where(in_box, 0.0, -np.inf),
                               np.log1p(-share_u) + q.logpdf(xr))
        lw = _eval(target, xr) - log_den
        w = np.exp(lw - logsumexp(lw))
        rep_means.append(w @ xr)
        rep_logz.append(logsumexp(lw) - np.log(xr.shape[0]))
        xs.append(xr)
        lws.append(lw)
    x, lw = np.concatenate(xs), np.concatenate(lws)
    mean, C, ess = _fit(x, lw)
    stages.append({"kind": "gaussian + defensive box", "replicates": replicates,
                   "points": int(x.shape[0]), "ess": float(ess)})
    rep_means = np.array(rep_means)
    se = rep_means.std(axis=0, ddof=1) / np.sqrt(replicates)
    n_eval = int(sum(s["points"] for s in stages))
    log_z = float(logsumexp(lw) - np.log(x.shape[0]))
    prov = {
        "method": "staged scrambled-Sobol importance sampling",
        "seed": int(seed),
        "box": box.tolist(),
        "inflation": float(inflation),
        "defensive_share": float(share_u),
        "stages": stages,
        "replicate_log_z": [float(v) for v in rep_logz],
        "n_evaluations": n_eval,
    }
    return ReferenceResult(mean, se, np.sqrt(np.diag(C)), log_z, float(ess), n_eval, prov)
