"""Effective-sample-size diagnostics for importance quadrature."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeightsError

__all__ = ["EssReport", "ess_igh", "ess_igh_from_weights", "classic_ess"]


@dataclass(frozen=True)
class EssReport:
    """ESS-IGH together with the distances it is built from.

    ``l2`` is the Euclidean distance between the normalized combined weights
    and the quadrature weights, ``l2_star`` its worst case (all mass on the
    node ``j_star`` with the smallest quadrature weight).
    """

    ess_igh: float
    l2: float
    l2_star: float
    j_star: int


def ess_igh_from_weights(normalized, quad_weights):
    """ESS-IGH from normalized combined weights and a quadrature pmf.

    Both inputs must sum to one. Ties in the smallest quadrature weight go to
    the lowest index; the worst-case distance is the same for every tied node.
    """
    wbar = np.asarray(normalized, dtype=float)
    v = np.asarray(quad_weights, dtype=float)
    n = v.size
    if wbar.shape != v.shape:
        raise ValueError("weight vectors differ in length")
    if not np.all(np.isfinite(wbar)) or not np.isclose(wbar.sum(), 1.0, atol=1e-8):
        raise DegenerateWeightsError("normalized weights are not a valid pmf")
    j_star = int(np.argmin(v))
    worst = np.zeros(n)
    worst[j_star] = 1.0
    # same expression for both distances keeps ESS exactly 1 in the worst case
    l2_sq = np.sum((wbar - v) ** 2)
    l2_star_sq = np.sum((worst - v) ** 2)
    if n == 1 or l2_star_sq == 0.0:
        return EssReport(1.0, float(np.sqrt(l2_sq)), float(np.sqrt(l2_star_sq)), j_star)
    ess = n / ((n - 1) / l2_star_sq * l2_sq + 1.0)
    return EssReport(float(min(max(ess, 1.0), n)), float(np.sqrt(l2_sq)),
                     float(np.sqrt(l2_star_sq)), j_star)


def ess_igh(ws):
    """ESS-IGH of a weighted set (pooled sets use ``v / n_sets`` as the pmf)."""
    return ess_igh_from_weights(ws.normalized, ws.quad_weights / ws.n_sets)


def classic_ess(weights):
    """Kish effective sample size ``(sum w)**2 / sum w**2``."""
    w = np.asarray(weights, dtype=float)
    s2 = np.sum(w**2)
    return float(np.sum(w) ** 2 / s2) if s2 > 0 else 0.0
