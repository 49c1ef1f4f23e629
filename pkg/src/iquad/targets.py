"""Unnormalized target densities used by the experiments.

Every target exposes a vectorized ``log_unnorm(x)`` mapping an ``(N, d)``
array to ``(N,)`` log-densities, with ``-inf`` outside the support so that
quadrature nodes falling there simply receive zero weight.
"""

from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .proposals import GaussianProposal

__all__ = [
    "TargetDensity",
    "make_nakagami",
    "make_gaussian_target",
    "make_gaussian_mixture_5",
    "make_exoplanet",
    "simulate_exoplanet_data",
    "make_gp_posterior",
    "simulate_gp_data",
    "load_exoplanet_csv",
    "load_gp_csv",
    "MIXTURE5_MEANS",
    "MIXTURE5_COVS",
    "EXOPLANET_TRUTH",
    "EXOPLANET_PRIOR_BOX",
]


@dataclass(frozen=True, eq=False)
class TargetDensity:
    """Evaluable unnormalized log-density with optional ground truth.

    Attributes
    ----------
    dim : int
    log_unnorm : callable
        Vectorized ``(N, d) -> (N,)`` log of the unnormalized density.
    log_z : float, optional
        Log normalizing constant when known.
    true_mean : ndarray, optional
    moment : callable, optional
        ``moment(p)`` returns the exact ``E[x**p]`` (one-dimensional targets).
    """

    dim: int
    log_unnorm: Callable
    log_z: Optional[float] = None
    true_mean: Optional[np.ndarray] = None
    moment: Optional[Callable] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def log_density(self, x, counter=None):
        """Evaluate ``log_unnorm`` on one point or a batch of points."""
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1 and x.size == self.dim
        pts = x.reshape(-1, self.dim) if x.ndim <= 1 else x
        if pts.shape[-1] != self.dim:
            raise ValueError(f"points have dimension {pts.shape[-1]}, target has {self.dim}")
        out = np.asarray(self.log_unnorm(pts), dtype=float).reshape(-1)
        if counter is not None:
            counter.target += pts.shape[0]
        out = np.where(np.isnan(out), -np.inf, out)
        return out[0] if single else out

    def rescaled(self, c):
        """Same target multiplied by ``c > 0`` (for invariance checks)."""
        log_c = float(np.log(c))
        log_z = None if self.log_z is None else self.log_z + log_c
        base = self.log_unnorm
        return TargetDensity(self.dim, lambda x: base(x) + log_c, log_z,
                             self.true_mean, self.moment, self.name, dict(self.params))


def _double_factorial(n):
    if n <= 0:
        return 1
    out = 1
    for k in range(n, 0, -2):
        out *= k
    return out


def make_nakagami(mu=0.0, sigma=1.0, r=4.0):
    """Modified Nakagami density ``|x|**r exp(-(x - mu)**2 / (2 sigma**2))``.

    For ``mu == 0`` the normalizer and the moments are known in closed form:
    ``Z = sigma**(r+1) 2**((r+1)/2) Gamma((r+1)/2)`` (which is
    ``sigma**(r+1) (r-1)!! sqrt(2 pi)`` for even ``r``), odd moments vanish and
    ``E[x**p] = sigma**p 2**(p/2) Gamma((r+p+1)/2) / Gamma((r+1)/2)`` for even
    ``p``.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if r < 0:
        raise ValueError("r must be non-negative")
    mu, sigma, r = float(mu), float(sigma), float(r)

    def log_unnorm(x):
        x = x[:, 0]
        quad = -((x - mu) ** 2) / (2.0 * sigma**2)
        if r == 0:
            return quad
        with np.errstate(divide="ignore"):
            return r * np.log(np.abs(x)) + quad

    log_z = moment = true_mean = None
    if mu == 0.0:
        log_z = (r + 1) * np.log(sigma) + 0.5 * (r + 1) * np.log(2.0) + gammaln(0.5 * (r + 1))
        true_mean = np.zeros(1)

        def moment(p):
            if p % 2:
                return 0.0
            return float(sigma**p * 2.0 ** (p / 2)
                         * np.exp(gammaln(0.5 * (r + p + 1)) - gammaln(0.5 * (r + 1))))

    return TargetDensity(1, log_unnorm, log_z, true_mean, moment, "nakagami",
                         {"mu": mu, "sigma": sigma, "r": r})


def _gaussian_moment(mu, var, p):
    # E[x^p] = sum_k C(p, 2k) mu^(p-2k) var^k (2k-1)!!
    return float(sum(comb(p, 2 * k) * mu ** (p - 2 * k) * var**k * _double_factorial(2 * k - 1)
                     for k in range(p // 2 + 1)))


def make_gaussian_target(mu=1.0, sigma=1.0, scale=1.0):
    """Gaussian target ``scale * N(mu, sigma)``.

    Scalar ``mu`` gives a 1-D target with standard deviation ``sigma`` and a
    full moment oracle; vector ``mu`` takes ``sigma`` as a covariance.
    """
    if np.ndim(mu) == 0:
        q = GaussianProposal([float(mu)], [[float(sigma) ** 2]])
        m0, var = float(mu), float(sigma) ** 2
        moment = (lambda p: _gaussian_moment(m0, var, p))
    else:
        q = GaussianProposal(mu, sigma)
        moment = None
    log_scale = float(np.log(scale))
    return TargetDensity(q.dim, lambda x: q.logpdf(x) + log_scale, log_scale,
                         q.mu.copy(), moment, "gaussian",
                         {"mu": q.mu.tolist(), "sigma": q.sigma.tolist(), "scale": scale})


MIXTURE5_MEANS = np.array([[-10.0, -10.0], [0.0, 16.0], [13.0, 8.0], [-9.0, 7.0], [14.0, -14.0]])
MIXTURE5_COVS = np.array([
    [[2.0, 0.6], [0.6, 1.0]],
    [[2.0, -0.4], [-0.4, 2.0]],
    [[2.0, 0.8], [0.8, 2.0]],
    [[3.0, 0.0], [0.0, 0.5]],
    [[2.0, -0.1], [-0.1, 2.0]],
])


def make_gaussian_mixture_5():
    """Normalized five-mode 2-D Gaussian mixture with equal weights."""
    comps = [GaussianProposal(m, c) for m, c in zip(MIXTURE5_MEANS, MIXTURE5_COVS)]
    log_w = -np.log(len(comps))

    def log_unnorm(x):
        logs = np.stack([c.logpdf(x) for c in comps])
        top = logs.max(axis=0)
        return top + np.log(np.exp(logs - top).sum(axis=0)) + log_w

    return TargetDensity(2, log_unnorm, 0.0, MIXTURE5_MEANS.mean(axis=0), None, "mixture5")


# ---------------------------------------------------------------------------
# Radial-velocity exoplanet model, parameters x = [v, k, p, e, omega]

EXOPLANET_TRUTH = np.array([3.0, 2.0, 200.0, np.pi, 0.2])
EXOPLANET_PRIOR_BOX = np.array([
    [-15.0, 15.0],
    [0.0, 50.0],
    [0.0, 365.0],
    [0.0, 2.0 * np.pi],
    [0.0, 1.0],
])


def exoplanet_signal(x, times):
    """Noise-free radial velocity for parameter rows ``x`` at ``times``, ``(N, D)``."""
    x = np.atleast_2d(x)
    v, k, p, e, w = (x[:, i:i + 1] for i in range(5))
    with np.errstate(divide="ignore", invalid="ignore"):
        phase = 2.0 * np.pi / p * times[None, :] + w
    return v + k * (np.cos(phase) + e * np.cos(w))


def make_exoplanet(times, obs, sigma_o=np.sqrt(2.0), prior_box=None, swap_e_omega=False):
    """Posterior over ``[v, k, p, e, omega]`` with uniform box priors.

    ``prior_box`` is a ``(5, 2)`` array of bounds; by default the bounds are
    ``v in [-15, 15]``, ``k in [0, 50]``, ``p in [0, 365]``,
    ``e in [0, 2 pi]``, ``omega in [0, 1]``. ``swap_e_omega`` exchanges the
    last two ranges. The period must be strictly positive.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    obs = np.asarray(obs, dtype=float).reshape(-1)
    if times.size < 1 or times.shape != obs.shape:
        raise ValueError("times and obs must be non-empty and of equal length")
    if sigma_o <= 0:
        raise ValueError("sigma_o must be positive")
    box = EXOPLANET_PRIOR_BOX.copy() if prior_box is None else np.asarray(prior_box, dtype=float)
    if box.shape != (5, 2) or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError("prior_box must be a (5, 2) array of increasing bounds")
    if swap_e_omega:
        box[[3, 4]] = box[[4, 3]]
    log_prior = -np.sum(np.log(box[:, 1] - box[:, 0]))
    var = float(sigma_o) ** 2
    const = -0.5 * times.size * np.log(2.0 * np.pi * var)

    def log_unnorm(x):
        inside = np.all((x >= box[:, 0]) & (x <= box[:, 1]), axis=1) & (x[:, 2] > 0)
        out = np.full(x.shape[0], -np.inf)
        if np.any(inside):
            resid = obs - exoplanet_signal(x[inside], times)
            out[inside] = const - 0.5 * np.sum(resid**2, axis=1) / var + log_prior
        return out

    return TargetDensity(5, log_unnorm, None, None, None, "exoplanet",
                         {"sigma_o": float(sigma_o), "n_obs": int(times.size),
                          "swap_e_omega": bool(swap_e_omega)})


def simulate_exoplanet_data(rng, truth=EXOPLANET_TRUTH, n_obs=40, sigma_o=np.sqrt(2.0),
                            times=None):
    """Observation times (evenly spaced over one year by default) and noisy data."""
    times = np.linspace(0.0, 365.0, n_obs) if times is None else np.asarray(times, dtype=float)
    clean = exoplanet_signal(np.asarray(truth, dtype=float), times)[0]
    return times, clean + sigma_o * rng.standard_normal(times.size)


# ---------------------------------------------------------------------------
# Gaussian-process hyperparameter posterior, theta = [delta_1..delta_L, sigma]

GP_JITTER = 1e-8  # times mean(diag K), which is 1 for this kernel
_GP_BATCH = 256


def make_gp_posterior(inputs, outputs, beta=1.3, bounds=None):
    """Posterior over ARD length-scales and noise standard deviation.

    ``log pi(theta) = log N(y; 0, K_delta + sigma**2 I) - beta * sum(log theta)``
    on ``theta > 0`` with the squared-exponential ARD kernel
    ``k(z, r) = exp(-sum_l (z_l - r_l)**2 / (2 delta_l**2))``. A covariance that
    cannot be factorized evaluates to ``-inf``. The prior is improper at
    ``delta_l -> 0`` and gives ``delta_l`` a tail without a mean, so posterior
    moments need a truncation: ``bounds`` is an optional ``(L + 1, 2)`` box
    outside of which the density is zero.
    """
    z = np.asarray(inputs, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    y = np.asarray(outputs, dtype=float).reshape(-1)
    n_pts, n_feat = z.shape
    if n_pts < 2 or y.size != n_pts:
        raise ValueError("need at least two input/output pairs of matching length")
    if bounds is not None:
        bounds = np.asarray(bounds, dtype=float)
        if bounds.shape != (n_feat + 1, 2) or np.any(bounds[:, 1] <= bounds[:, 0]):
            raise ValueError(f"bounds must be a ({n_feat + 1}, 2) array of increasing limits")
    sq_diff = (z[:, None, :] - z[None, :, :]) ** 2  # (P, P, L)
    eye = np.eye(n_pts)
    const = -0.5 * n_pts * np.log(2.0 * np.pi)

    def log_lik(theta):
        delta, sig = theta[:, :n_feat], theta[:, n_feat]
        K = np.exp(-np.einsum("pql,nl->npq", sq_diff, 0.5 / delta**2))
        C = K + (GP_JITTER + sig**2)[:, None, None] * eye
        out = np.empty(theta.shape[0])
        try:
            Lc = np.linalg.cholesky(C)
            ok = np.ones(theta.shape[0], dtype=bool)
        except np.linalg.LinAlgError:
            Lc = np.zeros_like(C)
            ok = np.zeros(theta.shape[0], dtype=bool)
            for i in range(theta.shape[0]):
                try:
                    Lc[i] = np.linalg.cholesky(C[i])
                    ok[i] = True
                except np.linalg.LinAlgError:
                    pass
        out[~ok] = -np.inf
        if np.any(ok):
            L_ok = Lc[ok]
            alpha = np.linalg.solve(L_ok, np.broadcast_to(y, (L_ok.shape[0], n_pts))[..., None])[..., 0]
            logdet = np.sum(np.log(np.diagonal(L_ok, axis1=1, axis2=2)), axis=1)
            out[ok] = const - 0.5 * np.sum(alpha**2, axis=1) - logdet
        return out

    def log_unnorm(theta):
        out = np.full(theta.shape[0], -np.inf)
        pos = np.all(theta > 0, axis=1)
        if bounds is not None:
            pos &= np.all((theta >= bounds[:, 0]) & (theta <= bounds[:, 1]), axis=1)
        idx = np.flatnonzero(pos)
        for start in range(0, idx.size, _GP_BATCH):
            sel = idx[start:start + _GP_BATCH]
            th = theta[sel]
            out[sel] = log_lik(th) - beta * np.sum(np.log(th), axis=1)
        return out

    return TargetDensity(n_feat + 1, log_unnorm, None, None, None, "gp",
                         {"n_points": n_pts, "n_features": n_feat, "beta": float(beta),
                          "bounds": None if bounds is None else bounds.tolist()})


def simulate_gp_data(rng, n_points=50, delta=(1.0, 3.0), sigma=0.5, box=10.0):
    """Inputs uniform on ``[0, box]**L`` and outputs from the GP model."""
    delta = np.asarray(delta, dtype=float)
    z = rng.uniform(0.0, box, size=(n_points, delta.size))
    sq = np.sum(((z[:, None, :] - z[None, :, :]) / delta) ** 2, axis=2)
    K = np.exp(-0.5 * sq) + GP_JITTER * np.eye(n_points)
    f = np.linalg.cholesky(K) @ rng.standard_normal(n_points)
    return z, f + sigma * rng.standard_normal(n_points)


def _read_csv(path):
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float, encoding="utf-8")
    return data, data.dtype.names


def load_exoplanet_csv(path):
    """Read ``(times, obs)`` from a CSV with columns ``t`` and ``y``."""
    data, names = _read_csv(path)
    if not {"t", "y"} <= set(names):
        raise ValueError(f"{path}: expected columns t, y; found {', '.join(names)}")
    return np.atleast_1d(data["t"]), np.atleast_1d(data["y"])


def load_gp_csv(path):
    """Read ``(inputs, outputs)`` from a CSV with columns ``z_1..z_L`` and ``y``."""
    data, names = _read_csv(path)
    feats = sorted((n for n in names if n.startswith("z_")), key=lambda n: int(n[2:]))
    if "y" not in names or not feats:
        raise ValueError(f"{path}: expected columns z_1..z_L, y; found {', '.join(names)}")
    inputs = np.column_stack([np.atleast_1d(data[n]) for n in feats])
    return inputs, np.atleast_1d(data["y"])
