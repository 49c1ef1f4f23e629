"""Gaussian and equally weighted Gaussian-mixture proposal densities."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from ._linalg import as_covariance, cholesky, regularized_cholesky
from .errors import FactorizationError
from .quad_rules import gauss_hermite_points

__all__ = [
    "EvalCounter",
    "GaussianProposal",
    "MixtureProposal",
    "gaussian_logpdf",
    "mixture_logpdf",
    "gaussian_sample",
]

_LOG_2PI = np.log(2.0 * np.pi)
MIN_EIGENVALUE = 1e-12


@dataclass
class EvalCounter:
    """Running tally of density evaluations.

    ``target`` counts target evaluations, ``proposal`` counts single Gaussian
    density evaluations and ``weight`` counts importance-weight denominators
    computed (a mixture denominator counts once there, M times in
    ``proposal``).
    """

    target: int = 0
    proposal: int = 0
    weight: int = 0

    def snapshot(self):
        return (self.target, self.proposal, self.weight)


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        x = x.reshape(-1, dim) if x.size == dim else x.reshape(-1, 1)
    if x.shape[-1] != dim:
        raise ValueError(f"points have dimension {x.shape[-1]}, proposal has {dim}")
    return x


@dataclass(frozen=True, eq=False)
class GaussianProposal:
    """``N(mu, sigma)`` with its Cholesky factor and log-normalizer cached."""

    mu: np.ndarray
    sigma: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)
    log_norm_const: float = field(init=False, repr=False)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        sigma = as_covariance(self.sigma, mu.shape[0]).copy()
        chol = cholesky(sigma)
        if np.linalg.eigvalsh(sigma)[0] <= MIN_EIGENVALUE:
            raise FactorizationError(
                f"covariance smallest eigenvalue must exceed {MIN_EIGENVALUE}")
        self._set(mu, sigma, chol)

    def _set(self, mu, sigma, chol):
        for a in (mu, sigma, chol):
            a.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "chol", chol)
        d = mu.shape[0]
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        object.__setattr__(self, "log_norm_const", -0.5 * (d * _LOG_2PI + logdet))

    @classmethod
    def regularized(cls, mu, sigma):
        """Build from an adapted covariance, adding diagonal jitter if needed."""
        mu = np.atleast_1d(np.asarray(mu, dtype=float)).copy()
        sigma = as_covariance(sigma, mu.shape[0])
        sigma, chol = regularized_cholesky(sigma)
        obj = cls.__new__(cls)
        obj._set(mu, sigma.copy(), chol.copy())
        return obj

    @property
    def dim(self):
        return self.mu.shape[0]

    def logpdf(self, x, counter=None):
        """Log-density at one point ``(d,)`` or many points ``(N, d)``."""
        single = np.ndim(x) <= 1 and np.size(x) == self.dim
        x = _as_points(x, self.dim)
        z = solve_triangular(self.chol, (x - self.mu).T, lower=True)
        out = self.log_norm_const - 0.5 * np.sum(z**2, axis=0)
        if counter is not None:
            counter.proposal += x.shape[0]
        return out[0] if single else out

    def sample(self, rng, size=None):
        """``mu + L z`` with ``z`` standard normal drawn from ``rng``."""
        n = 1 if size is None else int(size)
        z = rng.standard_normal((n, self.dim))
        x = self.mu + z @ self.chol.T
        return x[0] if size is None else x

    def points(self, alpha):
        """Gauss-Hermite points of order ``alpha`` per dimension on this Gaussian."""
        return gauss_hermite_points(self.mu, self.sigma, alpha, chol=self.chol)


@dataclass(frozen=True, eq=False)
class MixtureProposal:
    """Equally weighted mixture ``(1/M) sum_m q_m``."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError(f"mixture components disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return self.components[0].dim

    def __len__(self):
        return len(self.components)

    def component_logpdfs(self, x, counter=None):
        """Matrix of component log-densities, shape ``(M, N)``."""
        x = _as_points(x, self.dim)
        return np.stack([c.logpdf(x, counter) for c in self.components])

    def logpdf(self, x, counter=None):
        single = np.ndim(x) <= 1 and np.size(x) == self.dim
        comp = self.component_logpdfs(x, counter)
        out = logsumexp(comp, axis=0) - np.log(len(self.components))
        return out[0] if single else out


def gaussian_logpdf(q, x):
    return q.logpdf(x)


def mixture_logpdf(psi, x):
    return psi.logpdf(x)


def gaussian_sample(q, rng, size=None):
    return q.sample(rng, size)
