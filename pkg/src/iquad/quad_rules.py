"""One-dimensional Gaussian quadrature rules and tensor-product grids.

Hermite rules are computed for the physicists' weight ``exp(-t**2)``. A grid
point ``t`` is moved onto a Gaussian ``N(mu, Sigma)`` through

    x = mu + sqrt(2) * L @ t,    L @ L.T = Sigma  (lower Cholesky factor),

and the weights are divided by ``sqrt(pi)`` per dimension so that they sum to
one. With this convention ``sum_n v_n h(x_n)`` approximates ``E_q[h(x)]`` and
is exact whenever ``h`` is a polynomial of degree at most ``2 * alpha - 1`` in
each coordinate.

Nodes and weights come from the Golub-Welsch construction: the nodes are the
eigenvalues of the symmetric tridiagonal Jacobi matrix of the three-term
recurrence and the weights are the squared first components of the
normalized eigenvectors times the total mass of the weight function.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ._linalg import as_covariance, cholesky
from .errors import GridTooLargeError, InvalidOrderError, UnsupportedRuleError

__all__ = [
    "RuleKind",
    "Rule1D",
    "GridRule",
    "PointSet",
    "hermite_rule",
    "classical_rule",
    "tensor_grid",
    "map_to_gaussian",
    "gauss_hermite_points",
    "MAX_HERMITE_ORDER",
    "MAX_GRID_POINTS",
]

MAX_HERMITE_ORDER = 200
MAX_GRID_POINTS = 10**7


class RuleKind(str, Enum):
    HERMITE = "hermite"
    LEGENDRE = "legendre"
    CHEBYSHEV_GAUSS = "chebyshev_gauss"
    CHEBYSHEV_GAUSS_2 = "chebyshev_gauss_2"
    LAGUERRE = "laguerre"


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Rule1D:
    """Nodes and weights of a one-dimensional rule.

    ``weights`` sum to one; ``raw_weights`` are the classical (unnormalized)
    weights with respect to the rule's weight function.
    """

    kind: RuleKind
    alpha: int
    nodes: np.ndarray
    weights: np.ndarray
    raw_weights: np.ndarray


@dataclass(frozen=True, eq=False)
class GridRule:
    kind: RuleKind
    alpha: int
    dim: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class PointSet:
    """Quadrature points placed on a concrete Gaussian ``N(mu, sigma)``.

    Attributes
    ----------
    points : ndarray, shape (N, d)
    quad_weights : ndarray, shape (N,)
        Normalized quadrature weights ``v_n``.
    mu, sigma : ndarray
        Parameters of the Gaussian that generated the points.
    """

    points: np.ndarray
    quad_weights: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


def _golub_welsch(diag, offdiag, mass):
    nodes, vecs = eigh_tridiagonal(diag, offdiag)
    raw = mass * vecs[0, :] ** 2
    return nodes, raw


def _check_order(alpha, upper=None):
    if isinstance(alpha, bool) or int(alpha) != alpha or alpha < 1:
        raise InvalidOrderError(f"rule order must be a positive integer, got {alpha!r}")
    if upper is not None and alpha > upper:
        raise InvalidOrderError(
            f"rule order {alpha} exceeds the supported maximum {upper}")
    return int(alpha)


def _hermite_christoffel(x, alpha):
    # orthonormal Hermite functions stay O(1), so tail weights keep full
    # relative precision where eigenvector components underflow
    prev = np.zeros_like(x)
    cur = np.pi**-0.25 * np.exp(-0.5 * x * x)
    total = cur**2
    for k in range(1, alpha):
        prev, cur = cur, np.sqrt(2.0 / k) * x * cur - np.sqrt((k - 1.0) / k) * prev
        total += cur**2
    return np.exp(-x * x) / total


@lru_cache(maxsize=256)
def hermite_rule(alpha):
    """Gauss-Hermite rule with ``alpha`` nodes for the weight ``exp(-t**2)``.

    Nodes are the roots of the physicists' Hermite polynomial ``H_alpha``;
    ``raw_weights`` sum to ``sqrt(pi)`` and ``weights`` to one. The node set is
    made exactly symmetric about zero.
    """
    alpha = _check_order(alpha, MAX_HERMITE_ORDER)
    k = np.arange(1, alpha)
    nodes, _ = _golub_welsch(np.zeros(alpha), np.sqrt(k / 2.0), np.sqrt(np.pi))
    # eigensolver noise breaks the exact symmetry of the Hermite rule
    nodes = 0.5 * (nodes - nodes[::-1])
    raw = _hermite_christoffel(nodes, alpha)
    raw = 0.5 * (raw + raw[::-1])
    return Rule1D(RuleKind.HERMITE, alpha, _frozen(nodes),
                  _frozen(raw / raw.sum()), _frozen(raw))


def classical_rule(kind, alpha):
    """Rule of the given kind.

    Chebyshev rules use their closed forms, Legendre and Laguerre go through
    Golub-Welsch. Nodes are returned in increasing order.
    """
    try:
        kind = RuleKind(kind)
    except ValueError:
        allowed = ", ".join(k.value for k in RuleKind)
        raise UnsupportedRuleError(
            f"unsupported rule {kind!r}; expected one of: {allowed}") from None
    if kind is RuleKind.HERMITE:
        return hermite_rule(alpha)
    alpha = _check_order(alpha)
    n = np.arange(1, alpha + 1)
    if kind is RuleKind.LEGENDRE:
        k = np.arange(1, alpha)
        nodes, raw = _golub_welsch(np.zeros(alpha), k / np.sqrt(4.0 * k**2 - 1.0), 2.0)
        nodes = 0.5 * (nodes - nodes[::-1])
        raw = 0.5 * (raw + raw[::-1])
    elif kind is RuleKind.LAGUERRE:
        k = np.arange(1, alpha)
        nodes, raw = _golub_welsch(2.0 * np.arange(alpha) + 1.0, k.astype(float), 1.0)
    elif kind is RuleKind.CHEBYSHEV_GAUSS:
        nodes = np.cos((2 * n - 1) * np.pi / (2 * alpha))
        raw = np.full(alpha, np.pi / alpha)
    else:
        theta = n * np.pi / (alpha + 1)
        nodes = np.cos(theta)
        raw = np.pi / (alpha + 1) * np.sin(theta) ** 2
    order = np.argsort(nodes)
    nodes, raw = nodes[order], raw[order]
    return Rule1D(kind, alpha, _frozen(nodes), _frozen(raw / raw.sum()), _frozen(raw))


def tensor_grid(rule, dim):
    """Full Cartesian product of ``rule`` in ``dim`` dimensions.

    Points are enumerated row-major over the per-dimension indices (the last
    coordinate varies fastest). A point's weight is the product of its
    per-dimension weights.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    n_points = rule.alpha**dim
    if n_points > MAX_GRID_POINTS:
        raise GridTooLargeError(
            f"grid with alpha={rule.alpha}, dim={dim} has {n_points} points "
            f"(limit {MAX_GRID_POINTS}); thin it with resample_thin or lower alpha")
    axes = np.meshgrid(*([rule.nodes] * dim), indexing="ij")
    points = np.stack([a.reshape(-1) for a in axes], axis=1)
    weights = np.ones(1)
    for _ in range(dim):
        weights = np.multiply.outer(weights, rule.weights).reshape(-1)
    return GridRule(rule.kind, rule.alpha, dim, _frozen(points), _frozen(weights))


@lru_cache(maxsize=64)
def _hermite_grid(alpha, dim):
    return tensor_grid(hermite_rule(alpha), dim)


def map_to_gaussian(grid, mu, sigma, chol=None):
    """Place a Hermite grid on ``N(mu, sigma)``.

    ``chol`` may carry a precomputed lower factor of ``sigma``.
    """
    if grid.kind is not RuleKind.HERMITE:
        raise UnsupportedRuleError("only Hermite grids can be mapped onto a Gaussian")
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if mu.shape != (grid.dim,):
        raise ValueError(f"mu has shape {mu.shape}, expected ({grid.dim},)")
    sigma = as_covariance(sigma, grid.dim)
    L = cholesky(sigma) if chol is None else np.asarray(chol, dtype=float)
    points = mu + np.sqrt(2.0) * grid.points @ L.T
    return PointSet(_frozen(points), grid.weights, _frozen(mu), _frozen(sigma))


def gauss_hermite_points(mu, sigma, alpha, chol=None):
    """Shortcut for ``map_to_gaussian(tensor_grid(hermite_rule(alpha), d), ...)``."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    return map_to_gaussian(_hermite_grid(int(alpha), mu.shape[0]), mu, sigma, chol)
