import numpy as np

from .errors import FactorizationError

JITTER_SCALE = 1e-9
JITTER_RETRIES = 3


def as_covariance(sigma, dim=None):
    """Coerce a scalar, vector of variances or matrix to a 2-D covariance."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim == 0:
        sigma = sigma.reshape(1, 1) if dim is None else sigma * np.eye(dim)
    elif sigma.ndim == 1:
        sigma = np.diag(sigma)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise FactorizationError(f"covariance must be square, got shape {sigma.shape}")
    if dim is not None and sigma.shape[0] != dim:
        raise FactorizationError(
            f"covariance has dimension {sigma.shape[0]}, expected {dim}")
    return sigma


def cholesky(sigma):
    """Lower Cholesky factor; on failure name the first non-PD leading minor."""
    sigma = np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(sigma)):
        raise FactorizationError("covariance contains non-finite entries")
    if not np.allclose(sigma, sigma.T, rtol=1e-12, atol=1e-12 * np.abs(sigma).max()):
        raise FactorizationError("covariance is not symmetric")
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        pass
    for k in range(1, sigma.shape[0] + 1):
        try:
            np.linalg.cholesky(sigma[:k, :k])
        except np.linalg.LinAlgError:
            raise FactorizationError(
                f"covariance is not positive definite: leading minor of order {k} "
                f"is not positive") from None
    raise FactorizationError("covariance is not positive definite")


def regularized_cholesky(sigma):
    """Cholesky with diagonal jitter ``1e-9 * trace / d`` added on failure.

    Returns ``(sigma_used, chol)``. Up to ``JITTER_RETRIES`` retries, each
    adding another multiple of the jitter; a zero-trace matrix cannot be
    rescued and fails straight away.
    """
    sigma = np.asarray(sigma, dtype=float)
    sigma = 0.5 * (sigma + sigma.T)
    d = sigma.shape[0]
    try:
        return sigma, cholesky(sigma)
    except FactorizationError as exc:
        first_error = exc
    trace = np.trace(sigma)
    if not np.isfinite(trace) or trace <= 0:
        raise first_error
    jitter = JITTER_SCALE * trace / d
    for k in range(1, JITTER_RETRIES + 1):
        candidate = sigma + k * jitter * np.eye(d)
        try:
            return candidate, cholesky(candidate)
        except FactorizationError:
            continue
    raise first_error
