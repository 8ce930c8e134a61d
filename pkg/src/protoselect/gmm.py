"""Expectation-Maximization fitting of a Gaussian mixture over embeddings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, ValidationError
from .scorers import FULL_COV_MAX_DIM

_LOG_2PI = np.log(2.0 * np.pi)

# A component whose responsibility mass drops below this fraction of N is
# reseeded at the lowest-density point instead of letting EM collapse.
_EMPTY_MASS_FRACTION = 1e-10


@dataclass(frozen=True)
class GmmConfig:
    components: int
    covariance: str | None = None  # 'diagonal', 'full', or None = auto by D
    max_iters: int = 200
    tol: float = 1e-6
    restarts: int = 5
    cov_floor: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.components < 1:
            raise ConfigurationError("components must be >= 1")
        if self.covariance not in (None, "diagonal", "full"):
            raise ConfigurationError(f"unknown covariance {self.covariance!r}")
        if self.max_iters < 1 or self.tol <= 0 or self.restarts < 1:
            raise ConfigurationError("max_iters, tol and restarts must be positive")
        if self.cov_floor <= 0:
            raise ConfigurationError("cov_floor must be > 0")


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray          # (M,), simplex
    means: np.ndarray            # (M, D)
    covariances: np.ndarray      # (M, D) diagonal or (M, D, D) full
    covariance_type: str
    final_log_likelihood: float
    iterations_run: int
    converged: bool
    log_likelihood_trace: tuple[float, ...] = field(default=(), compare=False)
    restart_traces: tuple[tuple[float, ...], ...] = field(default=(), compare=False)

    @property
    def n_components(self) -> int:
        return self.means.shape[0]


def kmeanspp_init(data: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, then D^2-weighted."""
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if m > n:
        raise ConfigurationError(f"cannot place {m} centroids on {n} rows")
    if not np.all(np.isfinite(data)):
        raise ValidationError("data contains non-finite values")
    centroids = np.empty((m, data.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = data[first]
    if m == 1:
        return centroids
    sq_dist = np.einsum("ij,ij->i", data - centroids[0], data - centroids[0])
    for j in range(1, m):
        total = sq_dist.sum()
        if total <= 0:
            # all remaining rows coincide with a centroid: pick uniformly
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=sq_dist / total))
        centroids[j] = data[idx]
        new_sq = np.einsum("ij,ij->i", data - centroids[j], data - centroids[j])
        np.minimum(sq_dist, new_sq, out=sq_dist)
    return centroids


def _log_gaussians(data, means, covs, cov_type):
    """(N, M) matrix of component log densities."""
    n, d = data.shape
    m = means.shape[0]
    out = np.empty((n, m))
    if cov_type == "diagonal":
        for j in range(m):
            diff = data - means[j]
            maha = np.einsum("ij,ij->i", diff / covs[j], diff)
            out[:, j] = -0.5 * (d * _LOG_2PI + np.log(covs[j]).sum() + maha)
    else:
        for j in range(m):
            chol = np.linalg.cholesky(covs[j])
            sol = np.linalg.solve(chol, (data - means[j]).T)
            maha = np.einsum("ij,ij->j", sol, sol)
            logdet = 2.0 * np.log(np.diag(chol)).sum()
            out[:, j] = -0.5 * (d * _LOG_2PI + logdet + maha)
    return out


def _pooled_cov(data, cov_floor, cov_type):
    diff = data - data.mean(axis=0)
    n, d = data.shape
    if cov_type == "diagonal":
        return np.einsum("ij,ij->j", diff, diff) / n + cov_floor
    return diff.T @ diff / n + cov_floor * np.eye(d)


def _em_single(data, config, cov_type, rng):
    """One EM run; returns (model fields, trace)."""
    n, d = data.shape
    m = config.components
    means = kmeanspp_init(data, m, rng)
    weights = np.full(m, 1.0 / m)
    if cov_type == "diagonal":
        covs = np.tile(_pooled_cov(data, config.cov_floor, cov_type), (m, 1))
    else:
        covs = np.tile(_pooled_cov(data, config.cov_floor, cov_type), (m, 1, 1))

    trace = []
    converged = False
    iters = 0
    for iters in range(1, config.max_iters + 1):
        # E-step in log space
        log_dens = _log_gaussians(data, means, covs, cov_type)
        weighted = log_dens + np.log(weights)
        log_norm = logsumexp(weighted, axis=1)
        loglik = float(log_norm.sum())
        resp = np.exp(weighted - log_norm[:, None])

        # M-step
        mass = resp.sum(axis=0)
        empty = mass < _EMPTY_MASS_FRACTION * n
        if np.any(empty):
            # reseed dead components at the lowest-density point
            order = np.argsort(log_norm)
            for rank, j in enumerate(np.flatnonzero(empty)):
                target = order[rank % n]
                resp[:, j] = 0.0
                resp[target, j] = 1.0
            mass = resp.sum(axis=0)
        weights = mass / mass.sum()
        means = (resp.T @ data) / mass[:, None]
        if cov_type == "diagonal":
            for j in range(m):
                diff = data - means[j]
                covs[j] = (resp[:, j] @ (diff * diff)) / mass[j] + config.cov_floor
        else:
            eye = np.eye(d)
            for j in range(m):
                diff = data - means[j]
                covs[j] = (diff.T * resp[:, j]) @ diff / mass[j] + config.cov_floor * eye

        trace.append(loglik)
        if len(trace) >= 2:
            prev, cur = trace[-2], trace[-1]
            if cur - prev < config.tol * abs(prev):
                converged = True
                break

    # final log-likelihood under the last M-step parameters
    log_dens = _log_gaussians(data, means, covs, cov_type)
    final = float(logsumexp(log_dens + np.log(weights), axis=1).sum())
    trace.append(final)
    return weights, means, covs, final, iters, converged, tuple(trace)


def fit_gmm(data: np.ndarray, config: GmmConfig) -> GmmModel:
    """Fit an M-component GMM by EM with k-means++ restarts.

    Returns the restart with the highest final log-likelihood (ties broken by
    lowest restart index). Deterministic given config.seed.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValidationError(f"data must be 2-D, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValidationError("data contains non-finite values")
    n, d = data.shape
    if config.components > n:
        raise ConfigurationError(f"M={config.components} exceeds N={n}")
    cov_type = config.covariance or ("diagonal" if d > FULL_COV_MAX_DIM else "full")

    best = None
    traces = []
    for r in range(config.restarts):
        rng = np.random.default_rng([config.seed, r])
        result = _em_single(data, config, cov_type, rng)
        traces.append(result[6])
        if best is None or result[3] > best[3]:
            best = result
    weights, means, covs, final, iters, converged, trace = best
    return GmmModel(
        weights=weights,
        means=means,
        covariances=covs,
        covariance_type=cov_type,
        final_log_likelihood=final,
        iterations_run=iters,
        converged=converged,
        log_likelihood_trace=trace,
        restart_traces=tuple(traces),
    )


def responsibilities(model: GmmModel, x) -> np.ndarray:
    """Posterior component probabilities for a single point, log-space."""
    x = np.asarray(x, dtype=np.float64)
    d = model.means.shape[1]
    if x.shape != (d,):
        raise ValidationError(f"expected shape ({d},), got {x.shape}")
    log_dens = _log_gaussians(
        x[None, :], model.means, model.covariances, model.covariance_type
    )[0]
    weighted = log_dens + np.log(model.weights)
    return np.exp(weighted - logsumexp(weighted))
