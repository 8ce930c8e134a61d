"""Feature-space anomaly scorers: kNN distance, center distance, Gaussian.

All scorers operate on precomputed embeddings, return non-negative scores,
and follow the convention that larger scores mean more anomalous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import EmbeddingDataset
from .errors import ValidationError

# Few-sample covariance fits in high dimension are singular; fall back to a
# diagonal estimate beyond this width.
FULL_COV_MAX_DIM = 64


@dataclass(frozen=True)
class ScorerSpec:
    """Configuration of an anomaly scorer.

    kind:      'knn' (mean distance to the k nearest training vectors),
               'centroid' (squared L2 distance to the training mean), or
               'gaussian' (squared Mahalanobis distance).
    k:         neighbor count for knn; clipped to the training size at fit time.
    distance:  'l1' or 'l2', knn only.
    cov_floor: ridge added to the gaussian covariance diagonal.
    """

    kind: str = "knn"
    k: int = 2
    distance: str = "l1"
    cov_floor: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("knn", "centroid", "gaussian"):
            raise ValidationError(f"unknown scorer kind {self.kind!r}")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.distance not in ("l1", "l2"):
            raise ValidationError(f"unknown distance {self.distance!r}")
        if self.cov_floor <= 0:
            raise ValidationError("cov_floor must be > 0")


class FittedScorer:
    """Immutable fitted scorer; scoring is pure and thread-safe."""

    def __init__(self, spec: ScorerSpec, dim: int, *, references=None, center=None,
                 mean=None, cov_diag=None, cov_chol=None):
        self.spec = spec
        self.dim = dim
        self.references = references
        self.center = center
        self.mean = mean
        self.cov_diag = cov_diag
        self.cov_chol = cov_chol

    def score(self, x) -> float:
        """Anomaly score of a single D-dimensional probe."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValidationError(f"expected shape ({self.dim},), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValidationError("probe contains non-finite values")
        return float(self.score_batch_vectors(x[None, :])[0])

    def score_batch_vectors(self, probes: np.ndarray) -> np.ndarray:
        """Scores for a V x D probe matrix; row order preserved."""
        probes = np.asarray(probes, dtype=np.float64)
        if probes.ndim != 2 or probes.shape[1] != self.dim:
            raise ValidationError(
                f"expected probes of dimension {self.dim}, got shape {probes.shape}"
            )
        if self.spec.kind == "knn":
            metric = "cityblock" if self.spec.distance == "l1" else "euclidean"
            dists = cdist(probes, self.references, metric=metric)
            k = min(self.spec.k, self.references.shape[0])
            nearest = np.partition(dists, k - 1, axis=1)[:, :k]
            return nearest.mean(axis=1)
        if self.spec.kind == "centroid":
            diff = probes - self.center
            return np.einsum("ij,ij->i", diff, diff)
        # gaussian: squared Mahalanobis distance
        diff = probes - self.mean
        if self.cov_diag is not None:
            return np.einsum("ij,ij->i", diff / self.cov_diag, diff)
        sol = np.linalg.solve(self.cov_chol, diff.T)
        return np.einsum("ij,ij->j", sol, sol)


def fit_scorer(spec: ScorerSpec, train: EmbeddingDataset) -> FittedScorer:
    """Fit a scorer on the training dataset (N >= 1 is always legal)."""
    vectors = train.vectors
    n, d = vectors.shape
    if spec.kind == "knn":
        return FittedScorer(spec, d, references=vectors.copy())
    if spec.kind == "centroid":
        return FittedScorer(spec, d, center=vectors.mean(axis=0))
    mean = vectors.mean(axis=0)
    diff = vectors - mean
    if d > FULL_COV_MAX_DIM:
        cov_diag = np.einsum("ij,ij->j", diff, diff) / n + spec.cov_floor
        return FittedScorer(spec, d, mean=mean, cov_diag=cov_diag)
    cov = diff.T @ diff / n + spec.cov_floor * np.eye(d)
    return FittedScorer(spec, d, mean=mean, cov_chol=np.linalg.cholesky(cov))


def score(scorer: FittedScorer, x) -> float:
    return scorer.score(x)


def score_batch(scorer: FittedScorer, ds: EmbeddingDataset) -> np.ndarray:
    """Elementwise equal to score() on each row of ds, order preserved."""
    return scorer.score_batch_vectors(ds.vectors)
