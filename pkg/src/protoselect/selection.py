"""Subset-selection strategies over embedding training sets.

Five strategies: uniform random, greedy ranking of per-sample validation
errors, an evolutionary search over the single-sample score matrix, GMM
centroid matching (fully unsupervised), and greedy minimax k-center coverage.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .dataset import EmbeddingDataset
from .errors import ConfigurationError, ValidationError
from .gmm import GmmConfig, fit_gmm
from .scorers import ScorerSpec, fit_scorer

STRATEGIES = ("random", "greedy", "evolutionary", "gmm_coreset", "minimax_coverage")


@dataclass(frozen=True)
class SubsetSelection:
    """Result of a selection run: which training rows, how, and how well."""

    indices: tuple[int, ...]
    strategy: str
    seed: int
    params: dict[str, Any] = field(default_factory=dict)
    achieved_objective: float | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if len(set(self.indices)) != len(self.indices):
            raise ValidationError("selected indices must be distinct")


@dataclass(frozen=True)
class ScoreMatrix:
    """values[i, k] = score of val sample k under a scorer fitted on train row i."""

    values: np.ndarray
    val_labels: np.ndarray
    scorer_spec: ScorerSpec

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.val_labels, dtype=np.int8)
        if values.ndim != 2:
            raise ValidationError("score matrix must be 2-D")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError("scores must be finite and non-negative")
        if labels.shape != (values.shape[1],):
            raise ValidationError("val_labels length must match matrix columns")
        if not (np.any(labels == -1) and np.any(labels == 1)):
            raise ValidationError("val_labels must contain both classes")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "val_labels", labels)

    @property
    def n_train(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class EvoConfig:
    population: int = 1000
    generations: int = 500
    crossover_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.population < 2 or self.population % 2 != 0:
            raise ConfigurationError("population must be even and >= 2")
        if self.generations < 1:
            raise ConfigurationError("generations must be >= 1")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ConfigurationError("crossover_prob must lie in [0, 1]")


def compute_score_matrix(
    train: EmbeddingDataset,
    val: EmbeddingDataset,
    spec: ScorerSpec,
    threads: int = 1,
) -> ScoreMatrix:
    """Single-sample score matrix: row i is the scorer fitted on train row i.

    Rows are independent pure work; `threads` only affects wall time, never
    the result (rows are reduced in train order).
    """
    if val.labels is None:
        raise ValidationError("validation set must be labeled")
    if train.dim != val.dim:
        raise ValidationError(f"dimension mismatch: train D={train.dim}, val D={val.dim}")

    def row(i: int) -> np.ndarray:
        scorer = fit_scorer(spec, train.take([i]))
        return scorer.score_batch_vectors(val.vectors)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(train.n)))
    else:
        rows = [row(i) for i in range(train.n)]
    return ScoreMatrix(values=np.vstack(rows), val_labels=val.labels, scorer_spec=spec)


def select_random(n: int, m: int, seed: int) -> SubsetSelection:
    """Uniform sample of M distinct indices without replacement."""
    if m > n:
        raise ConfigurationError(f"M={m} exceeds N={n}")
    rng = np.random.default_rng(seed)
    indices = rng.choice(n, size=m, replace=False)
    return SubsetSelection(
        indices=tuple(int(i) for i in np.sort(indices)),
        strategy="random",
        seed=seed,
    )


def per_sample_errors(s: ScoreMatrix) -> np.ndarray:
    """1 - AUROC of each single-sample scorer row against the val labels."""
    from .evaluation import auroc  # local import: evaluation imports this module

    return np.array([1.0 - auroc(row, s.val_labels) for row in s.values])


def select_greedy(errors: np.ndarray, m: int) -> SubsetSelection:
    """The M indices with smallest per-sample error, ties broken by lower index.

    The summed single-sample objective is separable, so the exhaustive argmin
    over all C(N, M) subsets reduces to a top-M ranking.
    """
    errors = np.asarray(errors, dtype=np.float64)
    if errors.ndim != 1:
        raise ValidationError("errors must be a vector")
    if not np.all(np.isfinite(errors)):
        raise ValidationError("errors must be finite")
    if m > errors.shape[0]:
        raise ConfigurationError(f"M={m} exceeds N={errors.shape[0]}")
    order = np.argsort(errors, kind="stable")
    chosen = np.sort(order[:m])
    return SubsetSelection(
        indices=tuple(int(i) for i in chosen),
        strategy="greedy",
        seed=0,
        achieved_objective=float(errors[chosen].sum()),
    )


def fitness(subset, s: ScoreMatrix, nearest_prototype: bool = False) -> float:
    """Evolutionary objective: sum over val columns of max_i y_k * s(x_i, x_k).

    With nearest_prototype=True, each column instead contributes
    y_k * min_i s(x_i, x_k), the score a nearest-prototype model would assign.
    """
    idx = np.asarray(list(subset), dtype=np.intp)
    if idx.size == 0:
        raise ValidationError("subset must be non-empty")
    if len(set(idx.tolist())) != idx.size:
        raise ValidationError("subset indices must be distinct")
    rows = s.values[idx]
    y = s.val_labels.astype(np.float64)
    if nearest_prototype:
        return float((y * rows.min(axis=0)).sum())
    return float((y * rows).max(axis=0).sum())


def _rank_key(fits, pop):
    """Sort descending by fitness, ties by lexicographic index comparison."""
    return sorted(range(len(pop)), key=lambda p: (-fits[p], pop[p]))


def select_evolutionary(
    s: ScoreMatrix,
    m: int,
    cfg: EvoConfig,
    nearest_prototype: bool = False,
    record_trace: bool = False,
) -> SubsetSelection:
    """Evolutionary subset search with elitism.

    Each generation keeps the fittest half unchanged and derives the other
    half by crossover (union two survivors, subsample M) or single-index
    mutation. Best-ever fitness is non-decreasing by construction.
    """
    n = s.n_train
    if m > n:
        raise ConfigurationError(f"M={m} exceeds N={n}")
    params = {
        "population": cfg.population,
        "generations": cfg.generations,
        "crossover_prob": cfg.crossover_prob,
        "nearest_prototype": nearest_prototype,
    }
    if m == n:
        full = tuple(range(n))
        return SubsetSelection(
            indices=full,
            strategy="evolutionary",
            seed=cfg.seed,
            params=params,
            achieved_objective=fitness(full, s, nearest_prototype),
        )

    rng = np.random.default_rng(cfg.seed)
    all_indices = np.arange(n)
    pop = [
        tuple(sorted(rng.choice(n, size=m, replace=False).tolist()))
        for _ in range(cfg.population)
    ]
    best_ind: tuple[int, ...] | None = None
    best_fit = -np.inf
    trace: list[float] = []

    # validation-free fitness for the inner loop
    y = s.val_labels.astype(np.float64)
    signed = y * s.values
    if nearest_prototype:
        raw = s.values

        def fit_of(ind):
            return float((y * raw[list(ind)].min(axis=0)).sum())
    else:

        def fit_of(ind):
            return float(signed[list(ind)].max(axis=0).sum())

    for _ in range(cfg.generations):
        fits = [fit_of(ind) for ind in pop]
        for ind, f in zip(pop, fits):
            if f > best_fit or (f == best_fit and (best_ind is None or ind < best_ind)):
                best_fit, best_ind = f, ind
        if record_trace:
            trace.append(best_fit)
        survivors = [pop[p] for p in _rank_key(fits, pop)[: cfg.population // 2]]

        offspring = []
        for i, parent in enumerate(survivors):
            do_cross = len(survivors) > 1 and rng.random() < cfg.crossover_prob
            if do_cross:
                j = int(rng.integers(len(survivors) - 1))
                if j >= i:
                    j += 1
                union = np.array(sorted(set(parent) | set(survivors[j])))
                child = rng.choice(union, size=m, replace=False)
                offspring.append(tuple(sorted(child.tolist())))
            else:
                members = list(parent)
                out = int(rng.integers(m))
                complement = np.setdiff1d(all_indices, members, assume_unique=False)
                members[out] = int(complement[rng.integers(complement.size)])
                offspring.append(tuple(sorted(members)))
        pop = survivors + offspring

    # final population may contain an improvement from the last generation
    fits = [fit_of(ind) for ind in pop]
    for ind, f in zip(pop, fits):
        if f > best_fit or (f == best_fit and ind < best_ind):
            best_fit, best_ind = f, ind
    if record_trace:
        trace.append(best_fit)
        params["best_fitness_trace"] = trace

    return SubsetSelection(
        indices=best_ind,
        strategy="evolutionary",
        seed=cfg.seed,
        params=params,
        achieved_objective=best_fit,
    )


def select_gmm_coreset(
    train: EmbeddingDataset, m: int, cfg: GmmConfig
) -> SubsetSelection:
    """Unsupervised core-set: nearest training row to each GMM centroid.

    Centroids are visited in descending mixture-weight order; each claims the
    closest not-yet-selected row (L2, ties by lower index), so the result has
    exactly M distinct indices even under centroid collisions.
    """
    if m > train.n:
        raise ConfigurationError(f"M={m} exceeds N={train.n}")
    if cfg.components != m:
        raise ConfigurationError(
            f"GmmConfig.components={cfg.components} must equal M={m}"
        )
    model = fit_gmm(train.vectors, cfg)
    # descending weight, ties by component index
    comp_order = sorted(range(m), key=lambda j: (-model.weights[j], j))
    selected: list[int] = []
    taken = np.zeros(train.n, dtype=bool)
    for j in comp_order:
        diff = train.vectors - model.means[j]
        dist = np.einsum("ij,ij->i", diff, diff)
        dist[taken] = np.inf
        pick = int(np.argmin(dist))
        taken[pick] = True
        selected.append(pick)
    return SubsetSelection(
        indices=tuple(selected),
        strategy="gmm_coreset",
        seed=cfg.seed,
        params={"components": m, "restarts": cfg.restarts, "covariance": model.covariance_type},
    )


def coverage_radius(vectors: np.ndarray, subset) -> float:
    """max over rows of the L2 distance to the nearest selected row."""
    idx = np.asarray(list(subset), dtype=np.intp)
    dists = np.full(vectors.shape[0], np.inf)
    for i in idx:
        diff = vectors - vectors[i]
        np.minimum(dists, np.sqrt(np.einsum("ij,ij->i", diff, diff)), out=dists)
    return float(dists.max())


def select_minimax_coverage(
    train: EmbeddingDataset, m: int, seed: int = 0
) -> SubsetSelection:
    """Greedy k-center (farthest-point) selection, a 2-approximation.

    Starts from the row nearest the dataset mean; the seed is accepted for
    interface symmetry but the start point is deterministic.
    """
    if m > train.n:
        raise ConfigurationError(f"M={m} exceeds N={train.n}")
    vectors = train.vectors
    mean = vectors.mean(axis=0)
    diff = vectors - mean
    start = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
    selected = [start]
    diff = vectors - vectors[start]
    min_dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    while len(selected) < m:
        pick = int(np.argmax(min_dist))
        selected.append(pick)
        diff = vectors - vectors[pick]
        np.minimum(min_dist, np.sqrt(np.einsum("ij,ij->i", diff, diff)), out=min_dist)
    return SubsetSelection(
        indices=tuple(selected),
        strategy="minimax_coverage",
        seed=seed,
        achieved_objective=float(min_dist.max()),
    )
