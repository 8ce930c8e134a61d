"""AUROC, subset evaluation, subset-size sweeps, and distance histograms."""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.stats import rankdata

from .dataset import DatasetSplit, EmbeddingDataset, serialize_embeddings
from .errors import ConfigurationError, ValidationError
from .gmm import GmmConfig
from .scorers import ScorerSpec, fit_scorer, score_batch
from .selection import (
    EvoConfig,
    ScoreMatrix,
    compute_score_matrix,
    per_sample_errors,
    select_evolutionary,
    select_gmm_coreset,
    select_greedy,
    select_minimax_coverage,
    select_random,
)


def auroc(scores, labels) -> float:
    """Area under the ROC curve with the Mann-Whitney tie convention.

    Computed via rank-sum with average ranks, O(V log V). Labels are +-1 with
    +1 (OOD) as the positive class; higher scores mean more anomalous.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValidationError("scores and labels must be equal-length vectors")
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores must be finite")
    pos = labels == 1
    neg = labels == -1
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    if n_pos + n_neg != labels.size:
        raise ValidationError("labels must all be -1 or +1")
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("both classes must be present")
    ranks = rankdata(scores, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate_subset(
    train: EmbeddingDataset,
    subset,
    eval_set: EmbeddingDataset,
    spec: ScorerSpec,
) -> float:
    """Test AUROC of a scorer fitted on the given training rows."""
    idx = np.asarray(list(subset), dtype=np.intp)
    if idx.size == 0:
        raise ValidationError("subset must be non-empty")
    if eval_set.labels is None:
        raise ValidationError("eval_set must be labeled")
    scorer = fit_scorer(spec, train.take(idx))
    return auroc(score_batch(scorer, eval_set), eval_set.labels)


def dataset_fingerprint(ds: EmbeddingDataset) -> str:
    """SHA-256 of the dataset's canonical EMB1 byte encoding."""
    return hashlib.sha256(serialize_embeddings(ds)).hexdigest()


@dataclass(frozen=True)
class SweepConfig:
    subset_sizes: tuple[int, ...] = (1, 5, 10, 25)
    random_repeats: int = 10
    strategies: tuple[str, ...] = (
        "random",
        "greedy",
        "evolutionary",
        "gmm_coreset",
        "minimax_coverage",
    )
    scorer: ScorerSpec = field(default_factory=ScorerSpec)
    seed: int = 0
    evo_population: int = 1000
    evo_generations: int = 500
    crossover_prob: float = 0.5
    gmm_restarts: int = 5
    threads: int = 1

    def __post_init__(self):
        if not self.subset_sizes or any(s < 1 for s in self.subset_sizes):
            raise ConfigurationError("subset sizes must be positive")
        if self.random_repeats < 1:
            raise ConfigurationError("random_repeats must be >= 1")
        for strat in self.strategies:
            if strat not in ("random", "greedy", "evolutionary", "gmm_coreset",
                             "minimax_coverage"):
                raise ConfigurationError(f"unknown strategy {strat!r}")


def _cell_seed(seed: int, strategy: str, size: int, repeat: int) -> int:
    """Independent per-cell seed derived from (seed, strategy, size, repeat)."""
    strat_id = ("random", "greedy", "evolutionary", "gmm_coreset",
                "minimax_coverage").index(strategy)
    ss = np.random.SeedSequence([seed, strat_id, size, repeat])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SweepReport:
    """Per-(strategy, size) AUROC statistics plus the full-training baseline."""

    cells: dict
    full_training_auroc: float
    metadata: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "cells": self.cells,
                "full_training_auroc": self.full_training_auroc,
                "metadata": self.metadata,
            },
            sort_keys=True,
            indent=2,
        )

    def to_csv(self) -> str:
        """One row per (strategy, size) plus a full-training row."""
        out = io.StringIO()
        out.write("strategy,size,mean_auroc,std_auroc,n_runs\n")
        for strategy in self.metadata["strategies"]:
            for size in self.metadata["subset_sizes"]:
                cell = self.cells[strategy][str(size)]
                std = "" if cell["std"] is None else repr(cell["std"])
                out.write(
                    f"{strategy},{size},{cell['mean']!r},{std},{len(cell['runs'])}\n"
                )
        out.write(
            f"full_training,{self.metadata['n_train']},"
            f"{self.full_training_auroc!r},,1\n"
        )
        return out.getvalue()


def _run_cell(split, cfg, strategy, size, score_matrix):
    """All runs for one (strategy, size) cell; list of {seed, auroc, indices}."""
    train, test = split.train, split.test
    runs = []
    if strategy == "random":
        for rep in range(cfg.random_repeats):
            cell_seed = _cell_seed(cfg.seed, strategy, size, rep)
            sel = select_random(train.n, size, cell_seed)
            runs.append((cell_seed, sel.indices))
    elif strategy == "greedy":
        errors = per_sample_errors(score_matrix)
        sel = select_greedy(errors, size)
        runs.append((cfg.seed, sel.indices))
    elif strategy == "evolutionary":
        cell_seed = _cell_seed(cfg.seed, strategy, size, 0)
        evo = EvoConfig(
            population=cfg.evo_population,
            generations=cfg.evo_generations,
            crossover_prob=cfg.crossover_prob,
            seed=cell_seed,
        )
        sel = select_evolutionary(score_matrix, size, evo)
        runs.append((cell_seed, sel.indices))
    elif strategy == "gmm_coreset":
        cell_seed = _cell_seed(cfg.seed, strategy, size, 0)
        gmm_cfg = GmmConfig(components=size, restarts=cfg.gmm_restarts, seed=cell_seed)
        sel = select_gmm_coreset(train, size, gmm_cfg)
        runs.append((cell_seed, sel.indices))
    else:  # minimax_coverage
        cell_seed = _cell_seed(cfg.seed, strategy, size, 0)
        sel = select_minimax_coverage(train, size, cell_seed)
        runs.append((cell_seed, sel.indices))

    return [
        {
            "seed": seed,
            "auroc": evaluate_subset(train, indices, test, cfg.scorer),
            "indices": list(int(i) for i in indices),
        }
        for seed, indices in runs
    ]


def run_sweep(split: DatasetSplit, cfg: SweepConfig) -> SweepReport:
    """Table-style sweep: select per strategy and size, report test AUROC.

    Random runs `random_repeats` seeds (mean +- std); greedy and evolutionary
    select against the validation score matrix; gmm_coreset and
    minimax_coverage use the train embeddings only. Deterministic per seed.
    """
    train = split.train
    if max(cfg.subset_sizes) > train.n:
        raise ConfigurationError(
            f"max subset size {max(cfg.subset_sizes)} exceeds N_train={train.n}"
        )
    needs_matrix = any(s in cfg.strategies for s in ("greedy", "evolutionary"))
    score_matrix = None
    if needs_matrix:
        score_matrix = compute_score_matrix(
            train, split.val, cfg.scorer, threads=cfg.threads
        )

    cells: dict[str, dict[str, Any]] = {}
    for strategy in cfg.strategies:
        cells[strategy] = {}
        for size in cfg.subset_sizes:
            runs = _run_cell(split, cfg, strategy, size, score_matrix)
            values = [r["auroc"] for r in runs]
            std = float(np.std(values)) if (strategy == "random" and len(values) > 1) else None
            cells[strategy][str(size)] = {
                "mean": float(np.mean(values)),
                "std": std,
                "runs": runs,
            }

    full = evaluate_subset(train, range(train.n), split.test, cfg.scorer)
    metadata = {
        "seed": cfg.seed,
        "subset_sizes": list(cfg.subset_sizes),
        "random_repeats": cfg.random_repeats,
        "strategies": list(cfg.strategies),
        "scorer": {
            "kind": cfg.scorer.kind,
            "k": cfg.scorer.k,
            "distance": cfg.scorer.distance,
            "cov_floor": cfg.scorer.cov_floor,
        },
        "n_train": train.n,
        "fingerprints": {
            "train": dataset_fingerprint(split.train),
            "val": dataset_fingerprint(split.val),
            "test": dataset_fingerprint(split.test),
        },
    }
    return SweepReport(cells=cells, full_training_auroc=full, metadata=metadata)


@dataclass(frozen=True)
class HistogramReport:
    """Distance-to-center histogram colored by single-sample AUROC."""

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    bin_mean_auroc: tuple[float | None, ...]
    per_sample: tuple[tuple[float, float], ...]  # (distance, auroc) per train row

    def to_json(self) -> str:
        return json.dumps(
            {
                "bin_edges": list(self.bin_edges),
                "counts": list(self.counts),
                "bin_mean_auroc": list(self.bin_mean_auroc),
                "per_sample": [list(p) for p in self.per_sample],
            },
            sort_keys=True,
            indent=2,
        )


def distance_histogram(
    train: EmbeddingDataset,
    s: ScoreMatrix,
    spec: ScorerSpec,
    bins: int,
) -> HistogramReport:
    """Histogram of each training row's distance to the training center.

    Bins are equal-width over [min, max]; each bin also carries the mean
    single-sample AUROC (1 - per-sample error) of the rows it contains.
    """
    if bins < 1:
        raise ConfigurationError("bins must be >= 1")
    if s.n_train != train.n:
        raise ValidationError("score matrix rows must correspond to train rows")
    center = train.vectors.mean(axis=0)
    diff = train.vectors - center
    distances = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    aurocs = 1.0 - per_sample_errors(s)

    lo, hi = float(distances.min()), float(distances.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(distances, bins=edges)
    which = np.clip(np.digitize(distances, edges) - 1, 0, bins - 1)
    bin_means: list[float | None] = []
    for b in range(bins):
        mask = which == b
        bin_means.append(float(aurocs[mask].mean()) if mask.any() else None)

    return HistogramReport(
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
        bin_mean_auroc=tuple(bin_means),
        per_sample=tuple(
            (float(d), float(a)) for d, a in zip(distances, aurocs)
        ),
    )
