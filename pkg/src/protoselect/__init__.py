"""Prototypical training-subset selection for feature-space anomaly detection."""

__version__ = "0.1.0"

from .dataset import (
    DatasetSplit,
    EmbeddingDataset,
    read_csv_embeddings,
    read_embeddings,
    split_dataset,
    write_embeddings,
)
from .errors import (
    ConfigurationError,
    FormatError,
    ProtoselectError,
    ValidationError,
)
from .evaluation import (
    HistogramReport,
    SweepConfig,
    SweepReport,
    auroc,
    distance_histogram,
    evaluate_subset,
    run_sweep,
)
from .gmm import GmmConfig, GmmModel, fit_gmm, kmeanspp_init, responsibilities
from .scorers import FittedScorer, ScorerSpec, fit_scorer, score, score_batch
from .selection import (
    EvoConfig,
    ScoreMatrix,
    SubsetSelection,
    compute_score_matrix,
    fitness,
    per_sample_errors,
    select_evolutionary,
    select_gmm_coreset,
    select_greedy,
    select_minimax_coverage,
    select_random,
)
from .synthgen import LONGTAIL_REF, LongTailConfig, generate_longtail

__all__ = [
    "ConfigurationError",
    "DatasetSplit",
    "EmbeddingDataset",
    "EvoConfig",
    "FittedScorer",
    "FormatError",
    "GmmConfig",
    "GmmModel",
    "HistogramReport",
    "LONGTAIL_REF",
    "LongTailConfig",
    "ProtoselectError",
    "ScoreMatrix",
    "ScorerSpec",
    "SubsetSelection",
    "SweepConfig",
    "SweepReport",
    "ValidationError",
    "auroc",
    "compute_score_matrix",
    "distance_histogram",
    "evaluate_subset",
    "fit_gmm",
    "fit_scorer",
    "fitness",
    "generate_longtail",
    "kmeanspp_init",
    "per_sample_errors",
    "read_csv_embeddings",
    "read_embeddings",
    "responsibilities",
    "run_sweep",
    "score",
    "score_batch",
    "select_evolutionary",
    "select_gmm_coreset",
    "select_greedy",
    "select_minimax_coverage",
    "select_random",
    "split_dataset",
    "write_embeddings",
]
