"""Synthetic long-tail embedding datasets.

The in-distribution is a mixture of tight modes where a small fraction of
samples per mode is drawn with inflated variance (the "tail"). OOD samples
sit at a fixed offset from a mode center, between the core radius and the
tail radius, so tail ID samples overlap the OOD region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DatasetSplit, EmbeddingDataset, split_dataset
from .errors import ConfigurationError


@dataclass(frozen=True)
class LongTailConfig:
    dims: int = 8
    modes: int = 3
    per_mode: int = 150
    mode_spread: float = 0.25
    core_sigma: float = 1.0
    tail_fraction: float = 0.08
    tail_sigma_mult: float = 6.0
    ood_count: int = 400
    ood_offset: float = 4.0
    val_fraction: float = 0.25
    test_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.dims < 1 or self.modes < 1 or self.per_mode < 1:
            raise ConfigurationError("dims, modes and per_mode must be >= 1")
        if not 0.0 <= self.tail_fraction < 1.0:
            raise ConfigurationError("tail_fraction must lie in [0, 1)")
        if self.tail_sigma_mult <= 1.0:
            raise ConfigurationError("tail_sigma_mult must be > 1")
        if self.mode_spread <= 0 or self.core_sigma <= 0 or self.ood_offset <= 0:
            raise ConfigurationError("spread, sigma and offset must be positive")
        if self.ood_count < 1:
            raise ConfigurationError(
                "ood_count must be >= 1 (val/test need both classes)"
            )


# Committed reference instance; all acceptance runs use this configuration.
LONGTAIL_REF = LongTailConfig(
    dims=8,
    modes=3,
    per_mode=150,
    mode_spread=0.25,
    core_sigma=1.0,
    tail_fraction=0.08,
    tail_sigma_mult=6.0,
    ood_count=400,
    ood_offset=4.0,  # 4 * core_sigma
    val_fraction=0.25,
    test_fraction=0.25,
    seed=7,
)

PRESETS = {"longtail-ref": LONGTAIL_REF}


def generate_longtail(cfg: LongTailConfig) -> DatasetSplit:
    """Deterministic long-tail ID/OOD dataset split per the config seed."""
    rng = np.random.default_rng(cfg.seed)
    centers = rng.normal(0.0, cfg.mode_spread, size=(cfg.modes, cfg.dims))

    vectors = []
    labels = []
    ids = []
    for mode in range(cfg.modes):
        n_tail = int(round(cfg.tail_fraction * cfg.per_mode))
        n_core = cfg.per_mode - n_tail
        core = rng.normal(0.0, cfg.core_sigma, size=(n_core, cfg.dims))
        tail = rng.normal(
            0.0, cfg.tail_sigma_mult * cfg.core_sigma, size=(n_tail, cfg.dims)
        )
        block = np.vstack([core, tail]) + centers[mode]
        vectors.append(block)
        labels.extend([-1] * cfg.per_mode)
        ids.extend(f"id-m{mode}-{i:04d}" for i in range(cfg.per_mode))

    # OOD: unit-direction offset from a random mode center, core-sized spread
    ood = np.empty((cfg.ood_count, cfg.dims))
    for i in range(cfg.ood_count):
        mode = int(rng.integers(cfg.modes))
        u = rng.normal(size=cfg.dims)
        u /= np.linalg.norm(u)
        ood[i] = centers[mode] + cfg.ood_offset * u + rng.normal(
            0.0, cfg.core_sigma, size=cfg.dims
        )
    vectors.append(ood)
    labels.extend([1] * cfg.ood_count)
    ids.extend(f"ood-{i:04d}" for i in range(cfg.ood_count))

    # match the on-disk float32 representation so fixtures round-trip exactly
    all_vectors = np.vstack(vectors).astype(np.float32).astype(np.float64)
    ds = EmbeddingDataset(
        vectors=all_vectors, labels=np.asarray(labels), ids=tuple(ids)
    )
    return split_dataset(ds, cfg.val_fraction, cfg.test_fraction, seed=cfg.seed)
