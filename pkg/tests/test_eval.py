import json

import numpy as np
import pytest

from protoselect import (
    ConfigurationError,
    EmbeddingDataset,
    DatasetSplit,
    ScorerSpec,
    SweepConfig,
    ValidationError,
    auroc,
    compute_score_matrix,
    distance_histogram,
    evaluate_subset,
    run_sweep,
)

from oracles import auroc_pairwise


class TestAuroc:
    def test_perfect_ranking(self):
        assert auroc([1, 2, 3, 4], [-1, -1, 1, 1]) == 1.0

    def test_reversed_ranking(self):
        assert auroc([4, 3, 2, 1], [-1, -1, 1, 1]) == 0.0

    def test_all_ties(self):
        assert auroc([2, 2, 2, 2], [-1, 1, -1, 1]) == 0.5

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            v = int(rng.integers(3, 30))
            scores = rng.choice(rng.uniform(size=max(2, v // 2)), size=v)  # inject ties
            labels = np.concatenate([[-1, 1], rng.choice([-1, 1], size=v - 2)])
            assert auroc(scores, labels) == pytest.approx(
                auroc_pairwise(scores, labels), abs=1e-12
            )

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        scores = rng.uniform(size=30)
        labels = np.concatenate([[-1, 1], rng.choice([-1, 1], size=28)])
        base = auroc(scores, labels)
        assert auroc(3.5 * scores + 2.0, labels) == pytest.approx(base, abs=1e-12)
        assert auroc(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)

    def test_negation_complement_without_ties(self):
        rng = np.random.default_rng(2)
        scores = rng.permutation(40).astype(float)  # distinct
        labels = np.concatenate([[-1, 1], rng.choice([-1, 1], size=38)])
        assert auroc(scores, labels) + auroc(-scores, labels) == pytest.approx(1.0)

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            auroc([1.0, 2.0], [-1, -1])

    def test_bad_labels_rejected(self):
        with pytest.raises(ValidationError):
            auroc([1.0, 2.0], [0, 1])


def small_split(seed=0):
    rng = np.random.default_rng(seed)
    train = EmbeddingDataset(vectors=rng.normal(size=(20, 3)))
    def labeled(n):
        vecs = np.vstack([rng.normal(size=(n, 3)), rng.normal(4, 1, size=(n, 3))])
        return EmbeddingDataset(vectors=vecs, labels=[-1] * n + [1] * n)
    return DatasetSplit(train=train, val=labeled(10), test=labeled(10))


class TestEvaluateSubset:
    def test_order_invariant(self):
        split = small_split()
        spec = ScorerSpec()
        a = evaluate_subset(split.train, [1, 5, 9], split.test, spec)
        b = evaluate_subset(split.train, [9, 1, 5], split.test, spec)
        assert a == b

    def test_singleton_matches_score_matrix_row(self):
        split = small_split(3)
        spec = ScorerSpec()
        s = compute_score_matrix(split.train, split.val, spec)
        for i in (0, 7, 19):
            direct = evaluate_subset(split.train, [i], split.val, spec)
            assert direct == pytest.approx(auroc(s.values[i], s.val_labels))

    def test_unlabeled_eval_rejected(self):
        split = small_split()
        unlabeled = EmbeddingDataset(vectors=split.test.vectors)
        with pytest.raises(ValidationError):
            evaluate_subset(split.train, [0], unlabeled, ScorerSpec())


class TestSweep:
    def cfg(self, **kw):
        base = dict(
            subset_sizes=(2, 5),
            random_repeats=3,
            strategies=("random", "greedy", "gmm_coreset", "minimax_coverage"),
            scorer=ScorerSpec(),
            seed=11,
            evo_population=10,
            evo_generations=5,
        )
        base.update(kw)
        return SweepConfig(**base)

    def test_m_equals_n_collapse(self):
        split = small_split(4)
        cfg = self.cfg(subset_sizes=(20,), strategies=("random",), random_repeats=3)
        report = run_sweep(split, cfg)
        cell = report.cells["random"]["20"]
        assert cell["std"] == 0.0
        assert all(r["auroc"] == report.full_training_auroc for r in cell["runs"])

    def test_structure(self):
        split = small_split(5)
        report = run_sweep(split, self.cfg())
        assert set(report.cells) == {"random", "greedy", "gmm_coreset", "minimax_coverage"}
        for strat, sizes in report.cells.items():
            assert set(sizes) == {"2", "5"}
            for cell in sizes.values():
                assert 0.0 <= cell["mean"] <= 1.0
                expected_runs = 3 if strat == "random" else 1
                assert len(cell["runs"]) == expected_runs
                assert (cell["std"] is not None) == (strat == "random")

    def test_deterministic_serialization(self):
        split = small_split(6)
        a = run_sweep(split, self.cfg()).to_json()
        b = run_sweep(split, self.cfg()).to_json()
        assert a == b

    def test_csv_row_count(self):
        split = small_split(7)
        report = run_sweep(split, self.cfg())
        lines = report.to_csv().strip().splitlines()
        assert len(lines) == 1 + 4 * 2 + 1  # header + strategies*sizes + full row
        assert lines[-1].startswith("full_training,")

    def test_size_exceeds_train(self):
        split = small_split(8)
        with pytest.raises(ConfigurationError):
            run_sweep(split, self.cfg(subset_sizes=(50,)))

    def test_includes_evolutionary(self):
        split = small_split(9)
        report = run_sweep(split, self.cfg(strategies=("evolutionary",)))
        assert set(report.cells["evolutionary"]) == {"2", "5"}


class TestHistogram:
    def test_degenerate_identical_rows(self):
        train = EmbeddingDataset(vectors=np.ones((5, 2)))
        val = EmbeddingDataset(
            vectors=np.vstack([np.ones((3, 2)), np.full((3, 2), 9.0)]),
            labels=[-1, -1, -1, 1, 1, 1],
        )
        s = compute_score_matrix(train, val, ScorerSpec())
        report = distance_histogram(train, s, ScorerSpec(), bins=4)
        occupied = [c for c in report.counts if c > 0]
        assert occupied == [5]
        assert all(d == 0.0 for d, _ in report.per_sample)

    def test_counts_sum_to_n(self):
        split = small_split(10)
        s = compute_score_matrix(split.train, split.val, ScorerSpec())
        report = distance_histogram(split.train, s, ScorerSpec(), bins=7)
        assert sum(report.counts) == split.train.n
        assert len(report.bin_edges) == 8
        assert all(a < b for a, b in zip(report.bin_edges, report.bin_edges[1:]))

    def test_json_serializes(self):
        split = small_split(11)
        s = compute_score_matrix(split.train, split.val, ScorerSpec())
        report = distance_histogram(split.train, s, ScorerSpec(), bins=3)
        payload = json.loads(report.to_json())
        assert len(payload["counts"]) == 3

    def test_bad_bins(self):
        split = small_split(12)
        s = compute_score_matrix(split.train, split.val, ScorerSpec())
        with pytest.raises(ConfigurationError):
            distance_histogram(split.train, s, ScorerSpec(), bins=0)
