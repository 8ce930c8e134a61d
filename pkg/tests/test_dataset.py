import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protoselect import (
    ConfigurationError,
    EmbeddingDataset,
    FormatError,
    ValidationError,
    read_embeddings,
    split_dataset,
    write_embeddings,
)
from protoselect.dataset import (
    deserialize_embeddings,
    read_csv_embeddings,
    serialize_embeddings,
)


def make_dataset(n=4, d=3, labels=False, ids=False, seed=0):
    rng = np.random.default_rng(seed)
    vectors = rng.normal(size=(n, d)).astype(np.float32).astype(np.float64)
    return EmbeddingDataset(
        vectors=vectors,
        labels=rng.choice([-1, 1], size=n) if labels else None,
        ids=tuple(f"s{i}" for i in range(n)) if ids else None,
    )


class TestInvariants:
    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            EmbeddingDataset(vectors=np.array([[np.nan, 0.0]]))

    def test_rejects_inf(self):
        with pytest.raises(ValidationError):
            EmbeddingDataset(vectors=np.array([[np.inf, 0.0]]))

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            EmbeddingDataset(vectors=np.empty((0, 3)))

    def test_rejects_zero_label(self):
        with pytest.raises(ValidationError):
            EmbeddingDataset(vectors=np.zeros((2, 2)), labels=[0, 1])

    def test_rejects_label_length_mismatch(self):
        with pytest.raises(ValidationError):
            EmbeddingDataset(vectors=np.zeros((2, 2)), labels=[-1])

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ValidationError):
            EmbeddingDataset(vectors=np.zeros((2, 2)), ids=("a", "a"))


class TestFormat:
    def test_minimal_file_size(self, tmp_path):
        # 4 magic + 4 N + 4 D + 1 flags + 12 floats = 25 bytes
        ds = EmbeddingDataset(vectors=np.zeros((1, 3)))
        path = tmp_path / "a.emb"
        write_embeddings(path, ds)
        assert path.stat().st_size == 25

    def test_roundtrip(self, tmp_path):
        ds = make_dataset(10, 4, labels=True, ids=True)
        path = tmp_path / "a.emb"
        write_embeddings(path, ds)
        assert read_embeddings(path) == ds

    def test_write_is_pure(self):
        ds = make_dataset(5, 3, labels=True, ids=True)
        assert serialize_embeddings(ds) == serialize_embeddings(ds)

    def test_bad_magic(self):
        data = serialize_embeddings(make_dataset())
        with pytest.raises(FormatError, match="magic"):
            deserialize_embeddings(b"EMB2" + data[4:])

    def test_truncated_floats(self):
        # declare N=2 but supply one row only
        ds2 = make_dataset(2, 3)
        data = serialize_embeddings(ds2)
        with pytest.raises(FormatError, match="truncated"):
            deserialize_embeddings(data[: 13 + 3 * 4])

    def test_trailing_garbage(self):
        data = serialize_embeddings(make_dataset())
        with pytest.raises(FormatError, match="trailing"):
            deserialize_embeddings(data + b"\x00")

    def test_nan_payload_rejected(self):
        ds = make_dataset(1, 2)
        data = bytearray(serialize_embeddings(ds))
        data[13:17] = np.array([np.nan], dtype="<f4").tobytes()
        with pytest.raises(ValidationError):
            deserialize_embeddings(bytes(data))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError, match="nope.emb"):
            read_embeddings(tmp_path / "nope.emb")

    @settings(max_examples=50, deadline=None)
    @given(
        n=st.integers(1, 12),
        d=st.integers(1, 6),
        labels=st.booleans(),
        ids=st.booleans(),
        seed=st.integers(0, 2**31),
    )
    def test_roundtrip_property(self, n, d, labels, ids, seed):
        ds = make_dataset(n, d, labels=labels, ids=ids, seed=seed)
        assert deserialize_embeddings(serialize_embeddings(ds)) == ds


class TestSplit:
    def make_labeled(self, n_id, n_ood, seed=0):
        rng = np.random.default_rng(seed)
        vectors = rng.normal(size=(n_id + n_ood, 3))
        labels = np.array([-1] * n_id + [1] * n_ood)
        return EmbeddingDataset(vectors=vectors, labels=labels)

    def test_counts(self):
        ds = self.make_labeled(100, 40)
        split = split_dataset(ds, 0.25, 0.25, seed=1)
        assert split.train.n == 50
        assert np.sum(split.val.labels == -1) == 25
        assert np.sum(split.val.labels == 1) == 20
        assert np.sum(split.test.labels == -1) == 25
        assert np.sum(split.test.labels == 1) == 20

    def test_deterministic(self):
        ds = self.make_labeled(30, 10)
        a = split_dataset(ds, 0.25, 0.25, seed=9)
        b = split_dataset(ds, 0.25, 0.25, seed=9)
        assert a.train_indices == b.train_indices
        assert a.val_indices == b.val_indices
        assert a.test_indices == b.test_indices

    def test_partition(self):
        ds = self.make_labeled(37, 13, seed=3)
        split = split_dataset(ds, 0.3, 0.2, seed=2)
        all_idx = sorted(split.train_indices + split.val_indices + split.test_indices)
        assert all_idx == list(range(50))

    def test_no_ood_in_train(self):
        ds = self.make_labeled(40, 20, seed=5)
        split = split_dataset(ds, 0.25, 0.25, seed=0)
        assert np.all(split.train.labels == -1)

    def test_zero_ood_rejected(self):
        ds = self.make_labeled(20, 0)
        with pytest.raises(ConfigurationError):
            split_dataset(ds, 0.25, 0.25, seed=0)

    def test_unlabeled_rejected(self):
        ds = make_dataset(10, 2)
        with pytest.raises(ValidationError):
            split_dataset(ds, 0.25, 0.25, seed=0)


class TestCsv:
    def test_csv_matches_emb(self, tmp_path):
        ds = make_dataset(4, 2, labels=True, ids=True)
        lines = ["id,label,f0,f1"]
        for i in range(ds.n):
            lines.append(
                f"{ds.ids[i]},{ds.labels[i]},"
                f"{float(ds.vectors[i, 0])!r},{float(ds.vectors[i, 1])!r}"
            )
        path = tmp_path / "a.csv"
        path.write_text("\n".join(lines) + "\n")
        assert read_csv_embeddings(path) == ds

    def test_bad_header(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("foo,bar\n1,2\n")
        with pytest.raises(FormatError):
            read_csv_embeddings(path)
