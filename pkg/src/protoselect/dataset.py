"""Embedding dataset model and the EMB1 on-disk format.

EMB1 layout (all integers little-endian):

    magic   4 bytes  b"EMB1"
    N       u32
    D       u32
    flags   u8       bit0 = labels present, bit1 = ids present
    vectors N*D float32, row-major
    labels  N int8 (only if bit0)
    ids     N * (u32 byte length, UTF-8 bytes) (only if bit1)

Vectors are stored as float32 on disk and promoted to float64 in memory.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, FormatError, ValidationError

MAGIC = b"EMB1"

_FLAG_LABELS = 0x01
_FLAG_IDS = 0x02


@dataclass(frozen=True)
class EmbeddingDataset:
    """N rows of D-dimensional feature vectors with optional labels and ids.

    Labels follow the convention -1 = in-distribution, +1 = out-of-distribution.
    Immutable after construction; safe for concurrent reads.
    """

    vectors: np.ndarray
    labels: np.ndarray | None = None
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValidationError(f"vectors must be 2-D, got shape {vectors.shape}")
        n, d = vectors.shape
        if n < 1 or d < 1:
            raise ValidationError(f"need N >= 1 and D >= 1, got N={n}, D={d}")
        if not np.all(np.isfinite(vectors)):
            raise ValidationError("vectors contain non-finite values")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int8)
            if labels.shape != (n,):
                raise ValidationError(
                    f"labels must have length {n}, got shape {labels.shape}"
                )
            if not np.all(np.isin(labels, (-1, 1))):
                raise ValidationError("labels must all be -1 or +1")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

        if self.ids is not None:
            ids = tuple(str(s) for s in self.ids)
            if len(ids) != n:
                raise ValidationError(f"ids must have length {n}, got {len(ids)}")
            if len(set(ids)) != n:
                raise ValidationError("ids must be unique")
            object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def take(self, indices) -> "EmbeddingDataset":
        """Row subset in the given index order."""
        idx = np.asarray(indices, dtype=np.intp)
        return EmbeddingDataset(
            vectors=self.vectors[idx],
            labels=None if self.labels is None else self.labels[idx],
            ids=None if self.ids is None else tuple(self.ids[i] for i in idx),
        )

    def __eq__(self, other):
        if not isinstance(other, EmbeddingDataset):
            return NotImplemented
        if not np.array_equal(self.vectors, other.vectors):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        return self.ids == other.ids


@dataclass(frozen=True)
class DatasetSplit:
    """Train/val/test partition obeying the UAD training assumption."""

    train: EmbeddingDataset
    val: EmbeddingDataset
    test: EmbeddingDataset
    train_indices: tuple[int, ...] = field(default=(), compare=False)
    val_indices: tuple[int, ...] = field(default=(), compare=False)
    test_indices: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.train.labels is not None and np.any(self.train.labels == 1):
            raise ValidationError("train split must not contain +1 (OOD) labels")
        for name, part in (("val", self.val), ("test", self.test)):
            if part.labels is None:
                raise ValidationError(f"{name} split must be labeled")
            if not (np.any(part.labels == -1) and np.any(part.labels == 1)):
                raise ValidationError(f"{name} split must contain both classes")


def serialize_embeddings(ds: EmbeddingDataset) -> bytes:
    """Encode a dataset as EMB1 bytes. Pure function of its input."""
    n, d = ds.vectors.shape
    flags = 0
    if ds.labels is not None:
        flags |= _FLAG_LABELS
    if ds.ids is not None:
        flags |= _FLAG_IDS
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<IIB", n, d, flags))
    buf.write(np.ascontiguousarray(ds.vectors, dtype="<f4").tobytes())
    if ds.labels is not None:
        buf.write(ds.labels.astype(np.int8).tobytes())
    if ds.ids is not None:
        for s in ds.ids:
            raw = s.encode("utf-8")
            buf.write(struct.pack("<I", len(raw)))
            buf.write(raw)
    return buf.getvalue()


def deserialize_embeddings(data: bytes) -> EmbeddingDataset:
    """Decode EMB1 bytes; rejects bad magic, truncation and trailing garbage."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 13:
        raise FormatError("truncated header")
    n, d, flags = struct.unpack_from("<IIB", data, 4)
    if n < 1 or d < 1:
        raise FormatError(f"invalid dimensions N={n}, D={d}")
    if flags & ~(_FLAG_LABELS | _FLAG_IDS):
        raise FormatError(f"unknown flag bits in {flags:#x}")
    pos = 13
    vec_bytes = n * d * 4
    if len(data) < pos + vec_bytes:
        raise FormatError(f"truncated vector payload (need {vec_bytes} bytes)")
    vectors = np.frombuffer(data, dtype="<f4", count=n * d, offset=pos)
    vectors = vectors.reshape(n, d).astype(np.float64)
    pos += vec_bytes

    labels = None
    if flags & _FLAG_LABELS:
        if len(data) < pos + n:
            raise FormatError("truncated labels payload")
        labels = np.frombuffer(data, dtype=np.int8, count=n, offset=pos).copy()
        pos += n

    ids = None
    if flags & _FLAG_IDS:
        out = []
        for _ in range(n):
            if len(data) < pos + 4:
                raise FormatError("truncated id length")
            (length,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if len(data) < pos + length:
                raise FormatError("truncated id bytes")
            try:
                out.append(data[pos : pos + length].decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise FormatError(f"invalid UTF-8 in id: {exc}") from exc
            pos += length
        ids = tuple(out)

    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after payload")
    return EmbeddingDataset(vectors=vectors, labels=labels, ids=ids)


def write_embeddings(path, ds: EmbeddingDataset) -> None:
    """Write a dataset to `path` in EMB1 format. Byte-identical for equal inputs."""
    data = serialize_embeddings(ds)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise OSError(f"cannot write embeddings to {path}: {exc}") from exc


def read_embeddings(path) -> EmbeddingDataset:
    """Read an EMB1 file written by write_embeddings (or the extractor)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read embeddings from {path}: {exc}") from exc
    return deserialize_embeddings(data)


def split_dataset(
    ds: EmbeddingDataset,
    val_fraction: float,
    test_fraction: float,
    seed: int,
) -> DatasetSplit:
    """Partition a labeled dataset into train (ID only) / val / test.

    ID samples are split train/val/test by the given fractions; OOD samples go
    to val and test only, split by the fractions renormalized over the OOD
    class. Deterministic given the seed.
    """
    if ds.labels is None:
        raise ValidationError("split_dataset requires a labeled dataset")
    if not (0 < val_fraction < 1 and 0 < test_fraction < 1):
        raise ConfigurationError("fractions must lie in (0, 1)")
    if val_fraction + test_fraction >= 1:
        raise ConfigurationError("val_fraction + test_fraction must be < 1")

    id_idx = np.flatnonzero(ds.labels == -1)
    ood_idx = np.flatnonzero(ds.labels == 1)
    n_id, n_ood = len(id_idx), len(ood_idx)

    n_val_id = int(round(val_fraction * n_id))
    n_test_id = int(round(test_fraction * n_id))
    n_train_id = n_id - n_val_id - n_test_id
    n_val_ood = int(round(val_fraction / (val_fraction + test_fraction) * n_ood))
    n_test_ood = n_ood - n_val_ood

    if min(n_train_id, n_val_id, n_test_id, n_val_ood, n_test_ood) < 1:
        raise ConfigurationError(
            f"infeasible split: {n_id} ID / {n_ood} OOD samples with "
            f"fractions ({val_fraction}, {test_fraction})"
        )

    rng = np.random.default_rng(seed)
    id_perm = id_idx[rng.permutation(n_id)]
    ood_perm = ood_idx[rng.permutation(n_ood)]

    train_idx = np.sort(id_perm[:n_train_id])
    val_idx = np.sort(
        np.concatenate([id_perm[n_train_id : n_train_id + n_val_id], ood_perm[:n_val_ood]])
    )
    test_idx = np.sort(
        np.concatenate([id_perm[n_train_id + n_val_id :], ood_perm[n_val_ood:]])
    )

    return DatasetSplit(
        train=ds.take(train_idx),
        val=ds.take(val_idx),
        test=ds.take(test_idx),
        train_indices=tuple(int(i) for i in train_idx),
        val_indices=tuple(int(i) for i in val_idx),
        test_indices=tuple(int(i) for i in test_idx),
    )


def read_csv_embeddings(path) -> EmbeddingDataset:
    """Load a CSV with header ``id,label,f0..f{D-1}`` as a dataset."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise OSError(f"cannot read CSV from {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty CSV") from None
        if len(header) < 3 or header[0] != "id" or header[1] != "label":
            raise FormatError(f"{path}: expected header id,label,f0..f{{D-1}}")
        ids, labels, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields")
            ids.append(row[0])
            try:
                labels.append(int(row[1]))
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    # Round-trip through float32 so CSV and EMB1 ingestion agree bit-exactly.
    vectors = np.asarray(rows, dtype=np.float32).astype(np.float64)
    return EmbeddingDataset(vectors=vectors, labels=np.asarray(labels), ids=tuple(ids))
