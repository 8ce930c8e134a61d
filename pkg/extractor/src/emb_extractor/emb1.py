"""Writer for the EMB1 binary embedding format.

Layout (integers little-endian): magic b"EMB1", u32 N, u32 D, u8 flags
(bit0 labels, bit1 ids), N*D float32 row-major, N int8 labels, then per id
a u32 byte length followed by UTF-8 bytes.
"""

import struct

import numpy as np

MAGIC = b"EMB1"


def write_emb1(path, vectors, labels=None, ids=None) -> None:
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
        raise ValueError(f"need an N x D matrix with N, D >= 1, got {vectors.shape}")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("vectors contain non-finite values")
    n, d = vectors.shape
    flags = 0
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int8)
        if labels.shape != (n,) or not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be length-N over {-1, +1}")
        flags |= 0x01
    if ids is not None:
        ids = [str(s) for s in ids]
        if len(ids) != n or len(set(ids)) != n:
            raise ValueError("ids must be N unique strings")
        flags |= 0x02

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIB", n, d, flags))
        fh.write(vectors.tobytes())
        if labels is not None:
            fh.write(labels.tobytes())
        if ids is not None:
            for s in ids:
                raw = s.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
