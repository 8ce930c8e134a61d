import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from protoselect import DatasetSplit, read_embeddings

FIXTURE_DIR = Path(__file__).parent.parent / "fixtures" / "longtail-ref"


@pytest.fixture(scope="session")
def longtail_ref() -> DatasetSplit:
    """The committed longtail-ref EMB1 fixture (seed 7)."""
    return DatasetSplit(
        train=read_embeddings(FIXTURE_DIR / "train.emb"),
        val=read_embeddings(FIXTURE_DIR / "val.emb"),
        test=read_embeddings(FIXTURE_DIR / "test.emb"),
    )
