"""Image-to-EMB1 embedding extractor."""

__version__ = "0.1.0"

from .emb1 import write_emb1
from .extract import BACKBONES, ExtractionConfig, build_backbone, collect_images, extract

__all__ = [
    "BACKBONES",
    "ExtractionConfig",
    "build_backbone",
    "collect_images",
    "extract",
    "write_emb1",
]
