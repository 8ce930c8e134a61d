"""Image folder -> EMB1 embeddings via a pretrained residual backbone.

Features are the global-average-pooled penultimate activations of a
torchvision ResNet. One row per image; the designated normal class is
labeled -1 and everything else +1. Rows follow sorted file path order so
ids map stably to rows.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
from PIL import Image
from torchvision import models, transforms

from .emb1 import write_emb1

logger = logging.getLogger(__name__)

BACKBONES = ("resnet18", "resnet34", "resnet50", "resnet101", "resnet152")

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tiff", ".webp"}

# ImageNet normalization used by the torchvision pretrained weights
_MEAN = (0.485, 0.456, 0.406)
_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class ExtractionConfig:
    input_root: str
    normal_class: str
    out_path: str
    backbone: str = "resnet18"
    image_size: int = 224
    weights: str = "pretrained"  # 'pretrained' or 'none'
    labels_csv: str | None = None
    batch_size: int = 32
    seed: int = 0  # backbone init seed, used only with weights='none'

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {self.backbone!r}; choose from {BACKBONES}")
        if self.weights not in ("pretrained", "none"):
            raise ValueError("weights must be 'pretrained' or 'none'")
        if self.image_size < 32:
            raise ValueError("image_size must be >= 32")
        if not Path(self.input_root).is_dir():
            raise ValueError(f"input root {self.input_root} does not exist")


def build_backbone(cfg: ExtractionConfig) -> nn.Module:
    """ResNet trunk without the classification head; output is (B, D, 1, 1)."""
    ctor = getattr(models, cfg.backbone)
    if cfg.weights == "pretrained":
        model = ctor(weights="DEFAULT")
    else:
        torch.manual_seed(cfg.seed)
        model = ctor(weights=None)
    trunk = nn.Sequential(*list(model.children())[:-1])
    trunk.eval()
    return trunk


def collect_images(cfg: ExtractionConfig) -> list[tuple[Path, str]]:
    """(path, class) pairs in sorted path order."""
    root = Path(cfg.input_root)
    if cfg.labels_csv is not None:
        pairs = []
        with open(cfg.labels_csv, newline="") as fh:
            for row in csv.DictReader(fh):
                pairs.append((root / row["path"], row["class"]))
        pairs.sort(key=lambda pc: str(pc[0]))
        return pairs
    pairs = [
        (path, path.parent.name)
        for path in sorted(root.glob("*/*"))
        if path.suffix.lower() in IMAGE_EXTENSIONS
    ]
    return pairs


def extract(cfg: ExtractionConfig) -> Path:
    """Embed every decodable image under the input root into one EMB1 file."""
    pairs = collect_images(cfg)
    if not pairs:
        raise ValueError(f"no images found under {cfg.input_root}")
    classes = {c for _, c in pairs}
    if cfg.normal_class not in classes:
        raise ValueError(
            f"normal class {cfg.normal_class!r} not among {sorted(classes)}"
        )

    preprocess = transforms.Compose([
        transforms.Resize((cfg.image_size, cfg.image_size)),
        transforms.ToTensor(),
        transforms.Normalize(_MEAN, _STD),
    ])

    tensors: list[torch.Tensor] = []
    labels: list[int] = []
    ids: list[str] = []
    skipped: list[str] = []
    decoded_per_class: dict[str, int] = {c: 0 for c in classes}
    root = Path(cfg.input_root)
    for path, cls in pairs:
        try:
            with Image.open(path) as img:
                tensor = preprocess(img.convert("RGB"))
        except Exception as exc:  # undecodable image: skip, warn, log
            logger.warning("skipping undecodable image %s: %s", path, exc)
            skipped.append(f"{path}\t{exc}")
            continue
        tensors.append(tensor)
        labels.append(-1 if cls == cfg.normal_class else 1)
        ids.append(str(path.relative_to(root)))
        decoded_per_class[cls] += 1

    empty = sorted(c for c, count in decoded_per_class.items() if count == 0)
    if empty:
        raise ValueError(f"classes with no decodable images: {empty}")

    trunk = build_backbone(cfg)
    features = []
    with torch.no_grad():
        for start in range(0, len(tensors), cfg.batch_size):
            batch = torch.stack(tensors[start : start + cfg.batch_size])
            out = trunk(batch)
            features.append(out.flatten(1).numpy())
    vectors = np.vstack(features).astype(np.float32)

    out_path = Path(cfg.out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_emb1(out_path, vectors, labels=labels, ids=ids)
    if skipped:
        sidecar = out_path.with_suffix(out_path.suffix + ".skipped.log")
        sidecar.write_text("\n".join(skipped) + "\n")
    return out_path
