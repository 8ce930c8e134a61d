"""CLI: extract --input <dir> --normal-class <name> --backbone <id> --size <px> --out <file.emb>"""

import argparse
import logging
import sys

from .extract import BACKBONES, ExtractionConfig, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emb-extract",
        description="Export image-folder embeddings to an EMB1 file.",
    )
    parser.add_argument("--input", required=True, help="image root, one subdir per class")
    parser.add_argument("--normal-class", required=True)
    parser.add_argument("--backbone", choices=BACKBONES, default="resnet18")
    parser.add_argument("--size", type=int, default=224, help="input resolution")
    parser.add_argument("--weights", choices=("pretrained", "none"), default="pretrained")
    parser.add_argument("--labels-csv", help="CSV with path,class columns instead of subdirs")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0, help="init seed for --weights none")
    parser.add_argument("--out", required=True, help="output EMB1 file")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING)
    args = build_parser().parse_args(argv)
    try:
        cfg = ExtractionConfig(
            input_root=args.input,
            normal_class=args.normal_class,
            out_path=args.out,
            backbone=args.backbone,
            image_size=args.size,
            weights=args.weights,
            labels_csv=args.labels_csv,
            batch_size=args.batch_size,
            seed=args.seed,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        out = extract(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote embeddings to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
