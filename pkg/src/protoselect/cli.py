"""Command-line interface: synth, select, sweep, histogram.

Exit codes: 0 success, 1 runtime/data error, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .dataset import read_csv_embeddings, read_embeddings, write_embeddings
from .errors import ConfigurationError, ProtoselectError
from .evaluation import SweepConfig, distance_histogram, run_sweep
from .gmm import GmmConfig
from .scorers import ScorerSpec
from .selection import (
    EvoConfig,
    compute_score_matrix,
    per_sample_errors,
    select_evolutionary,
    select_gmm_coreset,
    select_greedy,
    select_minimax_coverage,
    select_random,
)
from .synthgen import PRESETS, LongTailConfig, generate_longtail


class UsageError(Exception):
    """Bad flag combination detected after argparse."""


def _load(path: str):
    """Load EMB1 or CSV (by extension) as an EmbeddingDataset."""
    if str(path).endswith(".csv"):
        return read_csv_embeddings(path)
    return read_embeddings(path)


def _file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(directory, command: str, config: dict, seed: int, inputs: dict):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _file_hash(p) for p in inputs.values() if p},
        "version": __version__,
    }
    path = Path(directory) / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("PROTOSELECT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"PROTOSELECT_SEED must be an integer, got {env!r}")
    return 0


def _scorer_spec(args) -> ScorerSpec:
    return ScorerSpec(kind=args.scorer, k=args.k, distance=args.distance)


def _add_scorer_flags(p):
    p.add_argument("--scorer", choices=("knn", "centroid", "gaussian"), default="knn")
    p.add_argument("--k", type=int, default=2, help="kNN neighbor count")
    p.add_argument("--distance", choices=("l1", "l2"), default="l1")


def cmd_synth(args) -> int:
    if args.preset is not None:
        cfg = PRESETS[args.preset]
        cfg = LongTailConfig(
            **{**asdict(cfg), "seed": args.seed if args.seed is not None else cfg.seed}
        )
    else:
        cfg = LongTailConfig(
            dims=args.dims,
            modes=args.modes,
            per_mode=args.per_mode,
            mode_spread=args.mode_spread,
            core_sigma=args.core_sigma,
            tail_fraction=args.tail_fraction,
            tail_sigma_mult=args.tail_sigma_mult,
            ood_count=args.ood_count,
            ood_offset=args.ood_offset,
            seed=_resolve_seed(args),
        )
    split = generate_longtail(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_embeddings(out / "train.emb", split.train)
    write_embeddings(out / "val.emb", split.val)
    write_embeddings(out / "test.emb", split.test)
    _write_manifest(out, "synth", asdict(cfg), cfg.seed, {})
    print(f"wrote train/val/test EMB1 files to {out}")
    return 0


def cmd_select(args) -> int:
    seed = _resolve_seed(args)
    train = _load(args.train)
    strategy = args.strategy.replace("-", "_")
    spec = _scorer_spec(args)

    if strategy in ("greedy", "evolutionary"):
        if args.val is None:
            raise UsageError(
                f"--strategy {args.strategy} needs labeled validation data: "
                "pass --val (these strategies are weakly supervised)"
            )
        val = _load(args.val)
        matrix = compute_score_matrix(train, val, spec, threads=args.threads)
        if strategy == "greedy":
            sel = select_greedy(per_sample_errors(matrix), args.m)
        else:
            evo = EvoConfig(
                population=args.pop, generations=args.gens, seed=seed
            )
            sel = select_evolutionary(matrix, args.m, evo)
    elif strategy == "gmm_coreset":
        cfg = GmmConfig(components=args.m, seed=seed)
        sel = select_gmm_coreset(train, args.m, cfg)
    elif strategy == "minimax_coverage":
        sel = select_minimax_coverage(train, args.m, seed)
    else:
        sel = select_random(train.n, args.m, seed)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "strategy": sel.strategy,
        "seed": sel.seed,
        "M": args.m,
        "indices": list(sel.indices),
        "achieved_objective": sel.achieved_objective,
        "params": sel.params,
    }
    out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    config = {
        "strategy": args.strategy,
        "m": args.m,
        "scorer": spec.kind,
        "k": spec.k,
        "distance": spec.distance,
        "pop": args.pop,
        "gens": args.gens,
    }
    _write_manifest(out.parent, "select", config, seed,
                    {"train": args.train, "val": args.val})
    print(f"wrote selection to {out}")
    return 0


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    from .dataset import DatasetSplit

    split = DatasetSplit(
        train=_load(args.train), val=_load(args.val), test=_load(args.test)
    )
    sizes = tuple(int(s) for s in args.sizes.split(","))
    strategies = tuple(s.replace("-", "_") for s in args.strategies.split(","))
    cfg = SweepConfig(
        subset_sizes=sizes,
        random_repeats=args.repeats,
        strategies=strategies,
        scorer=_scorer_spec(args),
        seed=seed,
        evo_population=args.pop,
        evo_generations=args.gens,
        threads=args.threads,
    )
    report = run_sweep(split, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "report.csv").write_text(report.to_csv())
    config = {
        "sizes": list(sizes),
        "repeats": args.repeats,
        "strategies": list(strategies),
        "scorer": args.scorer,
        "k": args.k,
        "distance": args.distance,
        "pop": args.pop,
        "gens": args.gens,
    }
    _write_manifest(out, "sweep", config, seed,
                    {"train": args.train, "val": args.val, "test": args.test})
    print(f"wrote sweep report to {out}")
    return 0


def cmd_histogram(args) -> int:
    seed = _resolve_seed(args)
    train = _load(args.train)
    val = _load(args.val)
    spec = _scorer_spec(args)
    matrix = compute_score_matrix(train, val, spec, threads=args.threads)
    report = distance_histogram(train, matrix, spec, args.bins)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json() + "\n")
    config = {"bins": args.bins, "scorer": args.scorer, "k": args.k,
              "distance": args.distance}
    _write_manifest(out.parent, "histogram", config, seed,
                    {"train": args.train, "val": args.val})
    print(f"wrote histogram report to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="protoselect",
        description="Prototypical training-subset selection for feature-space "
        "anomaly detection.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic long-tail dataset")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--dims", type=int, default=8)
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--per-mode", type=int, default=150)
    p.add_argument("--mode-spread", type=float, default=0.25)
    p.add_argument("--core-sigma", type=float, default=1.0)
    p.add_argument("--tail-fraction", type=float, default=0.08)
    p.add_argument("--tail-sigma-mult", type=float, default=6.0)
    p.add_argument("--ood-count", type=int, default=400)
    p.add_argument("--ood-offset", type=float, default=4.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("select", help="select a training subset")
    p.add_argument("--train", required=True)
    p.add_argument("--val")
    p.add_argument(
        "--strategy",
        required=True,
        choices=("random", "greedy", "evolutionary", "gmm-coreset",
                 "minimax-coverage"),
    )
    p.add_argument("--m", type=int, required=True)
    _add_scorer_flags(p)
    p.add_argument("--pop", type=int, default=1000)
    p.add_argument("--gens", type=int, default=500)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output JSON file")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("sweep", help="run a subset-size sweep")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--sizes", default="1,5,10,25")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument(
        "--strategies",
        default="random,greedy,evolutionary,gmm-coreset,minimax-coverage",
    )
    _add_scorer_flags(p)
    p.add_argument("--pop", type=int, default=1000)
    p.add_argument("--gens", type=int, default=500)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("histogram", help="distance-to-center histogram")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--bins", type=int, default=30)
    _add_scorer_flags(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output JSON file")
    p.set_defaults(func=cmd_histogram)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ProtoselectError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
