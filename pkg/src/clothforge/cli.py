"""Command line entry points: generate, evaluate, bench.

Exit codes: 0 success, 2 configuration problem (including unparseable
ground-truth or detection files), 3 stage ordering problem, 4 I/O failure.
The CLOTHFORGE_SEED environment variable overrides master_seed, so batch
schedulers can fan out seeds without editing config files.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .config import PipelineConfig
from .errors import ConfigError, StageOrderError, WriteError
from .metrics import evaluate_files, write_report
from .pipeline import STAGES, bench, generate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE_ORDER = 3
EXIT_IO = 4

SEED_ENV = "CLOTHFORGE_SEED"


def _load_config(path: str, workers: int | None = None) -> PipelineConfig:
    cfg = PipelineConfig.from_file(path)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            seed = int(env, 0)
        except ValueError:
            raise ConfigError(
                f"{SEED_ENV} must be an integer, got {env!r}") from None
        cfg = cfg.with_overrides(master_seed=seed)
    if workers is not None:
        cfg = cfg.with_overrides(workers=workers)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clothforge",
        description="Synthetic keypoint datasets of almost-flattened cloth.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser(
        "generate", help="run the mesh/deform/render pipeline")
    gen.add_argument("--config", required=True, help="config JSON path")
    gen.add_argument("--stage", choices=("all",) + STAGES, default="all",
                     help="which stage to run (default: all)")
    gen.add_argument("--workers", type=int, default=None,
                     help="override the configured worker count")

    ev = sub.add_parser(
        "evaluate", help="score detections against ground truth")
    ev.add_argument("--gt", required=True, help="ground-truth COCO JSON")
    ev.add_argument("--pred", required=True, help="detections JSON")
    ev.add_argument("--out", required=True, help="report output path")

    bn = sub.add_parser("bench", help="time the pipeline stages")
    bn.add_argument("--config", required=True, help="config JSON path")
    bn.add_argument("--samples", type=int, default=5,
                    help="samples per stage for the medians (default: 5)")
    bn.add_argument("--parallel-samples", type=int, default=20,
                    help="samples for the scaling run, 0 skips it "
                         "(default: 20)")
    bn.add_argument("--parallel-workers", type=int, default=4,
                    help="worker count for the scaling run (default: 4)")
    return parser


def _cmd_generate(args) -> int:
    cfg = _load_config(args.config, args.workers)
    counts = generate(cfg, args.stage)
    total = sum(counts.values())
    per_cat = ", ".join(f"{cat}: {n}" for cat, n in counts.items() if n)
    detail = f" ({per_cat})" if per_cat else ""
    print(f"stage {args.stage}: {total} samples{detail} -> {cfg.output_dir}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    report = evaluate_files(args.gt, args.pred)
    write_report(report, args.out)
    akd = "undefined" if report.akd is None else f"{report.akd:.3f} px"
    print(f"mAP {report.mean_ap:.4f}  AKD {akd}  "
          f"({report.akd_pairs} pairs, {report.akd_skipped} skipped) "
          f"-> {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    report = bench(cfg, samples=args.samples,
                   parallel_samples=args.parallel_samples,
                   parallel_workers=args.parallel_workers)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    commands = {"generate": _cmd_generate, "evaluate": _cmd_evaluate,
                "bench": _cmd_bench}
    try:
        return commands[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageOrderError as exc:
        print(f"stage order error: {exc}", file=sys.stderr)
        return EXIT_STAGE_ORDER
    except (WriteError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
