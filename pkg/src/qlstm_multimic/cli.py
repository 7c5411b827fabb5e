"""Command-line entry point: qlstm-multimic <subcommand> [flags].

Every subcommand prints one JSON document on stdout. Library errors are
logged, printed as {"error": ..., "message": ...} and turn into exit status 1;
a failing gradient check also exits 1.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import torch
from pydantic import BaseModel

from qlstm_multimic.commands.ablation import cmd_ablation
from qlstm_multimic.commands.bench import cmd_bench
from qlstm_multimic.commands.evaluate import cmd_eval
from qlstm_multimic.commands.gen_data import cmd_gen_data
from qlstm_multimic.commands.gradcheck import PRESETS, cmd_gradcheck
from qlstm_multimic.commands.train import cmd_train
from qlstm_multimic.config import get_settings
from qlstm_multimic.models.config import Provenance
from qlstm_multimic.utils.error_handling import QuatLabError
from qlstm_multimic.utils.logging_setup import configure_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlstm-multimic",
        description="Quaternion LSTM multi-microphone experiments",
    )
    parser.add_argument("--log-level", default=None, help="Overrides QLSTM_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="Synthesize and featurize a paired dataset")
    gen.add_argument("--config", type=Path, default=None, help="DatasetConfig JSON file")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", type=Path, default=None, help="Dataset directory")

    train = sub.add_parser("train", help="Train one network")
    train.add_argument("--config", type=Path, required=True, help="TrainConfig JSON file")
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--out", type=Path, default=None, help="Run directory")

    ev = sub.add_parser("eval", help="Score a checkpoint on a dataset split")
    ev.add_argument("--checkpoint", type=Path, required=True)
    ev.add_argument("--dataset", type=Path, required=True, help="Dataset directory")
    ev.add_argument("--split", default="test", choices=["train", "valid", "test"])
    ev.add_argument("--provenance", default=None, choices=[p.value for p in Provenance])
    ev.add_argument("--permute-labels", action="store_true", help="Chance-level control")
    ev.add_argument("--seed", type=int, default=0, help="Seed of the label permutation")

    abl = sub.add_parser("ablation", help="Model x provenance experiment matrix")
    abl.add_argument("--config", type=Path, required=True, help="AblationConfig JSON file")
    abl.add_argument("--seed", type=int, default=None, help="Replaces base_seed")
    abl.add_argument("--out", type=Path, default=None, help="Summary directory")

    grad = sub.add_parser("gradcheck", help="Finite-difference gradient verification")
    grad.add_argument("--preset", default="tiny-qlstm", choices=sorted(PRESETS))
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--tolerance", type=float, default=1e-4)
    grad.add_argument("--step", type=float, default=1e-5)
    grad.add_argument("--inject-fault", default=None, metavar="PARAM", help="Corrupt one gradient array")

    bench = sub.add_parser("bench", help="Scalar vs batched Hamilton product throughput")
    bench.add_argument("--sizes", type=int, nargs="+", default=[1, 4, 16, 64])
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--repeats", type=int, default=1)
    return parser


def dispatch(args: argparse.Namespace) -> tuple[Any, int]:
    """Run the chosen subcommand; returns (result, exit status)."""
    if args.command == "gen-data":
        return cmd_gen_data(args.config, args.seed, args.out), 0
    if args.command == "train":
        return cmd_train(args.config, args.seed, args.out), 0
    if args.command == "eval":
        provenance = Provenance(args.provenance) if args.provenance else None
        report = cmd_eval(args.checkpoint, args.dataset, args.split, provenance, args.permute_labels, args.seed)
        return report, 0
    if args.command == "ablation":
        return cmd_ablation(args.config, args.seed, args.out), 0
    if args.command == "gradcheck":
        report = cmd_gradcheck(args.preset, args.seed, args.tolerance, args.step, args.inject_fault)
        return report, 0 if report.passed else 1
    if args.command == "bench":
        return cmd_bench(args.sizes, args.seed, args.repeats), 0
    raise ValueError(f"unknown command {args.command}")


def _to_json(result: Any) -> str:
    if isinstance(result, BaseModel):
        return result.model_dump_json(indent=2, by_alias=True)
    return json.dumps(result, indent=2, sort_keys=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the command-line harness."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    configure_logging(args.log_level or settings.log_level, settings.log_format)
    if settings.num_threads:
        torch.set_num_threads(settings.num_threads)

    try:
        result, status = dispatch(args)
    except QuatLabError as e:
        logger.error("%s failed: %s", args.command, e)
        print(json.dumps({"error": type(e).__name__, "message": str(e)}, indent=2))
        return 1
    print(_to_json(result))
    return status


if __name__ == "__main__":
    sys.exit(main())
