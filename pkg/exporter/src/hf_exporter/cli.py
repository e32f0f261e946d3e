"""Command-line wrapper: flags mirror ExportConfig.

    hf-export-scores --model DIR_OR_HUB_ID \
        --train train.jsonl --dev dev.jsonl --test test.jsonl \
        --out scores.jsonl [--epochs 3] [--batch-size 16] [--lr 5e-5] \
        [--seed 0] [--null-input-both]
"""

from __future__ import annotations

import argparse
import sys

from .export import ExportConfig, export


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hf-export-scores",
                                description="Fine-tune a transformer twice and "
                                            "export held-out gold-label scores")
    p.add_argument("--model", required=True, help="hub id or local checkpoint dir")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True, help="score file to write")
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--null-input-both", action="store_true",
                   help="feed the null input to both runs (calibration check)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = ExportConfig(model=args.model, train_path=args.train, dev_path=args.dev,
                          test_path=args.test, out_path=args.out, epochs=args.epochs,
                          batch_size=args.batch_size, learning_rate=args.lr,
                          seed=args.seed, null_input_both=args.null_input_both)
    try:
        path = export(config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
