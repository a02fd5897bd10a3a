"""Run the reference instances through the CLI pipeline into one output tree."""

import argparse
from pathlib import Path
import sys

from doublestop.cli import main

ROOT = Path(__file__).resolve().parent.parent
RUNS = [
    ("compare", "lin1.json"),
    ("compare", "lin1_stage_b_dominant.json"),
    ("compare", "ref1.json"),
    ("game", "game_symmetric.json"),
]


def cli() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=ROOT / "out" / "reference")
    ap.add_argument("--replicates", type=int, default=None)
    args = ap.parse_args()
    status = 0
    for command, cfg in RUNS:
        argv = [command, "--config", str(ROOT / "configs" / cfg), "--out", str(args.out / Path(cfg).stem)]
        if args.replicates is not None:
            argv += ["--replicates", str(args.replicates)]
        code = main(argv)
        print(f"{cfg:32s} {command:8s} exit {code}")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(cli())
