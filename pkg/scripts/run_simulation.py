"""Run a simulation config and write summary and per-replicate tables.

    python scripts/run_simulation.py configs/grid.json -o results/grid --seed 0

Writes ``<out>.tsv``, ``<out>.json`` and ``<out>_replicates.tsv`` (when the
config asks for it), then prints the summary to stdout.
"""

import argparse
import sys
import time
from pathlib import Path

from winnerscurse.cli import main as cli_main


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("config", type=Path)
    parser.add_argument("-o", "--output", type=Path, default=Path("results/simulation"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--workers", type=int)
    args = parser.parse_args()

    argv = ["simulate", str(args.config), "-o", str(args.output), "--format", "both", "--seed", str(args.seed)]
    if args.replicates:
        argv += ["--replicates", str(args.replicates)]
    if args.workers:
        argv += ["--workers", str(args.workers)]
    start = time.perf_counter()
    code = cli_main(argv)
    if code == 0:
        sys.stdout.write(args.output.with_suffix(".tsv").read_text())
        print(f"# {time.perf_counter() - start:.1f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
