#!/usr/bin/env python3
"""Minimal-service reliability on the dumbbell and on small random topologies.

Writes ``reliability.csv`` with one row per (topology, epsilon) cell.
"""

import argparse
import logging
from pathlib import Path

from qnetsched.experiments import EPSILONS, SMALL_ROWS, cells_to_csv, dumbbell_reliability, random_sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--dumbbell-seeds", type=int, default=20)
    parser.add_argument("--dumbbell-intervals", type=int, default=200)
    parser.add_argument("--random-seeds", type=int, default=5)
    parser.add_argument("--random-intervals", type=int, default=150)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cells = [dumbbell_reliability(args.dumbbell_seeds, args.dumbbell_intervals, args.workers)]
    cells += random_sweep(SMALL_ROWS, EPSILONS, (True,), args.random_seeds, args.random_intervals, args.workers)
    for c in cells:
        r = c.row()
        logging.info(
            "%-8s eps=%-7g minimal service %.4f over %d demands (%.0f s)",
            r["topology"], r["epsilon"], r["minimal_service_proportion"] or 0.0, r["demands_finished"], r["wall_seconds"],
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "reliability.csv").write_text(cells_to_csv(cells))
    logging.info("wrote %s", out / "reliability.csv")


if __name__ == "__main__":
    main()
