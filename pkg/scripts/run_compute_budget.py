#!/usr/bin/env python3
"""Per-interval scheduler timing across the random topology family."""

import argparse
import logging
from pathlib import Path

from qnetsched.experiments import RANDOM_TOPOLOGY_ROWS, cells_to_csv, random_sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--seeds", type=int, default=2)
    parser.add_argument("--intervals", type=int, default=50)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cells = random_sweep(RANDOM_TOPOLOGY_ROWS, (1e-5,), (True,), args.seeds, args.intervals)
    for c in cells:
        timing = c.summary["timing"]
        logging.info(
            "%-8s update %.5f  admit %.5f  compute %.5f  total %.5f (max %.4f) s",
            c.label,
            timing["t_update"]["mean"],
            timing["t_admit"]["mean"],
            timing["t_minimal"]["mean"] + timing["t_bonus"]["mean"],
            timing["t_total"]["mean"],
            timing["t_total"]["max"],
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "compute_budget.csv").write_text(cells_to_csv(cells))


if __name__ == "__main__":
    main()
