#!/usr/bin/env python3
"""Compare service-to-expiry and bonus share with the bonus phase on and off."""

import argparse
import logging
from pathlib import Path

from qnetsched.experiments import EPSILONS, SMALL_ROWS, cells_to_csv, random_sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--intervals", type=int, default=150)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cells = random_sweep(SMALL_ROWS, EPSILONS, (True, False), args.seeds, args.intervals, args.workers)
    by_key = {(c.label, c.epsilon, c.bonus_enabled): c.summary for c in cells}
    for label, eps, bonus in sorted(by_key):
        if not bonus:
            continue
        on, off = by_key[(label, eps, True)], by_key[(label, eps, False)]
        if not (on["mean_service_to_expiry"] and off["mean_service_to_expiry"]):
            logging.info("%-7s eps=%-7g no finished demands", label, eps)
            continue
        ratio = off["mean_service_to_expiry"] / on["mean_service_to_expiry"]
        logging.info(
            "%-7s eps=%-7g service-to-expiry %.3f -> %.3f (ratio %.2f), bonus share %.3f, acceptance %.3f",
            label, eps, on["mean_service_to_expiry"], off["mean_service_to_expiry"], ratio,
            on["bonus_proportion"], on["acceptance_proportion"],
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bonus_effect.csv").write_text(cells_to_csv(cells))
    logging.info("wrote %s", out / "bonus_effect.csv")


if __name__ == "__main__":
    main()
