#!/usr/bin/env python3
"""Schedule computation time on the single-link stress set, N = 5..400."""

import argparse
import json
import logging
from pathlib import Path

from qnetsched.bench import bench_schedule, points_to_csv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--minimal-repeats", type=int, default=20)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    result = bench_schedule(range(5, 401, 5), repeats=args.repeats, minimal_repeats=args.minimal_repeats)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench_schedule.csv").write_text(points_to_csv(result.points))
    (out / "bench_schedule_fit.json").write_text(json.dumps(result.report(), indent=2))
    summary = {k: v for k, v in result.report().items() if k != "bonus_pgas"}
    logging.info("%s", json.dumps(summary))


if __name__ == "__main__":
    main()
