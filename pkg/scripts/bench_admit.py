#!/usr/bin/env python3
"""Admission timing against incoming (k) and active (N) task counts."""

import argparse
import json
import logging
from pathlib import Path

from qnetsched.bench import bench_admit, points_to_csv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--max", type=int, default=1000, help="largest k and N")
    parser.add_argument("--steps", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    values = sorted({max(1, round(args.max * i / (args.steps - 1))) for i in range(args.steps)})
    result = bench_admit(values, values, repeats=args.repeats, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench_admit.csv").write_text(points_to_csv(result.points))
    (out / "bench_admit_fit.json").write_text(json.dumps(result.report(), indent=2))
    top = max(result.by_k, key=lambda p: p.size)
    logging.info("k=%d, N=%d: %.3f s mean; fits %s", top.size, result.fixed_n, top.mean_seconds, result.report())


if __name__ == "__main__":
    main()
