"""Command-line entry points.

Exit codes: 0 success, 1 invalid schedule, 2 configuration or parse error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path as FsPath
from typing import Sequence

from .bench import bench_admit, bench_schedule, points_to_csv
from .capabilities import CapabilityModel, generate_capabilities
from .config import ConfigError, apply_overrides, load_config, with_changes
from .demand import PGT, to_ns
from .network import InfeasibleTopology, Network, dumbbell, random_topology
from .schedule import CompiledSchedule
from .simulation import run_scenario
from .validate import validate_schedule

EXIT_OK, EXIT_INVALID, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("qnetsched")


class ParseError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("values must be positive")
    return values


def _overrides(pairs: Sequence[str]) -> dict[str, str]:
    out = {}
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError("--override", f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _write(out: FsPath | None, name: str, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    log.info("wrote %s", out / name)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.override:
        cfg = apply_overrides(cfg, _overrides(args.override))
    if args.seed is not None:
        cfg = with_changes(cfg, seeds=(args.seed,))
    out = FsPath(args.out) if args.out else FsPath(args.config).parent / "results"
    report = run_scenario(cfg, workers=args.workers)
    paths = report.write(out)
    summary = report.summary()
    if args.format == "json":
        print(json.dumps(summary, indent=2, sort_keys=True))
    else:
        print(f"metrics: {paths['metrics']}")
        for key in ("minimal_service_proportion", "acceptance_proportion", "bonus_proportion", "mean_service_to_expiry"):
            print(f"{key}: {summary[key]}")
    if args.export_schedule:
        final = report.results[0]
        if final.final_schedule is not None:
            exp = FsPath(args.export_schedule)
            exp.mkdir(parents=True, exist_ok=True)
            (exp / "schedule.jsonl").write_text(final.final_schedule.to_jsonl())
            (exp / "pgts.json").write_text(json.dumps([t.to_json() for t in final.final_tasks], indent=1))
    if summary["invariant_violations"]:
        log.error("invariant violations: %d", summary["invariant_violations"])
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_gen_topology(args: argparse.Namespace) -> int:
    if args.dumbbell:
        graph = dumbbell()
    else:
        if None in (args.backbones, args.areas, args.end_nodes):
            raise ConfigError("gen-topology", "give --backbones, --areas and --end-nodes, or --dumbbell")
        graph = random_topology(args.backbones, args.areas, args.end_nodes, args.seed)
    out = FsPath(args.out) if args.out else None
    _write(out, "topology.json", json.dumps(graph.to_json(), indent=1) + "\n")
    if args.capabilities:
        net = Network.from_graph(graph)
        table = generate_capabilities(net.partition, graph, CapabilityModel(), args.seed)
        if args.format == "csv":
            _write(out, "capabilities.csv", table.to_csv())
        else:
            rows = [
                {"path": list(p), "rate": e.rate, "fidelity": e.fidelity}
                for p, e in sorted(table.entries.items())
            ]
            _write(out, "capabilities.json", json.dumps({"version": table.version, "entries": rows}, indent=1) + "\n")
    return EXIT_OK


def cmd_bench_admit(args: argparse.Namespace) -> int:
    result = bench_admit(args.n_values, args.k_values, args.repeats, args.seed, args.warmup)
    out = FsPath(args.out) if args.out else None
    if args.format == "csv":
        _write(out, "bench_admit.csv", points_to_csv(result.points))
    else:
        data = {
            "by_k": [vars(p) for p in result.by_k],
            "by_n": [vars(p) for p in result.by_n],
            **result.report(),
        }
        _write(out, "bench_admit.json", json.dumps(data, indent=1) + "\n")
    print(json.dumps(result.report(), sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_bench_schedule(args: argparse.Namespace) -> int:
    n_values = range(args.n_min, args.n_max + 1, args.n_step)
    result = bench_schedule(n_values, args.repeats, args.warmup)
    out = FsPath(args.out) if args.out else None
    if args.format == "csv":
        _write(out, "bench_schedule.csv", points_to_csv(result.points))
    else:
        data = {"points": [vars(p) for p in result.points], **result.report()}
        _write(out, "bench_schedule.json", json.dumps(data, indent=1) + "\n")
    print(json.dumps({k: v for k, v in result.report().items() if k != "bonus_pgas"}, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def load_pgts(path: FsPath) -> list[PGT]:
    try:
        data = json.loads(path.read_text())
        return [PGT.from_json(d) for d in data]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_schedule(path: FsPath) -> CompiledSchedule:
    try:
        return CompiledSchedule.from_jsonl(path.read_text())
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def cmd_validate(args: argparse.Namespace) -> int:
    compiled = load_schedule(FsPath(args.schedule))
    pgts = load_pgts(FsPath(args.pgts))
    internal = {r for t in pgts for r in t.path[1:-1]}
    report = validate_schedule(compiled.pga_lists(internal), pgts, to_ns(args.t_si))
    summary = report.summary()
    if args.format == "json":
        detail = {
            **summary,
            "conflict_list": [[r, a.pgt_id, b.pgt_id, a.start, b.start] for r, a, b in report.conflicts],
            "shortfall_list": [list(s) for s in report.shortfalls],
        }
        print(json.dumps(detail, indent=1, sort_keys=True))
    else:
        for key, value in summary.items():
            print(f"{key}: {value}")
        for r, a, b in report.conflicts:
            print(f"conflict on {r}: pgt {a.pgt_id} [{a.start}, {a.end}) overlaps pgt {b.pgt_id} [{b.start}, {b.end})")
        for pid, count, need in report.shortfalls:
            print(f"shortfall: pgt {pid} has {count} of {need}")
    return EXIT_OK if report.ok else EXIT_INVALID


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qnetsched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run a scenario")
    run.add_argument("config")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--export-schedule", default=None, metavar="DIR", help="write the last computed schedule")
    run.set_defaults(func=cmd_run)

    topo = sub.add_parser("gen-topology", parents=[common], help="generate a topology")
    topo.add_argument("--backbones", type=int)
    topo.add_argument("--areas", type=int)
    topo.add_argument("--end-nodes", type=int)
    topo.add_argument("--dumbbell", action="store_true")
    topo.add_argument("--capabilities", action="store_true", help="also write a capabilities table")
    topo.set_defaults(func=cmd_gen_topology)

    ba = sub.add_parser("bench-admit", parents=[common], help="admission benchmark")
    ba.add_argument("--n-values", type=_int_list, default=[1, 250, 500, 750, 1000])
    ba.add_argument("--k-values", type=_int_list, default=[1, 250, 500, 750, 1000])
    ba.add_argument("--repeats", type=int, default=5)
    ba.add_argument("--warmup", type=int, default=3)
    ba.set_defaults(func=cmd_bench_admit)

    bs = sub.add_parser("bench-schedule", parents=[common], help="schedule stress benchmark")
    bs.add_argument("--n-min", type=int, default=5)
    bs.add_argument("--n-max", type=int, default=400)
    bs.add_argument("--n-step", type=int, default=5)
    bs.add_argument("--repeats", type=int, default=3)
    bs.add_argument("--warmup", type=int, default=3)
    bs.set_defaults(func=cmd_bench_schedule)

    val = sub.add_parser("validate", parents=[common], help="check a compiled schedule")
    val.add_argument("schedule", help="schedule JSONL")
    val.add_argument("pgts", help="PGT JSON list")
    val.add_argument("--t-si", type=float, default=1800.0, help="interval length in seconds")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed is None:
        args.seed = None if args.command == "run" else 0
    try:
        return args.func(args)
    except (ConfigError, ParseError, InfeasibleTopology) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level guard maps failures to an exit code
        log.exception("runtime failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
