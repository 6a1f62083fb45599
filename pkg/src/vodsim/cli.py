"""Command line front end: single runs, paired comparisons and rate sweeps."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import ConfigError, SimConfig, load_config
from .metrics import emit_reports, mean_alloc_overall, time_avg_utilization
from .sim import baseline_no_psg, run


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; defaults apply otherwise")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--horizon", type=float, help="override the simulated seconds")
    parser.add_argument("--rate", type=float, help="override the total arrival rate")
    parser.add_argument("--out", required=True, help="directory for report files")


def _build_config(args, psg_enabled: bool | None = None) -> SimConfig:
    config = load_config(args.config) if args.config else SimConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.rate is not None:
        overrides["total_arrival_rate"] = args.rate
    if psg_enabled is not None:
        overrides["psg_enabled"] = psg_enabled
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config.validate()


def _cmd_run(args) -> int:
    config = _build_config(args, psg_enabled=False if args.no_psg else None)
    result = run(config)
    paths = emit_reports(result, args.out)
    counters = result.counters
    print(f"requests={counters.requested} local={counters.local_hits} "
          f"rejected={counters.rejected} drained={counters.drained}")
    print(f"wrote {len(paths)} files to {Path(args.out)}")
    return 0


def _cmd_compare(args) -> int:
    config = _build_config(args, psg_enabled=True)
    with_psg = run(config)
    without = baseline_no_psg(config)
    paths = emit_reports(with_psg, args.out, baseline=without)
    print(f"with sharing:    rejected={with_psg.counters.rejected} "
          f"ratio={with_psg.counters.rejection_ratio:.4f}")
    print(f"without sharing: rejected={without.counters.rejected} "
          f"ratio={without.counters.rejection_ratio:.4f}")
    print(f"wrote {len(paths)} files to {Path(args.out)}")
    return 0


def _cmd_sweep(args) -> int:
    scales = []
    for part in args.scales.split(","):
        part = part.strip()
        if part:
            scales.append(float(part))
    if not scales:
        raise ConfigError("no rate scales given")
    config = _build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["rate_scale,total_arrival_rate,requested,rejected,rejection_ratio,"
             "mean_alloc_per_stream,util_ps_lps,util_ps_rps,util_ps_cms"]
    for scale in scales:
        scaled = dataclasses.replace(
            config, total_arrival_rate=config.total_arrival_rate * scale
        ).validate()
        result = run(scaled)
        util = time_avg_utilization(result.ledgers, scaled.horizon)
        mean_alloc = mean_alloc_overall(result.ledgers, scaled.horizon)
        counters = result.counters
        utils = ",".join(_fmt(value) for value in util.values())
        lines.append(
            f"{_fmt(scale)},{_fmt(scaled.total_arrival_rate)},{counters.requested},"
            f"{counters.rejected},{_fmt(counters.rejection_ratio)},{_fmt(mean_alloc)},{utils}"
        )
        print(f"scale {scale:g}: requests={counters.requested} "
              f"mean_alloc={mean_alloc:.2f} rejected={counters.rejected}")
    path = out / "sweep.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vodsim",
        description="Simulate class-aware bandwidth allocation on a ring of "
                    "video proxy servers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single run, full report set")
    _add_common(p_run)
    p_run.add_argument("--no-psg", action="store_true",
                       help="disable proxy sharing; every miss goes to the central server")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="same seed with and without proxy sharing")
    _add_common(p_cmp)
    p_cmp.set_defaults(func=_cmd_compare)

    p_sweep = sub.add_parser("sweep", help="repeat a run at scaled arrival rates")
    _add_common(p_sweep)
    p_sweep.add_argument("--scales", default="0.25,1,4",
                         help="comma-separated multipliers of the arrival rate")
    p_sweep.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
