"""Command-line entry point for the experiment harness.

Each subcommand maps to one experiment kind; options come from a JSON
config file with flag overrides for seed, output path, and trial count.
Exit code is 0 only when every in-run assertion passed; failures are
listed in the JSON manifest next to the CSV output.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys

from .harness import ExperimentConfig, emit_results, run_experiment

SUBCOMMANDS = {
    "armp-timing": "armp-timing",
    "logo": "logo-recon",
    "completion-timing": "completion-timing",
    "rank-sweep": "rank-sweep",
    "noise": "noise-robustness",
    "threshold": "threshold-sweep",
    "incoherence": "incoherence-trace",
    "ratings": "ratings",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="svprec",
        description="Low-rank recovery experiments (SVP, SVT, ALS)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {kind} experiment")
        p.add_argument("--config", help="JSON config file (ExperimentConfig fields)")
        p.add_argument("--seed", type=int, help="override the experiment seed")
        p.add_argument("--out", help="override the CSV output path")
        p.add_argument("--trials", type=int, help="override the trial count")
        p.set_defaults(kind=kind)
    return parser


def load_config(args):
    data = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    if "kind" in data and data["kind"] != args.kind:
        raise ValueError(
            f"config kind {data['kind']!r} does not match subcommand {args.kind!r}"
        )
    data["kind"] = args.kind
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["out"] = args.out
    if args.trials is not None:
        data["trials"] = args.trials
    return ExperimentConfig.from_dict(data)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows, failures = run_experiment(cfg)
    out = cfg.out or f"{cfg.kind}.csv"
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    emit_results(rows, out, config=cfg, failures=failures, timestamp=stamp)
    print(f"{cfg.kind}: {len(rows)} rows -> {out}")
    for f in failures:
        print(f"FAIL {f}", file=sys.stderr)
    return 0 if not failures else 1


if __name__ == "__main__":
    sys.exit(main())
