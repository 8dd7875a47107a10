"""Command line entry point: ``selfdetect run|validate|report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from ..errors import SelfDetectError
from .config import TARGET_MODES, load_config
from .dataset import load_dataset
from .report import format_summary, rebuild_report
from .runner import run_experiment

logger = logging.getLogger("selfdetect")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selfdetect", description="Score LLM answers with self-detection strategies.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a TOML config")
    run.add_argument("config")
    run.add_argument("--strategies", help="comma-separated strategy ids (overrides the config)")
    run.add_argument("--limit", type=int, help="evaluate a seeded subset of this many instances")
    run.add_argument("--seed", type=int, help="subset seed")
    run.add_argument("--trace", action="store_true", default=None, help="store prompts and responses per instance")
    run.add_argument("--lenient", action="store_true", default=None, help="skip malformed dataset lines")
    run.add_argument("--target-mode", choices=TARGET_MODES, help="greedy answer, self-cons or CoT-cons majority")
    run.add_argument("--output-dir", help="results directory (overrides the config)")

    val = sub.add_parser("validate", help="check a JSONL dataset")
    val.add_argument("dataset")
    val.add_argument("--lenient", action="store_true", help="report every bad line instead of stopping at the first")

    rep = sub.add_parser("report", help="rebuild the CSV tables of a results directory")
    rep.add_argument("results_dir")
    return p


def _run(args) -> int:
    config = load_config(args.config)
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip()) if args.strategies else None
    config = config.with_cli(strategies=strategies, sample_limit=args.limit, rng_seed=args.seed,
                             trace=args.trace, lenient=args.lenient, target_mode=args.target_mode,
                             output_dir=args.output_dir)
    result = run_experiment(config)
    print(format_summary(result.reports))
    c = result.counters
    print(f"\nscored {c['scored']}/{c['selected']} instances; live calls {c['live_calls']}, "
          f"cache hits {c['cache_hits']}; results in {config.output_dir}")
    for reason, ids in c["skipped"].items():
        print(f"skipped ({reason}): {', '.join(ids)}")
    return 0


def _validate(args) -> int:
    ds = load_dataset(args.dataset, lenient=args.lenient)
    for err in ds.errors:
        print(f"error: {err}")
    tasks: dict[str, int] = {}
    for inst in ds.instances:
        tasks[inst.task.value] = tasks.get(inst.task.value, 0) + 1
    print(json.dumps({"instances": len(ds.instances), "pairs": len(ds.pairs), "tasks": tasks,
                      "errors": len(ds.errors)}, sort_keys=True))
    return 1 if ds.errors else 0


def _report(args) -> int:
    print(format_summary(rebuild_report(args.results_dir)))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _run, "validate": _validate, "report": _report}[args.command]
    try:
        return handler(args)
    except (SelfDetectError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
