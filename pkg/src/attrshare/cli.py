"""Command-line entry points.

    attrshare gen  --config cfg.json --out data/
    attrshare run  --config cfg.json --out results/ [--seed N] [--tau X]
                   [--per-class-topk] [--background-negatives]
    attrshare eval --checkpoint results/checkpoints/task_02 --data data/
    attrshare export-scores --checkpoint results/checkpoints/task_02

Exit codes: 0 success, 2 configuration error, 3 data or format error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import AttrShareError
from .pipeline import (
    evaluate_checkpoint,
    export_scores,
    load_run_config,
    run_pipeline,
    write_scenario_files,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attrshare",
        description="Incremental attribute-to-class assignment over a shared attribute base",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate synthetic scenario files")
    gen.add_argument("--config", required=True)
    gen.add_argument("--out", required=True)

    run = sub.add_parser("run", help="run the full multi-phase pipeline")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--tau", type=float, default=None, help="override the background threshold")
    run.add_argument("--per-class-topk", action="store_true")
    run.add_argument("--background-negatives", action="store_true")

    ev = sub.add_parser("eval", help="evaluate a checkpoint on exported task files")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--tau", type=float, default=0.5)

    scores = sub.add_parser("export-scores", help="dump a checkpoint's attribute selections")
    scores.add_argument("--checkpoint", required=True)
    scores.add_argument("--out", default=None, help="write JSON here instead of stdout")

    return parser


def _cmd_gen(args) -> int:
    config = load_run_config(args.config)
    summary = write_scenario_files(config.scenario, args.out)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_run(args) -> int:
    config = load_run_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["scenario"] = dataclasses.replace(config.scenario, seed=args.seed)
    if args.tau is not None:
        overrides["tau"] = args.tau
    if args.per_class_topk:
        overrides["per_class_topk"] = True
    if args.background_negatives:
        overrides["background_negatives"] = True
    if overrides:
        config = dataclasses.replace(config, **overrides)
    report = run_pipeline(config, out_dir=args.out)
    last = report["tasks"][-1]["metrics"]
    print(
        json.dumps(
            {
                "tasks": len(report["tasks"]),
                "overall_accuracy": last["overall_accuracy"],
                "old_class_accuracy": last["old_class_accuracy"],
                "fpp_accuracy": last["fpp_accuracy"],
                "report": str(args.out) + "/report.json",
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def _cmd_eval(args) -> int:
    metrics = evaluate_checkpoint(args.checkpoint, args.data, tau=args.tau)
    print(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_export_scores(args) -> int:
    doc = export_scores(args.checkpoint)
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "run": _cmd_run,
    "eval": _cmd_eval,
    "export-scores": _cmd_export_scores,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except AttrShareError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
