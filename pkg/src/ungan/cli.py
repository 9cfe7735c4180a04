"""Command-line entry point.

    ungan run <config.json> [--out DIR] [--jobs N]
    ungan pretrain <config.json> --out DIR
    ungan gan-train --in DIR [--out DIR] [--jobs N]
    ungan unlearn   --in DIR [--out DIR]
    ungan evaluate  --in DIR [--out DIR]
    ungan report    --in DIR [--out DIR]

Log verbosity comes from the UNGAN_LOG environment variable
(error, warn, info, debug; default warn).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import UnganError
from .evaluate import load_report
from .experiment import ExperimentConfig, format_report_tables, run_experiment, run_stage

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level_name = os.environ.get("UNGAN_LOG", "warn").lower()
    level = LOG_LEVELS.get(level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ungan", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline from a config file")
    run.add_argument("config", help="experiment config (JSON)")
    run.add_argument("--out", help="artifact directory (default: config output_dir or ./out)")
    run.add_argument("--jobs", type=int, default=1, help="parallel workers for independent GANs")

    pre = sub.add_parser("pretrain", help="generate data and train the classifier")
    pre.add_argument("config", help="experiment config (JSON)")
    pre.add_argument("--out", required=True, help="artifact directory")

    for name, help_text in (
        ("gan-train", "train both GAN pairs and sample synthetic data"),
        ("unlearn", "fine-tune the unlearned model and both baselines"),
        ("evaluate", "compute the metrics report from stored artifacts"),
        ("report", "recompute the metrics report and print its tables"),
    ):
        stage = sub.add_parser(name, help=help_text)
        stage.add_argument("--in", dest="in_dir", required=True, help="directory with prior artifacts")
        stage.add_argument("--out", dest="out_dir", help="output directory (default: --in)")
        if name == "gan-train":
            stage.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            status, out_dir = run_experiment(args.config, args.out, args.jobs)
            print(f"artifacts in {out_dir}" + ("" if status == 0 else " (run FAILED)"))
            return status
        if args.command == "pretrain":
            config = ExperimentConfig.from_file(args.config)
            run_stage("pretrain", config, args.out, args.out)
            return 0
        in_dir = args.in_dir
        out_dir = args.out_dir or in_dir
        config = ExperimentConfig.from_file(os.path.join(in_dir, "config.json"))
        if args.command == "gan-train":
            run_stage("gan-train", config, in_dir, out_dir, args.jobs)
        elif args.command == "unlearn":
            run_stage("unlearn", config, in_dir, out_dir)
        elif args.command == "evaluate":
            run_stage("evaluate", config, in_dir, out_dir)
        elif args.command == "report":
            run_stage("evaluate", config, in_dir, out_dir)
            print(format_report_tables(load_report(os.path.join(out_dir, "metrics.json"))))
        return 0
    except UnganError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
