"""Command-line entry point.

    fourier-ricci approximate run.toml
    fourier-ricci optimize run.toml
    fourier-ricci reproduce-tables --out tables/
    fourier-ricci bounds run.toml

Exit status: 0 on success, 1 for invalid input or configuration, 2 for a
failure while running.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .config import load_config
from .errors import StageError, ValidationError
from .pipeline import reproduce_tables, run_bounds, run_pipeline


def _summary(record):
    out = {"status": record.status, "report": record.report, "artifacts": record.artifacts}
    if record.best is not None:
        out["best"] = {"location": record.best["location"], "true_value": record.best["true_value"],
                       "surrogate_value": record.best["surrogate_value"]}
    if record.hybrid is not None:
        out["hybrid"] = record.hybrid
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="fourier-ricci", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, text in (("approximate", "build a surrogate and report its error"),
                       ("optimize", "build a surrogate and locate the optimum with the flow"),
                       ("bounds", "empirical error-decay series and fitted bound constants")):
        sp = sub.add_parser(verb, help=text)
        sp.add_argument("config", help="JSON or TOML run configuration")
        sp.add_argument("--out", help="override output_dir from the config")
    rp = sub.add_parser("reproduce-tables", help="run all benchmarks and write table CSVs")
    rp.add_argument("--out", default="tables", help="output directory (default: tables)")
    rp.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.verb == "reproduce-tables":
            paths = reproduce_tables(args.out, seed=args.seed)
            print(json.dumps({"tables": list(paths)}, indent=2))
            return 0
        cfg = load_config(args.config)
        if args.out:
            cfg = replace(cfg, output_dir=args.out)
        if args.verb == "bounds":
            res = run_bounds(cfg)
            print(json.dumps({"constants": res.constants, "dominates": res.dominates,
                              "non_increasing_mae": res.non_increasing("measured_mae"),
                              "settings": res.settings}, indent=2))
            return 0
        record = run_pipeline(cfg, optimize_stage=args.verb == "optimize")
        print(json.dumps(_summary(record), indent=2))
        return 0
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"error in stage {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, ValidationError) else 2
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
