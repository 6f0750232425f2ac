"""Command line entry point: ``snnbudget {train,eval,sweep,select}``.

Exit codes: 0 ok, 2 bad configuration, 3 dataset problem, 4 corrupt model.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness
from .config import ExperimentConfig, apply_overrides, load_config
from .errors import ConfigError, IdxFormatError, IdxLengthError, InputError, SnapshotError

EXIT_CONFIG, EXIT_DATA, EXIT_MODEL = 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--dataset-dir", metavar="PATH", help="directory holding the IDX files")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="snnbudget", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("train", parents=[common], help="train one model, write snapshot + log CSV")
    ev = sub.add_parser("eval", parents=[common], help="evaluate a snapshot, write report.json")
    ev.add_argument("--model", required=True, metavar="PATH")
    ev.add_argument("--phase", choices=("train", "infer"), default="infer")
    sub.add_parser("sweep", parents=[common], help="train/evaluate a grid and select a model")
    sel = sub.add_parser("select", parents=[common], help="select among existing report JSONs")
    sel.add_argument("reports", nargs="+", metavar="REPORT")
    sel.add_argument("--phase", choices=("train", "infer"), default=None)
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    pairs = []
    for item in args.set:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        pairs.append((key, value))
    if args.seed is not None:
        pairs.append(("seed", str(args.seed)))
    if args.out:
        pairs.append(("out", args.out))
    if args.dataset_dir:
        pairs.append(("data.dir", args.dataset_dir))
    if getattr(args, "phase", None):
        pairs.append(("cost.phase", harness.PHASES[args.phase]))
    cfg = apply_overrides(cfg, pairs)
    if cfg.cost.phase not in harness.PHASES:
        raise ConfigError(f"cost.phase must be training or inference, not {cfg.cost.phase!r}")
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.verb == "train":
            _, train_log = harness.run_train(cfg)
            print(f"trained on {len(train_log)} samples; wrote {cfg.out}/model.json")
        elif args.verb == "eval":
            report = harness.run_eval(args.model, cfg, args.phase)
            print(json.dumps(report.to_dict(), sort_keys=True, indent=1))
        elif args.verb == "sweep":
            result = harness.run_sweep(cfg)
            print(json.dumps(result.selection.to_dict(), sort_keys=True, indent=1))
        elif args.verb == "select":
            selection = harness.run_select(args.reports, cfg)
            print(json.dumps(selection.to_dict(), sort_keys=True, indent=1))
    except SnapshotError as exc:
        print(f"snnbudget: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (FileNotFoundError, IdxFormatError, IdxLengthError, InputError) as exc:
        print(f"snnbudget: dataset error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ValueError) as exc:
        print(f"snnbudget: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
