import argparse
import logging
import sys

from .._errors import BudgetExceededError
from . import experiments, output
from .config import (PRESETS, SUBCOMMAND_EXPERIMENT, ConfigError, ExperimentConfig,
                     from_dict, load_config, preset_config)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def build_parser():
    parser = argparse.ArgumentParser(prog="bench", description="Robust-regression experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_EXPERIMENT:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML file with ExperimentConfig keys")
        p.add_argument("--preset", choices=sorted(PRESETS), help="named base configuration")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--out", help="summary CSV path (overrides output_path)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("presets", help="list named presets")
    return parser


def resolve_config(args):
    cfg = preset_config(args.preset) if args.preset else ExperimentConfig()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    wanted = SUBCOMMAND_EXPERIMENT[args.command]
    overrides = {"experiment": wanted}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out:
        overrides["output_path"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    if (args.config or args.preset) and cfg.experiment != wanted:
        raise ConfigError(f"configuration is for {cfg.experiment!r} but subcommand is {args.command!r}")
    return from_dict(overrides, base=cfg)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    if args.command == "presets":
        for name in sorted(PRESETS):
            print(f"{name:12s} {PRESETS[name]['experiment']}")
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = experiments.run(cfg)
    except BudgetExceededError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    paths = output.write_result(result, cfg, cfg.output_path, cfg.master_seed)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
