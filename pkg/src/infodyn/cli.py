"""Command-line experiment runner.

    infodyn list
    infodyn --template dice > dice.json
    infodyn run dice.json --out results/dice [--seed 7] [--mode chained]
    infodyn qproject qconfig.json

Exit codes: 0 success, 1 config error, 2 infeasible or unbounded problem,
3 solver non-convergence.
"""

import argparse
import json
import logging
import sys

from . import experiments
from .errors import ConvergenceError, InfeasibleError, UnboundedError

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_CONVERGENCE = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="infodyn", description="Entropic projection experiments.")
    p.add_argument("--template", metavar="NAME", help="print a config template for an experiment and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")
    sub.add_parser("list", help="list canned experiments")
    for name, helptext in (("run", "run an experiment config"), ("qproject", "run a quantum projection config")):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("config")
        r.add_argument("--out", help="output directory (default: config 'output' field or ./out)")
        r.add_argument("--seed", type=int, help="override the config seed")
        r.add_argument("--mode", choices=["literal", "chained"], help="trajectory mode")
    return p


def list_experiments():
    return [(e.name, e.description) for e in experiments.EXPERIMENTS.values()]


def _load(path, command, args):
    try:
        with open(path) as f:
            cfg = json.load(f)
    except OSError as exc:
        raise experiments.ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise experiments.ConfigError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise experiments.ConfigError("config must be a JSON object")
    if command == "qproject":
        cfg.setdefault("experiment", "qproject")
        if cfg["experiment"] != "qproject":
            raise experiments.ConfigError("the qproject command only runs 'qproject' configs")
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise experiments.ConfigError("seed must be an unsigned 64-bit integer")
        cfg["seed"] = args.seed
    if args.mode is not None:
        cfg["mode"] = args.mode
    return cfg


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.template:
        try:
            print(json.dumps(experiments.template(args.template), indent=2))
        except experiments.ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    if args.command == "list" or args.command is None:
        rows = list_experiments()
        width = max(len(n) for n, _ in rows)
        for name, desc in rows:
            print(f"{name:<{width}}  {desc}")
        return EXIT_OK

    try:
        cfg = _load(args.config, args.command, args)
        record = experiments.execute(cfg)
    except experiments.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, UnboundedError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.get("output") or "out"
    experiments.write_results(record, out)
    print(f"{record['experiment']}: wrote {out}/result.csv and {out}/result.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
