"""Command line entry point: ``dea-rl train | sweep | report``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import METHODS, REGIMES, config_from_dict, load_config_file
from .env import ENVS
from .errors import ConfigError, NumericalError
from .report import ReportError, build_report
from .trainer import sweep, train

log = logging.getLogger("dea_rl")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def parse_seeds(text: str) -> list[int]:
    """``"1..5"``, ``"1,3,7"`` or a mix such as ``"1..3,9"``."""
    seeds: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..")
                seeds.extend(range(int(lo), int(hi) + 1))
            elif part:
                seeds.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def dedupe_seeds(seeds: list[int]) -> list[int]:
    unique = list(dict.fromkeys(seeds))
    if len(unique) != len(seeds):
        log.warning("duplicate seeds dropped: %s -> %s", seeds, unique)
    return unique


def default_root() -> Path:
    return Path(os.environ.get("DEA_OUT_DIR", "runs"))


def _load(args) -> dict:
    values = load_config_file(args.config) if args.config else {}
    for key in ("seed", "method", "env", "regime"):
        value = getattr(args, key, None)
        if value is not None:
            values[key] = value
    return values


def cmd_train(args) -> int:
    values = _load(args)
    values.pop("seeds", None)
    for key in ("env", "method"):
        if isinstance(values.get(key), list):
            raise ConfigError(f"train takes a single {key}; use sweep for lists")
    if args.out_dir is not None:
        values["out_dir"] = args.out_dir
    cfg = config_from_dict(values)
    if cfg.out_dir is None:
        cfg.out_dir = str(default_root() / cfg.env / cfg.method / f"seed_{cfg.seed}")
    art = train(cfg)
    print(f"{cfg.env}/{cfg.method} seed {cfg.seed}: final return {art.final_return:.3f}, aulc {art.aulc:.3f} -> {art.out_dir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    values = _load(args)
    seeds = args.seeds if args.seeds is not None else values.pop("seeds", None)
    values.pop("seeds", None)
    if not seeds:
        raise ConfigError("sweep needs --seeds or a seeds list in the config")
    seeds = dedupe_seeds(list(seeds))
    envs = values.pop("env", None)
    methods = values.pop("method", None)
    envs = [envs] if isinstance(envs, str) else envs
    methods = [methods] if isinstance(methods, str) else methods
    out_dir = args.out_dir or values.pop("out_dir", None) or str(default_root())
    values.pop("out_dir", None)
    template = config_from_dict(values)
    rows = sweep(template, seeds, envs=envs, methods=methods, out_dir=out_dir, jobs=args.jobs)
    failed = [r for r in rows if r[3] != "ok"]
    print(f"{len(rows) - len(failed)}/{len(rows)} runs ok; summary at {Path(out_dir) / 'summary.csv'}")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_report(args) -> int:
    rows = build_report(args.inputs, args.out)
    for r in rows:
        print(f"{r['env']:<12} {r['method']:<5} final {r['final_return']:9.3f}  iqm {r['iqm']:9.3f}  "
              f"aulc {r['aulc']:9.3f}  ranks {r['rank_final']:.2f}/{r['rank_iqm']:.2f}/{r['rank_aulc']:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dea-rl", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_options(p):
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--method", choices=METHODS)
        p.add_argument("--env", choices=sorted(ENVS))
        p.add_argument("--regime", choices=sorted(REGIMES))
        p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("train", help="one training run")
    run_options(p)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="runs over seeds (and env/method lists from the config)")
    run_options(p)
    p.add_argument("--seeds", type=parse_seeds, help="e.g. 1..5 or 1,2,7")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate run directories into report.csv and SVG charts")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ReportError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
