"""Command line driver.

Subcommands mirror the harness modes.  Every flag can also come from a JSON
config file (--config); explicit flags win over the file, the file wins over
defaults.  NESTEDPOLAR_SEED provides a default seed and nothing else.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError, NestedPolarError
from .harness import ExperimentConfig, load_config_file, run_experiment


def _parse_n(text: str):
    try:
        return tuple(int(tok) for tok in text.split(",") if tok)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"--n wants an integer or comma list, got {text!r}") from exc


def _add_common(sub):
    sub.add_argument("--config", help="JSON file mirroring these flags")
    sub.add_argument("--seed", type=int,
                     help="master seed (or set NESTEDPOLAR_SEED)")
    sub.add_argument("--group", help="alphabet group, e.g. Z2, Z4, Z2xZ2")
    sub.add_argument("--n", type=_parse_n,
                     help="transform depth n (N = 2^n); comma list sweeps")
    sub.add_argument("--beta", type=float,
                     help="threshold exponent, delta = 2^(-N^beta)")
    sub.add_argument("--trials", type=int,
                     help="Monte Carlo trials per synthesized-channel batch")
    sub.add_argument("--blocks", type=int,
                     help="blocks to quantize or transmit")
    sub.add_argument("--out", help="output path ('-' or absent: stdout)")


def _add_source_flags(sub):
    sub.add_argument("--source", help="source law: bss:p or pmf:p0,p1,...")
    sub.add_argument("--test-channel", dest="test_channel",
                     help="forward test channel p(u|x), e.g. bsc:0.11")


def _add_channel_flags(sub):
    sub.add_argument("--channel", help="physical channel, e.g. bsc:0.11")
    sub.add_argument("--px", help="input law: uniform, capacity, or pmf:...")
    sub.add_argument("--rate-cap", dest="rate_cap", type=float,
                     help="freeze lowest-quality message cells down to this "
                          "net rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nestedpolar",
        description="Nested polar codes over finite Abelian groups: "
                    "quantization toward R(D) and transmission toward "
                    "capacity.")
    subs = parser.add_subparsers(dest="mode", required=True, metavar="mode")

    quant = subs.add_parser("quantize",
                            help="quantize random source blocks, emit CSV")
    _add_common(quant)
    _add_source_flags(quant)

    rd = subs.add_parser("sweep-rd",
                         help="rate-distortion sweep over an n list")
    _add_common(rd)
    _add_source_flags(rd)

    tx = subs.add_parser("transmit",
                         help="transmit random messages, emit CSV")
    _add_common(tx)
    _add_channel_flags(tx)

    bler = subs.add_parser("sweep-bler",
                           help="block-error-rate sweep over an n list")
    _add_common(bler)
    _add_channel_flags(bler)

    con = subs.add_parser("construct",
                          help="build one construction and save it")
    _add_common(con)
    _add_source_flags(con)
    _add_channel_flags(con)
    con.add_argument("--codec", choices=("source", "channel"),
                     help="which codec the construction is for")

    ver = subs.add_parser("verify",
                          help="run the invariant registry "
                               "(--out writes a JSON report)")
    _add_common(ver)
    return parser


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    merged = {}
    if getattr(args, "config", None):
        merged.update(load_config_file(args.config))
    cli = {k: v for k, v in vars(args).items()
           if v is not None and k not in ("mode", "config")}
    merged.update(cli)
    merged.setdefault("mode", args.mode)
    if merged.get("seed") is None:
        env = os.environ.get("NESTEDPOLAR_SEED")
        if env is not None:
            merged["seed"] = int(env)
    if merged.get("seed") is None and args.mode != "verify":
        raise ConfigError("a seed is required: pass --seed or set "
                          "NESTEDPOLAR_SEED")
    merged.setdefault("seed", 0)
    allowed = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(merged) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return ExperimentConfig(**merged)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        text, code = run_experiment(cfg)
    except NestedPolarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not cfg.out or cfg.out == "-" or cfg.mode == "verify":
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
