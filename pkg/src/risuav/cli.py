"""
Command-line entry point.

    risuav sweep --config configs/fig1.json --out fig1.csv
    risuav optimize --config configs/fig7.json --format json
    risuav mc-validate --config configs/fig1.json --trials 100000
    risuav show-derived --config configs/fig5.json

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace

from . import __version__
from .experiment import ConfigError, derive, emit, load_config, run_optimize, run_sweep
from .mcsim import McConfig
from .specfun import ConvergenceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

log = logging.getLogger("risuav")


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="risuav", description="Multi-RIS UAV relay link analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON experiment file")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=_u64, help="Monte-Carlo seed override")
    common.add_argument("--trials", type=_positive, help="Monte-Carlo trials (enables MC)")
    common.add_argument("--threads", type=_positive, default=1, help="worker threads")
    common.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("sweep", parents=[common], help="closed-form metrics along the configured sweep")
    sub.add_parser("optimize", parents=[common], help="optimal power split along a total-power sweep")
    sub.add_parser("mc-validate", parents=[common], help="closed form vs Monte-Carlo deviation")
    sub.add_parser("show-derived", parents=[common], help="print derived channel parameters")
    return parser


def _mc_settings(cfg, args, force=False):
    mc = cfg.mc
    if mc is None and (force or args.trials is not None):
        mc = McConfig()
    if mc is None:
        return cfg
    overrides = {"streams": args.threads}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    return replace(cfg, mc=replace(mc, **overrides))


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _show_derived(cfg):
    out = {"name": cfg.name, "variants": []}
    for variant in cfg.variants or ({"label": ""},):
        d = derive(cfg, variant)
        out["variants"].append({
            "label": variant.get("label", ""),
            "ris": [
                {"n_elements": s.n_elements, "d1": s.d1, "d2": s.d2, "a": f.a, "b": f.b,
                 "path_loss": f.path_loss, "path_loss_db": 10 * math.log10(f.path_loss)}
                for s, f in zip(d.ris, d.fits)
            ],
            "height": d.environment.h,
            "horizontal_distance": d.environment.r0,
            "p_los": d.p_los,
            "k0": d.k0,
            "k0_db": 10 * math.log10(d.k0) if d.k0 > 0 else None,
            "a2g_loss": d.loss,
            "a2g_loss_convention": d.environment.loss_convention,
        })
    return json.dumps(out, indent=1) + "\n"


def _mc_report(result, trials):
    # an empirical probability of 0 or 1 has zero spread; floor at one trial
    floor = 1.0 / trials
    lines = []
    worst = 0.0
    for metric in ("op", "asep", "capacity"):
        dev = 0.0
        for row in result.rows:
            se = max(row[f"mc_{metric}_se"], floor)
            dev = max(dev, abs(row[metric] - row[f"mc_{metric}"]) / se)
        worst = max(worst, dev)
        lines.append(f"{metric}: max deviation {dev:.3f} std errors")
    lines.append(f"overall: {worst:.3f} std errors over {len(result.rows)} points")
    return "\n".join(lines) + "\n"


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "show-derived":
            _write(_show_derived(cfg), args.out)
        elif args.command == "optimize":
            emit_text = emit(run_optimize(cfg, args.threads), args.format)
            _write(emit_text, args.out)
        elif args.command == "mc-validate":
            cfg = _mc_settings(cfg, args, force=True)
            result = run_sweep(cfg, threads=1, with_mc=True)
            if args.out is not None:
                emit(result, args.format, args.out)
            sys.stdout.write(_mc_report(result, cfg.mc.trials))
        else:
            cfg = _mc_settings(cfg, args)
            _write(emit(run_sweep(cfg, threads=args.threads), args.format), args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, ConvergenceError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
