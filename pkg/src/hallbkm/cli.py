"""Command-line interface: ``hallbkm {run,resume,lab,diagnose}``.

Exit status: 0 on success, 2 on a configuration or input error, 3 when a
run halts on a blow-up signal (outputs are still written).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import parse_config, parse_lab_config
from .diagnostics import Monitor
from .errors import CheckpointFormatError, ConfigError, UsageError, ValidationError
from .inequality_lab import run_lab
from .io import load_checkpoint
from .timestepper import HALT_BLOW_UP, run

EXIT_INPUT = 2
EXIT_BLOW_UP = 3


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _print_summary(result):
    print(f"halt: {result.halt_reason} at t={result.t_final!r} after {result.steps} steps")
    for name, value in result.integrals.items():
        print(f"  {name} = {value!r}")
    if result.h4_ratio_max is not None:
        print(f"  h4_ratio_max = {result.h4_ratio_max!r}")
    for w in result.warnings:
        print(f"warning: {w}")
    if result.out_dir:
        print(f"outputs in {result.out_dir}")


def _apply_overrides(cfg, args):
    if getattr(args, "seed_override", None) is not None:
        cfg = cfg.with_seed(args.seed_override)
    if args.no_oversample:
        cfg = replace(cfg, oversample=False)
    if args.out_dir is not None:
        cfg = replace(cfg, out_dir=args.out_dir)
    return cfg


def cmd_run(args):
    cfg = _apply_overrides(parse_config(_read(args.config)), args)
    result = run(cfg)
    _print_summary(result)
    return EXIT_BLOW_UP if result.halt_reason == HALT_BLOW_UP else 0


def cmd_resume(args):
    ckpt = load_checkpoint(args.checkpoint)
    cfg_path = Path(args.config) if args.config else Path(args.checkpoint).parent / "config.txt"
    cfg = parse_config(_read(cfg_path))
    if args.t_end <= ckpt.state.t:
        raise UsageError(f"--t-end {args.t_end} must exceed the checkpoint time {ckpt.state.t}")
    cfg = replace(cfg, t_end=args.t_end, K=ckpt.K)
    if args.out_dir is None:
        args.out_dir = str(Path(args.checkpoint).parent / "resumed")
    cfg = _apply_overrides(cfg, args)
    result = run(cfg, start=ckpt)
    _print_summary(result)
    return EXIT_BLOW_UP if result.halt_reason == HALT_BLOW_UP else 0


def cmd_lab(args):
    lab = parse_lab_config(_read(args.config))
    if args.seed_override is not None:
        lab = replace(lab, seed=args.seed_override)
    if args.no_oversample:
        lab = replace(lab, oversample=False)
    out = args.out_dir if args.out_dir is not None else lab.out_dir
    report, results = run_lab(lab.corpus(), lab.sizes, lab.ps, lab.oversample, out,
                              {"corpus_seed": lab.seed, "version": __version__})
    worst = [r for r in results if not math.isfinite(r.ratio)]
    print(f"{len(results)} ratios over {lab.count} fields at n={list(lab.sizes)}")
    print(f"{'inequality':28s} {'n':>4s} {'max':>10s} {'median':>10s} {'trend':>8s}")
    for r in report.rows:
        print(f"{r.inequality_id:28s} {r.n:4d} {r.max_ratio:10.4g} {r.median_ratio:10.4g} {r.trend:8.4f}")
    if worst:
        print(f"warning: {len(worst)} non-finite ratios")
    print(f"outputs in {out}")
    return 0


def cmd_diagnose(args):
    ckpt = load_checkpoint(args.checkpoint)
    state = ckpt.state
    lps = None
    if args.config:
        lps = parse_config(_read(args.config)).lps
    mon = Monitor(state.model, ckpt.K, oversample=not args.no_oversample, integrals=ckpt.integrals,
                  **({"lps": lps} if lps else {}))
    rec = mon.sample(state)
    print(json.dumps(rec.as_dict(), indent=2))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="hallbkm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out-dir", default=None, help="output directory (overrides the config)")
        if seed:
            sp.add_argument("--seed-override", type=int, default=None, help="replace every random seed")
        sp.add_argument("--no-oversample", action="store_true", help="use raw grid maxima for sup norms")

    sp = sub.add_parser("run", help="run a simulation from a config file")
    sp.add_argument("config")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("resume", help="continue a run from a checkpoint")
    sp.add_argument("checkpoint")
    sp.add_argument("--t-end", type=float, required=True)
    sp.add_argument("--config", default=None, help="config file (default: config.txt next to the checkpoint)")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_resume)

    sp = sub.add_parser("lab", help="sweep the inequality checks over a field corpus")
    sp.add_argument("config")
    common(sp)
    sp.set_defaults(func=cmd_lab)

    sp = sub.add_parser("diagnose", help="print one diagnostic record for a checkpoint")
    sp.add_argument("checkpoint")
    sp.add_argument("--config", default=None, help="config supplying the L^p exponents")
    sp.add_argument("--no-oversample", action="store_true")
    sp.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError, ValidationError, CheckpointFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
