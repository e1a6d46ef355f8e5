"""Command line entry point.

Exit codes: 0 success, 2 validation error, 3 non-convergence.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, preset_config
from .grid import FieldError
from .lame import LameError
from .model import ModelError

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3


def _load(spec: str) -> RunConfig:
    """A TOML path, or ``preset:<name>`` for a built-in scenario."""
    if spec.startswith("preset:"):
        return preset_config(spec.split(":", 1)[1])
    return load_config(spec)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="TOML config file or preset:<name>")
    common.add_argument("--out", help="output directory (default: config's run.out)")
    common.add_argument("--threads", type=int, default=1, help="worker processes / numba threads")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--quiet", action="store_true", help="only warnings and errors")

    p = argparse.ArgumentParser(prog="degsw", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="solve one scenario")
    sub.add_parser("stability", parents=[common], help="perturbation-halving stability test")
    sub.add_parser("continuation", parents=[common], help="vacuum-lift continuation in delta")
    sw = sub.add_parser("sweep", parents=[common], help="one run per parameter value")
    sw.add_argument("--param", required=True, help="alias (gamma, alpha, ...) or dotted path")
    sw.add_argument("--values", required=True, help="comma separated values")
    sub.add_parser("verify-inequalities", parents=[common], help="sampled inequality checks")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    os.environ.setdefault("NUMBA_NUM_THREADS", str(args.threads))
    from . import experiments as ex  # after the thread setting

    try:
        cfg = _load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out = ex.fresh_dir(Path(args.out or cfg.out) / args.command)
        if args.command == "run":
            res = ex.run(cfg, out)
            ok = res.trace.converged
        elif args.command == "stability":
            ok = ex.run_stability(cfg, out)["converged"]
        elif args.command == "continuation":
            ok = ex.run_continuation(cfg, out)["all_converged"]
        elif args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            if not values:
                raise ConfigError("--values: need at least one value")
            rows = ex.run_sweep(cfg, args.param, values, out, args.threads)
            ok = all(r["converged"] for r in rows)
        else:
            ex.run_verify(cfg, out)
            ok = True
    except (ConfigError, ModelError, LameError, FieldError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not args.quiet:
        print(f"wrote {out}")
    if not ok:
        print("error: Picard iteration did not converge (see trace CSV)", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
