"""Command-line entry point.

The heavy numerical modules are imported lazily inside ``main`` so the
``SPECTRAL_HUBER_THREADS`` environment variable can cap the BLAS thread
pools before numpy is loaded.
"""

from __future__ import annotations

import argparse
import os
import sys

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _apply_thread_env():
    n = os.environ.get("SPECTRAL_HUBER_THREADS")
    if not n:
        return
    for var in _THREAD_VARS:
        os.environ.setdefault(var, n)


def _add_config_arg(p):
    p.add_argument("--config", help="YAML config file; flags override its values")


def _add_problem_flags(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--m-x", type=int, dest="m_x")
    p.add_argument("--m-y", type=int, dest="m_y")
    p.add_argument("--n-frames", type=int, dest="n_frames")
    p.add_argument("--coils", type=int)
    p.add_argument("--rank", type=int)
    p.add_argument("--acceleration", type=float)
    p.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    p.add_argument("--patch", type=int, nargs=2, metavar=("NX", "NY"))


def _add_solver_flags(p):
    p.add_argument("--potential", choices=("hyperbola", "cauchy", "parabola"))
    p.add_argument("--delta", type=float)
    p.add_argument("--K", type=int, dest="K")
    p.add_argument("--method", choices=("ncg", "fista_pa", "pogm_pa"))
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--lam", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--n-alpha", type=int, dest="n_alpha")
    p.add_argument("--alpha0", type=float)
    p.add_argument("--curvature", choices=("GR", "GL"))
    p.add_argument(
        "--fast-step",
        action=argparse.BooleanOptionalAction,
        dest="fast_step",
        default=None,
    )
    p.add_argument("--sbar", type=int, nargs=2, metavar=("SX", "SY"))
    p.add_argument(
        "--deterministic-reduce",
        action=argparse.BooleanOptionalAction,
        dest="deterministic_reduce",
        default=None,
    )
    p.add_argument("--store-every", type=int, dest="store_every")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-huber",
        description="Locally low-rank reconstruction with smooth spectral penalties.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic problem archive")
    _add_config_arg(p)
    _add_problem_flags(p)
    p.add_argument("--lam", type=float)
    p.add_argument("--out", help="output directory for the archive")

    p = sub.add_parser("reconstruct", help="solve a problem archive")
    _add_config_arg(p)
    p.add_argument("--problem", help="problem archive directory")
    p.add_argument("--out", help="output directory for results")
    _add_solver_flags(p)

    p = sub.add_parser("compare", help="run several configs on one problem")
    p.add_argument("configs", nargs="+", help="config files, one per method")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-iter", type=int, dest="max_iter")

    p = sub.add_parser("metrics", help="report error of a reconstruction")
    p.add_argument("--problem", required=True, help="problem archive directory")
    p.add_argument("--recon", required=True, help="reconstruction directory or file")

    return parser


_CONFIG_KEYS = (
    "problem",
    "out",
    "seed",
    "m_x",
    "m_y",
    "n_frames",
    "coils",
    "rank",
    "acceleration",
    "noise_sigma",
    "patch",
    "potential",
    "delta",
    "K",
    "method",
    "max_iter",
    "lam",
    "eta",
    "n_alpha",
    "alpha0",
    "curvature",
    "fast_step",
    "sbar",
    "deterministic_reduce",
    "store_every",
)


def _overrides(args) -> dict:
    out = {}
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            out[key] = tuple(value) if isinstance(value, list) else value
    return out


def main(argv=None) -> int:
    _apply_thread_env()
    args = build_parser().parse_args(argv)

    from . import commands
    from .config import build_config
    from .exceptions import SpectralHuberError

    try:
        if args.command == "generate":
            cfg = build_config(args.config, _overrides(args))
            return commands.cmd_generate(cfg)
        if args.command == "reconstruct":
            cfg = build_config(args.config, _overrides(args))
            return commands.cmd_reconstruct(cfg)
        if args.command == "compare":
            over = {}
            if args.max_iter is not None:
                over["max_iter"] = args.max_iter
            return commands.cmd_compare(args.configs, args.out, over or None)
        if args.command == "metrics":
            return commands.cmd_metrics(args.problem, args.recon)
    except (SpectralHuberError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
