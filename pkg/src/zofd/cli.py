"""Command-line entry point.

Subcommands map one-to-one onto the experiment families; ``list-problems``
prints the registry. Flags override config-file fields of the same name;
``--out`` falls back to the ``ZOFD_OUT`` environment variable, then to
``./results``. Exit status: 0 on success, 1 when the oracle finds a failed
check, 2 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__, objectives
from .directions import KINDS
from .errors import (
    ConfigError,
    DegenerateSampleError,
    DimensionError,
    DomainError,
    EvaluationError,
    ParameterError,
)
from .experiments import (
    build_config,
    cmd_grad_error,
    cmd_optimize,
    cmd_oracle,
    cmd_profile,
    cmd_timing,
    load_config_file,
)

_ERRORS = (
    ConfigError, ParameterError, DimensionError, DomainError,
    DegenerateSampleError, EvaluationError,
)


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")


def _strs(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--out", help="output directory (default $ZOFD_OUT or ./results)")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--jobs", type=int, help="parallel worker processes")
    sub.add_argument(
        "--dim", type=_ints, metavar="D[,D...]",
        help="dimensions; non-timing commands instantiate every problem at each",
    )
    sub.add_argument(
        "--ell", type=_strs, metavar="L[,L...]",
        help='direction counts; ints or fractions like "d/2"',
    )
    sub.add_argument(
        "--kind", type=_strs, metavar="K[,K...]",
        help=f"direction kinds; choose from {', '.join(KINDS)}",
    )
    sub.add_argument("--budget", type=int, help="function evaluation budget per run")
    sub.add_argument("--repeats", type=int, help="repetitions / trials")
    sub.add_argument(
        "--preset", choices=("synthetic", "cutest", "adversarial"),
        help="line-search parameter preset",
    )
    sub.add_argument("--h", type=float, help="forward-difference step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zofd",
        description="Finite-difference zeroth-order optimization experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("timing", "grad-error", "optimize", "profile", "oracle"):
        sub = subs.add_parser(name, help=f"run the {name} experiment")
        _add_common(sub)
        if name == "profile":
            sub.add_argument("--tau", type=float, help="threshold for the evals curve")
            sub.add_argument(
                "--source", choices=("grad_error", "optimize", "grad-error"),
                help="metric feeding the profile",
            )
            sub.add_argument("--input-csv", help="reuse an existing result CSV")
        if name == "oracle":
            sub.add_argument("--n-samples", type=int, help="Monte-Carlo sample count")
        sub.set_defaults(experiment=name)

    subs.add_parser("list-problems", help="print the problem registry")
    return parser


def _default_problems(dims):
    return [{"name": n, "d": d} for n in objectives.problem_names() for d in dims]


def _config_from_args(args):
    data = load_config_file(args.config) if args.config else {}
    if args.dim:
        data["dims"] = args.dim
        if args.experiment != "timing":
            base = data.get("problems")
            if base is None:
                data["problems"] = _default_problems(args.dim)
            else:
                data["problems"] = [
                    {**dict(p), "d": d} for p in base for d in args.dim
                ]
    overrides = {
        "kinds": args.kind,
        "ells": args.ell,
        "budget": args.budget,
        "repeats": args.repeats,
        "preset": args.preset,
        "h": args.h,
        "master_seed": args.seed,
        "jobs": args.jobs,
        "out_dir": args.out or os.environ.get("ZOFD_OUT"),
        "tau": getattr(args, "tau", None),
        "source": getattr(args, "source", None),
        "input_csv": getattr(args, "input_csv", None),
        "n_samples": getattr(args, "n_samples", None),
    }
    return build_config(args.experiment, data, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-problems":
        for name, origin, params in objectives.describe_problems():
            print(f"{name:<16} {origin:<9} {params}")
        return 0
    try:
        cfg = _config_from_args(args)
        if args.command == "timing":
            print(cmd_timing(cfg))
        elif args.command == "grad-error":
            print(cmd_grad_error(cfg))
        elif args.command == "optimize":
            for name, path in cmd_optimize(cfg).items():
                print(f"{name}: {path}")
        elif args.command == "profile":
            for name, path in cmd_profile(cfg).items():
                print(f"{name}: {path}")
        elif args.command == "oracle":
            path, ok = cmd_oracle(cfg)
            print(path)
            if not ok:
                print("oracle: at least one check FAILED", file=sys.stderr)
                return 1
            print("oracle: all checks passed")
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
