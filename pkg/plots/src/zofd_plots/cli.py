"""Command-line figure rendering, one chart per invocation.

Exit codes: 0 on success, 2 on usage or input errors (missing file, schema
mismatch, empty CSV).
"""

import argparse
import sys

from .charts import CHARTS, EmptyInputError, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zofd-plot",
        description="Render figures from experiment CSV files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plot", help="render one chart from one CSV")
    p.add_argument("--chart", required=True, choices=CHARTS)
    p.add_argument("--in", dest="input_csv", required=True, metavar="CSV")
    p.add_argument("--out", dest="out_image", required=True, metavar="IMG")
    p.add_argument("--title", default=None)
    p.add_argument(
        "--group-by", default=None,
        help="comma-separated columns overriding the default series grouping",
    )
    p.add_argument(
        "--svg", action="store_true",
        help="write SVG instead of the default 150 dpi PNG",
    )
    p.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(
            input_csv=args.input_csv,
            chart=args.chart,
            out_image=args.out_image,
            group_by=tuple(args.group_by.split(",")) if args.group_by else (),
            title=args.title,
            dpi=args.dpi,
            svg=args.svg,
        )
        out = render(spec)
    except (SchemaError, EmptyInputError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
