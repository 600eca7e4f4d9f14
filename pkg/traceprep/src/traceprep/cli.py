"""Command line for trace preparation.

``build`` trains the cascade and writes the trace CSV; ``rates`` prints
exact error and disagreement rates of an existing trace.
"""

from __future__ import annotations

import argparse
import sys

from .cascade import SpecError, build_trace, load_spec, report_rates


def cmd_build(args) -> int:
    spec = load_spec(args.spec)
    rows = build_trace(args.dataset, spec, args.out, seed=args.seed)
    print(f"wrote {rows} rows x {spec.k} stages to {args.out}")
    return 0


def cmd_rates(args) -> int:
    rates = report_rates(args.trace)
    print(f"rows: {rates['rows']}")
    print("gamma:", " ".join(repr(g) for g in rates["gamma"]))
    for (i, j), v in sorted(rates["disagreement"].items()):
        print(f"p[{i},{j}] = {v!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uss-traceprep",
        description="Train nested logistic cascades and export prediction traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="train the cascade and write a trace CSV")
    p.add_argument("--dataset", required=True, help="input dataset CSV")
    p.add_argument("--spec", required=True, help="cascade spec JSON")
    p.add_argument("--out", required=True, help="trace CSV to write")
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("rates", help="print exact rates of an existing trace")
    p.add_argument("--trace", required=True, help="trace CSV")
    p.set_defaults(func=cmd_rates)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
