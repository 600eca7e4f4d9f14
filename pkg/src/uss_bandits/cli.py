"""Command-line front end: property verification, experiment execution,
cost sweeps, and synthetic-instance generation.

Exit codes: 0 success, 2 usage or file-format error, 3 runtime error.
Every randomized command takes its randomness from a single --seed flag;
no command reads the wall clock into its outputs.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import JointTable, PropertyReport, UssInstance
from .environments import (
    BscGenerator,
    TraceSource,
    empirical_properties,
    make_bsc_instance,
    to_joint_table,
    MAX_EXACT_K,
)
from .files import (
    FileFormatError,
    parse_experiment_config,
    parse_instance,
    parse_sweep_config,
    sanitize_label,
    write_instance,
    write_metadata,
    write_regret_csv,
    write_report_csv,
    write_sweep_csv,
)
from .harness import (
    ExperimentConfig,
    run_experiment,
    true_properties,
    xi_sweep,
    xi_transition_ok,
)

SEEDING_NOTE = (
    "episode r uses seed base_seed + r; environment and policy streams are "
    "the two SeedSequence(seed).spawn(2) children (numpy PCG64)"
)
CI_NOTE = "normal approximation: mean +/- 1.96 * sd / sqrt(repeats)"


def _parse_float_list(text: str, flag: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError:
        raise FileFormatError(f"{flag}: expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise FileFormatError(f"{flag}: empty list")
    return values


def _print_report(name: str, source_kind: str, report: PropertyReport) -> None:
    mark = f"estimated (n={report.n_samples})" if report.estimated else "exact"
    print(f"instance: {name} (K={report.k}, source={source_kind})")
    print(f"values: {mark}")
    print("gamma:", " ".join(repr(float(g)) for g in report.gamma))
    for i in range(1, report.k + 1):
        for j in range(i + 1, report.k + 1):
            print(f"p[{i},{j}] = {float(report.p[i - 1, j - 1])!r}")
    print(f"i_star: {report.i_star}")
    print("delta:", " ".join(repr(float(d)) for d in report.delta))
    xi_str = "inf" if math.isinf(report.xi) else repr(report.xi)
    print(f"xi: {xi_str}")
    for j in sorted(report.xi_j):
        print(f"xi_j[{j}] = {report.xi_j[j]!r}")
    print(f"sd: {'unavailable' if report.sd is None else str(report.sd).lower()}")
    print(f"wd: {str(report.wd).lower()}")


def _source_kind(instance: UssInstance) -> str:
    src = instance.source
    if isinstance(src, JointTable):
        return "table"
    if isinstance(src, BscGenerator):
        return "bsc"
    if isinstance(src, TraceSource):
        return "trace"
    return type(src).__name__


def cmd_verify(args) -> int:
    instance = parse_instance(args.instance)
    if args.samples is not None:
        if args.samples < 1:
            raise FileFormatError("--samples must be >= 1")
        if args.seed is None:
            raise FileFormatError("--samples needs --seed for a reproducible estimate")
        if isinstance(instance.source, TraceSource):
            report = empirical_properties(instance)
        else:
            rng = np.random.default_rng(np.random.SeedSequence(args.seed))
            report = empirical_properties(instance, n_samples=args.samples, rng=rng)
    else:
        src = instance.source
        if isinstance(src, BscGenerator) and src.k > MAX_EXACT_K:
            raise ValueError(
                f"K={src.k} is too large for exact enumeration; rerun with --samples/--seed"
            )
        report = true_properties(instance)
    _print_report(instance.name, _source_kind(instance), report)
    if args.out:
        write_report_csv(args.out, report)
        print(f"report csv: {args.out}")
    return 0


def cmd_simulate(args) -> int:
    cfg = parse_experiment_config(args.config)
    instance = parse_instance(cfg["instance_path"])
    out_dir = args.out or cfg["out_dir"]
    if not out_dir:
        raise FileFormatError("no output directory: pass --out or set out_dir in the config")
    config = ExperimentConfig(
        instance=instance,
        algorithms=cfg["algorithms"],
        horizon=args.horizon or cfg["horizon"],
        repeats=args.repeats or cfg["repeats"],
        base_seed=args.seed,
        parallelism=args.parallelism or cfg["parallelism"],
        out_dir=str(out_dir),
    )
    report = true_properties(instance)
    curves = run_experiment(config, report=report)
    out = Path(out_dir)
    outputs: dict[str, str] = {}
    notes: dict[str, str] = {}
    for label, curve in curves.items():
        fname = f"{sanitize_label(label)}.csv"
        write_regret_csv(out / fname, label, curve)
        outputs[label] = fname
        tag = ""
        if label.startswith("ucb"):
            notes[label] = "reconstructed baseline"
            tag = " [reconstructed]"
        print(f"{label}{tag}: final mean regret {curve.final_mean!r} +/- {curve.final_ci!r} ({fname})")
    write_metadata(
        out / "metadata.json",
        {
            "schema_version": 1,
            "command": "simulate",
            "config_file": str(args.config),
            "instance": str(cfg["instance_path"]),
            "instance_name": instance.name,
            "algorithms": list(config.algorithms),
            "horizon": config.horizon,
            "repeats": config.repeats,
            "parallelism": config.parallelism,
            "base_seed": config.base_seed,
            "seeding": SEEDING_NOTE,
            "ci_method": CI_NOTE,
            "regret_basis": "trace-empirical" if isinstance(instance.source, TraceSource) else "exact",
            "package_version": __version__,
            "outputs": outputs,
            "algorithm_notes": notes,
        },
    )
    return 0


def cmd_sweep_xi(args) -> int:
    cfg = parse_sweep_config(args.config)
    instance = parse_instance(cfg["instance_path"])
    out_dir = args.out or cfg["out_dir"]
    if not out_dir:
        raise FileFormatError("no output directory: pass --out or set out_dir in the config")
    points = xi_sweep(
        instance,
        cfg["schedule"],
        horizon=args.horizon or cfg["horizon"],
        repeats=args.repeats or cfg["repeats"],
        base_seed=args.seed,
        parallelism=args.parallelism or cfg["parallelism"],
    )
    out = Path(out_dir)
    write_sweep_csv(out / "xi_sweep.csv", points)
    transition = xi_transition_ok(points)
    for pt in points:
        print(
            f"xi={pt.xi!r} i_star={pt.i_star} wd={str(pt.wd).lower()} "
            f"final mean regret {pt.mean_final_regret!r} +/- {pt.ci95!r}"
        )
    print(f"xi_transition_ok: {str(transition).lower()}")
    write_metadata(
        out / "metadata.json",
        {
            "schema_version": 1,
            "command": "sweep-xi",
            "config_file": str(args.config),
            "instance": str(cfg["instance_path"]),
            "instance_name": instance.name,
            "horizon": args.horizon or cfg["horizon"],
            "repeats": args.repeats or cfg["repeats"],
            "base_seed": args.seed,
            "points": len(points),
            "xi_transition_ok": transition,
            "seeding": SEEDING_NOTE,
            "ci_method": CI_NOTE,
            "package_version": __version__,
            "outputs": {"sweep": "xi_sweep.csv"},
        },
    )
    return 0


def cmd_gen_bsc(args) -> int:
    match_prob = _parse_float_list(args.match_prob, "--match-prob")
    costs = _parse_float_list(args.costs, "--costs")
    lambdas = _parse_float_list(args.lambdas, "--lambdas") if args.lambdas else None
    if len(costs) != len(match_prob):
        raise FileFormatError(
            f"--costs has {len(costs)} entries but --match-prob has {len(match_prob)}"
        )
    if args.exact and len(match_prob) > MAX_EXACT_K:
        raise FileFormatError(f"--exact supports K <= {MAX_EXACT_K}, got K={len(match_prob)}")
    try:
        gen = BscGenerator(
            p_true=args.p_true,
            match_prob=match_prob,
            corr_error=args.corr_error,
            seed=args.seed if args.seed is not None else 0,
        )
        instance = make_bsc_instance(gen, costs, lambdas, name=args.name)
    except ValueError as exc:
        raise FileFormatError(str(exc)) from None
    out = Path(args.out)
    write_instance(out, instance)
    print(f"instance: {out}")
    if args.exact:
        table = to_joint_table(gen)
        exact_instance = UssInstance(
            name=f"{args.name}-exact", source=table, costs=costs, lambdas=tuple(lambdas or ())
        )
        exact_path = out.with_name(out.stem + "_exact" + out.suffix)
        write_instance(exact_path, exact_instance)
        print(f"exact table instance: {exact_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uss-bandits",
        description="Simulate sequential selection over a cost-ordered cascade of arms.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="print and export instance properties")
    p.add_argument("--instance", required=True, help="instance JSON file")
    p.add_argument("--out", help="write the report as CSV to this path")
    p.add_argument("--samples", type=int, help="Monte-Carlo sample count (estimate mode)")
    p.add_argument("--seed", type=int, help="seed for estimate mode")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run the configured algorithms and emit regret CSVs")
    p.add_argument("--config", required=True, help="experiment config JSON file")
    p.add_argument("--seed", type=int, required=True, help="base seed (episode r uses seed+r)")
    p.add_argument("--out", help="output directory (overrides config out_dir)")
    p.add_argument("--repeats", type=int, help="override config repeats")
    p.add_argument("--horizon", type=int, help="override config horizon")
    p.add_argument("--parallelism", type=int, help="worker processes for repeats")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-xi", help="sweep cumulative costs and record final regret vs margin")
    p.add_argument("--config", required=True, help="sweep config JSON file")
    p.add_argument("--seed", type=int, required=True, help="base seed shared by all points")
    p.add_argument("--out", help="output directory (overrides config out_dir)")
    p.add_argument("--repeats", type=int, help="override config repeats")
    p.add_argument("--horizon", type=int, help="override config horizon")
    p.add_argument("--parallelism", type=int, help="worker processes for repeats")
    p.set_defaults(func=cmd_sweep_xi)

    p = sub.add_parser("gen-bsc", help="write a synthetic cascade-channel instance file")
    p.add_argument("--out", required=True, help="instance file to write")
    p.add_argument("--costs", required=True, help="comma-separated marginal costs")
    p.add_argument("--match-prob", default="0.6,0.7,0.8", help="per-arm match probabilities")
    p.add_argument("--p-true", type=float, default=0.7, help="mean of the hidden bit")
    p.add_argument("--corr-error", type=float, default=0.1, help="post-cascade flip probability")
    p.add_argument("--lambdas", help="comma-separated trade-off weights (default all 1)")
    p.add_argument("--name", default="bsc", help="instance name")
    p.add_argument("--seed", type=int, help="seed recorded in the instance file")
    p.add_argument("--exact", action="store_true", help="also write the enumerated exact table")
    p.set_defaults(func=cmd_gen_bsc)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
