"""Self-describing file formats: instance files, experiment configs, and
the CSV outputs.

All structured files are JSON with a ``schema_version`` field; unknown
keys are rejected so config typos fail loudly. CSV floats are written
with shortest round-trip formatting, which keeps reruns byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .core import JointTable, PropertyReport, UssInstance
from .environments import BscGenerator, TraceSource, load_trace
from .harness import RegretCurve, SweepPoint, parse_algorithm

SCHEMA_VERSION = 1


class FileFormatError(ValueError):
    """A config or instance file failed validation (usage-level error)."""


def _require_keys(obj: Mapping[str, Any], where: str, required: set[str], optional: set[str]):
    unknown = set(obj) - required - optional
    if unknown:
        raise FileFormatError(f"{where}: unknown fields {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise FileFormatError(f"{where}: missing fields {sorted(missing)}")


def _check_schema(obj: Mapping[str, Any], where: str):
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise FileFormatError(
            f"{where}: schema_version must be {SCHEMA_VERSION}, got {obj.get('schema_version')!r}"
        )


def _load_json(path: Path) -> dict:
    try:
        with path.open(encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _outcome_key(outcome: Sequence[int]) -> str:
    return " ".join(str(int(b)) for b in outcome)


def _parse_outcome_key(key: str, where: str) -> tuple[int, ...]:
    parts = key.split()
    try:
        bits = tuple(int(p) for p in parts)
    except ValueError:
        raise FileFormatError(f"{where}: bad outcome key {key!r}") from None
    if any(b not in (0, 1) for b in bits):
        raise FileFormatError(f"{where}: outcome key {key!r} must contain 0/1 bits")
    return bits


def table_to_dict(q: JointTable) -> dict[str, float]:
    return {_outcome_key(outcome): p for outcome, p in sorted(q.as_dict().items())}


def table_from_dict(prob: Mapping[str, float], where: str) -> JointTable:
    if not prob:
        raise FileFormatError(f"{where}: empty probability table")
    parsed = {_parse_outcome_key(k, where): float(v) for k, v in prob.items()}
    lengths = {len(k) for k in parsed}
    if len(lengths) != 1:
        raise FileFormatError(f"{where}: outcome keys have inconsistent lengths {sorted(lengths)}")
    k = lengths.pop() - 1
    try:
        return JointTable(k, parsed)
    except ValueError as exc:
        raise FileFormatError(f"{where}: {exc}") from None


def _parse_source(obj: Mapping[str, Any], base_dir: Path, where: str):
    if not isinstance(obj, dict) or "type" not in obj:
        raise FileFormatError(f"{where}: source must be an object with a 'type' field")
    kind = obj["type"]
    if kind == "table":
        _require_keys(obj, where, {"type", "prob"}, set())
        return table_from_dict(obj["prob"], where)
    if kind == "bsc":
        _require_keys(obj, where, {"type", "match_prob"}, {"p_true", "corr_error", "seed"})
        try:
            return BscGenerator(
                p_true=float(obj.get("p_true", 0.7)),
                match_prob=tuple(float(v) for v in obj["match_prob"]),
                corr_error=float(obj.get("corr_error", 0.1)),
                seed=int(obj.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise FileFormatError(f"{where}: {exc}") from None
    if kind == "trace":
        _require_keys(obj, where, {"type", "path"}, set())
        trace_path = Path(obj["path"])
        if not trace_path.is_absolute():
            trace_path = base_dir / trace_path
        return trace_path
    raise FileFormatError(f"{where}: unknown source type {kind!r}")


def parse_instance(path: str | Path) -> UssInstance:
    """Read an instance file (source + costs + trade-off weights)."""
    path = Path(path)
    obj = _load_json(path)
    where = str(path)
    if not isinstance(obj, dict):
        raise FileFormatError(f"{where}: top level must be an object")
    _check_schema(obj, where)
    _require_keys(
        obj,
        where,
        {"schema_version", "name", "source"},
        {"costs", "costs_cumulative", "lambdas"},
    )
    if ("costs" in obj) == ("costs_cumulative" in obj):
        raise FileFormatError(f"{where}: provide exactly one of 'costs' or 'costs_cumulative'")
    source = _parse_source(obj["source"], path.parent, f"{where}: source")
    if "costs" in obj:
        costs = tuple(float(v) for v in obj["costs"])
    else:
        cum = [float(v) for v in obj["costs_cumulative"]]
        marginal = np.diff(np.concatenate([[0.0], cum]))
        if np.any(marginal < 0):
            raise FileFormatError(f"{where}: cumulative costs must be non-decreasing from 0")
        costs = tuple(float(v) for v in marginal)
    lambdas = tuple(float(v) for v in obj.get("lambdas", ()))
    name = str(obj["name"])
    try:
        if isinstance(source, Path):
            return load_trace(source, costs, lambdas or None, name=name)
        return UssInstance(name=name, source=source, costs=costs, lambdas=lambdas)
    except (ValueError, OSError) as exc:
        raise FileFormatError(f"{where}: {exc}") from None


def instance_to_dict(instance: UssInstance, instance_dir: Path | None = None) -> dict:
    src = instance.source
    if isinstance(src, JointTable):
        source_obj: dict[str, Any] = {"type": "table", "prob": table_to_dict(src)}
    elif isinstance(src, BscGenerator):
        source_obj = {
            "type": "bsc",
            "p_true": src.p_true,
            "match_prob": list(src.match_prob),
            "corr_error": src.corr_error,
            "seed": src.seed,
        }
    elif isinstance(src, TraceSource):
        origin = getattr(src, "origin", None)
        if origin is None:
            raise ValueError("trace source has no file of record; write the trace CSV first")
        origin = Path(origin)
        if instance_dir is not None:
            try:
                origin = origin.relative_to(instance_dir)
            except ValueError:
                pass
        source_obj = {"type": "trace", "path": str(origin)}
    else:
        raise TypeError(f"cannot serialize source {type(src).__name__}")
    return {
        "schema_version": SCHEMA_VERSION,
        "name": instance.name,
        "source": source_obj,
        "costs": list(instance.costs),
        "lambdas": list(instance.lambdas),
    }


def write_instance(path: str | Path, instance: UssInstance) -> None:
    path = Path(path)
    obj = instance_to_dict(instance, instance_dir=path.parent.resolve())
    _write_json(path, obj)


def _write_json(path: Path, obj: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def parse_experiment_config(path: str | Path) -> dict:
    """Read a simulate config; the base seed comes from the command line."""
    path = Path(path)
    obj = _load_json(path)
    where = str(path)
    _check_schema(obj, where)
    _require_keys(
        obj,
        where,
        {"schema_version", "instance", "algorithms"},
        {"horizon", "repeats", "parallelism", "out_dir"},
    )
    inst_path = Path(obj["instance"])
    if not inst_path.is_absolute():
        inst_path = path.parent / inst_path
    algorithms = obj["algorithms"]
    if not isinstance(algorithms, list) or not algorithms:
        raise FileFormatError(f"{where}: algorithms must be a non-empty list")
    for spec in algorithms:
        try:
            parse_algorithm(str(spec))
        except ValueError as exc:
            raise FileFormatError(f"{where}: {exc}") from None
    return {
        "instance_path": inst_path,
        "algorithms": tuple(str(a) for a in algorithms),
        "horizon": int(obj.get("horizon", 10_000)),
        "repeats": int(obj.get("repeats", 500)),
        "parallelism": int(obj.get("parallelism", 1)),
        "out_dir": obj.get("out_dir"),
    }


def parse_sweep_config(path: str | Path) -> dict:
    path = Path(path)
    obj = _load_json(path)
    where = str(path)
    _check_schema(obj, where)
    _require_keys(
        obj,
        where,
        {"schema_version", "instance", "schedule"},
        {"horizon", "repeats", "parallelism", "out_dir"},
    )
    inst_path = Path(obj["instance"])
    if not inst_path.is_absolute():
        inst_path = path.parent / inst_path
    schedule = obj["schedule"]
    if not isinstance(schedule, list) or not schedule:
        raise FileFormatError(f"{where}: schedule must be a non-empty list of cost vectors")
    return {
        "instance_path": inst_path,
        "schedule": [[float(v) for v in row] for row in schedule],
        "horizon": int(obj.get("horizon", 10_000)),
        "repeats": int(obj.get("repeats", 100)),
        "parallelism": int(obj.get("parallelism", 1)),
        "out_dir": obj.get("out_dir"),
    }


def _fmt(v: float) -> str:
    return repr(float(v))


def sanitize_label(label: str) -> str:
    return label.replace("(", "_").replace(")", "").replace(",", "_")


def write_regret_csv(path: str | Path, label: str, curve: RegretCurve) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["algorithm", "t", "mean_regret", "ci95", "repeats"])
        for t, mean, ci in zip(curve.t, curve.mean, curve.ci_halfwidth):
            writer.writerow([label, int(t), _fmt(mean), _fmt(ci), curve.repeats])


def write_sweep_csv(path: str | Path, points: Sequence[SweepPoint]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["xi", "cost_vector", "mean_final_regret", "ci95"])
        for pt in points:
            cost_str = " ".join(_fmt(c) for c in pt.costs_cumulative)
            writer.writerow([_fmt(pt.xi), cost_str, _fmt(pt.mean_final_regret), _fmt(pt.ci95)])


def write_report_csv(path: str | Path, report: PropertyReport) -> None:
    """Flat field,arm_i,arm_j,value layout covering the whole report."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["field", "arm_i", "arm_j", "value"])
        for i, g in enumerate(report.gamma, start=1):
            writer.writerow(["gamma", i, "", _fmt(g)])
        for i in range(1, report.k + 1):
            for j in range(i + 1, report.k + 1):
                writer.writerow(["p", i, j, _fmt(report.p[i - 1, j - 1])])
        writer.writerow(["i_star", "", "", report.i_star])
        for i, d in enumerate(report.delta, start=1):
            writer.writerow(["delta", i, "", _fmt(d)])
        writer.writerow(["xi", "", "", _fmt(report.xi)])
        for j in sorted(report.xi_j):
            writer.writerow(["xi_j", j, "", _fmt(report.xi_j[j])])
        writer.writerow(["sd", "", "", "" if report.sd is None else str(report.sd).lower()])
        writer.writerow(["wd", "", "", str(report.wd).lower()])
        writer.writerow(["estimated", "", "", str(report.estimated).lower()])
        if report.n_samples is not None:
            writer.writerow(["n_samples", "", "", report.n_samples])


def write_policy_state_csv(path: str | Path, policy) -> None:
    """Diagnostic dump of per-pair counters: ``i,j,S,F`` per pair.

    For the posterior-sampling policy S and F are the Beta parameters
    (disagreements + 1, agreements + 1); for the confidence-bound policy
    they are the raw disagreement/agreement counts.
    """
    if hasattr(policy, "s") and hasattr(policy, "f"):
        s_mat, f_mat = policy.s, policy.f
    elif hasattr(policy, "disagreements") and hasattr(policy, "n_pairs"):
        s_mat = policy.disagreements
        f_mat = policy.n_pairs - policy.disagreements
    else:
        raise TypeError(f"{type(policy).__name__} carries no pairwise counters")
    k = policy.k
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "S", "F"])
        for i in range(1, k + 1):
            for j in range(i + 1, k + 1):
                writer.writerow([i, j, int(s_mat[i - 1, j - 1]), int(f_mat[i - 1, j - 1])])


def write_metadata(path: str | Path, payload: dict) -> None:
    _write_json(Path(path), payload)
