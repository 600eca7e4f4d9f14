"""Cascade construction: one logistic classifier per stage, each trained
on a nested feature subset, and trace export in the simulator's CSV
format (header ``y,arm1,...,armK``).

Classifiers are trained on the full dataset, so the exported per-stage
error rates are in-sample rates over exactly the rows the simulator will
replay. Training is deterministic for a fixed seed: fixed solver, fixed
iteration budget, data kept in file order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

SCHEMA_VERSION = 1


class SpecError(ValueError):
    """The cascade spec file failed validation."""


@dataclass(frozen=True)
class CascadeSpec:
    """Stage layout for one dataset.

    ``stages`` lists the feature columns per stage; each stage must
    contain every column of the previous one (the cascade only ever adds
    information). ``columns`` names the dataset's columns when the file
    has no header row. Rows containing ``missing_values`` in any used
    column are dropped. Labels are binarized as value > binarize_above
    when that threshold is set; otherwise they must already be 0/1.
    """

    label: str
    stages: tuple[tuple[str, ...], ...]
    has_header: bool = True
    columns: tuple[str, ...] = ()
    missing_values: tuple[str, ...] = ()
    binarize_above: float | None = None

    def __post_init__(self):
        if not self.stages:
            raise SpecError("need at least one stage")
        for idx in range(1, len(self.stages)):
            prev, cur = set(self.stages[idx - 1]), set(self.stages[idx])
            if not prev <= cur:
                missing = sorted(prev - cur)
                raise SpecError(
                    f"stage {idx + 1} must contain every stage-{idx} column; missing {missing}"
                )
        for idx, stage in enumerate(self.stages, start=1):
            if len(set(stage)) != len(stage):
                raise SpecError(f"stage {idx} repeats a column")
            if self.label in stage:
                raise SpecError(f"stage {idx} must not include the label column")
        if not self.has_header and not self.columns:
            raise SpecError("headerless datasets need an explicit 'columns' list")

    @property
    def k(self) -> int:
        return len(self.stages)

    @property
    def used_columns(self) -> tuple[str, ...]:
        return (*self.stages[-1], self.label)


def load_spec(path: str | Path) -> CascadeSpec:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    known = {
        "schema_version", "label", "stages", "has_header",
        "columns", "missing_values", "binarize_above",
    }
    unknown = set(obj) - known
    if unknown:
        raise SpecError(f"{path}: unknown fields {sorted(unknown)}")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise SpecError(f"{path}: schema_version must be {SCHEMA_VERSION}")
    try:
        return CascadeSpec(
            label=str(obj["label"]),
            stages=tuple(tuple(str(c) for c in stage) for stage in obj["stages"]),
            has_header=bool(obj.get("has_header", True)),
            columns=tuple(str(c) for c in obj.get("columns", ())),
            missing_values=tuple(str(v) for v in obj.get("missing_values", ())),
            binarize_above=obj.get("binarize_above"),
        )
    except KeyError as exc:
        raise SpecError(f"{path}: missing field {exc}") from None


def load_dataset(path: str | Path, spec: CascadeSpec) -> pd.DataFrame:
    """Read the dataset, drop rows with missing values in used columns,
    and binarize the label; row order stays as in the file."""
    path = Path(path)
    if spec.has_header:
        df = pd.read_csv(path)
    else:
        df = pd.read_csv(path, header=None, names=list(spec.columns))
    missing_cols = [c for c in spec.used_columns if c not in df.columns]
    if missing_cols:
        raise SpecError(f"{path}: dataset lacks columns {missing_cols}")
    df = df[list(spec.used_columns)]
    if spec.missing_values:
        mask = df.astype(str).isin(set(spec.missing_values)).any(axis=1)
        df = df[~mask]
    df = df.apply(pd.to_numeric)
    if spec.binarize_above is not None:
        df[spec.label] = (df[spec.label] > spec.binarize_above).astype(int)
    labels = set(df[spec.label].unique())
    if not labels <= {0, 1}:
        raise SpecError(f"{path}: label column is not binary (values {sorted(labels)})")
    if len(df) == 0:
        raise SpecError(f"{path}: no usable rows")
    return df.reset_index(drop=True)


def train_cascade(df: pd.DataFrame, spec: CascadeSpec, seed: int = 0) -> np.ndarray:
    """Fit one scaled logistic classifier per stage; returns the (n, K)
    0/1 in-sample prediction matrix in dataset order."""
    y = df[spec.label].to_numpy()
    preds = np.empty((len(df), spec.k), dtype=np.int8)
    for s, stage in enumerate(spec.stages):
        x = df[list(stage)].to_numpy(dtype=float)
        model = make_pipeline(
            StandardScaler(),
            LogisticRegression(max_iter=1000, solver="lbfgs", C=1.0, random_state=seed),
        )
        model.fit(x, y)
        preds[:, s] = model.predict(x).astype(np.int8)
    return preds


def write_trace(path: str | Path, y: np.ndarray, preds: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    k = preds.shape[1]
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("y," + ",".join(f"arm{i}" for i in range(1, k + 1)) + "\n")
        for t in range(len(y)):
            fh.write(",".join(str(int(b)) for b in (y[t], *preds[t])) + "\n")


def build_trace(dataset: str | Path, spec: CascadeSpec, out: str | Path, seed: int = 0) -> int:
    """Train the cascade and export the trace; returns the row count."""
    df = load_dataset(dataset, spec)
    preds = train_cascade(df, spec, seed=seed)
    write_trace(out, df[spec.label].to_numpy(), preds)
    return len(df)


def read_trace(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a trace CSV back into (y, predictions) arrays."""
    path = Path(path)
    df = pd.read_csv(path)
    if df.columns[0] != "y" or list(df.columns[1:]) != [
        f"arm{i}" for i in range(1, len(df.columns))
    ]:
        raise SpecError(f"{path}: not a trace file (header {list(df.columns)})")
    values = df.to_numpy(dtype=np.int64)
    if not np.isin(values, (0, 1)).all():
        raise SpecError(f"{path}: trace entries must be 0/1")
    return values[:, 0], values[:, 1:]


def report_rates(path: str | Path) -> dict:
    """Exact per-stage error rates and pairwise disagreement rates over a
    trace, by direct counting."""
    y, preds = read_trace(path)
    n, k = preds.shape
    gamma = [float(np.count_nonzero(preds[:, i] != y)) / n for i in range(k)]
    disagreement = {}
    for i in range(k):
        for j in range(i + 1, k):
            disagreement[(i + 1, j + 1)] = (
                float(np.count_nonzero(preds[:, i] != preds[:, j])) / n
            )
    return {"rows": n, "stages": k, "gamma": gamma, "disagreement": disagreement}
