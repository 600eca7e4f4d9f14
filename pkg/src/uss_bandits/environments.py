"""Feedback sources: exact table sampling, the synthetic cascade generator,
and round-robin trace replay.

All sampling goes through numpy's PCG64 generator so that a given seed
produces the same stream on every platform. An episode draws its whole
round stream in one ``generate_rounds`` call, which keeps the
environment stream independent of whatever policy consumes it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import JointTable, PropertyReport, UssInstance, report_from_table

# Exact enumeration of a generator is capped at table size 2^(K+1).
MAX_EXACT_K = 12


@dataclass(frozen=True)
class FeedbackRound:
    """One environment draw: hidden truth (when the source exposes it) plus
    the K-bit feedback vector."""

    y_true: int | None
    feedback: tuple[int, ...]


@dataclass(frozen=True)
class BscGenerator:
    """Synthetic cascade channel with correlated errors.

    Each round: the hidden bit Y is Bernoulli(p_true); arm i's feedback
    independently equals Y with probability match_prob[i]; then the
    cascade correlation is enforced (once some arm matches Y, all later
    arms are set to Y); finally, when arm 1 came out correct, each later
    arm is flipped back to the wrong value independently with
    probability corr_error. With corr_error = 0 the resulting
    distribution satisfies strong dominance exactly.
    """

    p_true: float = 0.7
    match_prob: tuple[float, ...] = (0.6, 0.7, 0.8)
    corr_error: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "match_prob", tuple(float(m) for m in self.match_prob))
        probs = (self.p_true, self.corr_error, *self.match_prob)
        if any(not 0.0 <= v <= 1.0 for v in probs):
            raise ValueError("all generator probabilities must lie in [0, 1]")
        if not self.match_prob:
            raise ValueError("need at least one arm")

    @property
    def k(self) -> int:
        return len(self.match_prob)

    def generate(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw n rounds; returns (y, feedback) with shapes (n,), (n, K).

        Always consumes exactly three uniform blocks from ``rng`` so the
        stream position is independent of the outcomes.
        """
        k = self.k
        y = (rng.random(n) < self.p_true).astype(np.int8)
        match = rng.random((n, k)) < np.asarray(self.match_prob)
        flips = rng.random((n, k - 1)) < self.corr_error if k > 1 else None

        any_match = match.any(axis=1)
        first = np.argmax(match, axis=1)  # valid only where any_match
        cols = np.arange(k)
        enforced = match.copy()
        enforced[any_match] |= cols[None, :] >= first[any_match, None]
        if flips is not None:
            arm1_correct = enforced[:, 0]
            enforced[:, 1:] &= ~(flips & arm1_correct[:, None])
        fb = np.where(enforced, y[:, None], 1 - y[:, None]).astype(np.int8)
        return y, fb


class TraceSource:
    """Replays recorded rounds in order, wrapping around when configured."""

    def __init__(self, y: Sequence[int], feedback: np.ndarray, wrap: bool = True):
        y_arr = np.asarray(y, dtype=np.int8)
        fb = np.asarray(feedback, dtype=np.int8)
        if fb.ndim != 2 or fb.shape[0] != y_arr.shape[0]:
            raise ValueError("feedback must be (n_rows, K) aligned with y")
        if fb.shape[0] == 0:
            raise ValueError("trace must contain at least one row")
        bits = np.concatenate([y_arr[:, None], fb], axis=1)
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("trace entries must be 0/1 bits")
        self.y = y_arr
        self.feedback = fb
        self.wrap = bool(wrap)
        self.cursor = 0
        self.origin: str | None = None  # file of record, when loaded from disk

    @property
    def k(self) -> int:
        return int(self.feedback.shape[1])

    def __len__(self) -> int:
        return int(self.y.shape[0])

    def copy(self) -> "TraceSource":
        """Fresh replay starting from the first row."""
        dup = TraceSource(self.y, self.feedback, self.wrap)
        dup.origin = self.origin
        return dup

    def generate(self, n: int, rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
        total = len(self)
        if not self.wrap and self.cursor + n > total:
            raise RuntimeError(
                f"trace exhausted: {total - self.cursor} rows left, {n} requested"
            )
        idx = (self.cursor + np.arange(n)) % total
        self.cursor = (self.cursor + n) % total if self.wrap else self.cursor + n
        return self.y[idx], self.feedback[idx]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TraceSource):
            return NotImplemented
        return (
            self.wrap == other.wrap
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.feedback, other.feedback)
        )


def _table_generate(q: JointTable, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    idx = rng.choice(q.probabilities.size, size=n, p=q.probabilities)
    bits = q.outcome_bits()[idx].astype(np.int8)
    return bits[:, 0], bits[:, 1:]


def generate_rounds(
    source, n: int, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n rounds from any source; returns (y, feedback) arrays."""
    if n < 1:
        raise ValueError("need at least one round")
    if isinstance(source, TraceSource):
        return source.generate(n)
    if rng is None:
        raise ValueError("stochastic sources need an explicit rng")
    if isinstance(source, JointTable):
        return _table_generate(source, n, rng)
    if isinstance(source, BscGenerator):
        return source.generate(n, rng)
    raise TypeError(f"unknown source type {type(source).__name__}")


def sample_round(instance: UssInstance, rng: np.random.Generator | None = None) -> FeedbackRound:
    """One interaction-protocol round from the instance's source."""
    y, fb = generate_rounds(instance.source, 1, rng)
    return FeedbackRound(y_true=int(y[0]), feedback=tuple(int(b) for b in fb[0]))


def make_bsc_instance(
    gen: BscGenerator,
    costs: Sequence[float],
    lambdas: Sequence[float] | None = None,
    name: str = "bsc",
) -> UssInstance:
    """Bundle a cascade generator with marginal costs into an instance."""
    if len(costs) != gen.k:
        raise ValueError(f"expected {gen.k} costs, got {len(costs)}")
    return UssInstance(name=name, source=gen, costs=tuple(costs), lambdas=tuple(lambdas or ()))


def to_joint_table(gen: BscGenerator) -> JointTable:
    """Exact distribution of the generator, by enumerating its latent draws.

    The independent per-arm draws only matter through the first index
    that matched Y, so the enumeration runs over (Y, first match, flip
    pattern) instead of the full 2^K draw vectors.
    """
    k = gen.k
    if k > MAX_EXACT_K:
        raise ValueError(f"exact table limited to K <= {MAX_EXACT_K}, got {k}")
    q = np.asarray(gen.match_prob)
    e = gen.corr_error
    prob: dict[tuple[int, ...], float] = {}

    def add(y: int, match: Sequence[bool], p: float) -> None:
        if p == 0.0:
            return
        outcome = (y, *(y if m else 1 - y for m in match))
        prob[outcome] = prob.get(outcome, 0.0) + p

    for y in (0, 1):
        p_y = gen.p_true if y == 1 else 1.0 - gen.p_true
        # First matching arm m >= 2, or no arm matched: no flips apply.
        none_p = float(np.prod(1.0 - q))
        add(y, [False] * k, p_y * none_p)
        for m in range(2, k + 1):
            p_m = float(np.prod(1.0 - q[: m - 1])) * q[m - 1]
            add(y, [i >= m - 1 for i in range(k)], p_y * p_m)
        # Arm 1 matched: every later arm is correct, then flipped independently.
        for flips in product((0, 1), repeat=k - 1):
            p_f = q[0] * float(np.prod([e if f else 1.0 - e for f in flips]))
            add(y, [True, *(not f for f in flips)], p_y * p_f)

    return JointTable(k, prob)


def load_trace(
    path: str | Path,
    costs: Sequence[float],
    lambdas: Sequence[float] | None = None,
    name: str | None = None,
) -> UssInstance:
    """Read a trace CSV (header ``y,arm1,...,armK``) into a replay instance."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty trace file") from None
        if not header or header[0] != "y":
            raise ValueError(f"{path}: first column must be the label column 'y'")
        k = len(header) - 1
        expected = ["y"] + [f"arm{i}" for i in range(1, k + 1)]
        if header != expected or k < 1:
            raise ValueError(f"{path}: header must be {','.join(expected) if k else 'y,arm1,...'}")
        ys: list[int] = []
        rows: list[list[int]] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != k + 1:
                raise ValueError(f"{path}:{lineno}: expected {k + 1} fields, got {len(row)}")
            try:
                bits = [int(v) for v in row]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer field in {row!r}") from None
            if any(b not in (0, 1) for b in bits):
                raise ValueError(f"{path}:{lineno}: entries must be 0/1 bits")
            ys.append(bits[0])
            rows.append(bits[1:])
    source = TraceSource(ys, np.asarray(rows, dtype=np.int8), wrap=True)
    source.origin = str(path.resolve())
    return UssInstance(
        name=name or path.stem,
        source=source,
        costs=tuple(costs),
        lambdas=tuple(lambdas or ()),
    )


def _empirical_table(y: np.ndarray, fb: np.ndarray) -> JointTable:
    k = fb.shape[1]
    bits = np.concatenate([y[:, None], fb], axis=1).astype(np.int64)
    weights = 1 << np.arange(k, -1, -1)
    packed = bits @ weights
    counts = np.bincount(packed, minlength=2 ** (k + 1))
    dense = counts / counts.sum()
    shifts = np.arange(k, -1, -1)
    outcome_bits = (np.arange(dense.size)[:, None] >> shifts[None, :]) & 1
    prob = {
        tuple(int(b) for b in outcome_bits[i]): float(p)
        for i, p in enumerate(dense)
        if p > 0
    }
    return JointTable(k, prob)


def empirical_properties(
    instance: UssInstance,
    n_samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> PropertyReport:
    """Estimate the instance report from data rather than an exact distribution.

    Trace sources use one exact pass over the whole trace; stochastic
    sources are sampled ``n_samples`` times with the given rng. The
    report is marked estimated either way.
    """
    if isinstance(instance.source, TraceSource):
        src = instance.source.copy()
        y, fb = src.generate(len(src))
        n = len(src)
    else:
        if not n_samples or n_samples < 1:
            raise ValueError("n_samples must be >= 1 for stochastic sources")
        if rng is None:
            raise ValueError("estimating from a stochastic source needs an rng")
        y, fb = generate_rounds(instance.source, n_samples, rng)
        n = int(n_samples)
    table = _empirical_table(y, fb)
    return report_from_table(
        table,
        instance.costs_cumulative,
        instance.lambdas,
        estimated=True,
        n_samples=n,
    )
