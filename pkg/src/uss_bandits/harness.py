"""Episode execution, regret accounting, multi-repeat aggregation, and the
cost-sweep experiment.

Seeding scheme: episode r of an experiment uses seed ``base_seed + r``;
inside an episode, the environment and the policy draw from the two
children of ``SeedSequence(seed).spawn(2)``, so the environment stream
is bit-identical no matter which policy consumes it. Repeats are
embarrassingly parallel; results are merged by repeat index, so the
configured parallelism never changes the output.
"""

from __future__ import annotations

import hashlib
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import JointTable, PropertyReport, UssInstance, report_from_table
from .environments import (
    BscGenerator,
    TraceSource,
    empirical_properties,
    generate_rounds,
    to_joint_table,
)
from .policies import FixedArmPolicy, ThompsonSamplingPolicy, UcbPolicy

# 95% two-sided normal quantile used for confidence half-widths.
CI_Z = 1.96

# Cumulative regret is stored at every round up to this horizon and on a
# logarithmic grid beyond it.
DENSE_HORIZON = 10_000
LOG_GRID_POINTS = 1_000


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: an instance, a list of algorithms, and the protocol."""

    instance: UssInstance
    algorithms: tuple[str, ...]
    horizon: int = 10_000
    repeats: int = 500
    base_seed: int = 0
    parallelism: int = 1
    out_dir: str | None = None

    def __post_init__(self):
        if self.horizon < 1 or self.repeats < 1:
            raise ValueError("horizon and repeats must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        for spec in self.algorithms:
            parse_algorithm(spec)


@dataclass(frozen=True)
class EpisodeResult:
    """Trajectory of one episode: chosen arms, per-round regret, and a
    digest of the environment stream (for cross-policy identity checks)."""

    arms: np.ndarray
    inst_regret: np.ndarray
    rounds_digest: str


@dataclass(frozen=True)
class RegretCurve:
    """Mean cumulative regret with 95% normal-approximation half-widths."""

    t: np.ndarray
    mean: np.ndarray
    ci_halfwidth: np.ndarray
    repeats: int

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def final_ci(self) -> float:
        return float(self.ci_halfwidth[-1])

    def at(self, t: int) -> float:
        """Mean cumulative regret at round t (must be on the grid)."""
        pos = np.searchsorted(self.t, t)
        if pos >= self.t.size or self.t[pos] != t:
            raise KeyError(f"round {t} not on the stored grid")
        return float(self.mean[pos])


_ALG_RE = re.compile(r"^(ts|ucb|fixed)(?:\((-?[0-9.]+)\))?$")


def parse_algorithm(spec: str) -> tuple[str, float | None]:
    """Parse an algorithm spec: ``ts``, ``ucb``, ``ucb(alpha)``, ``fixed(arm)``."""
    m = _ALG_RE.match(spec.strip())
    if not m:
        raise ValueError(f"unknown algorithm spec {spec!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "ts":
        if arg is not None:
            raise ValueError("ts takes no parameter")
        return "ts", None
    if kind == "ucb":
        alpha = 0.5 if arg is None else float(arg)
        if alpha <= 0:
            raise ValueError("ucb alpha must be > 0")
        return "ucb", alpha
    if arg is None:
        raise ValueError("fixed needs an arm, e.g. fixed(2)")
    arm = float(arg)
    if arm != int(arm):
        raise ValueError("fixed arm must be an integer")
    return "fixed", float(int(arm))


def make_policy(spec: str, costs_cumulative: np.ndarray):
    kind, arg = parse_algorithm(spec)
    if kind == "ts":
        return ThompsonSamplingPolicy(costs_cumulative)
    if kind == "ucb":
        return UcbPolicy(costs_cumulative, alpha=arg)
    return FixedArmPolicy(len(costs_cumulative), int(arg))


def true_properties(instance: UssInstance) -> PropertyReport:
    """Ground-truth report used for regret accounting.

    Explicit tables and cascade generators have exact reports (the
    generator is enumerated); trace instances use the full replayed
    trace, which is exact for the population the episodes actually see.
    """
    src = instance.source
    if isinstance(src, JointTable):
        return report_from_table(src, instance.costs_cumulative, instance.lambdas)
    if isinstance(src, BscGenerator):
        table = to_joint_table(src)
        return report_from_table(table, instance.costs_cumulative, instance.lambdas)
    if isinstance(src, TraceSource):
        return empirical_properties(instance)
    raise TypeError(f"cannot derive true properties for source {type(src).__name__}")


def episode_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent environment and policy streams for one episode."""
    env_ss, pol_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(env_ss), np.random.default_rng(pol_ss)


def run_episode(
    instance: UssInstance,
    policy,
    horizon: int,
    seed: int,
    report: PropertyReport | None = None,
) -> EpisodeResult:
    """Play one episode of the interaction protocol and record regret.

    Each round the environment draws a hidden-truth/feedback vector, the
    policy picks a stopping arm, observes the feedback of arms up to it
    (never the truth), and pays the arm's sub-optimality gap in regret.
    """
    if report is None:
        report = true_properties(instance)
    delta = report.delta
    env_rng, pol_rng = episode_rngs(seed)
    source = instance.source.copy() if isinstance(instance.source, TraceSource) else instance.source
    y, fb = generate_rounds(source, horizon, env_rng)
    digest = hashlib.sha256(y.tobytes() + fb.tobytes()).hexdigest()

    arms = np.empty(horizon, dtype=np.int16)
    inst_regret = np.empty(horizon, dtype=float)
    for t in range(horizon):
        arm = policy.select(pol_rng).arm
        arms[t] = arm
        inst_regret[t] = delta[arm - 1]
        policy.update(arm, fb[t, :arm])
    return EpisodeResult(arms=arms, inst_regret=inst_regret, rounds_digest=digest)


def _time_grid(horizon: int) -> np.ndarray:
    if horizon <= DENSE_HORIZON:
        return np.arange(1, horizon + 1)
    pts = np.unique(np.round(np.geomspace(1, horizon, LOG_GRID_POINTS)).astype(np.int64))
    return pts


def _episode_curve(args) -> np.ndarray:
    instance, spec, horizon, seed, report, grid = args
    policy = make_policy(spec, instance.effective_costs_cumulative)
    res = run_episode(instance, policy, horizon, seed, report=report)
    return np.cumsum(res.inst_regret)[grid - 1]


def aggregate_curves(curves: np.ndarray, t_grid: np.ndarray, repeats: int) -> RegretCurve:
    """Mean and 95% half-width over repeat-indexed cumulative-regret rows."""
    mean = curves.mean(axis=0)
    if repeats > 1:
        sd = curves.std(axis=0, ddof=1)
        ci = CI_Z * sd / math.sqrt(repeats)
        # identical repeats have exactly zero spread; squash the one-ulp
        # noise np.mean can introduce there
        ci[np.ptp(curves, axis=0) == 0.0] = 0.0
    else:
        ci = np.zeros_like(mean)
    return RegretCurve(t=t_grid, mean=mean, ci_halfwidth=ci, repeats=repeats)


def run_experiment(
    config: ExperimentConfig,
    report: PropertyReport | None = None,
) -> dict[str, RegretCurve]:
    """Run every configured algorithm for R seeded repeats and aggregate.

    Episode r uses seed ``base_seed + r``; rerunning the same config
    reproduces the same curves bit for bit, with any parallelism.
    """
    if report is None:
        report = true_properties(config.instance)
    grid = _time_grid(config.horizon)
    for spec in config.algorithms:
        kind, arg = parse_algorithm(spec)
        if kind == "fixed" and not 1 <= int(arg) <= config.instance.k:
            raise ValueError(f"{spec}: arm out of range 1..{config.instance.k}")

    out: dict[str, RegretCurve] = {}
    for spec in config.algorithms:
        jobs = [
            (config.instance, spec, config.horizon, config.base_seed + r, report, grid)
            for r in range(config.repeats)
        ]
        if config.parallelism > 1 and config.repeats > 1:
            with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
                rows = list(pool.map(_episode_curve, jobs, chunksize=8))
        else:
            rows = [_episode_curve(job) for job in jobs]
        curves = np.vstack(rows)
        out[spec] = aggregate_curves(curves, grid, config.repeats)
    return out


def kl_bernoulli(x: float, mu: float) -> float:
    """Bernoulli KL divergence d(x, mu) = x ln(x/mu) + (1-x) ln((1-x)/(1-mu)).

    Zero iff x == mu; +inf when mu is degenerate and x differs; always
    at least 2 (x - mu)^2.
    """
    if not (0.0 <= x <= 1.0 and 0.0 <= mu <= 1.0):
        raise ValueError("kl_bernoulli needs x, mu in [0, 1]")
    if x == mu:
        return 0.0
    if mu in (0.0, 1.0):
        return math.inf
    first = 0.0 if x == 0.0 else x * math.log(x / mu)
    second = 0.0 if x == 1.0 else (1.0 - x) * math.log((1.0 - x) / (1.0 - mu))
    return first + second


def bound_curve(
    report: PropertyReport,
    epsilon: float,
    t_grid: Sequence[int],
) -> np.ndarray:
    """Dominant logarithmic regret term of the posterior-sampling analysis.

    Evaluates sum over j > i* of (1 + eps) ln T / d(p_{i*j}, p_{i*j} +
    xi_j) * Delta_j on the grid. The analysis' additive constant term is
    not computable from stated results and is deliberately omitted, so
    this is a shape reference, not a certified envelope. Pairs whose
    disagreement-plus-margin reaches 1 contribute nothing (no sample can
    exceed that threshold). Requires every margin past i* to be
    positive.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    ts = np.asarray(t_grid, dtype=float)
    if np.any(ts < 1):
        raise ValueError("grid rounds must be >= 1")
    coef = 0.0
    for j in range(report.i_star + 1, report.k + 1):
        xi_j = report.xi_j[j]
        if xi_j <= 0:
            raise ValueError(f"bound undefined: xi_{j} = {xi_j} <= 0")
        p = float(report.p[report.i_star - 1, j - 1])
        if p + xi_j >= 1.0:
            continue
        coef += (1.0 + epsilon) * float(report.delta[j - 1]) / kl_bernoulli(p, p + xi_j)
    return coef * np.log(ts)


@dataclass(frozen=True)
class SweepPoint:
    """One cost setting of a sweep: margin, costs, and final mean regret."""

    xi: float
    costs_cumulative: tuple[float, ...]
    mean_final_regret: float
    ci95: float
    i_star: int
    wd: bool


def xi_sweep(
    instance: UssInstance,
    schedule: Sequence[Sequence[float]],
    horizon: int,
    repeats: int,
    base_seed: int,
    parallelism: int = 1,
) -> list[SweepPoint]:
    """Rerun the posterior-sampling policy across a cumulative-cost schedule.

    Each schedule entry is a full cumulative-cost vector; the margin xi
    is computed from the exact disagreement matrix at that entry's own
    optimal arm. All points share the same seeds, so identical cost
    settings produce identical rows.
    """
    points: list[SweepPoint] = []
    for cum in schedule:
        cum = [float(v) for v in cum]
        if len(cum) != instance.k:
            raise ValueError(f"schedule entry needs {instance.k} costs, got {len(cum)}")
        marginal = np.diff(np.concatenate([[0.0], cum]))
        if np.any(marginal < 0):
            raise ValueError(f"schedule entry {cum} has a negative cost increment")
        variant = UssInstance(
            name=f"{instance.name}@{','.join(f'{v:g}' for v in cum)}",
            source=instance.source,
            costs=tuple(marginal),
            lambdas=instance.lambdas,
        )
        report = true_properties(variant)
        config = ExperimentConfig(
            instance=variant,
            algorithms=("ts",),
            horizon=horizon,
            repeats=repeats,
            base_seed=base_seed,
            parallelism=parallelism,
        )
        curve = run_experiment(config, report=report)["ts"]
        points.append(
            SweepPoint(
                xi=report.xi,
                costs_cumulative=tuple(cum),
                mean_final_regret=curve.final_mean,
                ci95=curve.final_ci,
                i_star=report.i_star,
                wd=report.wd,
            )
        )
    return points


def xi_transition_ok(points: Sequence[SweepPoint]) -> bool:
    """True when every positive-margin point sits strictly below every
    negative-margin point in final mean regret."""
    pos = [p.mean_final_regret for p in points if p.xi > 0]
    neg = [p.mean_final_regret for p in points if p.xi < 0]
    if not pos or not neg:
        return True
    return max(pos) < min(neg)
