"""Sequential-selection policies over the cascade.

The Thompson-sampling policy keeps a Beta(1,1)-seeded posterior over
every pairwise disagreement probability and stops at the first arm whose
cost gap to every later arm beats a fresh posterior sample. The UCB
variant replaces the samples with a deterministic lower-confidence
index; it is a reconstruction of a baseline that is only cited, never
stated, by the source material for this package, and should be read as
qualitative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PolicyDecision:
    """Outcome of one selection walk.

    ``samples`` maps the 1-based pair (i, j) to the disagreement value
    the walk actually compared at arm i (a posterior sample for
    Thompson sampling, a confidence index for UCB).
    """

    arm: int
    samples: dict[tuple[int, int], float]
    walk: tuple[int, ...]


def _check_costs(costs_cumulative: Sequence[float]) -> np.ndarray:
    c = np.asarray(costs_cumulative, dtype=float)
    if c.ndim != 1 or c.size < 1:
        raise ValueError("need a 1-D cumulative cost vector")
    return c


class ThompsonSamplingPolicy:
    """Posterior-sampling walk down the cascade.

    ``s[a, b]`` / ``f[a, b]`` hold the Beta parameters for the pair of
    arms (a+1, b+1): disagreements + 1 and agreements + 1. Only the
    upper triangle is meaningful.
    """

    label = "ts"

    def __init__(self, costs_cumulative: Sequence[float]):
        c = _check_costs(costs_cumulative)
        self.k = c.size
        self.costs_cumulative = c
        self.s = np.ones((self.k, self.k))
        self.f = np.ones((self.k, self.k))
        self.t = 0
        # Gap vector per arm a (0-based): C_j - C_a for j > a.
        self._gaps = [c[a + 1:] - c[a] for a in range(self.k)]

    def select(self, rng: np.random.Generator) -> PolicyDecision:
        """Walk arms 1, 2, ... and stop at the first arm whose cost gaps
        strictly beat fresh posterior samples for all later arms."""
        samples: dict[tuple[int, int], float] = {}
        walk: list[int] = []
        for a in range(self.k):
            walk.append(a + 1)
            if a == self.k - 1:
                break
            draws = rng.beta(self.s[a, a + 1:], self.f[a, a + 1:])
            for off, v in enumerate(draws):
                samples[(a + 1, a + 2 + off)] = float(v)
            if np.all(self._gaps[a] > draws):
                break
        return PolicyDecision(arm=walk[-1], samples=samples, walk=tuple(walk))

    def update(self, arm: int, feedback: Sequence[int]) -> None:
        """Record pairwise (dis)agreements among the observed arms 1..arm."""
        if not 1 <= arm <= self.k:
            raise ValueError(f"arm {arm} out of range 1..{self.k}")
        if len(feedback) < arm:
            raise ValueError(f"need feedback from {arm} arms, got {len(feedback)}")
        fb = np.asarray(feedback[:arm], dtype=np.int8)
        for a in range(arm - 1):
            dis = fb[a] != fb[a + 1: arm]
            self.s[a, a + 1: arm] += dis
            self.f[a, a + 1: arm] += ~dis
        self.t += 1


class UcbPolicy:
    """Cascade walk using a lower-confidence index on each disagreement estimate.

    The index is max(0, p_hat - sqrt(alpha * ln t / (2 N))); pairs never
    observed together carry index 0, so from a cold start on a strictly
    increasing cost vector this policy stops at arm 1 and stays there.
    Reconstructed baseline, labeled as such in all outputs.
    """

    def __init__(self, costs_cumulative: Sequence[float], alpha: float = 0.5):
        if alpha <= 0:
            raise ValueError("alpha must be > 0")
        c = _check_costs(costs_cumulative)
        self.k = c.size
        self.costs_cumulative = c
        self.alpha = float(alpha)
        self.disagreements = np.zeros((self.k, self.k))
        self.n_pairs = np.zeros((self.k, self.k))
        self.t = 0
        self._gaps = [c[a + 1:] - c[a] for a in range(self.k)]

    @property
    def label(self) -> str:
        return f"ucb({self.alpha:g})"

    def _indices(self, a: int, t_now: int) -> np.ndarray:
        n = self.n_pairs[a, a + 1:]
        d = self.disagreements[a, a + 1:]
        idx = np.zeros_like(n)
        seen = n > 0
        if seen.any():
            width = np.sqrt(self.alpha * math.log(t_now) / (2.0 * n[seen]))
            idx[seen] = np.maximum(0.0, d[seen] / n[seen] - width)
        return idx

    def select(self, rng: np.random.Generator | None = None) -> PolicyDecision:
        t_now = self.t + 1
        samples: dict[tuple[int, int], float] = {}
        walk: list[int] = []
        for a in range(self.k):
            walk.append(a + 1)
            if a == self.k - 1:
                break
            idx = self._indices(a, t_now)
            for off, v in enumerate(idx):
                samples[(a + 1, a + 2 + off)] = float(v)
            if np.all(self._gaps[a] > idx):
                break
        return PolicyDecision(arm=walk[-1], samples=samples, walk=tuple(walk))

    def update(self, arm: int, feedback: Sequence[int]) -> None:
        if not 1 <= arm <= self.k:
            raise ValueError(f"arm {arm} out of range 1..{self.k}")
        if len(feedback) < arm:
            raise ValueError(f"need feedback from {arm} arms, got {len(feedback)}")
        fb = np.asarray(feedback[:arm], dtype=np.int8)
        for a in range(arm - 1):
            dis = fb[a] != fb[a + 1: arm]
            self.disagreements[a, a + 1: arm] += dis
            self.n_pairs[a, a + 1: arm] += 1
        self.t += 1


class FixedArmPolicy:
    """Plays one arm every round; with the optimal arm this is the
    zero-regret oracle."""

    def __init__(self, k: int, arm: int):
        if not 1 <= arm <= k:
            raise ValueError(f"arm {arm} out of range 1..{k}")
        self.k = int(k)
        self.arm = int(arm)
        self.t = 0

    @property
    def label(self) -> str:
        return f"fixed({self.arm})"

    def select(self, rng: np.random.Generator | None = None) -> PolicyDecision:
        return PolicyDecision(arm=self.arm, samples={}, walk=tuple(range(1, self.arm + 1)))

    def update(self, arm: int, feedback: Sequence[int]) -> None:
        self.t += 1


def preferences(p_tilde: np.ndarray, costs_cumulative: Sequence[float]) -> np.ndarray:
    """Round tournament induced by sampled disagreements versus cost gaps.

    ``rel[a, b]`` is True iff arm a+1 is preferred over arm b+1: the
    cheaper arm wins when its sampled disagreement with the dearer one
    is strictly below the cost gap, the dearer arm wins otherwise (ties
    go to the dearer, lower-error arm). Exactly one direction holds for
    every pair.
    """
    c = _check_costs(costs_cumulative)
    k = c.size
    rel = np.zeros((k, k), dtype=bool)
    for a in range(k):
        for b in range(a + 1, k):
            cheaper_wins = p_tilde[a, b] < c[b] - c[a]
            rel[a, b] = cheaper_wins
            rel[b, a] = not cheaper_wins
    return rel


def transitivity_violations(rel: np.ndarray) -> list[tuple[int, int, int]]:
    """All 1-based triples (i, j, k) where i beats j and j beats k but i
    does not beat k."""
    k = rel.shape[0]
    out: list[tuple[int, int, int]] = []
    for a in range(k):
        for b in range(k):
            if a == b or not rel[a, b]:
                continue
            for d in range(k):
                if d in (a, b):
                    continue
                if rel[b, d] and not rel[a, d]:
                    out.append((a + 1, b + 1, d + 1))
    return out
