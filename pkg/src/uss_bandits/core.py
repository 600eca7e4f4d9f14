"""Domain types and exact oracles for unsupervised sequential selection.

Arms form a cost-ordered cascade 1..K. The environment hides a binary
truth Y and reveals per-arm feedbacks Y^1..Y^K; an arm's error rate is
the probability its feedback differs from Y, and the only label-free
observable is the pairwise disagreement probability between arms.

Convention used throughout the package: arm *labels* are 1-based
(matching cascade positions), while vectors/matrices use 0-based storage
(entry ``[a]`` or ``[a, b]`` refers to arms ``a+1`` and ``b+1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

# Absolute tolerance for detecting ties between total expected costs.
TIE_TOL = 1e-12

# Probability tables must sum to one within this tolerance.
TABLE_SUM_TOL = 1e-12


class JointTable:
    """Explicit joint distribution of (Y, Y^1, ..., Y^K) over {0,1}^(K+1).

    Probabilities are stored densely, indexed by the packed outcome
    ``y * 2^K + y1 * 2^(K-1) + ... + yK``. Outcomes absent from the
    input mapping read as probability zero.
    """

    def __init__(self, k: int, prob: Mapping[tuple[int, ...], float]):
        if k < 1:
            raise ValueError(f"arm count must be >= 1, got {k}")
        self.k = int(k)
        dense = np.zeros(2 ** (k + 1))
        for outcome, p in prob.items():
            if len(outcome) != k + 1 or any(b not in (0, 1) for b in outcome):
                raise ValueError(f"outcome {outcome!r} is not a {k + 1}-bit vector")
            if p < 0:
                raise ValueError(f"negative probability {p!r} for outcome {outcome!r}")
            dense[self._index(outcome)] += p
        total = dense.sum()
        if abs(total - 1.0) > TABLE_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {TABLE_SUM_TOL}")
        self._dense = dense
        self._dense.setflags(write=False)

    def _index(self, outcome: Sequence[int]) -> int:
        idx = 0
        for b in outcome:
            idx = (idx << 1) | b
        return idx

    @property
    def probabilities(self) -> np.ndarray:
        """Dense probability vector over packed outcomes (read-only)."""
        return self._dense

    def outcome_bits(self) -> np.ndarray:
        """(2^(K+1), K+1) matrix of outcome bits; column 0 is Y."""
        n = 2 ** (self.k + 1)
        shifts = np.arange(self.k, -1, -1)
        return (np.arange(n)[:, None] >> shifts[None, :]) & 1

    def prob(self, outcome: Sequence[int]) -> float:
        return float(self._dense[self._index(tuple(outcome))])

    def as_dict(self) -> dict[tuple[int, ...], float]:
        """Mapping of nonzero outcomes to probabilities."""
        bits = self.outcome_bits()
        return {
            tuple(int(b) for b in bits[i]): float(p)
            for i, p in enumerate(self._dense)
            if p > 0.0
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JointTable):
            return NotImplemented
        return self.k == other.k and np.array_equal(self._dense, other._dense)

    def __repr__(self) -> str:
        return f"JointTable(k={self.k}, outcomes={int(np.count_nonzero(self._dense))})"


def error_rates(q: JointTable) -> np.ndarray:
    """Per-arm error rates: gamma_i = P(Y^i != Y)."""
    bits = q.outcome_bits()
    y = bits[:, :1]
    mismatch = bits[:, 1:] != y
    return q.probabilities @ mismatch


def disagreement_matrix(q: JointTable) -> np.ndarray:
    """K x K matrix with p[a, b] = P(Y^(a+1) != Y^(b+1)); diagonal zero."""
    fb = q.outcome_bits()[:, 1:]
    diff = fb[:, :, None] != fb[:, None, :]
    return np.einsum("o,oij->ij", q.probabilities, diff)


def correct_incorrect_matrix(q: JointTable) -> np.ndarray:
    """Matrix with m[a, b] = P(Y^(a+1) = Y, Y^(b+1) != Y)."""
    bits = q.outcome_bits()
    y = bits[:, :1]
    match = bits[:, 1:] == y
    joint = match[:, :, None] & ~match[:, None, :]
    return np.einsum("o,oij->ij", q.probabilities, joint)


def optimal_arm(
    gamma: Sequence[float],
    costs_cumulative: Sequence[float],
    lambdas: Sequence[float] | None = None,
) -> int:
    """Largest-index minimizer of the total expected cost gamma_i + lambda_i * C_i.

    Ties are detected with absolute tolerance ``TIE_TOL`` and broken
    toward the larger index (risk-averse: prefer the lower-error arm
    among equally good ones). Returns a 1-based arm label.
    """
    g = np.asarray(gamma, dtype=float)
    c = np.asarray(costs_cumulative, dtype=float)
    if g.size == 0:
        raise ValueError("empty instance")
    lam = np.ones_like(g) if lambdas is None else np.asarray(lambdas, dtype=float)
    if not (g.shape == c.shape == lam.shape):
        raise ValueError("gamma, costs and lambdas must have equal length")
    totals = g + lam * c
    if not np.all(np.isfinite(totals)):
        raise ValueError("non-finite total expected cost")
    best = totals.min()
    tied = np.flatnonzero(totals <= best + TIE_TOL)
    return int(tied[-1]) + 1


def sub_optimality_gaps(
    gamma: Sequence[float],
    costs_cumulative: Sequence[float],
    i_star: int,
    lambdas: Sequence[float] | None = None,
) -> np.ndarray:
    """Gap vector Delta_j = (gamma_j + C_j) - (gamma_i* + C_i*).

    ``i_star`` must be the optimal arm for the same inputs; gaps within
    the tie tolerance of zero are clamped to exactly zero.
    """
    expected = optimal_arm(gamma, costs_cumulative, lambdas)
    if i_star != expected:
        raise ValueError(f"i_star={i_star} inconsistent with optimal arm {expected}")
    g = np.asarray(gamma, dtype=float)
    c = np.asarray(costs_cumulative, dtype=float)
    lam = np.ones_like(g) if lambdas is None else np.asarray(lambdas, dtype=float)
    totals = g + lam * c
    delta = totals - totals[i_star - 1]
    delta[(delta < 0) & (delta >= -TIE_TOL)] = 0.0
    delta[i_star - 1] = 0.0
    return delta


def xi_values(
    p: np.ndarray,
    costs_cumulative: Sequence[float],
    i_star: int,
) -> tuple[float, dict[int, float]]:
    """WD margins per arm and the overall margin.

    For j < i*: xi_j = p_{i* j} - (C_{i*} - C_j); for j > i*:
    xi_j = C_j - C_{i*} - p_{i* j}. The scalar xi is the minimum over
    j > i*; when i* is the last arm there is nothing to dominate and xi
    is +inf (weak dominance holds vacuously).
    """
    c = np.asarray(costs_cumulative, dtype=float)
    k = c.size
    if not (1 <= i_star <= k):
        raise ValueError(f"i_star={i_star} out of range for K={k}")
    s = i_star - 1
    per_arm: dict[int, float] = {}
    for j in range(k):
        if j == s:
            continue
        if j < s:
            per_arm[j + 1] = float(p[s, j] - (c[s] - c[j]))
        else:
            per_arm[j + 1] = float(c[j] - c[s] - p[s, j])
    if i_star == k:
        return math.inf, per_arm
    xi = min(per_arm[j] for j in range(i_star + 1, k + 1))
    return xi, per_arm


def check_wd(p: np.ndarray, costs_cumulative: Sequence[float], i_star: int) -> bool:
    """Weak dominance: every arm past i* costs strictly more extra than it disagrees.

    Holds iff xi > 0 (strict, no tolerance) or i* is the last arm.
    """
    xi, _ = xi_values(p, costs_cumulative, i_star)
    return xi > 0.0


def check_sd(q: JointTable) -> bool:
    """Strong dominance: once an arm matches Y, every later arm matches Y too.

    Checked over all positive-probability outcomes of an explicit table.
    """
    bits = q.outcome_bits()
    probs = q.probabilities
    for idx in np.flatnonzero(probs > 0.0):
        y = bits[idx, 0]
        fb = bits[idx, 1:]
        seen_match = False
        for b in fb:
            if seen_match and b != y:
                return False
            if b == y:
                seen_match = True
    return True


def candidate_set_b(
    p: np.ndarray,
    costs_cumulative: Sequence[float],
) -> tuple[set[int], int]:
    """Arms whose cost gaps to every later arm strictly exceed the disagreement.

    Returns (B, min(B)) where B = {i : forall j > i, C_j - C_i > p_ij}
    together with the last arm, which always qualifies vacuously. Under
    weak dominance with the true p, min(B) is the optimal arm.
    """
    c = np.asarray(costs_cumulative, dtype=float)
    k = c.size
    b = {k}
    for i in range(k - 1):
        if all(c[j] - c[i] > p[i, j] for j in range(i + 1, k)):
            b.add(i + 1)
    return b, min(b)


def verify_prop1(q: JointTable) -> float:
    """Max residual of the identity gamma_i - gamma_j = p_ij - 2 P(Y^i=Y, Y^j!=Y).

    The identity holds algebraically for every explicit table; the
    residual is pure floating-point noise and should be <= 1e-12.
    """
    g = error_rates(q)
    p = disagreement_matrix(q)
    m = correct_incorrect_matrix(q)
    resid = (g[:, None] - g[None, :]) - (p - 2.0 * m)
    return float(np.abs(resid).max())


@dataclass(frozen=True)
class PropertyReport:
    """Instance-level quantities: error rates, disagreements, optimal arm, margins.

    ``estimated`` is False when derived from an exact distribution and
    True when derived from sampled or replayed data. ``sd`` is None when
    the data did not allow a strong-dominance check.
    """

    gamma: np.ndarray
    p: np.ndarray
    i_star: int
    delta: np.ndarray
    xi: float
    xi_j: dict[int, float]
    sd: bool | None
    wd: bool
    estimated: bool = False
    n_samples: int | None = None

    @property
    def k(self) -> int:
        return int(self.gamma.size)

    def __post_init__(self):
        self.gamma.setflags(write=False)
        self.p.setflags(write=False)
        self.delta.setflags(write=False)


def report_from_table(
    q: JointTable,
    costs_cumulative: Sequence[float],
    lambdas: Sequence[float] | None = None,
    estimated: bool = False,
    n_samples: int | None = None,
) -> PropertyReport:
    """Run every oracle on an explicit table and bundle the results.

    Trade-off weights are absorbed into the costs (effective cumulative
    cost lambda_i * C_i), which must remain non-decreasing.
    """
    c = np.asarray(costs_cumulative, dtype=float)
    if c.size != q.k:
        raise ValueError(f"expected {q.k} cumulative costs, got {c.size}")
    lam = np.ones_like(c) if lambdas is None else np.asarray(lambdas, dtype=float)
    eff = lam * c
    if np.any(np.diff(eff) < 0):
        raise ValueError("effective cumulative costs must be non-decreasing")
    gamma = error_rates(q)
    p = disagreement_matrix(q)
    i_star = optimal_arm(gamma, c, lam)
    delta = sub_optimality_gaps(gamma, c, i_star, lam)
    xi, xi_j = xi_values(p, eff, i_star)
    return PropertyReport(
        gamma=gamma,
        p=p,
        i_star=i_star,
        delta=delta,
        xi=xi,
        xi_j=xi_j,
        sd=check_sd(q),
        wd=check_wd(p, eff, i_star),
        estimated=estimated,
        n_samples=n_samples,
    )


@dataclass(frozen=True)
class UssInstance:
    """A feedback source paired with per-arm marginal costs and trade-off weights.

    ``source`` is a JointTable, BscGenerator or TraceSource (anything
    exposing ``k``); ``costs`` are marginal per-arm costs c_i >= 0 so
    the cumulative costs C_i are automatically non-decreasing.
    """

    name: str
    source: Any
    costs: tuple[float, ...]
    lambdas: tuple[float, ...] = ()

    def __post_init__(self):
        k = self.source.k
        costs = tuple(float(c) for c in self.costs)
        lambdas = self.lambdas or tuple(1.0 for _ in costs)
        lambdas = tuple(float(v) for v in lambdas)
        if len(costs) != k or len(lambdas) != k:
            raise ValueError(f"expected {k} costs and lambdas, got {len(costs)}/{len(lambdas)}")
        if any(c < 0 for c in costs):
            raise ValueError("marginal costs must be >= 0")
        if any(v <= 0 for v in lambdas):
            raise ValueError("trade-off weights must be > 0")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "lambdas", lambdas)

    @property
    def k(self) -> int:
        return int(self.source.k)

    @property
    def costs_cumulative(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.costs, dtype=float))

    @property
    def effective_costs_cumulative(self) -> np.ndarray:
        """Cumulative costs with trade-off weights absorbed."""
        return np.asarray(self.lambdas, dtype=float) * self.costs_cumulative
