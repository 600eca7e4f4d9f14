"""Shared fixtures and independent enumeration oracles.

The oracle helpers here recompute error rates and disagreement
probabilities directly from outcome dictionaries, without touching the
library's dense-vector implementation, so library results can be checked
against a second route.
"""

from itertools import product

import numpy as np
import pytest

from uss_bandits import JointTable


def enum_error_rates(prob: dict, k: int) -> list[float]:
    """gamma_i by direct summation over outcome tuples."""
    out = [0.0] * k
    for outcome, p in prob.items():
        y, fb = outcome[0], outcome[1:]
        for i in range(k):
            if fb[i] != y:
                out[i] += p
    return out


def enum_disagreement(prob: dict, k: int) -> np.ndarray:
    """p_ij by direct summation over outcome tuples."""
    mat = np.zeros((k, k))
    for outcome, p in prob.items():
        fb = outcome[1:]
        for i in range(k):
            for j in range(k):
                if fb[i] != fb[j]:
                    mat[i, j] += p
    return mat


def enum_correct_incorrect(prob: dict, k: int) -> np.ndarray:
    """P(Y^i = Y, Y^j != Y) by direct summation."""
    mat = np.zeros((k, k))
    for outcome, p in prob.items():
        y, fb = outcome[0], outcome[1:]
        for i in range(k):
            for j in range(k):
                if fb[i] == y and fb[j] != y:
                    mat[i, j] += p
    return mat


def random_table(rng: np.random.Generator, k: int) -> JointTable:
    """Dirichlet-distributed explicit table over all 2^(k+1) outcomes."""
    n = 2 ** (k + 1)
    probs = rng.dirichlet(np.ones(n))
    outcomes = list(product((0, 1), repeat=k + 1))
    return JointTable(k, dict(zip(outcomes, probs)))


def random_sd_table(rng: np.random.Generator, k: int) -> JointTable:
    """Random table whose correct arms always form a suffix of the cascade."""
    atoms = [(y, m) for y in (0, 1) for m in range(1, k + 2)]
    weights = rng.dirichlet(np.ones(len(atoms)))
    prob: dict = {}
    for (y, m), w in zip(atoms, weights):
        fb = tuple(y if i + 1 >= m else 1 - y for i in range(k))
        outcome = (y, *fb)
        prob[outcome] = prob.get(outcome, 0.0) + w
    return JointTable(k, prob)


def product_table(p_true: float, gammas) -> JointTable:
    """Independent-error table with exactly the given per-arm error rates."""
    k = len(gammas)
    prob = {}
    for outcome in product((0, 1), repeat=k + 1):
        y, fb = outcome[0], outcome[1:]
        p = p_true if y == 1 else 1.0 - p_true
        for i in range(k):
            p *= gammas[i] if fb[i] != y else 1.0 - gammas[i]
        prob[outcome] = p
    return JointTable(k, prob)


def random_cumulative_costs(rng: np.random.Generator, k: int) -> np.ndarray:
    return np.cumsum(rng.uniform(0.0, 0.8, size=k))


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.SeedSequence(20240817))
