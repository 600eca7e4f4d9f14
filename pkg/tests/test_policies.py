"""Selection-walk behavior, posterior bookkeeping, and the preference
tournament diagnostics."""

import numpy as np
import pytest

from uss_bandits import (
    BscGenerator,
    FixedArmPolicy,
    ThompsonSamplingPolicy,
    UcbPolicy,
    UssInstance,
    candidate_set_b,
    make_bsc_instance,
    preferences,
    run_episode,
    to_joint_table,
    transitivity_violations,
    true_properties,
)
from uss_bandits.harness import episode_rngs, make_policy


def fresh_rng(seed=0):
    return np.random.default_rng(np.random.SeedSequence(seed))


class TestThompsonSelect:
    def test_single_arm(self):
        policy = ThompsonSamplingPolicy((0.3,))
        rng = fresh_rng(1)
        for _ in range(10):
            d = policy.select(rng)
            assert d.arm == 1 and d.walk == (1,) and d.samples == {}

    def test_zero_gaps_forces_last_arm(self):
        # every posterior sample is strictly positive, so a zero cost gap
        # can never beat it and the walk falls through to the last arm
        policy = ThompsonSamplingPolicy((0.0, 0.0, 0.0))
        rng = fresh_rng(2)
        for _ in range(50):
            d = policy.select(rng)
            assert d.arm == 3 and d.walk == (1, 2, 3)

    def test_huge_gaps_stop_at_first_arm(self):
        policy = ThompsonSamplingPolicy((0.0, 1.5, 3.0))
        rng = fresh_rng(3)
        for _ in range(50):
            d = policy.select(rng)
            assert d.arm == 1 and d.walk == (1,)
            assert set(d.samples) == {(1, 2), (1, 3)}

    def test_walk_is_prefix_and_samples_cover_examined_arms(self):
        policy = ThompsonSamplingPolicy((0.0, 0.05, 0.1, 0.2))
        rng = fresh_rng(4)
        for _ in range(200):
            d = policy.select(rng)
            assert d.walk == tuple(range(1, d.arm + 1))
            # every examined arm except the last of the cascade draws one
            # fresh sample per later arm
            expected_pairs = {
                (i, j)
                for i in d.walk
                if i < policy.k
                for j in range(i + 1, policy.k + 1)
            }
            assert set(d.samples) == expected_pairs


class TestThompsonUpdate:
    def test_pair_update_arm2(self):
        policy = ThompsonSamplingPolicy((0.1, 0.2, 0.3))
        policy.update(2, (0, 1))
        assert policy.s[0, 1] == 2 and policy.f[0, 1] == 1
        assert policy.s[0, 2] == 1 and policy.f[0, 2] == 1
        assert policy.s[1, 2] == 1 and policy.f[1, 2] == 1

    def test_arm1_updates_nothing(self):
        policy = ThompsonSamplingPolicy((0.1, 0.2, 0.3))
        policy.update(1, (1,))
        assert (policy.s == 1).all() and (policy.f == 1).all()
        assert policy.t == 1

    def test_full_cascade_update(self):
        policy = ThompsonSamplingPolicy((0.1, 0.2, 0.3))
        policy.update(3, (0, 0, 1))
        assert policy.f[0, 1] == 2  # arms 1,2 agree
        assert policy.s[0, 2] == 2  # arms 1,3 disagree
        assert policy.s[1, 2] == 2  # arms 2,3 disagree

    def test_validates_arguments(self):
        policy = ThompsonSamplingPolicy((0.1, 0.2))
        with pytest.raises(ValueError, match="out of range"):
            policy.update(3, (0, 0, 0))
        with pytest.raises(ValueError, match="feedback"):
            policy.update(2, (0,))

    def test_counter_conservation_and_censoring(self):
        gen = BscGenerator()
        inst = make_bsc_instance(gen, (0.05, 0.1, 0.3), name="x")
        report = true_properties(inst)
        policy = ThompsonSamplingPolicy(inst.effective_costs_cumulative)
        res = run_episode(inst, policy, 500, seed=17, report=report)
        arms = res.arms
        for i in range(1, policy.k + 1):
            for j in range(i + 1, policy.k + 1):
                observed = int((arms >= j).sum())
                assert policy.s[i - 1, j - 1] + policy.f[i - 1, j - 1] - 2 == observed


class TestUcb:
    def test_cold_start_stops_at_arm1_with_positive_gaps(self):
        policy = UcbPolicy((0.0, 0.1, 0.2), alpha=0.5)
        d = policy.select()
        assert d.arm == 1
        assert all(v == 0.0 for v in d.samples.values())

    def test_cold_start_walks_past_zero_gap(self):
        # a zero cost gap cannot strictly exceed the index 0
        policy = UcbPolicy((0.0, 0.0, 0.2), alpha=0.5)
        d = policy.select()
        assert d.arm == 2

    def test_converged_state_matches_candidate_set(self, rng):
        from conftest import random_cumulative_costs, random_table
        from uss_bandits import disagreement_matrix

        for _ in range(20):
            k = int(rng.integers(2, 6))
            q = random_table(rng, k)
            c = random_cumulative_costs(rng, k)
            p = disagreement_matrix(q)
            policy = UcbPolicy(c, alpha=0.5)
            n = 10_000_000
            policy.n_pairs[:] = n
            policy.disagreements[:] = p * n
            policy.t = 1000
            _, expected = candidate_set_b(p, c)
            assert policy.select().arm == expected

    def test_deterministic_decisions(self):
        gen = BscGenerator()
        inst = make_bsc_instance(gen, (0.05, 0.1, 0.3), name="x")
        report = true_properties(inst)
        arms = []
        for _ in range(2):
            policy = UcbPolicy(inst.effective_costs_cumulative, alpha=0.5)
            res = run_episode(inst, policy, 300, seed=5, report=report)
            arms.append(res.arms.copy())
        assert np.array_equal(arms[0], arms[1])

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            UcbPolicy((0.1, 0.2), alpha=0.0)


class TestFixedArm:
    def test_always_selects_its_arm(self):
        policy = FixedArmPolicy(3, 2)
        for _ in range(5):
            d = policy.select()
            assert d.arm == 2 and d.walk == (1, 2)
            policy.update(2, (0, 1))
        assert policy.t == 5

    def test_validates_range(self):
        with pytest.raises(ValueError):
            FixedArmPolicy(3, 0)
        with pytest.raises(ValueError):
            FixedArmPolicy(3, 4)


class TestRngSeparation:
    def test_environment_stream_identical_across_policies(self):
        gen = BscGenerator()
        inst = make_bsc_instance(gen, (0.05, 0.1, 0.3), name="x")
        report = true_properties(inst)
        digests = set()
        for spec in ("ts", "fixed(2)", "ucb(0.5)"):
            policy = make_policy(spec, inst.effective_costs_cumulative)
            res = run_episode(inst, policy, 200, seed=123, report=report)
            digests.add(res.rounds_digest)
        assert len(digests) == 1

    def test_env_and_policy_streams_differ(self):
        env_rng, pol_rng = episode_rngs(7)
        assert env_rng.random(4).tolist() != pol_rng.random(4).tolist()


class TestPreferences:
    def test_cheap_arm_preferred_below_gap(self):
        p_tilde = np.zeros((2, 2))
        p_tilde[0, 1] = p_tilde[1, 0] = 0.3
        rel = preferences(p_tilde, (0.0, 0.5))
        assert rel[0, 1] and not rel[1, 0]

    def test_tie_goes_to_dearer_arm(self):
        p_tilde = np.zeros((2, 2))
        p_tilde[0, 1] = p_tilde[1, 0] = 0.5
        rel = preferences(p_tilde, (0.0, 0.5))
        assert rel[1, 0] and not rel[0, 1]

    def test_tournament_property(self, rng):
        for _ in range(50):
            k = int(rng.integers(2, 7))
            p_tilde = np.zeros((k, k))
            iu = np.triu_indices(k, 1)
            vals = rng.uniform(size=len(iu[0]))
            p_tilde[iu] = vals
            p_tilde.T[iu] = vals
            c = np.cumsum(rng.uniform(0, 0.5, size=k))
            rel = preferences(p_tilde, c)
            for a in range(k):
                assert not rel[a, a]
                for b in range(a + 1, k):
                    assert rel[a, b] != rel[b, a]


class TestTransitivity:
    def test_two_arms_never_violate(self, rng):
        p_tilde = np.array([[0.0, 0.4], [0.4, 0.0]])
        rel = preferences(p_tilde, (0.0, 0.3))
        assert transitivity_violations(rel) == []

    def test_total_order_has_no_violations(self):
        # relation induced by a strict ranking 3 > 1 > 2
        rel = np.zeros((3, 3), dtype=bool)
        order = [2, 0, 1]
        for hi in range(3):
            for lo in range(hi + 1, 3):
                rel[order[hi], order[lo]] = True
        assert transitivity_violations(rel) == []

    def test_crafted_cycle_found_by_brute_force(self):
        # samples chosen so 1 beats 2, 2 beats 3, but 3 beats 1
        p_tilde = np.zeros((3, 3))
        p_tilde[0, 1] = p_tilde[1, 0] = 0.1
        p_tilde[1, 2] = p_tilde[2, 1] = 0.1
        p_tilde[0, 2] = p_tilde[2, 0] = 0.9
        costs = (0.0, 0.4, 0.8)
        rel = preferences(p_tilde, costs)
        assert rel[0, 1] and rel[1, 2] and rel[2, 0]
        violations = transitivity_violations(rel)
        expected = []
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    if len({a, b, c}) == 3 and rel[a, b] and rel[b, c] and not rel[a, c]:
                        expected.append((a + 1, b + 1, c + 1))
        assert violations == expected
        assert set(violations) == {(1, 2, 3), (2, 3, 1), (3, 1, 2)}


class TestModalConvergence:
    def test_long_run_settles_on_optimal_arm(self):
        # bundled learnable environments: the last decile of a long run
        # should almost always pick the optimal arm
        gen = BscGenerator()
        table = to_joint_table(gen)
        cost_rows = [
            (0.05, 0.45, 0.15),
            (0.05, 0.10, 0.30),
            (0.05, 0.39, 0.16),
            (0.05, 0.20, 0.05),
        ]
        for costs in cost_rows:
            inst = UssInstance(name="x", source=table, costs=costs)
            report = true_properties(inst)
            assert report.wd
            policy = ThompsonSamplingPolicy(inst.effective_costs_cumulative)
            res = run_episode(inst, policy, 10_000, seed=9, report=report)
            tail = res.arms[-1000:]
            assert (tail == report.i_star).mean() >= 0.95
