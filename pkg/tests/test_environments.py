"""Sampling behavior of the three feedback sources and the empirical
property estimator."""

import numpy as np
import pytest
from scipy import stats

from uss_bandits import (
    BscGenerator,
    JointTable,
    TraceSource,
    UssInstance,
    check_sd,
    empirical_properties,
    error_rates,
    generate_rounds,
    load_trace,
    make_bsc_instance,
    report_from_table,
    sample_round,
    to_joint_table,
)


def fresh_rng(seed=0):
    return np.random.default_rng(np.random.SeedSequence(seed))


class TestBscGenerator:
    def test_validates_probabilities(self):
        with pytest.raises(ValueError):
            BscGenerator(p_true=1.2)
        with pytest.raises(ValueError):
            BscGenerator(match_prob=(0.5, -0.1))
        with pytest.raises(ValueError):
            BscGenerator(match_prob=())

    def test_no_flips_satisfies_strong_dominance(self):
        gen = BscGenerator(corr_error=0.0)
        assert check_sd(to_joint_table(gen))
        # and no sampled round violates the cascade structure either
        y, fb = gen.generate(20_000, fresh_rng(3))
        correct = fb == y[:, None]
        first = np.argmax(correct, axis=1)
        has = correct.any(axis=1)
        for t in np.flatnonzero(has):
            assert correct[t, first[t]:].all()

    def test_default_parameters_give_monotone_error_rates(self):
        gen = BscGenerator()
        y, fb = gen.generate(1_000_000, fresh_rng(5))
        gamma = (fb != y[:, None]).mean(axis=0)
        assert gamma[0] >= gamma[1] >= gamma[2]

    def test_perfect_arms(self):
        gen = BscGenerator(match_prob=(1.0, 1.0, 1.0), corr_error=0.0)
        y, fb = gen.generate(10_000, fresh_rng(1))
        assert (fb == y[:, None]).all()

    def test_same_seed_same_stream(self):
        gen = BscGenerator()
        y1, fb1 = gen.generate(5_000, fresh_rng(42))
        y2, fb2 = gen.generate(5_000, fresh_rng(42))
        assert np.array_equal(y1, y2) and np.array_equal(fb1, fb2)


class TestExactTable:
    def test_perfect_two_arm_channel(self):
        gen = BscGenerator(p_true=0.7, match_prob=(1.0, 1.0), corr_error=0.0)
        table = to_joint_table(gen)
        assert table.prob((1, 1, 1)) == pytest.approx(0.7, abs=1e-15)
        assert table.prob((0, 0, 0)) == pytest.approx(0.3, abs=1e-15)

    def test_table_sums_to_one(self, rng):
        for _ in range(10):
            gen = BscGenerator(
                p_true=float(rng.uniform()),
                match_prob=tuple(rng.uniform(size=int(rng.integers(1, 5)))),
                corr_error=float(rng.uniform(0, 1)),
            )
            total = to_joint_table(gen).probabilities.sum()
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_enumeration_matches_monte_carlo(self):
        gen = BscGenerator()
        table = to_joint_table(gen)
        gamma = error_rates(table)
        n = 400_000
        y, fb = gen.generate(n, fresh_rng(11))
        emp = (fb != y[:, None]).mean(axis=0)
        sigma = np.sqrt(gamma * (1 - gamma) / n)
        assert np.all(np.abs(emp - gamma) <= 3 * sigma + 1e-9)

    def test_rejects_large_k(self):
        with pytest.raises(ValueError, match="K <= 12"):
            to_joint_table(BscGenerator(match_prob=tuple([0.5] * 13)))

    def test_chi_square_goodness_of_fit(self):
        # sampled outcome frequencies against the enumerated distribution
        for k in (1, 2, 3):
            gen = BscGenerator(match_prob=(0.6, 0.7, 0.8)[:k])
            table = to_joint_table(gen)
            n = 100_000
            y, fb = gen.generate(n, fresh_rng(100 + k))
            bits = np.concatenate([y[:, None], fb], axis=1).astype(np.int64)
            packed = bits @ (1 << np.arange(k, -1, -1))
            observed = np.bincount(packed, minlength=2 ** (k + 1))
            expected = table.probabilities * n
            keep = expected > 0
            assert observed[~keep].sum() == 0
            result = stats.chisquare(observed[keep], f_exp=expected[keep])
            assert result.pvalue > 0.001


class TestSampleRound:
    def test_deterministic_table(self):
        q = JointTable(2, {(1, 1, 1): 1.0})
        inst = UssInstance(name="det", source=q, costs=(0.1, 0.1))
        for _ in range(5):
            round_ = sample_round(inst, fresh_rng(0))
            assert round_.y_true == 1 and round_.feedback == (1, 1)

    def test_trace_round_robin(self):
        src = TraceSource([0, 1, 0], np.array([[0], [1], [1]]), wrap=True)
        inst = UssInstance(name="tr", source=src, costs=(0.1,))
        seen = [sample_round(inst).feedback[0] for _ in range(4)]
        assert seen == [0, 1, 1, 0]

    def test_uniform_frequencies(self):
        q = JointTable(2, {o: 0.125 for o in np.ndindex(2, 2, 2)})
        n = 1_000_000
        y, fb = generate_rounds(q, n, fresh_rng(9))
        bits = np.concatenate([y[:, None], fb], axis=1).astype(np.int64)
        packed = bits @ np.array([4, 2, 1])
        freqs = np.bincount(packed, minlength=8) / n
        assert np.all(np.abs(freqs - 0.125) <= 0.002)

    def test_stochastic_source_needs_rng(self):
        q = JointTable(1, {(0, 0): 1.0})
        inst = UssInstance(name="x", source=q, costs=(0.1,))
        with pytest.raises(ValueError, match="rng"):
            sample_round(inst)


class TestTraceSource:
    def test_periodicity(self):
        rows_y = [0, 1, 1, 0, 1]
        rows_fb = np.array([[0, 1], [1, 1], [1, 0], [0, 0], [1, 1]])
        src = TraceSource(rows_y, rows_fb, wrap=True)
        y1, fb1 = src.generate(12)
        src2 = TraceSource(rows_y, rows_fb, wrap=True)
        y2, fb2 = src2.generate(5)
        assert np.array_equal(y1[:5], y2)
        assert np.array_equal(y1[5:10], y2)  # one full period later
        assert np.array_equal(fb1[:5], fb1[5:10])

    def test_non_wrapping_exhaustion(self):
        src = TraceSource([0, 1], np.array([[0], [1]]), wrap=False)
        src.generate(2)
        with pytest.raises(RuntimeError, match="exhausted"):
            src.generate(1)

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError, match="bits"):
            TraceSource([0, 2], np.array([[0], [1]]))


class TestLoadTrace(object):
    def write(self, tmp_path, text, name="t.csv"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    def test_counting_small_trace(self, tmp_path):
        p = self.write(tmp_path, "y,arm1,arm2\n0,1,0\n1,0,1\n0,0,0\n1,1,1\n")
        inst = load_trace(p, costs=(0.1, 0.2))
        report = empirical_properties(inst)
        assert report.gamma[0] == pytest.approx(0.5)
        assert report.gamma[1] == pytest.approx(0.0)
        assert report.estimated and report.n_samples == 4

    def test_bad_header(self, tmp_path):
        p = self.write(tmp_path, "label,arm1\n0,1\n")
        with pytest.raises(ValueError, match="label column"):
            load_trace(p, costs=(0.1,))
        p = self.write(tmp_path, "y,armA\n0,1\n")
        with pytest.raises(ValueError, match="header"):
            load_trace(p, costs=(0.1,))

    def test_ragged_row(self, tmp_path):
        p = self.write(tmp_path, "y,arm1,arm2\n0,1\n")
        with pytest.raises(ValueError, match="expected 3 fields"):
            load_trace(p, costs=(0.1, 0.2))

    def test_non_bit_value(self, tmp_path):
        p = self.write(tmp_path, "y,arm1\n0,7\n")
        with pytest.raises(ValueError, match="0/1"):
            load_trace(p, costs=(0.1,))
        p = self.write(tmp_path, "y,arm1\n0,x\n")
        with pytest.raises(ValueError, match="non-integer"):
            load_trace(p, costs=(0.1,))

    def test_round_trips_through_replay(self, tmp_path):
        p = self.write(tmp_path, "y,arm1,arm2\n0,1,0\n1,0,1\n")
        inst = load_trace(p, costs=(0.1, 0.2))
        y, fb = inst.source.copy().generate(2)
        assert y.tolist() == [0, 1]
        assert fb.tolist() == [[1, 0], [0, 1]]


class TestEmpiricalProperties:
    def test_concentrates_on_exact_values(self):
        gen = BscGenerator()
        table = to_joint_table(gen)
        inst = UssInstance(name="x", source=table, costs=(0.05, 0.45, 0.15))
        exact = report_from_table(table, inst.costs_cumulative)
        est = empirical_properties(inst, n_samples=1_000_000, rng=fresh_rng(21))
        assert est.estimated and est.n_samples == 1_000_000
        assert np.abs(est.p - exact.p).max() <= 0.01
        assert np.abs(est.gamma - exact.gamma).max() <= 0.01

    def test_flags_match_on_bundled_environments(self):
        gen = BscGenerator()
        wd_inst = make_bsc_instance(gen, (0.05, 0.45, 0.15), name="wd")
        no_wd_inst = make_bsc_instance(gen, (0.1, 0.1, 0.15), name="nowd")
        wd_est = empirical_properties(wd_inst, n_samples=100_000, rng=fresh_rng(31))
        no_wd_est = empirical_properties(no_wd_inst, n_samples=100_000, rng=fresh_rng(31))
        assert wd_est.wd is True and wd_est.i_star == 1
        assert no_wd_est.wd is False and no_wd_est.i_star == 2

    def test_requires_samples_for_stochastic(self):
        gen = BscGenerator()
        inst = make_bsc_instance(gen, (0.1, 0.1, 0.1))
        with pytest.raises(ValueError, match="n_samples"):
            empirical_properties(inst)
        with pytest.raises(ValueError, match="n_samples"):
            empirical_properties(inst, n_samples=0, rng=fresh_rng(0))
