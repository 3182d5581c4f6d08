import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaintest import (
    Decision,
    ReplaySource,
    Schedule,
    SourceExhausted,
    TestConfig,
    ValidationError,
    default_burn_in,
    expected_stop_indiff,
    expected_stop_noindiff,
    fixed_length_test,
    g_threshold,
    hoeffding_tail,
    m_threshold,
    required_n,
    seq_indiff_test,
    seq_noindiff_test,
    stop_tail_indiff,
    xi_default,
)
from conftest import dyadic_uniform


class ConstantSource:
    def __init__(self, value):
        self.value = value
        self._consumed = 0

    def take(self, k):
        self._consumed += k
        return np.full(k, self.value)

    @property
    def consumed(self):
        return self._consumed


class TestFormulas:
    def test_hoeffding_tail_clamps_at_one(self):
        assert hoeffding_tail(100, 0.5, 0.0) == 1.0

    def test_hoeffding_tail_reference_value(self):
        # frozen from tools/compute_reference_values.py
        assert hoeffding_tail(10_000, 0.2, 200.0) == pytest.approx(
            0.89865792823444318, rel=1e-14
        )

    def test_hoeffding_tail_quartic_scaling(self):
        # 2 exp(-4x) == (2 exp(-x))^4 / 8 wherever neither side clamps
        t1 = hoeffding_tail(10**6, 0.3, 2000.0)
        t2 = hoeffding_tail(10**6, 0.3, 4000.0)
        assert t1 < 1.0
        assert t2 == pytest.approx(t1**4 / 8.0, rel=1e-10)

    def test_required_n_reference_values(self):
        assert required_n(0.01, 0.2, 0.05) == 9211
        assert required_n(0.01, 0.01, 0.05) == 184207
        assert required_n(1.0, 0.2, 0.05) == 0

    @given(
        epsilon=st.floats(1e-6, 0.4),
        gamma=st.floats(1e-3, 1.0),
        delta=st.floats(1e-3, 0.45),
    )
    @settings(max_examples=100)
    def test_required_n_meets_its_bound_algebraically(self, epsilon, gamma, delta):
        n = required_n(epsilon, gamma, delta)
        assert math.exp(-gamma * delta * delta * n) <= epsilon * (1.0 + 1e-12)

    def test_m_threshold_reference_value(self):
        # frozen from tools/compute_reference_values.py
        assert m_threshold(0.01, 0.3, 0.01, 0.05) == pytest.approx(
            3597.7186757169590, rel=1e-13
        )

    def test_m_threshold_boundary(self):
        gamma, delta = 0.1, 0.05
        assert m_threshold(0.4, 0.4, gamma, delta) == pytest.approx(
            math.log(2.0 / 0.4) / (2.0 * gamma * delta), rel=1e-13
        )

    def test_m_threshold_inverse_in_delta(self):
        assert m_threshold(0.01, 0.3, 0.1, 0.025) == pytest.approx(
            2.0 * m_threshold(0.01, 0.3, 0.1, 0.05), rel=1e-13
        )

    def test_m_threshold_rejects_out_of_proof_region(self):
        with pytest.raises(ValidationError):
            m_threshold(0.5, 0.3, 0.1, 0.05)
        with pytest.raises(ValidationError):
            m_threshold(0.01, 0.41, 0.1, 0.05)

    def test_xi_default_reference_values(self):
        # frozen from tools/compute_reference_values.py
        assert xi_default(0.01) == pytest.approx(0.31327724766363154, rel=1e-14)
        assert xi_default(0.1) == 0.4  # raw 0.6266 clamps

    def test_xi_default_vanishes_with_epsilon(self):
        values = [xi_default(eps) for eps in (1e-2, 1e-4, 1e-8, 1e-16)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] < 0.05

    def test_g_threshold_reference_value(self):
        # frozen from tools/compute_reference_values.py
        assert g_threshold(1, 0.01, 0.01, 13_000) == pytest.approx(
            2699.3927542661366, rel=1e-13
        )

    def test_g_threshold_simplifies_at_unit_log(self):
        n_i, gamma = 5000, 0.25
        assert g_threshold(1, math.exp(-1.0), gamma, n_i) == pytest.approx(
            math.sqrt(2.0 * n_i / gamma), rel=1e-13
        )

    def test_g_threshold_grows_with_index(self):
        assert g_threshold(2, 0.01, 0.1, 1000) > g_threshold(1, 0.01, 0.1, 1000)

    def test_default_burn_in(self):
        assert default_burn_in(0.2) == 150
        assert default_burn_in(0.2, override=500) == 500
        assert default_burn_in(0.2, override=10) == 150


class TestSchedule:
    def test_points_strictly_increase_and_start_positive(self):
        sched = Schedule(1, 0.3)
        pairs = [pair for _, pair in zip(range(20), sched.checks())]
        values = [n for _, n in pairs]
        assert values[0] >= 1
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_duplicate_points_skip_but_keep_index(self):
        # floor(1.3^i) = 1, 1, 2, 2, 3, 3, 4, ... so indices are thinned
        sched = Schedule(1, 0.3)
        pairs = [pair for _, pair in zip(range(6), sched.checks())]
        for i, n in pairs:
            assert n == math.floor(1.3**i)
        indices = [i for i, _ in pairs]
        values = [n for _, n in pairs]
        assert values == sorted(set(values))
        assert indices == sorted(indices)
        assert indices != list(range(1, len(indices) + 1))

    def test_invalid_construction(self):
        with pytest.raises(ValidationError):
            Schedule(0, 0.3)
        with pytest.raises(ValidationError):
            Schedule(5, 0.0)


class TestConfigValidation:
    def test_accepts_standard_setup(self):
        TestConfig(r=0.3, epsilon=0.01, xi=0.3, gamma=0.2, delta=0.05)

    @pytest.mark.parametrize("kwargs", [
        dict(r=0.0, epsilon=0.01, xi=0.3, gamma=0.2),
        dict(r=0.3, epsilon=0.5, xi=0.3, gamma=0.2),
        dict(r=0.3, epsilon=0.01, xi=0.45, gamma=0.2),
        dict(r=0.3, epsilon=0.01, xi=0.3, gamma=1.5),
        dict(r=0.3, epsilon=0.01, xi=0.3, gamma=0.2, delta=0.3),
        dict(r=0.3, epsilon=0.01, xi=0.3, gamma=0.2, delta=0.0),
    ])
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValidationError):
            TestConfig(**kwargs)


class TestFixedLength:
    def test_all_ones_accepts_h0(self):
        outcome = fixed_length_test(ConstantSource(1.0), r=0.5, n=10)
        assert outcome.decision is Decision.H0
        assert outcome.stopping_time == 10
        assert outcome.final_sum == 10.0

    def test_all_zeros_accepts_h1(self):
        outcome = fixed_length_test(ConstantSource(0.0), r=0.5, n=10)
        assert outcome.decision is Decision.H1

    def test_tie_goes_to_h0(self):
        values = np.tile([0.0, 1.0], 5)  # sum 5 == n * r exactly
        outcome = fixed_length_test(ReplaySource(values), r=0.5, n=10)
        assert outcome.decision is Decision.H0

    def test_consumes_exactly_n(self):
        source = ConstantSource(1.0)
        fixed_length_test(source, r=0.5, n=321)
        assert source.consumed == 321

    def test_exhaustion_propagates_with_count(self):
        with pytest.raises(SourceExhausted) as exc_info:
            fixed_length_test(ReplaySource(np.full(5, 0.5)), r=0.5, n=10)
        assert exc_info.value.consumed == 0  # nothing handed out yet


def indiff_config(r=0.3, epsilon=0.01, xi=0.3, gamma=0.2, delta=0.05):
    return TestConfig(r=r, epsilon=epsilon, xi=xi, gamma=gamma, delta=delta)


class TestSeqIndiff:
    def test_needs_delta(self):
        cfg = TestConfig(r=0.3, epsilon=0.01, xi=0.3, gamma=0.2)
        with pytest.raises(ValidationError):
            seq_indiff_test(ConstantSource(1.0), cfg)

    def test_all_ones_stops_at_first_margin_crossing(self):
        cfg = indiff_config(r=0.5)
        m = m_threshold(0.01, 0.3, 0.2, 0.05)
        outcome = seq_indiff_test(ConstantSource(1.0), cfg)
        assert outcome.decision is Decision.H0
        # S = n_i, margin n_i/2 >= M at the first schedule point >= 2M
        sched = Schedule(max(1, math.floor(m * 2.0)), 0.3)
        expected = next(n for _, n in sched.checks() if n - n * 0.5 >= m)
        assert outcome.stopping_time == expected

    def test_never_reads_past_stopping_time(self):
        source = ConstantSource(1.0)
        outcome = seq_indiff_test(source, indiff_config(r=0.5))
        assert source.consumed == outcome.stopping_time

    def test_final_sum_within_bounds(self):
        outcome = seq_indiff_test(ConstantSource(1.0), indiff_config())
        assert 0.0 <= outcome.final_sum <= outcome.stopping_time

    def test_forced_decision_at_cap(self):
        # mean exactly r: margins hover near zero, the cap forces H0/H1
        cfg = indiff_config(r=0.5, gamma=1.0)
        m = m_threshold(0.01, 0.3, 1.0, 0.05)
        values = np.tile([1.0, 0.0], 200_000)
        outcome = seq_indiff_test(ReplaySource(values), cfg)
        assert outcome.decision in (Decision.FORCED_H0, Decision.FORCED_H1)
        assert outcome.stopping_time >= 6.0 * m / 0.05

    def test_m_override_changes_margin(self):
        outcome = seq_indiff_test(ConstantSource(1.0), indiff_config(r=0.5),
                                  m_override=10.0)
        assert outcome.stopping_time <= 40

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None, derandomize=True)
    def test_mirror_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        values = dyadic_uniform(rng, 40_000)
        r = rng.integers(1, 16) / 16.0
        delta = min(r, 1.0 - r) / 2.0
        cfg = indiff_config(r=r, delta=delta, gamma=1.0)
        mirror = indiff_config(r=1.0 - r, delta=delta, gamma=1.0)
        a = seq_indiff_test(ReplaySource(values), cfg)
        b = seq_indiff_test(ReplaySource(1.0 - values), mirror)
        assert a.stopping_time == b.stopping_time
        assert a.checks_performed == b.checks_performed
        assert {a.decision, b.decision} in (
            {Decision.H0, Decision.H1},
            {Decision.FORCED_H0, Decision.FORCED_H1},
        )


class TestSeqNoIndiff:
    def test_all_ones_stops_at_growing_margin(self):
        cfg = TestConfig(r=0.5, epsilon=0.01, xi=0.3, gamma=0.5)
        outcome = seq_noindiff_test(ConstantSource(1.0), cfg)
        assert outcome.decision is Decision.H0
        sched = Schedule(200, 0.3)
        expected = next(
            n for i, n in sched.checks()
            if n - n * 0.5 >= g_threshold(i, 0.01, 0.5, n)
        )
        assert outcome.stopping_time == expected

    def test_max_checks_returns_undecided(self):
        cfg = TestConfig(r=0.5, epsilon=0.01, xi=0.3, gamma=1.0)
        values = np.tile([1.0, 0.0], 50_000)
        outcome = seq_noindiff_test(ReplaySource(values), cfg, max_checks=5)
        assert outcome.decision is Decision.UNDECIDED
        assert outcome.checks_performed == 5

    def test_never_reads_past_stopping_time(self):
        source = ConstantSource(1.0)
        outcome = seq_noindiff_test(
            source, TestConfig(r=0.5, epsilon=0.01, xi=0.3, gamma=0.5)
        )
        assert source.consumed == outcome.stopping_time

    def test_invalid_max_checks(self):
        cfg = TestConfig(r=0.5, epsilon=0.01, xi=0.3, gamma=0.5)
        with pytest.raises(ValidationError):
            seq_noindiff_test(ConstantSource(1.0), cfg, max_checks=0)


class TestStoppingBounds:
    def test_expected_stop_indiff_reference_values(self):
        # frozen from tools/compute_reference_values.py
        m1 = m_threshold(0.01, 0.3, 0.01, 0.05)
        assert expected_stop_indiff(m1, 0.3, 0.01, 0.2) == pytest.approx(
            40822.912877171503, rel=1e-12
        )
        m2 = m_threshold(0.01, 0.3, 0.2, 0.05)
        assert expected_stop_indiff(m2, 0.3, 0.2, 0.2) == pytest.approx(
            2042.9851116365846, rel=1e-12
        )

    def test_expected_stop_indiff_decays_in_drift(self):
        m = 1e4
        small = expected_stop_indiff(m, 0.3, 0.1, 0.05)
        large = expected_stop_indiff(m, 0.3, 0.1, 0.10)
        huge = expected_stop_indiff(m, 0.3, 0.1, 1e6)
        assert small > large
        # in the large-drift limit the margin term dominates the bound
        assert huge == pytest.approx(1.3 * m / 1e6, rel=0.01)

    def test_expected_stop_noindiff_reference_scan(self):
        # frozen from tools/compute_reference_values.py: N = n_9 = 5302
        bound = expected_stop_noindiff(0.01, 0.3, 0.2, 0.2, Schedule(500, 0.3))
        assert bound == pytest.approx(1.3 * (5302 + 5.0), rel=1e-12)

    def test_expected_stop_noindiff_monotone_in_drift(self):
        sched = Schedule(500, 0.3)
        assert expected_stop_noindiff(0.01, 0.3, 0.2, 0.4, sched) <= (
            expected_stop_noindiff(0.01, 0.3, 0.2, 0.2, sched)
        )

    def test_expected_stop_noindiff_pathological_drift(self):
        with pytest.raises(ValidationError):
            expected_stop_noindiff(0.01, 0.3, 0.2, 1e-9, Schedule(500, 0.3))

    def test_stop_tail_clamps_before_drift_dominates(self):
        # t * Delta <= M: the positive part vanishes and the bound clamps
        assert stop_tail_indiff(50.0, 100.0, 0.3, 0.2, 1.0) == 1.0
        assert stop_tail_indiff(0.0, 100.0, 0.3, 0.2, 0.05) == 1.0

    def test_stop_tail_cap_identity(self):
        # at t = 6M/delta with drift delta the tail is below (1+xi) eps xi / 4
        epsilon, xi, gamma, delta = 0.01, 0.3, 0.2, 0.05
        m = m_threshold(epsilon, xi, gamma, delta)
        tail = stop_tail_indiff(6.0 * m / delta, m, xi, gamma, delta)
        assert tail <= (1.0 + xi) * epsilon * xi / 4.0 + 1e-15

    def test_stop_tail_non_increasing_past_two_m_over_delta(self):
        m, xi, gamma, delta = 100.0, 0.3, 0.2, 0.1
        ts = np.linspace(2.0 * m / delta, 10.0 * m / delta, 50)
        tails = [stop_tail_indiff(t, m, xi, gamma, delta) for t in ts]
        assert all(a >= b - 1e-15 for a, b in zip(tails, tails[1:]))
