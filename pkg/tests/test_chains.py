import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaintest import (
    FiniteChain,
    FiniteChainSource,
    ReplaySource,
    SourceExhausted,
    Trajectory,
    ValidationError,
    check_detailed_balance,
    simulate_finite,
    stationary_of,
)
from chaintest.spectral import exact_gap_finite

ROTATION = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
PATH_WALK = np.array([
    [0.5, 0.5, 0.0],
    [0.25, 0.5, 0.25],
    [0.0, 0.5, 0.5],
])


class TestTrajectory:
    def test_accepts_unit_interval_values(self):
        t = Trajectory(np.array([0.0, 0.5, 1.0]), burn_in=3)
        assert len(t) == 3
        assert t.mean() == pytest.approx(0.5)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError, match="index 1"):
            Trajectory(np.array([0.5, 1.5]))
        with pytest.raises(ValidationError):
            Trajectory(np.array([-0.1]))

    def test_rejects_negative_burn_in(self):
        with pytest.raises(ValidationError):
            Trajectory(np.array([0.5]), burn_in=-1)

    def test_values_are_immutable(self):
        t = Trajectory(np.array([0.5]))
        with pytest.raises(ValueError):
            t.values[0] = 0.0


class TestStationary:
    def test_symmetric_kernel_gives_uniform(self):
        kernel = np.array([[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]])
        assert np.allclose(stationary_of(kernel), 1.0 / 3.0, atol=1e-12)

    def test_two_state_closed_form(self):
        # pi = (q, p) / (p + q) = (1/3, 2/3) for p=0.2, q=0.1
        kernel = np.array([[0.8, 0.2], [0.1, 0.9]])
        pi = stationary_of(kernel)
        assert np.allclose(pi, [1.0 / 3.0, 2.0 / 3.0], atol=1e-12)

    def test_path_walk_proportional_to_degrees(self):
        # walk on the path graph 0-1-2 with lazy middle: pi = (1/4, 1/2, 1/4)
        pi = stationary_of(PATH_WALK)
        assert np.allclose(pi, [0.25, 0.5, 0.25], atol=1e-12)

    def test_rotation_has_unique_stationary(self):
        assert np.allclose(stationary_of(ROTATION), 1.0 / 3.0, atol=1e-12)

    def test_reducible_kernel_rejected(self):
        with pytest.raises(ValidationError, match="not unique"):
            stationary_of(np.eye(2))

    def test_bad_row_named(self):
        kernel = np.array([[0.5, 0.5], [0.2, 0.7]])
        with pytest.raises(ValidationError, match="row 1"):
            stationary_of(kernel)


class TestFiniteChain:
    def test_rejects_negative_entries(self):
        with pytest.raises(ValidationError, match="row 0"):
            FiniteChain(np.array([[-0.1, 1.1], [0.5, 0.5]]), [0.0, 1.0])

    def test_rejects_wrong_stationary(self):
        with pytest.raises(ValidationError, match="not stationary"):
            FiniteChain(np.array([[0.8, 0.2], [0.1, 0.9]]), [0.0, 1.0],
                        stationary=[0.5, 0.5])

    def test_rejects_f_outside_unit_interval(self):
        with pytest.raises(ValidationError):
            FiniteChain.two_state(0.5, 0.5, f_values=(0.0, 1.5))

    def test_stationary_mean(self):
        chain = FiniteChain.two_state(0.2, 0.1)
        assert chain.stationary_mean() == pytest.approx(2.0 / 3.0, abs=1e-12)


class TestDetailedBalance:
    @given(p=st.floats(0.01, 1.0), q=st.floats(0.01, 1.0))
    @settings(max_examples=60)
    def test_every_two_state_chain_is_reversible(self, p, q):
        ok, violation = check_detailed_balance(FiniteChain.two_state(p, q))
        assert ok
        assert violation <= 1e-10

    def test_rotation_is_not_reversible(self):
        chain = FiniteChain(ROTATION, [0.0, 0.5, 1.0])
        ok, violation = check_detailed_balance(chain)
        assert not ok
        assert violation == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_symmetric_kernel_is_reversible(self):
        kernel = np.array([[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]])
        ok, _ = check_detailed_balance(FiniteChain(kernel, [0.0, 0.5, 1.0]))
        assert ok

    def test_verdict_invariant_under_state_relabeling(self):
        perm = [2, 0, 1]
        kernel = PATH_WALK[np.ix_(perm, perm)]
        chain = FiniteChain(PATH_WALK, [0.0, 0.5, 1.0])
        relabeled = FiniteChain(kernel, np.asarray([0.0, 0.5, 1.0])[perm])
        assert check_detailed_balance(chain)[0] == check_detailed_balance(relabeled)[0]


class TestSimulateFinite:
    def test_identity_kernel_is_constant(self):
        # every state absorbing; any supplied stationary vector is valid
        chain = FiniteChain(np.eye(3), [0.25, 0.5, 1.0],
                            stationary=[1.0, 0.0, 0.0])
        traj = simulate_finite(chain, 40, seed=3, init=1)
        assert np.all(traj.values == 0.5)

    def test_identity_like_absorbing_chain_is_constant(self):
        # absorbing two-state chain entered at state 0
        chain = FiniteChain(np.array([[1.0, 0.0], [0.5, 0.5]]), [0.25, 1.0],
                            stationary=[1.0, 0.0])
        traj = simulate_finite(chain, 50, seed=3, init=0)
        assert np.all(traj.values == 0.25)

    def test_fair_coin_mean(self):
        chain = FiniteChain.two_state(0.5, 0.5)
        traj = simulate_finite(chain, 100_000, seed=11)
        assert abs(traj.mean() - 0.5) < 0.01

    def test_asymmetric_chain_mean(self):
        chain = FiniteChain.two_state(0.2, 0.1)
        traj = simulate_finite(chain, 1_000_000, seed=5)
        assert abs(traj.mean() - 2.0 / 3.0) < 0.01

    def test_deterministic_in_seed(self):
        chain = FiniteChain.two_state(0.3, 0.2)
        a = simulate_finite(chain, 5000, seed=9)
        b = simulate_finite(chain, 5000, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_mean_within_gap_scaled_band(self):
        # |mean - pi.f| <= 5 / sqrt(n * gamma_star) on the exact oracle
        chain = FiniteChain.two_state(0.1, 0.1)
        _, gamma_star = exact_gap_finite(chain)
        n = 1_000_000
        traj = simulate_finite(chain, n, seed=17)
        assert abs(traj.mean() - chain.stationary_mean()) <= 5.0 / np.sqrt(n * gamma_star)

    def test_n_must_be_positive(self):
        with pytest.raises(ValidationError):
            simulate_finite(FiniteChain.two_state(0.5, 0.5), 0, seed=1)


class TestSources:
    def test_block_pulls_match_single_pull(self):
        chain = FiniteChain.two_state(0.3, 0.4)
        a = FiniteChainSource(chain, seed=21)
        b = FiniteChainSource(chain, seed=21)
        split = np.concatenate([a.take(10), a.take(1), a.take(89)])
        assert np.array_equal(split, b.take(100))
        assert a.consumed == b.consumed == 100

    def test_burn_in_shifts_stream(self):
        chain = FiniteChain.two_state(0.3, 0.4)
        burned = FiniteChainSource(chain, seed=21, burn_in=10)
        plain = FiniteChainSource(chain, seed=21)
        head = plain.take(10)
        assert np.array_equal(burned.take(5), plain.take(5))
        assert head.shape == (10,)

    def test_state_series_records_path(self):
        chain = FiniteChain.two_state(0.3, 0.4)
        src = FiniteChainSource(chain, seed=2, record_states=True)
        values = src.take(200)
        states = src.state_series()
        assert np.array_equal(chain.f_values[states], values)
        assert np.array_equal(src.coordinate_series(), states.astype(float))

    def test_replay_exhaustion_reports_consumed(self):
        src = ReplaySource(np.array([0.1, 0.2, 0.3]))
        src.take(2)
        with pytest.raises(SourceExhausted) as exc_info:
            src.take(2)
        assert exc_info.value.consumed == 2

    def test_replay_validates_range(self):
        with pytest.raises(ValidationError):
            ReplaySource(np.array([0.5, 2.0]))
