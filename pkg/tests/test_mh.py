import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaintest import (
    FiniteChain,
    MHChain,
    MHSource,
    MHState,
    PriorBox,
    ProposalSpec,
    ValidationError,
    gaussian_loglik,
    mh_step,
    run_chain,
)
from chaintest.spectral import exact_gap_finite
from gridmh import GridTarget, transition_counts


class Obs:
    def __init__(self, y, sigma):
        self.y = np.asarray(y, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)


UNIT_BOX = PriorBox(np.array([0.0]), np.array([1.0]))
STEP = ProposalSpec(np.array([0.2]))


def flat_model(theta):
    return 0.0


class TestPriorBox:
    def test_rejects_empty_interval(self):
        with pytest.raises(ValidationError):
            PriorBox(np.array([0.0, 1.0]), np.array([1.0, 1.0]))

    def test_contains_closed_endpoints(self):
        assert UNIT_BOX.contains(np.array([0.0]))
        assert UNIT_BOX.contains(np.array([1.0]))
        assert not UNIT_BOX.contains(np.array([1.0000001]))

    def test_sample_lands_inside(self, rng):
        box = PriorBox(np.array([-2.0, 5.0]), np.array([-1.0, 30.0]))
        for _ in range(100):
            assert box.contains(box.sample(rng))


class TestGaussianLoglik:
    def test_perfect_fit_is_zero(self):
        obs = Obs([[1.0, 2.0]], [[0.5, 0.5]])
        assert gaussian_loglik(obs, [[1.0, 2.0]]) == 0.0

    def test_single_point_unit_residual(self):
        # (1 - 0)^2 / (2 * (1/sqrt(2))^2) = 1
        obs = Obs([[1.0]], [[1.0 / math.sqrt(2.0)]])
        assert gaussian_loglik(obs, [[0.0]]) == pytest.approx(-1.0, abs=1e-14)

    @given(st.integers(1, 20), st.integers(0, 1000))
    @settings(max_examples=40)
    def test_more_observations_never_increase(self, n, seed):
        rng = np.random.default_rng(seed)
        y = rng.normal(size=(1, n + 1))
        sim = rng.normal(size=(1, n + 1))
        sigma = np.full((1, n + 1), 0.7)
        whole = gaussian_loglik(Obs(y, sigma), sim)
        partial = gaussian_loglik(Obs(y[:, :n], sigma[:, :n]), sim[:, :n])
        assert whole <= partial + 1e-12

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            gaussian_loglik(Obs([[1.0]], [[1.0]]), [[1.0, 2.0]])

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(ValidationError):
            gaussian_loglik(Obs([[1.0]], [[0.0]]), [[1.0]])


class TestMHStep:
    def test_uphill_always_accepts(self, rng):
        # flat target: every in-box proposal has ratio one
        state = MHState(np.array([0.5]), 0.0)
        accepted = 0
        for _ in range(200):
            new_state, ok = mh_step(state, ProposalSpec(np.array([0.01])),
                                    UNIT_BOX, flat_model, rng)
            accepted += ok
            state = new_state
        assert accepted == 200

    def test_out_of_box_rejects_with_certainty(self, rng):
        # sigma tiny against the distance to the box: proposals stay inside
        # a shifted box that excludes them
        box = PriorBox(np.array([0.0]), np.array([1e-6]))
        state = MHState(np.array([0.0]), 0.0)
        proposal = ProposalSpec(np.array([50.0]))
        rejections = 0
        for _ in range(100):
            new_state, ok = mh_step(state, proposal, box, flat_model, rng)
            rejections += not ok
            assert new_state.theta is state.theta or ok
        assert rejections >= 99  # P(|N(0, 50)| < 1e-6) is negligible

    def test_rejected_step_reuses_the_state_object(self, rng):
        def downhill(theta):
            return -1e9 if theta[0] != 0.5 else 0.0

        state = MHState(np.array([0.5]), 0.0)
        for _ in range(50):
            new_state, ok = mh_step(state, STEP, UNIT_BOX, downhill, rng)
            if not ok:
                assert new_state is state

    def test_huge_loglik_gap_never_overflows(self, rng):
        def spiky(theta):
            return 1e308 if theta[0] > 0.5 else 0.0

        state = MHState(np.array([0.4]), 0.0)
        for _ in range(100):
            state, _ = mh_step(state, STEP, UNIT_BOX, spiky, rng)
        assert np.isfinite(state.log_likelihood) or state.log_likelihood == 1e308

    def test_nan_model_counts_as_rejection(self, rng):
        def broken(theta):
            return float("nan")

        state = MHState(np.array([0.5]), 0.0)
        new_state, ok = mh_step(state, STEP, UNIT_BOX, broken, rng)
        assert not ok
        assert new_state is state


class TestRunChain:
    def test_constant_property_gives_all_ones(self):
        result = run_chain(flat_model, UNIT_BOX, STEP, lambda theta: 1.0,
                           steps=50, burn_in=10, seed=3)
        assert np.all(result.trajectory.values == 1.0)
        assert len(result.trajectory) == 50
        assert result.trajectory.burn_in == 10

    def test_zero_steps_gives_empty_trajectory(self):
        result = run_chain(flat_model, UNIT_BOX, STEP, lambda theta: 1.0,
                           steps=0, burn_in=0, seed=3)
        assert len(result.trajectory) == 0

    def test_deterministic_in_seed(self):
        f = GridTarget().indicator_upper_half
        target = GridTarget()
        box = PriorBox(np.array([0.0]), np.array([target.length]))
        prop = ProposalSpec(np.array([target.sigma]))
        a = run_chain(target.loglik, box, prop, f, 500, 50, seed=11,
                      record_states=True)
        b = run_chain(target.loglik, box, prop, f, 500, 50, seed=11,
                      record_states=True)
        assert np.array_equal(a.trajectory.values, b.trajectory.values)
        assert np.array_equal(a.states, b.states)

    def test_block_advance_matches_single_steps(self):
        target = GridTarget()
        box = PriorBox(np.array([0.0]), np.array([target.length]))
        prop = ProposalSpec(np.array([target.sigma]))
        blocked = MHChain(target.loglik, box, prop,
                          target.indicator_upper_half, seed=7)
        merged = np.concatenate([blocked.advance(13), blocked.advance(1),
                                 blocked.advance(86)])

        # the same chain driven through the public single-step interface
        rng = np.random.default_rng(7)
        theta0 = box.sample(rng)
        state = MHState(theta0, target.loglik(theta0))
        values = []
        for _ in range(100):
            state, _ = mh_step(state, prop, box, target.loglik, rng)
            values.append(target.indicator_upper_half(state.theta))
        assert np.array_equal(merged, np.asarray(values))

    def test_out_of_box_init_rejected(self):
        with pytest.raises(ValidationError):
            run_chain(flat_model, UNIT_BOX, STEP, lambda theta: 1.0,
                      steps=1, burn_in=0, seed=0, init=np.array([2.0]))

    def test_property_outside_unit_interval_rejected(self):
        with pytest.raises(ValidationError):
            run_chain(flat_model, UNIT_BOX, STEP, lambda theta: 2.0,
                      steps=5, burn_in=0, seed=0)


class TestGridKernel:
    def test_exact_kernel_satisfies_detailed_balance(self):
        target = GridTarget()
        kernel = target.exact_cell_kernel()
        pi = target.cell_stationary
        flow = pi[:, None] * kernel
        assert np.max(np.abs(flow - flow.T)) <= 1e-10
        assert np.max(np.abs(kernel.sum(axis=1) - 1.0)) <= 1e-12

    def test_empirical_transitions_track_exact_kernel(self):
        target = GridTarget()
        kernel = target.exact_cell_kernel()
        box = PriorBox(np.array([0.0]), np.array([target.length]))
        prop = ProposalSpec(np.array([target.sigma]))
        init = target.stationary_initial_point(np.random.default_rng(2024))
        chain = MHChain(target.loglik, box, prop,
                        target.indicator_upper_half, seed=2024, init=init,
                        record_states=True)
        chain.advance(200_000)
        counts = transition_counts(target, chain.state_series()[:, 0])
        row_totals = counts.sum(axis=1)
        checked = 0
        for i in range(target.n_cells):
            if row_totals[i] == 0:
                continue
            for j in range(target.n_cells):
                expected = row_totals[i] * kernel[i, j]
                if expected < 20.0:
                    continue
                band = 4.0 * math.sqrt(
                    kernel[i, j] * (1.0 - kernel[i, j]) / row_totals[i]
                )
                assert abs(counts[i, j] / row_totals[i] - kernel[i, j]) <= band
                checked += 1
        assert checked > 50

    def test_chain_mean_matches_grid_exact_mean(self):
        target = GridTarget()
        kernel = target.exact_cell_kernel()
        f_cells = target.upper_cells.astype(float)
        grid_chain = FiniteChain(kernel, f_cells,
                                 stationary=target.cell_stationary)
        _, gamma_star = exact_gap_finite(grid_chain)
        exact_mean = grid_chain.stationary_mean()

        box = PriorBox(np.array([0.0]), np.array([target.length]))
        prop = ProposalSpec(np.array([target.sigma]))
        n = 200_000
        init = target.stationary_initial_point(np.random.default_rng(77))
        chain = MHChain(target.loglik, box, prop,
                        target.indicator_upper_half, seed=77, init=init)
        values = chain.advance(n)
        assert abs(values.mean() - exact_mean) <= 5.0 / math.sqrt(n * gamma_star)


class TestMHSourceStreaming:
    def test_source_streams_and_counts(self):
        target = GridTarget()
        box = PriorBox(np.array([0.0]), np.array([target.length]))
        prop = ProposalSpec(np.array([target.sigma]))
        source = MHSource(target.loglik, box, prop,
                          target.indicator_upper_half, seed=5, burn_in=100)
        values = source.take(500)
        assert source.consumed == 500
        assert values.shape == (500,)
        assert set(np.unique(values)).issubset({0.0, 1.0})
