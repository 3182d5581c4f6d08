"""Metropolis-Hastings over a box prior with a diagonal Gaussian proposal.

The target is a posterior known up to a constant: uniform prior on a box
times a likelihood supplied as a log-density callable.  Proposals falling
outside the box have prior density zero and are rejected outright, which
keeps the chain reversible with respect to the truncated posterior.  All
likelihood handling is in log space; nothing is ever exponentiated, so
acceptance never overflows.

Randomness: one d-dimensional standard-normal draw plus one uniform per
step, always consumed in that order (also on out-of-box proposals), so a
chain advanced in blocks is bitwise identical to one advanced step by step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .chains import SampleSource, Trajectory
from .errors import DivergenceError, ValidationError

NEG_INF = float("-inf")


@dataclass(frozen=True)
class PriorBox:
    """Per-dimension closed intervals of the uniform prior."""

    lows: np.ndarray
    highs: np.ndarray

    def __post_init__(self):
        lows = np.asarray(self.lows, dtype=np.float64)
        highs = np.asarray(self.highs, dtype=np.float64)
        if lows.shape != highs.shape or lows.ndim != 1:
            raise ValidationError("prior bounds must be 1-D arrays of equal length")
        if np.any(lows >= highs):
            bad = int(np.argmax(lows >= highs))
            raise ValidationError(f"prior box empty in dimension {bad}")
        lows.setflags(write=False)
        highs.setflags(write=False)
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)

    @property
    def dim(self):
        return self.lows.size

    def contains(self, theta):
        return bool(np.all(theta >= self.lows) and np.all(theta <= self.highs))

    def sample(self, rng):
        return self.lows + (self.highs - self.lows) * rng.random(self.dim)


@dataclass(frozen=True)
class ProposalSpec:
    """Standard deviations of the diagonal Gaussian proposal."""

    sigmas: np.ndarray

    def __post_init__(self):
        sig = np.asarray(self.sigmas, dtype=np.float64)
        if sig.ndim != 1 or np.any(sig <= 0.0):
            raise ValidationError("proposal sigmas must be positive")
        sig.setflags(write=False)
        object.__setattr__(self, "sigmas", sig)


def gaussian_loglik(observed, simulated):
    """Log of the Gaussian observation kernel, normalisation dropped.

    ``observed`` carries arrays ``y`` and ``sigma`` of matching shape;
    ``simulated`` is the model output on the same index set.  Returns
    -sum((Y - y)^2 / (2 sigma^2)); the constant cancels in acceptance
    ratios.
    """
    y_obs = np.asarray(observed.y, dtype=np.float64)
    sigma = np.asarray(observed.sigma, dtype=np.float64)
    y_sim = np.asarray(simulated, dtype=np.float64)
    if y_sim.shape != y_obs.shape:
        raise ValidationError(
            f"simulated shape {y_sim.shape} does not match observed {y_obs.shape}"
        )
    if np.any(sigma <= 0.0):
        raise ValidationError("observation standard deviations must be positive")
    z = (y_obs - y_sim) / sigma
    return float(-0.5 * np.sum(z * z))


@dataclass(frozen=True)
class MHState:
    """Current parameter vector with its cached log-likelihood."""

    theta: np.ndarray
    log_likelihood: float


def _evaluate(model, theta):
    try:
        value = float(model(theta))
    except DivergenceError:
        return NEG_INF
    if math.isnan(value):
        return NEG_INF
    return value


def _step_core(theta, loglik, z, u, sigmas, prior, model):
    """One proposal/acceptance decision on pre-drawn randomness.

    Returns ``(theta', loglik', accepted, diverged)``.
    """
    proposal = theta + sigmas * z
    if not prior.contains(proposal):
        return theta, loglik, False, False
    new_loglik = _evaluate(model, proposal)
    if new_loglik == NEG_INF:
        return theta, loglik, False, True
    if loglik == NEG_INF or new_loglik - loglik >= 0.0 or math.log(u) < new_loglik - loglik:
        return proposal, new_loglik, True, False
    return theta, loglik, False, False


def mh_step(state, proposal, prior, model, rng):
    """Advance one step; returns ``(new_state, accepted)``.

    A rejected proposal repeats the current state (bitwise: the same array
    object).  Model failures count as log-likelihood -inf and reject.
    """
    z = rng.standard_normal(prior.dim)
    u = rng.random()
    theta, loglik, accepted, _ = _step_core(
        state.theta, state.log_likelihood, z, u, proposal.sigmas, prior, model
    )
    if not accepted:
        return state, False
    return MHState(theta, loglik), True


class MHChain:
    """A live Metropolis-Hastings chain producing f(theta) samples.

    ``advance(k)`` runs ``k`` steps and returns the k property values, in
    [0, 1].  Acceptances and model divergences are counted for
    diagnostics; ``record_states=True`` additionally keeps every advanced
    state for coordinate-based gap estimation.
    """

    def __init__(self, model, prior, proposal, f, seed, init=None,
                 record_states=False):
        if proposal.sigmas.size != prior.dim:
            raise ValidationError("proposal dimension does not match prior")
        self.model = model
        self.prior = prior
        self.proposal = proposal
        self.f = f
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        if init is None:
            theta = self.prior.sample(self._rng)
        else:
            theta = np.asarray(init, dtype=np.float64)
            if not prior.contains(theta):
                raise ValidationError(f"initial point {theta} outside the prior box")
        self._theta = theta
        self._loglik = _evaluate(model, theta)
        self.steps_taken = 0
        self.accepted = 0
        self.divergences = 0
        self._record = record_states
        self._state_blocks = []

    def advance(self, k):
        if k < 0:
            raise ValidationError("cannot advance a negative number of steps")
        values = np.empty(k, dtype=np.float64)
        states = np.empty((k, self.prior.dim)) if self._record else None
        sigmas = self.proposal.sigmas
        theta, loglik = self._theta, self._loglik
        for j in range(k):
            z = self._rng.standard_normal(self.prior.dim)
            u = self._rng.random()
            theta, loglik, accepted, diverged = _step_core(
                theta, loglik, z, u, sigmas, self.prior, self.model
            )
            self.accepted += accepted
            self.divergences += diverged
            values[j] = self.f(theta)
            if states is not None:
                states[j] = theta
        self._theta, self._loglik = theta, loglik
        self.steps_taken += k
        if values.size and (np.min(values) < 0.0 or np.max(values) > 1.0):
            raise ValidationError("property evaluator left [0, 1]")
        if states is not None:
            self._state_blocks.append(states)
        return values

    @property
    def state(self):
        return MHState(self._theta, self._loglik)

    @property
    def acceptance_rate(self):
        return self.accepted / self.steps_taken if self.steps_taken else 0.0

    def state_series(self):
        """All recorded states so far, shape (steps_taken, dim)."""
        if not self._record:
            raise ValidationError("chain was created with record_states=False")
        if not self._state_blocks:
            return np.empty((0, self.prior.dim))
        return np.concatenate(self._state_blocks, axis=0)

    def coordinate_series(self):
        """Recorded states rescaled to [0, 1] per dimension, one row each."""
        states = self.state_series()
        span = self.prior.highs - self.prior.lows
        scaled = (states - self.prior.lows) / span
        return [scaled[:, j] for j in range(self.prior.dim)]


@dataclass
class ChainResult:
    trajectory: Trajectory
    acceptance_rate: float
    divergences: int
    states: np.ndarray = None


def run_chain(model, prior, proposal, f, steps, burn_in, seed, init=None,
              record_states=False):
    """Run burn_in + steps MH steps; record f over the post-burn-in segment.

    Deterministic in ``seed`` (including the uniform initial point drawn
    when ``init`` is None).  Burn-in samples are discarded at generation
    time and never stored.
    """
    if steps < 0 or burn_in < 0:
        raise ValidationError("steps and burn_in must be nonnegative")
    chain = MHChain(model, prior, proposal, f, seed, init=init,
                    record_states=record_states)
    if burn_in:
        chain.advance(burn_in)
        chain._state_blocks.clear()
    values = chain.advance(steps)
    states = chain.state_series() if record_states else None
    return ChainResult(
        trajectory=Trajectory(values, burn_in=burn_in),
        acceptance_rate=chain.acceptance_rate,
        divergences=chain.divergences,
        states=states,
    )


class MHSource(SampleSource):
    """Streams property samples from a live MH chain.

    Burn-in happens at construction.  Exposes the underlying chain for
    diagnostics and coordinate series.
    """

    def __init__(self, model, prior, proposal, f, seed, init=None, burn_in=0,
                 record_states=False):
        self.chain = MHChain(model, prior, proposal, f, seed, init=init,
                             record_states=record_states)
        if burn_in:
            self.chain.advance(burn_in)
            self.chain._state_blocks.clear()
        self.burn_in = burn_in
        self._consumed = 0

    def take(self, k):
        values = self.chain.advance(k)
        self._consumed += k
        return values

    @property
    def consumed(self):
        return self._consumed
