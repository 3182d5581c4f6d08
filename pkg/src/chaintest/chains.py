"""Chain and trajectory primitives shared by the estimators and the tests.

Randomness policy: every stochastic object takes an integer seed and draws
from an independent ``numpy.random.Generator`` (PCG64).  Equal seeds give
bitwise-equal sample streams regardless of how callers split their pulls,
which is what makes the CSV outputs reproducible.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import SourceExhausted, ValidationError

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10
REVERSIBILITY_TOL = 1e-10


@dataclass(frozen=True)
class Trajectory:
    """Scalar samples f(X_i) in [0, 1] from the stationary segment of a chain.

    ``burn_in`` records how many leading steps were discarded before these
    values; the values themselves are post-burn-in.
    """

    values: np.ndarray
    burn_in: int = 0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValidationError("trajectory values must be one-dimensional")
        if self.burn_in < 0:
            raise ValidationError("burn_in must be nonnegative")
        if arr.size and (np.min(arr) < 0.0 or np.max(arr) > 1.0):
            bad = int(np.argmax((arr < 0.0) | (arr > 1.0)))
            raise ValidationError(
                f"trajectory value out of [0, 1] at index {bad}: {arr[bad]!r}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size

    def mean(self):
        return float(np.mean(self.values)) if len(self) else float("nan")


def _validate_kernel(kernel):
    p = np.asarray(kernel, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValidationError(f"transition matrix must be square, got {p.shape}")
    if np.min(p) < 0.0:
        row = int(np.where(p < 0.0)[0][0])
        raise ValidationError(f"negative transition probability in row {row}")
    row_err = np.abs(p.sum(axis=1) - 1.0)
    if np.max(row_err) > ROW_SUM_TOL:
        row = int(np.argmax(row_err))
        raise ValidationError(
            f"row {row} of transition matrix sums to {p[row].sum()!r}, not 1"
        )
    return p


def stationary_of(kernel):
    """Stationary distribution of an irreducible row-stochastic matrix.

    Solved as the null space of (P^T - I) via SVD.  Raises if the
    unit-eigenvalue direction is not unique (reducible input) or the null
    vector is not of one sign.
    """
    p = _validate_kernel(kernel)
    s = p.shape[0]
    if s == 1:
        return np.array([1.0])
    m = p.T - np.eye(s)
    _, sing, vt = np.linalg.svd(m)
    null_count = int(np.sum(sing < 1e-9 * max(1.0, sing[0])))
    if null_count != 1:
        raise ValidationError(
            f"stationary distribution is not unique ({null_count} null directions); "
            "chain is reducible or degenerate"
        )
    pi = vt[-1]
    pi = pi / pi.sum()
    if np.min(pi) < -1e-12:
        raise ValidationError("null vector is not a probability direction")
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    resid = float(np.max(np.abs(pi @ p - pi)))
    if resid > STATIONARY_TOL:
        raise ValidationError(f"stationary solve residual {resid:g} exceeds tolerance")
    return pi


@dataclass(frozen=True)
class FiniteChain:
    """Finite-state chain: transition matrix, stationary law, and f values.

    Serves as the exact oracle substrate: its spectral gap and stationary
    mean are computable in closed form, so Monte Carlo error rates can be
    checked against proven bounds.
    """

    kernel: np.ndarray
    f_values: np.ndarray
    stationary: np.ndarray = None

    def __post_init__(self):
        p = _validate_kernel(self.kernel)
        f = np.asarray(self.f_values, dtype=np.float64)
        if f.shape != (p.shape[0],):
            raise ValidationError(
                f"f_values shape {f.shape} does not match {p.shape[0]} states"
            )
        if f.size and (np.min(f) < 0.0 or np.max(f) > 1.0):
            raise ValidationError("f_values must lie in [0, 1]")
        if self.stationary is None:
            pi = stationary_of(p)
        else:
            pi = np.asarray(self.stationary, dtype=np.float64)
            if pi.shape != (p.shape[0],):
                raise ValidationError("stationary vector has wrong length")
            if np.min(pi) < 0.0 or abs(pi.sum() - 1.0) > 1e-12:
                raise ValidationError("stationary vector is not a distribution")
            resid = float(np.max(np.abs(pi @ p - pi)))
            if resid > STATIONARY_TOL:
                raise ValidationError(
                    f"supplied vector is not stationary (residual {resid:g})"
                )
        for arr in (p, f, pi):
            arr.setflags(write=False)
        object.__setattr__(self, "kernel", p)
        object.__setattr__(self, "f_values", f)
        object.__setattr__(self, "stationary", pi)

    @classmethod
    def two_state(cls, p, q, f_values=(0.0, 1.0)):
        """Two-state chain with P(0->1) = p, P(1->0) = q.

        Stationary law (q, p)/(p+q) is supplied in closed form.
        """
        if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
            raise ValidationError("transition probabilities must be in [0, 1]")
        if p + q == 0.0:
            raise ValidationError("p = q = 0 gives a frozen, reducible chain")
        kernel = np.array([[1.0 - p, p], [q, 1.0 - q]])
        pi = np.array([q / (p + q), p / (p + q)])
        return cls(kernel, np.asarray(f_values, dtype=np.float64), pi)

    @property
    def n_states(self):
        return self.kernel.shape[0]

    def stationary_mean(self):
        """E_pi f, the quantity the hypothesis tests decide about."""
        return float(self.stationary @ self.f_values)

    def cumulative_rows(self):
        cum = np.cumsum(self.kernel, axis=1)
        cum[:, -1] = 1.0
        return cum


def check_detailed_balance(chain, tol=REVERSIBILITY_TOL):
    """Whether pi(x)P(x,y) = pi(y)P(y,x) for all pairs.

    Returns ``(ok, max_violation)``.
    """
    flow = chain.stationary[:, None] * chain.kernel
    violation = float(np.max(np.abs(flow - flow.T)))
    return violation <= tol, violation


def _draw_initial_state(chain, init, rng):
    if init is None:
        weights = chain.stationary
    elif isinstance(init, (int, np.integer)):
        state = int(init)
        if not 0 <= state < chain.n_states:
            raise ValidationError(f"initial state {state} out of range")
        return state
    else:
        weights = np.asarray(init, dtype=np.float64)
        if weights.shape != (chain.n_states,) or np.min(weights) < 0:
            raise ValidationError("initial distribution must be a nonnegative vector")
        weights = weights / weights.sum()
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return int(np.searchsorted(cum, rng.random(), side="right"))


def simulate_finite(chain, n, seed, init=None):
    """Trajectory of f values along a simulated path of length ``n``.

    ``init`` is a state index, an initial distribution, or None for a draw
    from the stationary law (the tests' stationarity assumption).
    Deterministic in ``seed``.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    state = _draw_initial_state(chain, init, rng)
    path = _kernels.finite_chain_path(chain.cumulative_rows(), state, rng.random(n))
    return Trajectory(chain.f_values[path])


class SampleSource:
    """Pull interface for the scalar samples a hypothesis test consumes.

    ``take(k)`` returns the next ``k`` samples as a float array; pulls of
    different sizes concatenate to the same stream for the same seed.
    """

    def take(self, k):
        raise NotImplementedError

    @property
    def consumed(self):
        raise NotImplementedError


class FiniteChainSource(SampleSource):
    """Streams f values from a finite chain, trackable state series.

    ``burn_in`` leading steps are generated and dropped at construction.
    With ``record_states=True`` the post-burn-in state path is kept for
    coordinate-based gap estimation.
    """

    def __init__(self, chain, seed, init=None, burn_in=0, record_states=False):
        self.chain = chain
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._cum = chain.cumulative_rows()
        self._state = _draw_initial_state(chain, init, self._rng)
        self._consumed = 0
        self._record = record_states
        self._state_blocks = []
        if burn_in:
            path = _kernels.finite_chain_path(
                self._cum, self._state, self._rng.random(burn_in)
            )
            self._state = int(path[-1])
        self.burn_in = burn_in

    def take(self, k):
        if k < 0:
            raise ValidationError("cannot take a negative number of samples")
        if k == 0:
            return np.empty(0, dtype=np.float64)
        path = _kernels.finite_chain_path(self._cum, self._state, self._rng.random(k))
        self._state = int(path[-1])
        self._consumed += k
        if self._record:
            self._state_blocks.append(path)
        return self.chain.f_values[path]

    @property
    def consumed(self):
        return self._consumed

    def state_series(self):
        """Post-burn-in state indices seen so far, as one int array."""
        if not self._record:
            raise ValidationError("source was created with record_states=False")
        if not self._state_blocks:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(self._state_blocks)

    def coordinate_series(self):
        """State path rescaled to [0, 1] (the chain's natural coordinate)."""
        states = self.state_series()
        span = max(self.chain.n_states - 1, 1)
        return states.astype(np.float64) / span


class ReplaySource(SampleSource):
    """Replays a fixed array or Trajectory; raises when it runs dry."""

    def __init__(self, values):
        if isinstance(values, Trajectory):
            values = values.values
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValidationError("replay values must be one-dimensional")
        if arr.size and (np.min(arr) < 0.0 or np.max(arr) > 1.0):
            raise ValidationError("replay values must lie in [0, 1]")
        self._values = arr
        self._pos = 0

    def take(self, k):
        if k < 0:
            raise ValidationError("cannot take a negative number of samples")
        if self._pos + k > self._values.size:
            raise SourceExhausted(self._pos, k)
        out = self._values[self._pos:self._pos + k]
        self._pos += k
        return out

    @property
    def consumed(self):
        return self._pos
