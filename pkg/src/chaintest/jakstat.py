"""ODE model of STAT phosphorylation, dimerisation and nuclear shuttling.

The pathway: the Epo stimulus phosphorylates cytoplasmic STAT, which
dimerises; dimers are imported into the nucleus, where a chain of K delay
compartments models the residence time before the dimer's two STAT
molecules are exported back to the cytoplasm.

State vector layout (length 5 + K, K = 10 by default):

    [Epo, STAT, STATp, STATpd, X_1 .. X_K, STATn]

Epo is a constant input (no dynamics of its own: the printed model gives
it no equation, so it is held at its initial amount).  The combination
STAT + STATp + 2*STATpd + 2*sum(X) is conserved exactly by the vector
field, which pins down a useful integrator check.  Note the identity
STATn(t) = sum_j X_j(t) whenever both start at zero: the nuclear amount is
the content of the delay queue.  A consequence worth knowing: with a total
initial pool p, the nuclear amount can never exceed p/2, so the shipped
defaults keep the threshold property nontrivial only when the initial STAT
amount exceeds twice the threshold.

Two caveats against the published tables, both configurable and logged in
the README: the printed initial STAT of 0 freezes all dynamics, so the
library default is 1.0; and the case-study preset raises it to 4.0 so the
threshold of 1 is actually reachable (see above).

Observables: y1 = STATp + 2*STATpd (total phosphorylated STAT in the
cytoplasm), y2 = STAT + STATp + 2*STATpd (total cytoplasmic STAT).  The
original measurements are not published; `synthesize_data` generates a
synthetic stand-in and marks it as such.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels.fallback import _rhs
from .errors import DivergenceError, ValidationError
from .mh import PriorBox, ProposalSpec, gaussian_loglik

NEG_INF = float("-inf")

IDX_EPO = 0
IDX_STAT = 1
IDX_STATP = 2
IDX_STATPD = 3
IDX_X1 = 4

DEFAULT_N_DELAY = 10
DEFAULT_EPO = 2.0
DEFAULT_INITIAL_STAT = 1.0
DEFAULT_DT = 0.01
DEFAULT_T_END = 60.0
DEFAULT_THRESHOLD = 1.0
DEFAULT_NOISE_SD = 0.1
DEFAULT_N_OBS = 18

# parameter boxes and proposal scales used to explore the posterior
PARAM_NAMES = ("k1", "k2", "k3", "k4")
PARAM_RANGES = ((0.0, 5.0), (0.0, 30.0), (0.0, 1.0), (0.0, 5.0))
PROPOSAL_SIGMAS = (0.02, 0.5, 0.01, 0.02)

# synthetic-data reference point: midscale rates chosen by us, no relation
# to any measured dataset
REFERENCE_PARAMS = (0.5, 2.0, 0.1, 0.5)


@dataclass(frozen=True)
class JakStatParams:
    """Rate constants: k1, k2 in 1/(conc*min); k3, k4 in 1/min."""

    k1: float
    k2: float
    k3: float
    k4: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            if getattr(self, name) < 0.0:
                raise ValidationError(f"rate constant {name} must be nonnegative")

    def as_array(self):
        return np.array([self.k1, self.k2, self.k3, self.k4])

    @classmethod
    def from_array(cls, arr):
        return cls(*(float(v) for v in arr))


def default_prior_box():
    lows, highs = zip(*PARAM_RANGES)
    return PriorBox(np.array(lows), np.array(highs))


def default_proposal():
    return ProposalSpec(np.array(PROPOSAL_SIGMAS))


def initial_state(stat=DEFAULT_INITIAL_STAT, epo=DEFAULT_EPO,
                  n_delay=DEFAULT_N_DELAY):
    """Fresh state: the Epo input plus an unphosphorylated STAT pool."""
    if n_delay < 1:
        raise ValidationError("need at least one delay compartment")
    y = np.zeros(5 + n_delay)
    y[IDX_EPO] = epo
    y[IDX_STAT] = stat
    return y


def nuclear_index(n_delay):
    return 4 + n_delay


def ode_rhs(state, params):
    """Time derivative of the state under the printed reaction equations."""
    y = np.asarray(state, dtype=np.float64)
    if y.size < 6:
        raise ValidationError("state must have at least one delay compartment")
    if isinstance(params, JakStatParams):
        k = (params.k1, params.k2, params.k3, params.k4)
    else:
        k = tuple(float(v) for v in params)
    return np.array(_rhs(y.tolist(), *k, y.size - 5))


def conserved_total(state):
    """STAT + STATp + 2*STATpd + 2*sum(X): constant along trajectories."""
    y = np.asarray(state, dtype=np.float64)
    n_delay = y.shape[-1] - 5
    x_sum = y[..., IDX_X1:IDX_X1 + n_delay].sum(axis=-1)
    return (y[..., IDX_STAT] + y[..., IDX_STATP]
            + 2.0 * y[..., IDX_STATPD] + 2.0 * x_sum)


def _params_array(params):
    if isinstance(params, JakStatParams):
        return params.as_array()
    arr = np.asarray(params, dtype=np.float64)
    if arr.shape != (4,):
        raise ValidationError("params must be the four rate constants")
    return arr


def integrate(params, init, t_end=DEFAULT_T_END, dt=DEFAULT_DT):
    """Classical fixed-step RK4 from 0 to t_end.

    Returns ``(times, states)`` with one row per step including t = 0.
    Raises DivergenceError at the first non-finite state.
    """
    if dt <= 0.0 or t_end <= 0.0:
        raise ValidationError("dt and t_end must be positive")
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise ValidationError("t_end shorter than one step")
    states, fail = _kernels.jakstat_path(_params_array(params), init, dt, n_steps)
    if fail >= 0:
        raise DivergenceError(fail * dt)
    times = np.arange(n_steps + 1) * dt
    return times, states


def observables(states):
    """Pointwise observables (y1, y2) of a state array (..., 5 + K)."""
    y = np.asarray(states, dtype=np.float64)
    y1 = y[..., IDX_STATP] + 2.0 * y[..., IDX_STATPD]
    y2 = y[..., IDX_STAT] + y[..., IDX_STATP] + 2.0 * y[..., IDX_STATPD]
    return y1, y2


def property_f(params, init=None, t_end=DEFAULT_T_END, dt=DEFAULT_DT,
               threshold=DEFAULT_THRESHOLD):
    """1.0 iff the nuclear amount reaches ``threshold`` on the time grid.

    Integrator divergence maps conservatively to 0.0; use
    :func:`property_f_detail` to observe the flag.
    """
    return property_f_detail(params, init, t_end, dt, threshold)[0]


def property_f_detail(params, init=None, t_end=DEFAULT_T_END, dt=DEFAULT_DT,
                      threshold=DEFAULT_THRESHOLD):
    """As :func:`property_f`, returning ``(value, diverged)``."""
    if init is None:
        init = initial_state()
    if dt <= 0.0 or t_end <= 0.0:
        raise ValidationError("dt and t_end must be positive")
    n_steps = int(round(t_end / dt))
    no_obs = np.empty(0)
    _, _, max_nuclear, fail = _kernels.jakstat_probe(
        _params_array(params), init, dt, n_steps, no_obs
    )
    if fail >= 0:
        return 0.0, True
    return (1.0 if max_nuclear >= threshold else 0.0), False


@dataclass(frozen=True)
class ObservationSet:
    """Noisy observations of (y1, y2) at increasing time points.

    ``y`` and ``sigma`` have shape (2, T); row 0 is y1, row 1 is y2.
    """

    times: np.ndarray
    y: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if times.ndim != 1 or times.size == 0:
            raise ValidationError("need at least one observation time")
        if np.any(np.diff(times) <= 0.0):
            raise ValidationError("observation times must be strictly increasing")
        if times[0] <= 0.0:
            raise ValidationError("observation times must be positive")
        if y.shape != (2, times.size) or sigma.shape != y.shape:
            raise ValidationError(
                f"need y and sigma of shape (2, {times.size}), got {y.shape} and {sigma.shape}"
            )
        if np.any(sigma <= 0.0):
            raise ValidationError("standard deviations must be positive")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(times))):
            raise ValidationError("observations must be finite")
        for arr in (times, y, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n_points(self):
        return self.times.size


def synthesize_data(ref_params, noise_sd=DEFAULT_NOISE_SD, seed=0,
                    n_points=DEFAULT_N_OBS, init=None, t_end=DEFAULT_T_END,
                    dt=DEFAULT_DT):
    """Simulate observables at evenly spaced times and add Gaussian noise.

    ``noise_sd`` is a scalar or a (2, n_points) array; the standard
    deviations used are stored in the result.  Deterministic in ``seed``.
    """
    if init is None:
        init = initial_state()
    times = np.arange(1, n_points + 1) * (t_end / n_points)
    y1, y2, _, fail = _kernels.jakstat_probe(
        _params_array(ref_params), init, dt, int(round(t_end / dt)), times
    )
    if fail >= 0:
        raise DivergenceError(fail * dt)
    clean = np.stack([y1, y2])
    sigma = np.broadcast_to(np.asarray(noise_sd, dtype=np.float64),
                            clean.shape).copy()
    if np.any(sigma < 0.0):
        raise ValidationError("noise standard deviations must be nonnegative")
    rng = np.random.default_rng(seed)
    noisy = clean + sigma * rng.standard_normal(clean.shape)
    # a zero noise profile is allowed for round-trip tests, but the stored
    # sigmas must stay positive for the likelihood
    stored = np.where(sigma > 0.0, sigma, 1.0) if np.any(sigma == 0.0) else sigma
    return ObservationSet(times, noisy, stored)


def save_observations(path, obs):
    """Write an ObservationSet as CSV: ``t,y1,sd1,y2,sd2``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,y1,sd1,y2,sd2\n")
        for j in range(obs.n_points):
            row = (obs.times[j], obs.y[0, j], obs.sigma[0, j],
                   obs.y[1, j], obs.sigma[1, j])
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_observations(path):
    """Parse and validate an observation CSV written by save_observations."""
    rows = []
    lines = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,y1,sd1,y2,sd2":
            raise ValidationError(
                f"{path}:1: expected header 't,y1,sd1,y2,sd2', got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValidationError(f"{path}:{lineno}: expected 5 fields")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            lines.append(lineno)
    if not rows:
        raise ValidationError(f"{path}: no observation rows")
    data = np.array(rows)
    times = data[:, 0]
    increases = np.diff(times) > 0.0
    if not np.all(increases):
        bad = lines[int(np.argmin(increases)) + 1]
        raise ValidationError(f"{path}:{bad}: times not strictly increasing")
    sd_ok = np.min(data[:, [2, 4]], axis=1) > 0.0
    if not np.all(sd_ok):
        bad = lines[int(np.argmin(sd_ok))]
        raise ValidationError(f"{path}:{bad}: nonpositive standard deviation")
    y = np.stack([data[:, 1], data[:, 3]])
    sigma = np.stack([data[:, 2], data[:, 4]])
    return ObservationSet(times, y, sigma)


class JakStatPosterior:
    """Likelihood and threshold property sharing one ODE solve per point.

    Callable as the log-likelihood model for the MH machinery; also
    evaluates the property function.  Solver failures map to -inf
    likelihood (rejected move) and property 0, both counted.
    """

    def __init__(self, observations, init=None, dt=DEFAULT_DT,
                 t_end=DEFAULT_T_END, threshold=DEFAULT_THRESHOLD,
                 cache_size=8):
        self.observations = observations
        self.init = initial_state() if init is None else np.asarray(init, float)
        self.dt = dt
        self.t_end = t_end
        self.threshold = threshold
        self.n_steps = int(round(t_end / dt))
        if observations.times[-1] > self.n_steps * dt + dt:
            raise ValidationError("observations extend past the integration window")
        self.divergences = 0
        self._cache = {}
        self._cache_size = cache_size

    def _solve(self, theta):
        key = np.asarray(theta, dtype=np.float64).tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        y1, y2, max_nuclear, fail = _kernels.jakstat_probe(
            np.asarray(theta, dtype=np.float64), self.init, self.dt,
            self.n_steps, self.observations.times,
        )
        if fail >= 0:
            self.divergences += 1
            result = (None, 0.0)
        else:
            loglik = gaussian_loglik(self.observations, np.stack([y1, y2]))
            result = (loglik, 1.0 if max_nuclear >= self.threshold else 0.0)
        if len(self._cache) >= self._cache_size:
            self._cache.pop(next(iter(self._cache)))
        self._cache[key] = result
        return result

    def __call__(self, theta):
        loglik, _ = self._solve(theta)
        return NEG_INF if loglik is None else loglik

    def property_f(self, theta):
        return self._solve(theta)[1]
