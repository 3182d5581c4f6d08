"""Hypothesis tests for threshold decisions on Markov chain samples.

Given samples f(X_1), f(X_2), ... in [0, 1] from a stationary reversible
chain with spectral gap ``gamma``, these tests decide whether the
stationary mean of f is above or below a threshold ``r``:

* ``fixed_length_test``: consume a precomputed number of samples, decide by
  the sign of S_n - n*r.  With ``required_n`` samples the error probability
  is at most ``epsilon``.
* ``seq_indiff_test``: sequential, with an indifference region
  (r - delta, r + delta) inside which either answer is acceptable.  Checks
  a geometric schedule of sample counts against a constant margin ``M``;
  error probability at most ``epsilon``, and typically far fewer samples
  than the fixed test when the true mean is far from ``r``.
* ``seq_noindiff_test``: sequential without an indifference region, using a
  margin ``g(i)`` that grows with the check index; error probability at
  most ``epsilon``, almost-sure termination only when the true mean
  differs from ``r``, so a cap returns Undecided.

All error guarantees are inherited from a Hoeffding bound for reversible
chains (``hoeffding_tail``) and assume the supplied ``gamma`` does not
overestimate the true gap.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# past this many samples the no-indifference test gives up: almost-sure
# termination holds only when the stationary mean differs from the
# threshold, and software must stop either way
DEFAULT_SAMPLE_BUDGET = 10**8


class Decision(enum.Enum):
    H0 = "H0"
    H1 = "H1"
    FORCED_H0 = "ForcedH0"
    FORCED_H1 = "ForcedH1"
    UNDECIDED = "Undecided"

    def accepts_h0(self):
        return self in (Decision.H0, Decision.FORCED_H0)

    def accepts_h1(self):
        return self in (Decision.H1, Decision.FORCED_H1)


@dataclass(frozen=True)
class TestOutcome:
    """Decision plus the bookkeeping the error analysis cares about."""

    decision: Decision
    stopping_time: int
    final_sum: float
    checks_performed: int


@dataclass(frozen=True)
class TestConfig:
    """Parameters of a sequential test.

    ``delta`` is the indifference half-width (None for the test without an
    indifference region), ``epsilon`` the target error probability, ``xi``
    the geometric growth of the check schedule, ``gamma`` the spectral gap
    fed to the thresholds (exact for oracles, estimated in the field).
    """

    r: float
    epsilon: float
    xi: float
    gamma: float
    delta: float = None

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValidationError(f"threshold r={self.r} must lie in (0, 1)")
        if not 0.0 < self.epsilon <= 0.4:
            raise ValidationError(f"epsilon={self.epsilon} must lie in (0, 0.4]")
        if not 0.0 < self.xi <= 0.4:
            raise ValidationError(f"xi={self.xi} must lie in (0, 0.4]")
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma={self.gamma} must lie in (0, 1]")
        if self.delta is not None:
            limit = min(self.r, 1.0 - self.r)
            if not 0.0 < self.delta < limit:
                raise ValidationError(
                    f"delta={self.delta} must lie in (0, min(r, 1-r)) = (0, {limit})"
                )


@dataclass(frozen=True)
class Schedule:
    """Geometric check schedule n_i = floor(n0 * (1 + xi)^i).

    ``checks()`` yields ``(i, n_i)`` for i >= 1 with repeated sample counts
    skipped; the original exponent index is kept because the error
    accounting of the growing threshold depends on it.
    """

    n0: int
    xi: float

    def __post_init__(self):
        if self.n0 < 1:
            raise ValidationError("schedule must start at n0 >= 1")
        if self.xi <= 0.0:
            raise ValidationError("schedule growth factor must be positive")

    def point(self, i):
        return int(math.floor(self.n0 * (1.0 + self.xi) ** i))

    def checks(self):
        prev = self.n0
        i = 0
        while True:
            i += 1
            n_i = self.point(i)
            if n_i <= prev:
                continue
            prev = n_i
            yield i, n_i


# keep pytest from collecting these as test classes
TestOutcome.__test__ = False
TestConfig.__test__ = False


def hoeffding_tail(n, gamma, t):
    """Two-sided tail bound P(|S_n - n E f| >= t) <= 2 exp(-t^2 gamma / n)."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    if not 0.0 < gamma <= 1.0:
        raise ValidationError("gamma must lie in (0, 1]")
    if t < 0.0:
        raise ValidationError("t must be nonnegative")
    return min(1.0, 2.0 * math.exp(-(t * t) * gamma / n))


def required_n(epsilon, gamma, delta):
    """Samples sufficient for the fixed test to err with probability <= epsilon."""
    if not 0.0 < epsilon <= 1.0:
        raise ValidationError("epsilon must lie in (0, 1]")
    if not 0.0 < gamma <= 1.0:
        raise ValidationError("gamma must lie in (0, 1]")
    if not 0.0 < delta < 1.0:
        raise ValidationError("delta must lie in (0, 1)")
    n = int(math.ceil(math.log(1.0 / epsilon) / (gamma * delta * delta)))
    # the ceil must make the realised bound meet the target
    assert math.exp(-gamma * delta * delta * n) <= epsilon * (1.0 + 1e-12)
    return n


def m_threshold(epsilon, xi, gamma, delta):
    """Constant decision margin of the indifference-region sequential test.

    Only valid on epsilon <= 0.4 and xi <= 0.4 (outside, the union-bound
    proof of the error guarantee breaks down), hence the hard error.
    """
    if not 0.0 < epsilon <= 0.4:
        raise ValidationError("epsilon must lie in (0, 0.4] for the margin bound")
    if not 0.0 < xi <= 0.4:
        raise ValidationError("xi must lie in (0, 0.4] for the margin bound")
    if not 0.0 < gamma <= 1.0:
        raise ValidationError("gamma must lie in (0, 1]")
    if not 0.0 < delta < 1.0:
        raise ValidationError("delta must lie in (0, 1)")
    return math.log(2.0 / math.sqrt(epsilon * xi)) / (2.0 * gamma * delta)


def xi_default(epsilon):
    """Schedule growth factor minimising the expected-stopping-time bound."""
    if not 0.0 < epsilon < 1.0:
        raise ValidationError("epsilon must lie in (0, 1)")
    return min(0.4, 1.0 / (math.log(2.0) * math.log(1.0 / epsilon)))


def g_threshold(i, epsilon, gamma, n_i):
    """Growing margin of the no-indifference test at check index i."""
    if i < 1:
        raise ValidationError("check index starts at 1")
    return math.sqrt(
        (n_i / gamma) * (math.log(1.0 / epsilon) + 1.0 + 2.0 * math.log(i))
    )


def indiff_n0(m, r):
    """First schedule size of the indifference-region test."""
    return max(1, int(math.floor(m * min(1.0 / (1.0 - r), 1.0 / r))))


def noindiff_n0(gamma):
    """First schedule size of the no-indifference test.

    Sized so the run is long enough to also estimate the spectral gap.
    """
    return max(1, int(math.floor(100.0 / gamma)))


def default_burn_in(gamma, override=None):
    """Leading steps to discard so the stationarity assumption is tenable."""
    base = int(math.ceil(30.0 / gamma))
    if override is None:
        return base
    return max(base, int(override))


def fixed_length_test(source, r, n):
    """Consume exactly n samples; accept H0 iff their sum reaches n*r."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    if not 0.0 < r < 1.0:
        raise ValidationError("threshold r must lie in (0, 1)")
    total = float(np.sum(source.take(n)))
    decision = Decision.H0 if total >= n * r else Decision.H1
    return TestOutcome(decision, n, total, 1)


def seq_indiff_test(source, config, m_override=None):
    """Sequential test with indifference region.

    Walks the geometric schedule, accepting H0 at the first check where
    S >= n_i*r + M and H1 where S <= n_i*r - M (ties decide).  A run that
    reaches 6M/delta samples undecided is forced by the sign of S - n*r;
    that happens with probability at most (1+xi)*epsilon*xi/4.
    """
    if config.delta is None:
        raise ValidationError("indifference-region test needs config.delta")
    m = (
        float(m_override)
        if m_override is not None
        else m_threshold(config.epsilon, config.xi, config.gamma, config.delta)
    )
    cap = 6.0 * m / config.delta
    schedule = Schedule(indiff_n0(m, config.r), config.xi)
    total = float(np.sum(source.take(schedule.n0)))
    last = schedule.n0
    checks = 0
    for _, n_i in schedule.checks():
        total += float(np.sum(source.take(n_i - last)))
        last = n_i
        checks += 1
        margin = total - n_i * config.r
        if margin >= m:
            return TestOutcome(Decision.H0, n_i, total, checks)
        if margin <= -m:
            return TestOutcome(Decision.H1, n_i, total, checks)
        if n_i >= cap:
            forced = Decision.FORCED_H0 if margin >= 0.0 else Decision.FORCED_H1
            return TestOutcome(forced, n_i, total, checks)
    raise AssertionError("schedule generator is infinite")  # pragma: no cover


def seq_noindiff_test(source, config, max_checks=None):
    """Sequential test without indifference region.

    Decides when |S - n_i*r| reaches the growing margin g(i).  Returns
    Undecided once ``max_checks`` checks have passed, or (by default) when
    the next schedule point would exceed DEFAULT_SAMPLE_BUDGET samples;
    without a drift (stationary mean exactly r) the test need not
    terminate on its own.
    """
    if max_checks is not None and max_checks < 1:
        raise ValidationError("max_checks must be at least 1")
    schedule = Schedule(noindiff_n0(config.gamma), config.xi)
    total = float(np.sum(source.take(schedule.n0)))
    last = schedule.n0
    checks = 0
    for i, n_i in schedule.checks():
        if max_checks is None and n_i >= DEFAULT_SAMPLE_BUDGET:
            break
        total += float(np.sum(source.take(n_i - last)))
        last = n_i
        checks += 1
        margin = total - n_i * config.r
        g = g_threshold(i, config.epsilon, config.gamma, n_i)
        if margin >= g:
            return TestOutcome(Decision.H0, n_i, total, checks)
        if margin <= -g:
            return TestOutcome(Decision.H1, n_i, total, checks)
        if max_checks is not None and checks >= max_checks:
            break
    return TestOutcome(Decision.UNDECIDED, last, total, checks)


def expected_stop_indiff(m, xi, gamma, big_delta):
    """Upper bound on the mean stopping time of the indifference test.

    ``big_delta`` is the distance |r - E f| between threshold and true
    mean (at least delta under either hypothesis).
    """
    if big_delta <= 0.0:
        raise ValidationError("Delta must be positive")
    root = math.sqrt(
        (m + 2.0 * big_delta) / (gamma * big_delta**3) + 2.0 / (gamma * big_delta**2)
    )
    return (1.0 + xi) * (m / big_delta + 2.0 * root)


def expected_stop_noindiff(epsilon, xi, gamma, big_delta, schedule):
    """Upper bound on the mean stopping time of the no-indifference test.

    Scans the schedule for the first check whose margin requirement is met
    at drift ``big_delta`` and adds the geometric tail term.
    """
    if big_delta <= 0.0:
        raise ValidationError("Delta must be positive")
    denom = gamma * big_delta * big_delta
    for i, n_i in schedule.checks():
        need = 4.0 * (math.log(1.0 / epsilon) + 1.0 + 2.0 * math.log(i)) / denom
        if need <= n_i:
            return (1.0 + xi) * (n_i + 4.0 * epsilon / denom)
        if n_i > 10**15:
            raise ValidationError(
                "schedule exhausted before the stopping bound stabilised "
                "(Delta too close to zero)"
            )
    raise AssertionError("schedule generator is infinite")  # pragma: no cover


def stop_tail_indiff(t, m, xi, gamma, big_delta):
    """Tail bound P(T >= t) for the indifference-region stopping time T."""
    if t < 0.0:
        raise ValidationError("t must be nonnegative")
    if t == 0.0:
        return 1.0
    excess = max(t * big_delta - m, 0.0)
    return min(1.0, (1.0 + xi) * math.exp(-gamma * excess * excess / t))
