"""Absolute spectral gap: exact computation for finite chains and an
autocovariance-based estimator for chain output.

The estimator exploits the geometric decay of the lag-eta autocovariance
ratio: (|rho_eta| / variance)^(1/eta) tends to one minus the absolute gap.
Working at a single well-chosen lag trades bias against estimator variance;
the lag itself depends on the unknown gap, so it is found by iterating
gap -> lag -> gap until the estimate stops decreasing.
"""

import math
from dataclasses import dataclass

import numpy as np

from .chains import Trajectory, check_detailed_balance
from .errors import DegenerateFunctionError, InsufficientSamples, ValidationError

GAP_FLOOR = 1e-6
ITERATION_CAP = 50
UNIT_EIGENVALUE_TOL = 1e-10


@dataclass(frozen=True)
class GapEstimate:
    """Result of the iterative gap estimation.

    ``per_function`` lists ``(function_id, autocov_ratio, implied_gap)`` at
    the accepted lag; ``gamma_star_hat`` is their minimum.  ``history``
    records ``(lag, gamma_min)`` per iteration for diagnostics, and
    ``capped`` flags a run that hit the iteration cap instead of
    stabilising.
    """

    gamma_star_hat: float
    eta_final: int
    per_function: tuple
    n_used: int
    history: tuple
    capped: bool = False


def _as_array(series):
    if isinstance(series, Trajectory):
        return np.asarray(series.values, dtype=np.float64)
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError("sample series must be one-dimensional")
    return arr


def autocovariance(series, eta):
    """Empirical lag-eta autocovariance with 1/(n - eta) normalisation.

    Centering uses the mean of the whole series; at eta = 0 this is the
    (biased-normalisation) empirical variance.
    """
    arr = _as_array(series)
    n = arr.size
    if eta < 0:
        raise ValidationError("lag must be nonnegative")
    if n <= eta + 1:
        raise ValidationError(f"need more than eta + 1 = {eta + 1} samples, got {n}")
    centered = arr - arr.mean()
    if eta == 0:
        return float(centered @ centered) / n
    return float(centered[:-eta] @ centered[eta:]) / (n - eta)


def gap_from_ratio(rho_eta, variance, eta):
    """Gap implied by an autocovariance ratio at lag eta.

    Returns 1 - (|rho_eta| / variance)^(1/eta), clamped into
    [GAP_FLOOR, 1]: a ratio above one is sampling noise, not a spectral
    radius, and a ratio of zero means decorrelation within one lag.
    """
    if variance <= 0.0:
        raise DegenerateFunctionError(
            "zero variance: the function is constant under the chain"
        )
    if eta < 1:
        raise ValidationError("lag must be at least 1")
    ratio = abs(rho_eta) / variance
    if ratio == 0.0:
        return 1.0
    gap = 1.0 - ratio ** (1.0 / eta)
    return min(1.0, max(GAP_FLOOR, gap))


def eta_for(n, gamma_star):
    """Lag at which the autocovariance ratio is informative for the gap.

    Balances decay of the signal (1 - gap)^eta against the 1/sqrt(n * gap)
    noise of the ratio estimate.  Rounded half-up and clamped into
    [1, n // 10]; lags past n/10 make the autocovariance too noisy.
    """
    if n < 2:
        raise ValidationError("need at least 2 samples")
    if gamma_star <= 0.0:
        raise ValidationError("gamma_star must be positive")
    if gamma_star >= 1.0:
        return 1
    raw = math.log(n * gamma_star) / (4.0 * math.log(1.0 / (1.0 - gamma_star)))
    eta = int(math.floor(raw + 0.5))
    return max(1, min(eta, max(1, n // 10)))


def _gap_at_lag(functions, lag):
    """Minimum implied gap across functions at one lag, with diagnostics."""
    per_function = []
    gaps = []
    for fid, centered, variance, n in functions:
        rho = float(centered[:-lag] @ centered[lag:]) / (n - lag)
        ratio = abs(rho) / variance
        gap = gap_from_ratio(rho, variance, lag)
        per_function.append((fid, ratio, gap))
        gaps.append(gap)
    return min(gaps), tuple(per_function)


def estimate_gap(series_by_function, function_ids=None):
    """Iterative gap estimate from per-function sample series of one path.

    Starts at lag 1, then alternates lag-from-gap and gap-from-lag until
    the estimate stops decreasing, returning the last decreasing value.
    Constant functions are skipped (all constant raises
    DegenerateFunctionError).  Raises InsufficientSamples, carrying the
    interim estimate and a target length of 200 / gamma_star_hat, when the
    series is shorter than 100 / gamma_star_hat.
    """
    arrays = [_as_array(s) for s in series_by_function]
    if not arrays:
        raise ValidationError("need at least one coordinate function")
    n = arrays[0].size
    if any(a.size != n for a in arrays):
        raise ValidationError("all coordinate series must share one length")
    if n < 3:
        raise ValidationError("need at least 3 samples")
    if function_ids is None:
        function_ids = [f"f{i + 1}" for i in range(len(arrays))]

    functions = []
    for fid, arr in zip(function_ids, arrays):
        centered = arr - arr.mean()
        variance = float(centered @ centered) / n
        if variance > 0.0:
            functions.append((fid, centered, variance, n))
    if not functions:
        raise DegenerateFunctionError(
            "every coordinate function is constant along the path"
        )

    lag = 1
    gamma, per_function = _gap_at_lag(functions, lag)
    history = [(lag, gamma)]
    capped = True
    for _ in range(ITERATION_CAP):
        next_lag = eta_for(n, gamma)
        if next_lag == lag:
            capped = False
            break
        gamma_next, per_next = _gap_at_lag(functions, next_lag)
        history.append((next_lag, gamma_next))
        if gamma_next >= gamma:
            capped = False
            break
        lag, gamma, per_function = next_lag, gamma_next, per_next

    estimate = GapEstimate(
        gamma_star_hat=gamma,
        eta_final=lag,
        per_function=per_function,
        n_used=n,
        history=tuple(history),
        capped=capped,
    )
    if n <= 100.0 / gamma:
        raise InsufficientSamples(int(math.ceil(200.0 / gamma)), estimate)
    return estimate


def exact_gap_finite(chain):
    """Exact (gamma, gamma_star) of a reversible finite chain.

    Conjugates the kernel by diag(sqrt(pi)) into a symmetric matrix and
    reads the gaps off its eigenvalues.  A unit eigenvalue of multiplicity
    above one (disconnected chain) gives (0, 0).
    """
    ok, violation = check_detailed_balance(chain)
    if not ok:
        raise ValidationError(
            f"chain is not reversible (detailed balance violation {violation:g})"
        )
    pi = chain.stationary
    if np.min(pi) <= 0.0:
        raise ValidationError("stationary weight zero: unreachable state present")
    d = np.sqrt(pi)
    sym = (d[:, None] * chain.kernel) / d[None, :]
    eigenvalues = np.linalg.eigvalsh(sym)
    unit = eigenvalues >= 1.0 - UNIT_EIGENVALUE_TOL
    if int(unit.sum()) != 1:
        return 0.0, 0.0
    rest = eigenvalues[:-1]
    if rest.size == 0:
        return 1.0, 1.0
    gamma = 1.0 - float(np.max(rest))
    gamma_star = 1.0 - float(np.max(np.abs(rest)))
    return gamma, gamma_star
