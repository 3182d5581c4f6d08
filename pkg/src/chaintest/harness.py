"""Replication harness: m independent chains through gap estimation and all
three tests, with deterministic parallelism and stable CSV outputs.

Chain ``i`` is seeded with ``base_seed + i`` and owns its source, model
evaluator and RNG, so a worker pool and a serial loop produce identical
results; aggregation sorts by chain id before writing, which keeps the
output byte-stable regardless of scheduling.
"""

import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import csvio, jakstat, spectral
from .chains import FiniteChain, FiniteChainSource, ReplaySource
from .errors import ChainTestError, ConfigError, InsufficientSamples, SourceExhausted
from .hyptest import (
    Decision,
    Schedule,
    TestConfig,
    expected_stop_indiff,
    expected_stop_noindiff,
    indiff_n0,
    m_threshold,
    noindiff_n0,
    required_n,
    seq_indiff_test,
    seq_noindiff_test,
    xi_default,
)
from .mh import MHSource, PriorBox, ProposalSpec

FIXED, SEQ, SEQ_NI = "fixed", "seq", "seq-ni"

DECISIONS_HEADER = ["test", "r", "delta", "epsilon", "chain_id", "decision",
                    "stopping_time", "final_sum", "gamma_used"]
STOPPING_HEADER = ["test", "r", "delta", "epsilon", "chain_id", "decision",
                   "stopping_time"]
GAP_HEADER = ["chain_id", "gamma_star_hat", "eta_final", "n_used"]
ETA_TRACE_HEADER = ["chain_id", "iteration", "eta", "gamma_min"]
ERROR_RATES_HEADER = ["test", "n", "r", "delta", "epsilon",
                      "empirical_error", "bound"]
BOUNDS_HEADER = ["r", "delta", "epsilon", "xi", "gamma", "n_fixed", "m", "n0",
                 "stop_indiff", "stop_noindiff"]


def parse_oracle_spec(text):
    """Parse ``oracle:p=0.1,q=0.1[,f0=0][,f1=1]`` into a FiniteChain."""
    body = text.partition(":")[2] if text.startswith("oracle:") else text
    fields = {"f0": 0.0, "f1": 1.0}
    for part in body.split(","):
        if not part.strip():
            continue
        key, eq, value = part.partition("=")
        if not eq:
            raise ConfigError(f"oracle spec field {part!r} is not key=value")
        try:
            fields[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"oracle spec field {part!r}: bad number") from None
    for key in ("p", "q"):
        if key not in fields:
            raise ConfigError(f"oracle spec needs {key}=")
    return FiniteChain.two_state(fields["p"], fields["q"],
                                 (fields["f0"], fields["f1"]))


def _mh_spec_from_resolver(res):
    """Collect the MH + model keys into a plain picklable dict."""
    box_lo, box_hi, sigmas = [], [], []
    for i, name in enumerate(jakstat.PARAM_NAMES):
        lo_d, hi_d = jakstat.PARAM_RANGES[i]
        box_lo.append(res.get_float(f"{name}.lo", lo_d))
        box_hi.append(res.get_float(f"{name}.hi", hi_d))
        sigmas.append(res.get_float(f"{name}.sigma_mh", jakstat.PROPOSAL_SIGMAS[i]))
    return {
        "box_lo": box_lo,
        "box_hi": box_hi,
        "sigmas": sigmas,
        "init_stat": res.get_float("init.stat", jakstat.DEFAULT_INITIAL_STAT),
        "epo": res.get_float("epo", jakstat.DEFAULT_EPO),
        "n_delay": res.get_int("K", jakstat.DEFAULT_N_DELAY),
        "dt": res.get_float("dt", jakstat.DEFAULT_DT),
        "t_end": res.get_float("t_end", jakstat.DEFAULT_T_END),
        "threshold": res.get_float("threshold", jakstat.DEFAULT_THRESHOLD),
        "data": res.get_str("data"),
    }


def ensure_observations(spec, out_dir, res):
    """Load the observation CSV, synthesising one first if need be."""
    path = spec["data"]
    if path is None:
        path = os.path.join(out_dir, "observations.csv")
        spec["data"] = path
        res.resolved["data"] = path
    if not os.path.exists(path):
        ref = [res.get_float(f"ref.{n}", jakstat.REFERENCE_PARAMS[i])
               for i, n in enumerate(jakstat.PARAM_NAMES)]
        noise = res.get_float("noise_sd", jakstat.DEFAULT_NOISE_SD)
        data_seed = res.get_int("data_seed", 0)
        obs = jakstat.synthesize_data(
            np.array(ref), noise_sd=noise, seed=data_seed,
            init=jakstat.initial_state(spec["init_stat"], spec["epo"],
                                       spec["n_delay"]),
            t_end=spec["t_end"], dt=spec["dt"],
        )
        jakstat.save_observations(path, obs)
    return path


def build_source(spec, seed):
    """Instantiate a sample source from a picklable source spec."""
    kind = spec["kind"]
    if kind == "oracle":
        chain = FiniteChain.two_state(spec["p"], spec["q"],
                                      (spec["f0"], spec["f1"]))
        return FiniteChainSource(chain, seed, burn_in=spec["burn_in"],
                                 record_states=True)
    if kind == "mh":
        obs = jakstat.load_observations(spec["data"])
        init_state = jakstat.initial_state(spec["init_stat"], spec["epo"],
                                           spec["n_delay"])
        model = jakstat.JakStatPosterior(
            obs, init=init_state, dt=spec["dt"], t_end=spec["t_end"],
            threshold=spec["threshold"],
        )
        prior = PriorBox(np.array(spec["box_lo"]), np.array(spec["box_hi"]))
        proposal = ProposalSpec(np.array(spec["sigmas"]))
        return MHSource(model, prior, proposal, model.property_f, seed,
                        burn_in=spec["burn_in"], record_states=True)
    if kind == "csv":
        from .csvio import read_trajectory_csv

        values = read_trajectory_csv(spec["path"], [spec["column"]])[spec["column"]]
        return ReplaySource(values)
    raise ConfigError(f"unknown source kind {kind!r}")


def _coordinate_series(source, fvals):
    if isinstance(source, FiniteChainSource):
        return [source.coordinate_series()], ["state"]
    if isinstance(source, MHSource):
        return source.chain.coordinate_series(), list(jakstat.PARAM_NAMES)
    return [fvals], ["f"]


def estimate_gap_with_extension(source, fvals, max_n):
    """Run the gap estimator, pulling more samples on demand.

    Returns ``(estimate, fvals, insufficient)``; ``insufficient`` is True
    when the sample budget ran out before the estimator was satisfied (the
    interim estimate is returned).  Replay sources cannot be extended.
    """
    while True:
        series, ids = _coordinate_series(source, fvals)
        try:
            return spectral.estimate_gap(series, ids), fvals, False
        except InsufficientSamples as exc:
            extendable = isinstance(source, (FiniteChainSource, MHSource))
            target = min(exc.target_n, max_n)
            if not extendable or target <= len(fvals):
                return exc.interim, fvals, True
            fvals = np.concatenate([fvals, source.take(target - len(fvals))])


@dataclass
class ChainRecord:
    chain_id: int
    n_samples: int
    chain_mean: float
    gamma_star_hat: float
    eta_final: int
    gap_n_used: int
    gap_capped: bool
    gap_insufficient: bool
    gamma_used: float
    history: tuple
    fixed: dict      # (r_idx, n) -> Decision value strings
    seq: dict        # (r_idx, d_idx, e_idx) -> TestOutcome
    seq_ni: dict     # (r_idx, e_idx) -> TestOutcome


def _exhausted_entry(cum, exc):
    """Undecided record for a test that outran the recorded samples."""
    consumed = exc.consumed
    final_sum = float(cum[consumed - 1]) if consumed > 0 else 0.0
    return Decision.UNDECIDED.value, consumed, final_sum


def run_chain_job(spec, chain_id):
    """Everything one chain contributes, as plain data."""
    seed = spec["base_seed"] + chain_id
    source = build_source(spec["source"], seed)
    fvals = source.take(spec["steps"])

    estimate, fvals, insufficient = estimate_gap_with_extension(
        source, fvals, spec["gap_max_n"]
    )
    gamma_used = min(1.0, estimate.gamma_star_hat * spec["gamma_safety"])

    cum = np.cumsum(fvals)
    n_total = len(fvals)

    fixed = {}
    for ri, r in enumerate(spec["r_grid"]):
        for n in spec["n_grid"]:
            if n > n_total:
                continue
            decision = Decision.H0 if float(cum[n - 1]) >= n * r else Decision.H1
            fixed[(ri, n)] = decision.value

    seq = {}
    seq_ni = {}
    for ri, r in enumerate(spec["r_grid"]):
        for ei, eps in enumerate(spec["eps_grid"]):
            xi = spec["xi"] if spec["xi"] is not None else xi_default(eps)
            for di, delta in enumerate(spec["delta_grid"]):
                if not valid_cell(r, delta):
                    continue
                cfg = TestConfig(r=r, epsilon=eps, xi=xi, gamma=gamma_used,
                                 delta=delta)
                try:
                    outcome = seq_indiff_test(ReplaySource(fvals), cfg)
                    seq[(ri, di, ei)] = (outcome.decision.value,
                                         outcome.stopping_time,
                                         outcome.final_sum)
                except SourceExhausted as exc:
                    seq[(ri, di, ei)] = _exhausted_entry(cum, exc)
            cfg = TestConfig(r=r, epsilon=eps, xi=xi, gamma=gamma_used)
            try:
                outcome = seq_noindiff_test(ReplaySource(fvals), cfg)
                seq_ni[(ri, ei)] = (outcome.decision.value,
                                    outcome.stopping_time, outcome.final_sum)
            except SourceExhausted as exc:
                seq_ni[(ri, ei)] = _exhausted_entry(cum, exc)

    return ChainRecord(
        chain_id=chain_id,
        n_samples=n_total,
        chain_mean=float(cum[-1]) / n_total,
        gamma_star_hat=estimate.gamma_star_hat,
        eta_final=estimate.eta_final,
        gap_n_used=estimate.n_used,
        gap_capped=estimate.capped,
        gap_insufficient=insufficient,
        gamma_used=gamma_used,
        history=estimate.history,
        fixed=fixed,
        seq=seq,
        seq_ni=seq_ni,
    )


def _job(args):
    spec, chain_id = args
    try:
        return run_chain_job(spec, chain_id)
    except ChainTestError as exc:
        raise ChainTestError(f"chain {chain_id} failed: {exc}") from exc


def run_all_chains(spec, n_chains, workers):
    jobs = [(spec, i) for i in range(n_chains)]
    if workers <= 1:
        records = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_job, jobs))
    records.sort(key=lambda rec: rec.chain_id)
    return records


def _truth_with_indiff(e_hat, r, delta):
    if e_hat >= r + delta:
        return "H0"
    if e_hat <= r - delta:
        return "H1"
    return None


def _truth_strict(e_hat, r):
    if e_hat > r:
        return "H0"
    if e_hat < r:
        return "H1"
    return None


def _is_error(decision_value, truth):
    if truth is None or decision_value == Decision.UNDECIDED.value:
        return False
    accepts_h0 = decision_value in (Decision.H0.value, Decision.FORCED_H0.value)
    return (truth == "H1") if accepts_h0 else (truth == "H0")


def aggregate_and_write(out_dir, spec, records):
    """Write the five output CSVs from sorted per-chain records."""
    r_grid = spec["r_grid"]
    delta_grid = spec["delta_grid"]
    eps_grid = spec["eps_grid"]
    m = len(records)
    e_hat = sum(rec.chain_mean for rec in records) / m

    decision_rows = []
    stopping_rows = []
    for rec in records:
        for ri, r in enumerate(r_grid):
            for di, delta in enumerate(delta_grid):
                if not valid_cell(r, delta):
                    continue
                for ei, eps in enumerate(eps_grid):
                    dec, stop, fsum = rec.seq[(ri, di, ei)]
                    decision_rows.append((SEQ, r, delta, eps, rec.chain_id,
                                          dec, stop, fsum, rec.gamma_used))
                    stopping_rows.append((SEQ, r, delta, eps, rec.chain_id,
                                          dec, stop))
            for ei, eps in enumerate(eps_grid):
                dec, stop, fsum = rec.seq_ni[(ri, ei)]
                decision_rows.append((SEQ_NI, r, None, eps, rec.chain_id,
                                      dec, stop, fsum, rec.gamma_used))
                stopping_rows.append((SEQ_NI, r, None, eps, rec.chain_id,
                                      dec, stop))
    # per-chain sample sizes the fixed test would need (the dashed CDF
    # reference): one row per (delta, epsilon) per chain
    for rec in records:
        for di, delta in enumerate(delta_grid):
            for ei, eps in enumerate(eps_grid):
                n_fix = required_n(eps, rec.gamma_used, delta)
                stopping_rows.append((FIXED, None, delta, eps, rec.chain_id,
                                      None, n_fix))

    csvio.write_csv(os.path.join(out_dir, "decisions.csv"),
                    DECISIONS_HEADER, decision_rows)
    csvio.write_csv(os.path.join(out_dir, "stopping_times.csv"),
                    STOPPING_HEADER, stopping_rows)

    csvio.write_csv(
        os.path.join(out_dir, "gap.csv"), GAP_HEADER,
        ((rec.chain_id, rec.gamma_star_hat, rec.eta_final, rec.gap_n_used)
         for rec in records),
    )
    csvio.write_csv(
        os.path.join(out_dir, "eta_trace.csv"), ETA_TRACE_HEADER,
        ((rec.chain_id, it + 1, lag, gamma)
         for rec in records
         for it, (lag, gamma) in enumerate(rec.history)),
    )

    error_rows = []
    for ri, r in enumerate(r_grid):
        for di, delta in enumerate(delta_grid):
            if not valid_cell(r, delta):
                continue
            truth = _truth_with_indiff(e_hat, r, delta)
            for n in spec["n_grid"]:
                entries = [rec.fixed.get((ri, n)) for rec in records]
                entries = [d for d in entries if d is not None]
                if not entries:
                    continue
                err = (sum(_is_error(d, truth) for d in entries) / len(entries)
                       if truth else 0.0)
                bound = sum(
                    math.exp(-n * rec.gamma_used * delta * delta)
                    for rec in records
                ) / m
                error_rows.append((FIXED, n, r, delta, None, err, min(1.0, bound)))
            for ei, eps in enumerate(eps_grid):
                err = sum(
                    _is_error(rec.seq[(ri, di, ei)][0], truth) for rec in records
                ) / m
                error_rows.append((SEQ, None, r, delta, eps, err, eps))
        truth = _truth_strict(e_hat, r)
        for ei, eps in enumerate(eps_grid):
            err = sum(
                _is_error(rec.seq_ni[(ri, ei)][0], truth) for rec in records
            ) / m
            error_rows.append((SEQ_NI, None, r, None, eps, err, eps))
    csvio.write_csv(os.path.join(out_dir, "error_rates.csv"),
                    ERROR_RATES_HEADER, error_rows)

    bounds_rows = []
    for ri, r in enumerate(r_grid):
        big_delta = abs(r - e_hat)
        for di, delta in enumerate(delta_grid):
            if not valid_cell(r, delta):
                continue
            for ei, eps in enumerate(eps_grid):
                xi = spec["xi"] if spec["xi"] is not None else xi_default(eps)
                n_fixed = sum(required_n(eps, rec.gamma_used, delta)
                              for rec in records) / m
                m_vals = [m_threshold(eps, xi, rec.gamma_used, delta)
                          for rec in records]
                n0_vals = [indiff_n0(mv, r) for mv in m_vals]
                if big_delta > 0.0:
                    stop_i = sum(
                        expected_stop_indiff(mv, xi, rec.gamma_used, big_delta)
                        for mv, rec in zip(m_vals, records)
                    ) / m
                    stop_ni = sum(
                        expected_stop_noindiff(
                            eps, xi, rec.gamma_used, big_delta,
                            Schedule(noindiff_n0(rec.gamma_used), xi),
                        )
                        for rec in records
                    ) / m
                else:
                    stop_i = stop_ni = None
                bounds_rows.append((
                    r, delta, eps, xi, sum(rec.gamma_used for rec in records) / m,
                    n_fixed, sum(m_vals) / m, sum(n0_vals) / m, stop_i, stop_ni,
                ))
    csvio.write_csv(os.path.join(out_dir, "bounds.csv"), BOUNDS_HEADER,
                    bounds_rows)
    return e_hat


def default_n_grid(steps):
    """Log-spaced sample sizes for the fixed-test error curve."""
    if steps < 10:
        return [steps]
    points = np.unique(np.geomspace(10, steps, 12).astype(np.int64))
    return [int(v) for v in points]


def valid_cell(r, delta):
    """Whether the indifference region (r - delta, r + delta) fits in (0, 1)."""
    return 0.0 < delta < min(r, 1.0 - r)


def validate_grids(r_grid, delta_grid, eps_grid, xi):
    """Reject unusable grids; report (r, delta) combinations that get skipped."""
    for r in r_grid:
        if not 0.0 < r < 1.0:
            raise ConfigError(f"threshold_r value {r} outside (0, 1)")
    for delta in delta_grid:
        if not 0.0 < delta < 0.5:
            raise ConfigError(f"delta {delta} outside (0, 0.5)")
    for eps in eps_grid:
        if not 0.0 < eps <= 0.4:
            raise ConfigError(f"epsilon {eps} outside (0, 0.4]")
    if xi is not None and not 0.0 < xi <= 0.4:
        raise ConfigError(f"xi {xi} outside (0, 0.4]")
    skipped = [(r, d) for r in r_grid for d in delta_grid if not valid_cell(r, d)]
    if len(skipped) == len(r_grid) * len(delta_grid):
        raise ConfigError("no (r, delta) combination leaves room for an "
                          "indifference region")
    for r, d in skipped:
        print(f"note: skipping r={r:g} delta={d:g} "
              "(no room for the indifference region)", file=sys.stderr)


def bounds_rows_for(res):
    """Rows of the standalone bounds table; skips what Prop-2 forbids."""
    r_grid = res.require("threshold_r", res.get_float_list)
    delta_grid = res.require("delta", res.get_float_list)
    eps_grid = res.require("epsilon", res.get_float_list)
    gamma = res.require("gamma", res.get_float)
    xi_conf = res.get_float("xi")
    e_ref = res.get_float("e_ref")
    rows = []
    for r in r_grid:
        big_delta = abs(r - e_ref) if e_ref is not None else None
        for delta in delta_grid:
            for eps in eps_grid:
                if xi_conf is not None:
                    xi = xi_conf
                elif 0.0 < eps < 1.0:
                    xi = xi_default(eps)
                else:
                    xi = None
                n_fixed = required_n(eps, gamma, delta) if 0.0 < eps <= 1.0 else None
                try:
                    if xi is None:
                        raise ConfigError("no valid xi for this epsilon")
                    m_val = m_threshold(eps, xi, gamma, delta)
                    n0 = indiff_n0(m_val, r)
                    stop_i = (expected_stop_indiff(m_val, xi, gamma, big_delta)
                              if big_delta else None)
                    stop_ni = (
                        expected_stop_noindiff(
                            eps, xi, gamma, big_delta,
                            Schedule(noindiff_n0(gamma), xi))
                        if big_delta else None
                    )
                except ChainTestError as exc:
                    print(f"bounds: row r={r} delta={delta} eps={eps}: {exc}",
                          file=sys.stderr)
                    m_val = n0 = stop_i = stop_ni = None
                rows.append((r, delta, eps, xi, gamma, n_fixed, m_val, n0,
                             stop_i, stop_ni))
    return rows
