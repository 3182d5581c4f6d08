"""Command-line front-end.

Subcommands: gap-estimate, test-fixed, test-seq, test-seq-ni, case-study,
bounds, synth-data.  Config precedence is CLI flag > config file > default;
the resolved configuration is frozen to ``manifest.txt`` in the output
directory before any computation, and a manifest is itself a valid config
file.  Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

import argparse
import os
import sys

from . import csvio, harness, jakstat, spectral
from .chains import FiniteChainSource, ReplaySource
from .config import Resolver, parse_config_file, write_manifest
from .errors import ChainTestError, ConfigError, InsufficientSamples
from .hyptest import (
    TestConfig,
    default_burn_in,
    fixed_length_test,
    required_n,
    seq_indiff_test,
    seq_noindiff_test,
    xi_default,
)

GAP_DETAIL_HEADER = ["function", "autocov_ratio", "implied_gap",
                     "gamma_star_hat", "eta_final", "n_used"]
TEST_DECISIONS_HEADER = ["chain_id", "decision", "stopping_time", "final_sum",
                         "gamma_used"]


def _add_common(parser):
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="base RNG seed")
    parser.add_argument("--out", help="output directory (or .csv path for "
                                      "single-file commands)")
    parser.add_argument("--chains", type=int, help="number of independent chains")
    parser.add_argument("--parallel", type=int, help="worker processes")


def _resolver(args, extra=None):
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {
        "seed": args.seed,
        "out": args.out,
        "chains": args.chains,
        "parallel": args.parallel,
    }
    overrides.update(extra or {})
    return Resolver(file_values, overrides)


def _out_paths(res, default_name):
    """Resolve --out into (directory, csv_path, wants_manifest).

    A bare ``--out foo.csv`` writes that single file and no manifest; a
    directory gets ``default_name`` inside it plus ``manifest.txt``.
    """
    out = res.get_str("out", "out")
    if out.endswith(".csv"):
        directory = os.path.dirname(out) or "."
        os.makedirs(directory, exist_ok=True)
        return directory, out, False
    os.makedirs(out, exist_ok=True)
    return out, os.path.join(out, default_name), True


def _write_manifest(res, subcommand, out_dir, wants_manifest):
    if wants_manifest:
        write_manifest(os.path.join(out_dir, "manifest.txt"), subcommand,
                       res.resolved)


def cmd_synth_data(args):
    res = _resolver(args)
    out_dir, _, _ = _out_paths(res, "observations.csv")
    spec = harness._mh_spec_from_resolver(res)
    for i, name in enumerate(jakstat.PARAM_NAMES):
        res.get_float(f"ref.{name}", jakstat.REFERENCE_PARAMS[i])
    res.get_float("noise_sd", jakstat.DEFAULT_NOISE_SD)
    res.get_int("data_seed", 0)
    if spec["data"] is None:
        spec["data"] = os.path.join(out_dir, "observations.csv")
        res.resolved["data"] = spec["data"]
    write_manifest(os.path.join(out_dir, "manifest.txt"), "synth-data",
                   res.resolved)
    if os.path.exists(spec["data"]):
        os.remove(spec["data"])
    path = harness.ensure_observations(spec, out_dir, res)
    print(f"wrote {path}")
    return 0


def cmd_gap_estimate(args):
    res = _resolver(args, {"input": args.input, "columns": args.columns})
    input_path = res.require("input", res.get_str)
    columns_raw = res.get_str("columns")
    out_dir, csv_path, wants_manifest = _out_paths(res, "gap.csv")
    columns = ([c.strip() for c in columns_raw.split(",") if c.strip()]
               if columns_raw else None)
    data = csvio.read_trajectory_csv(input_path, columns)
    names = list(data)
    series = [data[name] for name in names]
    _write_manifest(res, "gap-estimate", out_dir, wants_manifest)
    try:
        estimate = spectral.estimate_gap(series, names)
    except InsufficientSamples as exc:
        print(
            f"warning: estimate not yet stable; rerun with n >= {exc.target_n} "
            f"(have {exc.interim.n_used})",
            file=sys.stderr,
        )
        estimate = exc.interim
    rows = [
        (fid, ratio, gap, estimate.gamma_star_hat, estimate.eta_final,
         estimate.n_used)
        for fid, ratio, gap in estimate.per_function
    ]
    csvio.write_csv(csv_path, GAP_DETAIL_HEADER, rows)
    print(f"gamma_star_hat = {estimate.gamma_star_hat:.6g} "
          f"(eta = {estimate.eta_final}, n = {estimate.n_used})")
    return 0


def _resolve_test_inputs(args, res):
    input_spec = res.require("input", res.get_str)
    n_chains = res.get_int("chains", 1)
    base_seed = res.get_int("seed", 0)
    gamma = res.get_float("gamma")
    burn_in = res.get_int("burn_in")

    if input_spec.startswith("oracle:"):
        chain = harness.parse_oracle_spec(input_spec)
        if gamma is None:
            gamma = spectral.exact_gap_finite(chain)[1]
            res.resolved["gamma"] = gamma
        burn_in = 0 if burn_in is None else burn_in

        def make_source(i):
            return FiniteChainSource(chain, base_seed + i, burn_in=burn_in)

    elif input_spec.endswith(".csv"):
        if n_chains != 1:
            raise ConfigError("a trajectory CSV replays exactly one chain")
        column = res.get_str("column", "f")
        values = csvio.read_trajectory_csv(input_spec, [column])[column]

        def make_source(i):
            return ReplaySource(values)

    else:
        model_values = parse_config_file(input_spec)
        model_res = Resolver(model_values)
        spec = harness._mh_spec_from_resolver(model_res)
        if spec["data"] is None:
            raise ConfigError(
                "model config needs a 'data' key (run synth-data first)"
            )
        if gamma is None:
            raise ConfigError("--gamma is required for an MH source "
                              "(estimate it with gap-estimate)")
        res.resolved.update(
            {f"model.{k}": v for k, v in model_res.resolved.items()}
        )
        spec["burn_in"] = 0
        spec["kind"] = "mh"
        if burn_in is None:
            burn_in = default_burn_in(gamma)
            res.resolved["burn_in"] = burn_in
        mh_spec = dict(spec, burn_in=burn_in)

        def make_source(i):
            return harness.build_source(mh_spec, base_seed + i)

    if gamma is not None and not 0.0 < gamma <= 1.0:
        raise ConfigError(f"gamma {gamma} outside (0, 1]")
    safety = res.get_float("gamma_safety", 1.0)
    gamma_used = min(1.0, gamma * safety) if gamma is not None else None
    res.resolved["burn_in"] = 0 if burn_in is None else burn_in
    return make_source, n_chains, gamma_used


def _run_test_command(args, kind):
    res = _resolver(args, {
        "input": args.input,
        "threshold_r": args.r,
        "delta": args.delta,
        "epsilon": args.eps,
        "xi": args.xi,
        "gamma": args.gamma,
        "burn_in": args.burn_in,
        "gamma_safety": args.gamma_safety,
    })
    make_source, n_chains, gamma_used = _resolve_test_inputs(args, res)
    if gamma_used is None:
        raise ConfigError("--gamma is required for this source")
    r = res.require("threshold_r", res.get_float)
    eps = res.get_float("epsilon")
    delta = res.get_float("delta")
    xi = res.get_float("xi")
    out_dir, csv_path, wants_manifest = _out_paths(res, "decisions.csv")

    if kind == "fixed":
        n = res.get_int("n", getattr(args, "n", None))
        if n is None:
            if eps is None or delta is None:
                raise ConfigError("test-fixed needs --n or both --eps and --delta")
            n = required_n(eps, gamma_used, delta)
            res.resolved["n"] = n
    else:
        if eps is None:
            raise ConfigError("sequential tests need --eps")
        if xi is None:
            xi = xi_default(eps)
            res.resolved["xi"] = xi
        if kind == "seq" and delta is None:
            raise ConfigError("test-seq needs --delta")

    _write_manifest(res, f"test-{kind}", out_dir, wants_manifest)

    rows = []
    for i in range(n_chains):
        source = make_source(i)
        if kind == "fixed":
            outcome = fixed_length_test(source, r, n)
        elif kind == "seq":
            cfg = TestConfig(r=r, epsilon=eps, xi=xi, gamma=gamma_used,
                             delta=delta)
            outcome = seq_indiff_test(source, cfg)
        else:
            cfg = TestConfig(r=r, epsilon=eps, xi=xi, gamma=gamma_used)
            outcome = seq_noindiff_test(source, cfg,
                                        max_checks=getattr(args, "max_checks", None))
        rows.append((i, outcome.decision.value, outcome.stopping_time,
                     outcome.final_sum, gamma_used))
    csvio.write_csv(csv_path, TEST_DECISIONS_HEADER, rows)
    print(f"wrote {csv_path} ({n_chains} chain(s))")
    return 0


def cmd_case_study(args):
    res = _resolver(args)
    out_dir, _, _ = _out_paths(res, "decisions.csv")
    source_kind = res.get_str("source", "oracle")
    n_chains = res.get_int("chains", 100)
    steps = res.get_int("steps", 100_000)
    base_seed = res.get_int("seed", 0)
    parallel = res.get_int("parallel", 1)
    gamma_safety = res.get_float("gamma_safety", 1.0)
    r_grid = res.require("threshold_r", res.get_float_list)
    delta_grid = res.require("delta", res.get_float_list)
    eps_grid = res.require("epsilon", res.get_float_list)
    xi = res.get_float("xi")
    n_grid_conf = res.get_float_list("n_grid")
    gap_max_n = res.get_int("gap_max_n", 4 * steps)
    harness.validate_grids(r_grid, delta_grid, eps_grid, xi)
    if n_chains < 1:
        raise ConfigError("need at least one chain")

    if source_kind == "oracle":
        burn_in = res.get_int("burn_in", 0)
        source_spec = {
            "kind": "oracle",
            "p": res.require("oracle.p", res.get_float),
            "q": res.require("oracle.q", res.get_float),
            "f0": res.get_float("oracle.f0", 0.0),
            "f1": res.get_float("oracle.f1", 1.0),
            "burn_in": burn_in,
        }
    elif source_kind == "mh":
        burn_in = res.get_int("burn_in", 5000)
        source_spec = dict(harness._mh_spec_from_resolver(res), kind="mh",
                           burn_in=burn_in)
        for i, name in enumerate(jakstat.PARAM_NAMES):
            res.get_float(f"ref.{name}", jakstat.REFERENCE_PARAMS[i])
        res.get_float("noise_sd", jakstat.DEFAULT_NOISE_SD)
        res.get_int("data_seed", 0)
        if source_spec["data"] is None:
            source_spec["data"] = os.path.join(out_dir, "observations.csv")
            res.resolved["data"] = source_spec["data"]
    else:
        raise ConfigError(f"source must be 'oracle' or 'mh', got {source_kind!r}")

    n_grid = ([int(v) for v in n_grid_conf] if n_grid_conf
              else harness.default_n_grid(steps))
    res.resolved["n_grid"] = n_grid

    write_manifest(os.path.join(out_dir, "manifest.txt"), "case-study",
                   res.resolved)
    if source_kind == "mh":
        harness.ensure_observations(source_spec, out_dir, res)

    spec = {
        "source": source_spec,
        "base_seed": base_seed,
        "steps": steps,
        "gamma_safety": gamma_safety,
        "gap_max_n": gap_max_n,
        "r_grid": r_grid,
        "delta_grid": delta_grid,
        "eps_grid": eps_grid,
        "xi": xi,
        "n_grid": n_grid,
    }
    outputs = ["decisions.csv", "stopping_times.csv", "gap.csv",
               "eta_trace.csv", "error_rates.csv", "bounds.csv"]
    try:
        records = harness.run_all_chains(spec, n_chains, parallel)
        e_hat = harness.aggregate_and_write(out_dir, spec, records)
    except Exception:
        for name in outputs:
            path = os.path.join(out_dir, name)
            if os.path.exists(path):
                os.remove(path)
        raise
    print(f"case study complete: m={n_chains}, E_hat={e_hat:.6g}, "
          f"outputs in {out_dir}")
    return 0


def cmd_bounds(args):
    res = _resolver(args, {
        "threshold_r": args.r,
        "delta": args.delta,
        "epsilon": args.eps,
        "xi": args.xi,
        "gamma": args.gamma,
    })
    out_dir, csv_path, wants_manifest = _out_paths(res, "bounds.csv")
    rows = harness.bounds_rows_for(res)
    _write_manifest(res, "bounds", out_dir, wants_manifest)
    csvio.write_csv(csv_path, harness.BOUNDS_HEADER, rows)
    print(f"wrote {csv_path} ({len(rows)} row(s))")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chaintest",
        description="Hypothesis tests, spectral-gap estimation and a "
                    "replication harness for Markov chain Monte Carlo output.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gap-estimate",
                       help="estimate the absolute spectral gap from a "
                            "trajectory CSV")
    _add_common(p)
    p.add_argument("--input", required=True, help="trajectory CSV")
    p.add_argument("--columns", help="comma-separated column names")
    p.set_defaults(func=cmd_gap_estimate)

    def add_test_parser(name, kind, needs_n=False, needs_checks=False):
        tp = sub.add_parser(name, help=f"run the {kind} hypothesis test")
        _add_common(tp)
        tp.add_argument("--input", required=True,
                        help="traj.csv | oracle:p=..,q=.. | model config path")
        tp.add_argument("--r", type=float, help="decision threshold in (0,1)")
        tp.add_argument("--delta", type=float, help="indifference half-width")
        tp.add_argument("--eps", type=float, help="target error probability")
        tp.add_argument("--xi", type=float, help="schedule growth factor")
        tp.add_argument("--gamma", type=float, help="spectral gap fed to "
                                                    "thresholds")
        tp.add_argument("--gamma-safety", type=float, dest="gamma_safety",
                        help="multiplier applied to gamma (conservatism)")
        tp.add_argument("--burn-in", type=int, dest="burn_in",
                        help="leading samples to discard")
        if needs_n:
            tp.add_argument("--n", type=int, help="sample count (default: "
                                                  "required_n(eps, gamma, delta))")
        if needs_checks:
            tp.add_argument("--max-checks", type=int, dest="max_checks",
                            help="checks before giving up Undecided")
        tp.set_defaults(func=lambda a, k=kind: _run_test_command(a, k))
        return tp

    add_test_parser("test-fixed", "fixed", needs_n=True)
    add_test_parser("test-seq", "seq")
    add_test_parser("test-seq-ni", "seq-ni", needs_checks=True)

    p = sub.add_parser("case-study",
                       help="m-chain replication: gap estimates, all three "
                            "tests, aggregated error rates")
    _add_common(p)
    p.set_defaults(func=cmd_case_study)

    p = sub.add_parser("bounds", help="tabulate the theoretical bound formulas")
    _add_common(p)
    p.add_argument("--r", help="comma-separated thresholds")
    p.add_argument("--delta", help="comma-separated half-widths")
    p.add_argument("--eps", help="comma-separated error targets")
    p.add_argument("--xi", type=float)
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("synth-data",
                       help="generate a synthetic observation CSV")
    _add_common(p)
    p.set_defaults(func=cmd_synth_data)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ChainTestError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
