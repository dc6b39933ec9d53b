#!/usr/bin/env python3
"""
📈 CARMA INDIRECT INFERENCE - command line entry point

    carma-indirect run <config> [--seed N] [--threads K] [--out DIR] [--profile desk|full]
    carma-indirect simulate <config> [--seed N] [--out DIR]
    carma-indirect validate
    carma-indirect estimate <config> --series data.csv [--estimator indirect|ls|qmle] [--demean]

Exit codes: 0 success, 1 hard error, 2 property-suite violation.
"""

import argparse
import json
import os
import sys

# Add project root
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from config_manager import ConfigManager
from src.eventlog.event_logger import EventLogger
from src.estimation.asymptotic_cov import asymptotic_cov
from src.estimation.indirect_estimator import indirect_estimate
from src.estimation.qmle_estimator import qmle_estimate
from src.harness.experiment_runner import ExperimentRunner, simulate_replication
from src.harness.experiment_spec import ExperimentSpec
from src.harness.property_suite import run_property_suite, suite_passed
from src.harness.report_writer import emit_path
from src.model.exceptions import CarmaError
from src.simulation.rng_streams import StreamRole, make_stream
from src.simulation.sampled_series import SampledSeries

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PROPERTY_VIOLATION = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carma-indirect",
                                     description="Robust indirect inference for sampled CARMA processes")
    sub = parser.add_subparsers(dest="command", required=True)

    def overrides(p):
        p.add_argument("config", help="experiment config (.yaml, .json or .toml)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--profile", choices=["full", "desk"], help="full: s=75, desk: s=20")

    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    overrides(run)
    run.add_argument("--threads", type=int, help="replications in parallel")

    simulate = sub.add_parser("simulate", help="write simulated (and contaminated) paths only")
    overrides(simulate)

    sub.add_parser("validate", help="run the property suite")

    estimate = sub.add_parser("estimate", help="estimate a CSV series")
    overrides(estimate)
    estimate.add_argument("--series", required=True, help="CSV with t,value or a single value column")
    estimate.add_argument("--estimator", choices=["indirect", "ls", "qmle"], default="indirect")
    estimate.add_argument("--h", type=float, help="sampling step when the CSV has no time column")
    estimate.add_argument("--demean", action="store_true", help="subtract the sample mean first")
    estimate.add_argument("--cov", action="store_true", help="report the asymptotic covariance (indirect/ls)")
    return parser


def load_config(args) -> ConfigManager:
    cfg = ConfigManager(args.config)
    if args.seed is not None:
        cfg.update_runtime_config('run', 'seed', args.seed)
    if getattr(args, 'threads', None) is not None:
        cfg.update_runtime_config('run', 'threads', args.threads)
    if args.out is not None:
        cfg.update_runtime_config('run', 'output_dir', args.out)
    return cfg


def cmd_run(args) -> int:
    cfg = load_config(args)
    logger = EventLogger(cfg, experiment=os.path.splitext(os.path.basename(args.config))[0])
    runner = ExperimentRunner(cfg, logger, profile=args.profile)
    spec = runner.spec

    print(f"📈 Experiment {spec.name}: {spec.family.name}, theta0={spec.theta0.values.tolist()}, "
          f"n={spec.n}, r={spec.r}, s={spec.s}, replications={spec.replications}")
    table = runner.run()
    written = runner.write_outputs(table)

    for name in spec.estimators:
        rows = table.for_estimator(name)
        print(f"\n📊 {name.upper()}  (failures: {table.failures(name)}/{spec.replications})")
        for _, row in rows.iterrows():
            print(f"   {row['component']:>8}  true={row['true_value']: .4f}  mean={row['mean']: .4f}  "
                  f"bias={row['bias']: .4f}  var={row['var']:.4f}")
    print(f"\n✅ Results: {written[0]}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args)
    spec = ExperimentSpec.from_config(cfg, profile=args.profile)
    out_dir = os.path.join(spec.output_dir, "paths")
    os.makedirs(out_dir, exist_ok=True)
    for rep in range(spec.replications):
        clean, observed = simulate_replication(spec, rep)
        emit_path(clean, observed, os.path.join(out_dir, f"{spec.name}_rep{rep:04d}.csv"))
    print(f"✅ {spec.replications} paths written to {out_dir}")
    return EXIT_OK


def cmd_validate(args) -> int:
    results = run_property_suite()
    for result in results:
        print(f"{'✅' if result.passed else '❌'} {result.name}: {result.detail}")
    if suite_passed(results):
        print("\n🎉 All properties hold")
        return EXIT_OK
    print("\n❌ Property suite failed")
    return EXIT_PROPERTY_VIOLATION


def cmd_estimate(args) -> int:
    cfg = load_config(args)
    logger = EventLogger(cfg, experiment="estimate")
    spec = ExperimentSpec.from_config(cfg, profile=args.profile)
    series = SampledSeries.from_csv(args.series, h=args.h, demean=args.demean)
    print(f"📥 Loaded {series.n} observations (h={series.h}) from {args.series}")

    if args.estimator == "qmle":
        estimate = qmle_estimate(series, spec.family, settings=spec.optimizer, sigma_L2=spec.driver.sigma_L2,
                                 noise_scale=spec.noise_scale, start=spec.start,
                                 rng=make_stream(spec.master_seed, 0, StreamRole.OPTIMIZER), event_logger=logger)
    else:
        icfg = spec.indirect_config(0, data_leg="gm" if args.estimator == "indirect" else "ls")
        estimate = indirect_estimate(series, spec.family, icfg, event_logger=logger)
        if args.cov and not estimate.failed:
            estimate.cov = asymptotic_cov(estimate.theta_hat, spec.family, icfg, series)

    result = estimate.as_dict()
    result["labels"] = list(spec.family.labels)
    if estimate.cov is not None:
        result["cov"] = np.asarray(estimate.cov).tolist()
        result["std_err"] = np.sqrt(np.clip(np.diag(estimate.cov), 0.0, None)).tolist()
    result["failed"] = estimate.failed
    print(json.dumps(result, indent=2, default=str))
    if estimate.failed:
        print(f"⚠️  Estimate flagged: {estimate.failure_reason}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "estimate": cmd_estimate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, KeyError, ValueError, CarmaError, OSError) as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        print(f"❌ Unexpected error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
