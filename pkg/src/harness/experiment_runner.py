"""
Experiment Runner

Monte Carlo loop: for each replication simulate a clean path, contaminate it,
run every requested estimator, then aggregate in replication order.
Replications may run on a thread pool; every random draw comes from a stream
keyed by (master_seed, replication, role), so results do not depend on the
thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from src.contamination.outlier_injector import contaminate
from src.estimation.asymptotic_cov import asymptotic_cov
from src.estimation.indirect_estimator import indirect_estimate
from src.estimation.qmle_estimator import qmle_estimate
from src.harness.experiment_spec import ExperimentSpec
from src.harness.report_table import EstimatorOutcome, ReportTable
from src.harness.report_writer import emit_csv, emit_plots
from src.model.carma_model import build_state_space
from src.model.exceptions import CarmaError
from src.robust.gm_estimator import gm_estimate
from src.simulation.carma_simulator import simulate_carma_path
from src.simulation.rng_streams import StreamRole, make_stream
from src.simulation.sampled_series import SampledSeries

RESULTS_FILE = "results.csv"
RECOVERABLE_ERRORS = (CarmaError, np.linalg.LinAlgError, ValueError)


@dataclass
class ReplicationResult:
    replication: int
    clean: SampledSeries
    observed: SampledSeries
    outcomes: Dict[str, EstimatorOutcome]


def simulate_replication(spec: ExperimentSpec, replication: int):
    """Clean and observed (possibly contaminated) series of one replication."""
    model = build_state_space(spec.theta0, spec.family, spec.driver.sigma_L2)
    clean = simulate_carma_path(model, spec.n, spec.h, spec.driver,
                                make_stream(spec.master_seed, replication, StreamRole.PATH),
                                seed=spec.master_seed)
    if spec.outliers.is_clean:
        return clean, clean
    observed = contaminate(clean, spec.outliers,
                           make_stream(spec.master_seed, replication, StreamRole.CONTAMINATION))
    return clean, observed


def _from_estimate(estimate) -> EstimatorOutcome:
    if estimate.failed:
        return EstimatorOutcome(estimate.estimator, estimate.theta_hat.values.copy(), True,
                                estimate.failure_reason, estimate.evals)
    return EstimatorOutcome(estimate.estimator, estimate.theta_hat.values.copy(), False, "", estimate.evals)


def run_estimator(spec: ExperimentSpec, name: str, series: SampledSeries, replication: int,
                  event_logger=None) -> EstimatorOutcome:
    if name in ("indirect", "ls"):
        cfg = spec.indirect_config(replication, data_leg="gm" if name == "indirect" else "ls")
        estimate = indirect_estimate(series, spec.family, cfg, event_logger=event_logger)
        if spec.compute_cov and not estimate.failed:
            estimate.cov = asymptotic_cov(estimate.theta_hat, spec.family, cfg, series)
        return _from_estimate(estimate)

    if name == "qmle":
        estimate = qmle_estimate(
            series, spec.family,
            settings=spec.optimizer,
            sigma_L2=spec.driver.sigma_L2,
            noise_scale=spec.noise_scale,
            start=spec.start,
            rng=make_stream(spec.master_seed, replication, StreamRole.OPTIMIZER),
            event_logger=event_logger,
            replication=replication,
        )
        return _from_estimate(estimate)

    if name == "gm":
        fit = gm_estimate(series, spec.r, spec.gm)
        if event_logger is not None:
            event_logger.log_estimation("gm", {
                "replication": replication,
                "pi_hat": fit.aux.as_vector(),
                "converged": fit.converged,
                "iterations": fit.iterations,
                "message": fit.message,
            })
        if not fit.converged:
            return EstimatorOutcome("gm", fit.aux.as_vector(), True, f"not converged: {fit.message}", fit.iterations)
        return EstimatorOutcome("gm", fit.aux.as_vector(), False, "", fit.iterations)

    raise ValueError(f"Unknown estimator '{name}'")


def run_replication(spec: ExperimentSpec, replication: int, event_logger=None) -> ReplicationResult:
    """One replication; estimator errors become failures and never escape."""
    clean, observed = simulate_replication(spec, replication)
    if event_logger is not None:
        event_logger.log_data("series", {
            "experiment": spec.name,
            "replication": replication,
            "n": observed.n,
            "outliers": int(observed.outlier_mask.sum()) if observed.outlier_mask is not None else 0,
            "message": f"replication {replication} simulated",
        })

    outcomes = {}
    for name in spec.estimators:
        try:
            outcomes[name] = run_estimator(spec, name, observed, replication, event_logger)
        except RECOVERABLE_ERRORS as exc:
            reason = f"{type(exc).__name__}: {exc}"
            outcomes[name] = EstimatorOutcome.failure(name, reason)
            if event_logger is not None:
                event_logger.log_error(exc, {"experiment": spec.name, "replication": replication, "estimator": name})

    if event_logger is not None:
        event_logger.log_replication(replication, {
            "experiment": spec.name,
            "failed": [name for name, o in outcomes.items() if o.failed],
            "estimates": {name: o.values for name, o in outcomes.items()},
            "message": ", ".join(f"{name}={'failed' if o.failed else 'ok'}" for name, o in outcomes.items()),
        })
    return ReplicationResult(replication, clean, observed, outcomes)


def run_replications(spec: ExperimentSpec, event_logger=None, threads: Optional[int] = None) -> List[ReplicationResult]:
    """All replications, returned in replication order whatever the pool size."""
    threads = spec.threads if threads is None else threads
    reps = range(spec.replications)
    if threads is None or threads <= 1:
        return [run_replication(spec, rep, event_logger) for rep in reps]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda rep: run_replication(spec, rep, event_logger), reps))


def aggregate(spec: ExperimentSpec, results: List[ReplicationResult]) -> ReportTable:
    ordered = sorted(results, key=lambda res: res.replication)
    return ReportTable.from_outcomes(
        spec.estimators,
        {name: spec.component_labels(name) for name in spec.estimators},
        {name: spec.true_values(name) for name in spec.estimators},
        [res.outcomes for res in ordered],
        name=spec.name,
    )


def run_experiment(spec: ExperimentSpec, event_logger=None, threads: Optional[int] = None) -> ReportTable:
    return aggregate(spec, run_replications(spec, event_logger, threads))


class ExperimentRunner:
    """
    Runs a configured experiment and writes its results.csv and plots.
    """

    def __init__(self, config_manager, event_logger, profile: Optional[str] = None):
        self.cfg = config_manager
        self.logger = event_logger
        self.spec = ExperimentSpec.from_config(config_manager, profile=profile)

        run_cfg = self.cfg.get_run_config()
        self.results_file = run_cfg.get('results_file', RESULTS_FILE)
        self.last_results: List[ReplicationResult] = []

    def run(self, threads: Optional[int] = None) -> ReportTable:
        spec = self.spec
        self.logger.log_experiment("started", {**spec.describe(), "message": f"{spec.name}: {spec.replications} replications"})

        self.last_results = run_replications(spec, self.logger, threads)
        table = aggregate(spec, self.last_results)

        for name in spec.estimators:
            self.logger.log_experiment("estimator_summary", {
                "experiment": spec.name,
                "estimator": name,
                "mean": table.mean(name),
                "bias": table.bias(name),
                "var": table.var(name),
                "failures": table.failures(name),
                "message": f"{name}: {table.successes(name)} successes, {table.failures(name)} failures",
            })
        self.logger.log_experiment("completed", {"experiment": spec.name, "message": f"{spec.name} finished"})
        return table

    def write_outputs(self, table: ReportTable) -> List[str]:
        out_dir = self.spec.output_dir
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, self.results_file)
        emit_csv(table, csv_path)
        written = [csv_path]

        first = self.last_results[0] if self.last_results else None
        written += emit_plots(
            table, out_dir,
            clean=first.clean if first else None,
            observed=first.observed if first else None,
            images=self.spec.write_plots,
        )
        self.logger.logger.info(f"Results written to {out_dir}")
        return written
