"""
Property Suite

Zero-tolerance numerical checks run by `carma-indirect validate`, outside
pytest. Each check returns a PropertyCheck; the suite passes only when all
of them pass.
"""

import os
import tempfile
from dataclasses import dataclass, replace
from typing import Callable, List

import numpy as np
from scipy import stats

from src.auxiliary.aux_ar import link_function, ls_estimate
from src.contamination.outlier_injector import OutlierConfig
from src.estimation.indirect_estimator import IndirectConfig, analytic_estimate, indirect_objective
from src.estimation.optimizer import OptimizerSettings
from src.estimation.qmle_estimator import kalman_quasi_loglik
from src.harness.experiment_runner import run_experiment
from src.harness.experiment_spec import ExperimentSpec
from src.harness.report_writer import emit_csv
from src.model.carma_model import (
    Car1Family, Carma31Family, build_state_space, lyapunov_residual, stationary_state_cov,
)
from src.robust.gm_estimator import GmConfig, gm_estimate
from src.robust.psi_functions import PsiKind, PsiSpec
from src.simulation.carma_simulator import draw_driver_path, simulate_carma_path
from src.simulation.levy_drivers import DriverConfig
from src.simulation.rng_streams import make_stream

SUITE_SEED = 20240501


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    detail: str = ""


def _car1_series(theta: float = -2.0, n: int = 1000, seed: int = SUITE_SEED):
    family = Car1Family()
    spec = build_state_space(family.theta([theta]), family)
    return family, simulate_carma_path(spec, n, 1.0, DriverConfig(), make_stream(seed))


def check_lyapunov_residual() -> PropertyCheck:
    worst = 0.0
    for family, values in ((Car1Family(), [-2.0]), (Carma31Family(), [-1.0, -2.0, -2.0, 0.0, 1.0])):
        spec = build_state_space(family.theta(values), family)
        worst = max(worst, lyapunov_residual(spec, stationary_state_cov(spec)))
    return PropertyCheck("lyapunov residual < 1e-10", worst < 1e-10, f"max residual {worst:.3e}")


def check_car1_link() -> PropertyCheck:
    family = Car1Family()
    worst = 0.0
    for theta in (-2.0, -0.2, -5.0):
        aux = link_function(family.theta([theta]), family, 1.0, 3)
        expected = np.array([np.exp(theta), 0.0, 0.0])
        worst = max(worst, float(np.max(np.abs(aux.pis - expected))))
    return PropertyCheck("CAR(1) link pi = (e^theta, 0, 0)", worst < 1e-10, f"max error {worst:.3e}")


def check_gm_ls_reduction() -> PropertyCheck:
    _, series = _car1_series()
    worst = 0.0
    for r in (1, 3):
        gm = gm_estimate(series, r, GmConfig.least_squares()).aux.as_vector()
        ls = ls_estimate(series, r).as_vector()
        worst = max(worst, float(np.max(np.abs(gm - ls))))
    return PropertyCheck("GM with identity psi equals LS", worst < 1e-8, f"max difference {worst:.3e}")


def check_analytic_recovery() -> PropertyCheck:
    family = Car1Family()
    theta0 = family.theta([-2.0])
    cfg = IndirectConfig(r=1, optimizer=OptimizerSettings(max_evals=4000), start=np.array([-1.0]))
    estimate = analytic_estimate(theta0, family, cfg)
    error = float(np.max(np.abs(estimate.theta_hat.values - theta0.values)))
    return PropertyCheck("analytic-mode recovery of theta0", error < 1e-6, f"error {error:.3e}")


def check_omega_scaling() -> PropertyCheck:
    family, series = _car1_series(n=500)
    s = 4
    cfg = IndirectConfig(r=1, s=s, omega=np.array([[2.0, 0.3], [0.3, 1.0]]))
    scaled = replace(cfg, omega=7.0 * cfg.omega)
    cache = draw_driver_path(cfg.sim_driver, s * series.n, series.h, family.p, make_stream(SUITE_SEED, 1))
    pi_hat = ls_estimate(series, 1)
    grid = [-3.0, -2.5, -2.0, -1.5, -1.0]
    base = [indirect_objective(family.theta([t]), pi_hat, cfg, cache, family, series.h) for t in grid]
    other = [indirect_objective(family.theta([t]), pi_hat, scaled, cache, family, series.h) for t in grid]
    same = int(np.argmin(base)) == int(np.argmin(other))
    return PropertyCheck("argmin invariant under positive scaling of Omega", same,
                         f"argmin {grid[int(np.argmin(base))]} vs {grid[int(np.argmin(other))]}")


def _small_spec(threads) -> ExperimentSpec:
    family = Car1Family()
    return ExperimentSpec(
        name="property_suite",
        family=family,
        theta0=family.theta([-2.0]),
        driver=DriverConfig(),
        outliers=OutlierConfig(gamma=0.1, xi=10.0),
        r=1,
        n=200,
        s=2,
        replications=4,
        estimators=("indirect", "qmle", "ls", "gm"),
        master_seed=SUITE_SEED,
        threads=threads,
        write_plots=False,
    )


def _csv_bytes(threads) -> bytes:
    table = run_experiment(_small_spec(threads))
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "results.csv")
        emit_csv(table, path)
        with open(path, "rb") as f:
            return f.read()


def check_seed_determinism() -> PropertyCheck:
    first, second, parallel = _csv_bytes(1), _csv_bytes(1), _csv_bytes(3)
    ok = first == second == parallel
    return PropertyCheck("seed determinism and parallel-serial CSV equality", ok,
                         "identical bytes" if ok else "CSV bytes differ")


def check_psi_properties() -> PropertyCheck:
    u = np.linspace(-12.0, 12.0, 2401)
    problems = []
    for spec in (PsiSpec(PsiKind.HUBER, 4.0), PsiSpec(PsiKind.BISQUARE, 4.685)):
        psi = spec.psi(u)
        if not np.allclose(spec.psi(-u), -psi, atol=0.0, rtol=0.0):
            problems.append(f"{spec.kind.value} not odd")
        if np.max(np.abs(psi)) > spec.k:
            problems.append(f"{spec.kind.value} exceeds k")
        if spec.kind is PsiKind.BISQUARE and np.any(psi[np.abs(u) >= spec.k] != 0.0):
            problems.append("bisquare nonzero outside [-k, k]")
        if np.any(spec.weight(u) < 0) or np.any(spec.weight(u) > 1):
            problems.append(f"{spec.kind.value} weight outside [0, 1]")
    return PropertyCheck("psi oddness, bound and support", not problems, "; ".join(problems) or "ok")


def check_kalman_ar1() -> PropertyCheck:
    family, series = _car1_series()
    theta = -2.0
    phi = np.exp(theta * series.h)
    gamma0 = 1.0 / (-2.0 * theta)
    y = series.values
    exact = stats.norm.logpdf(y[0], scale=np.sqrt(gamma0)) + np.sum(
        stats.norm.logpdf(y[1:], loc=phi * y[:-1], scale=np.sqrt(gamma0 * (1.0 - phi ** 2)))
    )
    kalman = kalman_quasi_loglik(family.theta([theta]), family, series)
    error = abs(kalman - exact) / max(1.0, abs(exact))
    return PropertyCheck("Kalman loglik equals exact AR(1) loglik", error < 1e-8, f"relative error {error:.3e}")


CHECKS: List[Callable[[], PropertyCheck]] = [
    check_lyapunov_residual,
    check_car1_link,
    check_gm_ls_reduction,
    check_analytic_recovery,
    check_omega_scaling,
    check_seed_determinism,
    check_psi_properties,
    check_kalman_ar1,
]


def run_property_suite(event_logger=None) -> List[PropertyCheck]:
    results = []
    for check in CHECKS:
        try:
            result = check()
        except Exception as exc:
            result = PropertyCheck(check.__name__, False, f"{type(exc).__name__}: {exc}")
        results.append(result)
        if event_logger is not None:
            event_logger.log_data("property", {"name": result.name, "passed": result.passed,
                                                 "message": result.detail})
    return results


def suite_passed(results: List[PropertyCheck]) -> bool:
    return all(result.passed for result in results)
