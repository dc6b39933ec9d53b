#!/usr/bin/env python3
"""
🧪 INDIRECT INFERENCE TEST - objective, analytic recovery, simulated estimates, sandwich covariance
"""

import sys
import os

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from src.auxiliary.aux_ar import AuxParam, link_function
from src.contamination.outlier_injector import OutlierConfig, contaminate
from src.estimation.asymptotic_cov import asymptotic_cov, indirect_sandwich, link_jacobian
from src.estimation.indirect_estimator import (
    DEFAULT_SIMULATED_LENGTH, IndirectConfig, analytic_estimate, check_weighting_matrix, indirect_estimate,
    indirect_objective, profiled_distance,
)
from src.estimation.long_run_cov import bartlett_lag, bartlett_long_run_cov
from src.estimation.optimizer import INFEASIBLE_PENALTY, OptimizerSettings, heuristic_start, minimize_in_box
from src.estimation.qmle_estimator import qmle_estimate
from src.model.carma_model import Car1Family, Carma31Family, build_state_space
from src.model.exceptions import EstimationError, ModelSpecificationError
from src.simulation.carma_simulator import simulate_carma_path
from src.simulation.levy_drivers import DriverConfig
from src.simulation.rng_streams import make_stream

CARMA31_THETA0 = [-1.0, -2.0, -2.0, 0.0, 1.0]


def car1_series(n=2000, seed=41, theta=-2.0):
    family = Car1Family()
    spec = build_state_space(family.theta([theta]), family)
    return simulate_carma_path(spec, n, 1.0, DriverConfig(), make_stream(seed))


# ---------------------------------------------------------------- objective

def test_objective_vanishes_at_link_value():
    family = Car1Family()
    theta0 = family.theta([-2.0])
    cfg = IndirectConfig(r=3, mode="analytic")
    pi0 = link_function(theta0, family, 1.0, 3)
    assert indirect_objective(theta0, pi0, cfg, None, family) == 0.0

    shifted = AuxParam.from_vector(pi0.as_vector() + np.array([1.0, 0.0, 0.0, 0.0]))
    assert indirect_objective(theta0, shifted, cfg, None, family) == pytest.approx(1.0, abs=1e-12)


def test_objective_scales_with_weighting_matrix():
    family = Car1Family()
    pi0 = link_function(family.theta([-2.0]), family, 1.0, 1)
    plain = IndirectConfig(r=1, mode="analytic")
    scaled = IndirectConfig(r=1, mode="analytic", omega=7.0 * np.eye(2))
    grid = [-3.0, -2.5, -2.0, -1.5, -1.0]
    base = np.array([indirect_objective(family.theta([g]), pi0, plain, None, family) for g in grid])
    big = np.array([indirect_objective(family.theta([g]), pi0, scaled, None, family) for g in grid])
    assert np.allclose(big, 7.0 * base, rtol=1e-12, atol=0.0)
    assert np.argmin(big) == np.argmin(base) == 2


def test_infeasible_theta_is_penalized():
    family = Car1Family()
    cfg = IndirectConfig(r=1, mode="analytic")
    pi0 = link_function(family.theta([-2.0]), family, 1.0, 1)
    value = indirect_objective(np.array([0.5]), pi0, cfg, None, family)
    assert value >= INFEASIBLE_PENALTY
    assert value == pytest.approx(INFEASIBLE_PENALTY + 0.25, abs=1e-3)


def test_profiled_objective_absorbs_driver_scale():
    family = Car1Family()
    theta0 = family.theta([-2.0])
    pi0 = link_function(theta0, family, 1.0, 2)
    loud = DriverConfig(sigma_L2=4.0)
    profiled = IndirectConfig(r=2, mode="analytic", sim_driver=loud)
    known = IndirectConfig(r=2, mode="analytic", sim_driver=loud, noise_scale="known")
    assert indirect_objective(theta0, pi0, profiled, None, family) == pytest.approx(0.0, abs=1e-20)
    # σ^S = 2σ̂ leaves a gap of σ̂ in the last coordinate
    assert indirect_objective(theta0, pi0, known, None, family) == pytest.approx(pi0.sigma ** 2, rel=1e-10)


def test_profiled_objective_matches_ar_coefficients_only():
    family = Car1Family()
    pi_hat = AuxParam([0.2, 0.05], 3.0)
    cfg = IndirectConfig(r=2, mode="analytic")
    for value in (-2.5, -1.6, -0.9):
        pi_sim = link_function(family.theta([value]), family, 1.0, 2)
        expected = float(np.sum((pi_hat.pis - pi_sim.pis) ** 2))
        assert indirect_objective(family.theta([value]), pi_hat, cfg, None, family) == pytest.approx(expected,
                                                                                                    rel=1e-12)


def test_profiled_distance_minimizes_over_scale():
    pi_hat = AuxParam([0.3, -0.1], 0.8)
    pi_sim = AuxParam([0.25, 0.02], 0.5)
    distance, scale = profiled_distance(pi_hat, pi_sim, np.eye(3))
    assert scale == pytest.approx(0.8 / 0.5, rel=1e-12)
    assert distance == pytest.approx(0.05 ** 2 + 0.12 ** 2, rel=1e-12)

    B = make_stream(12).standard_normal((3, 3))
    omega = B @ B.T + np.eye(3)
    distance, scale = profiled_distance(pi_hat, pi_sim, omega)
    assert scale >= 0.0
    grid = np.linspace(0.0, 6.0, 60_001)
    base = np.append(pi_hat.pis - pi_sim.pis, pi_hat.sigma)
    direction = np.array([0.0, 0.0, pi_sim.sigma])
    values = [float((base - lam * direction) @ omega @ (base - lam * direction)) for lam in grid]
    assert min(values) >= distance - 1e-12
    assert min(values) - distance < 1e-6


def test_config_validation():
    with pytest.raises(ModelSpecificationError):
        IndirectConfig(r=0)
    with pytest.raises(ModelSpecificationError):
        IndirectConfig(r=1, s=0)
    with pytest.raises(ModelSpecificationError):
        IndirectConfig(r=1, data_leg="lad")
    with pytest.raises(ModelSpecificationError):
        IndirectConfig(r=1, omega=np.eye(3))
    with pytest.raises(ModelSpecificationError):
        check_weighting_matrix(np.array([[1.0, 2.0], [0.0, 1.0]]), 2)
    with pytest.raises(ModelSpecificationError):
        check_weighting_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]), 2)
    assert np.array_equal(IndirectConfig(r=2).weighting_matrix(), np.eye(3))
    assert IndirectConfig(r=2).for_replication(4).replication == 4


def test_order_below_two_p_minus_one_rejected():
    family = Carma31Family()
    with pytest.raises(ModelSpecificationError):
        analytic_estimate(family.theta(CARMA31_THETA0), family, IndirectConfig(r=4))


# ---------------------------------------------------------------- optimizer

def test_minimize_in_box_respects_bounds():
    outcome = minimize_in_box(lambda x: float(np.sum((x - 3.0) ** 2)), [0.0, 0.0], [-1.0, -1.0], [1.0, 2.0],
                              OptimizerSettings(max_evals=500), make_stream(1))
    assert np.allclose(outcome.x, [1.0, 2.0], atol=1e-6)
    assert outcome.evals > 0
    with pytest.raises(ValueError):
        OptimizerSettings(method="BFGS")


def test_heuristic_start_car1():
    family = Car1Family()
    series = car1_series(n=5000)
    start = heuristic_start(series, family, family.theta([-1.0]))
    assert abs(start[0] + 2.0) < 0.5
    assert np.array_equal(heuristic_start(None, family, family.theta([-1.0])), family.theta([-1.0]).center())


def test_heuristic_start_uses_auxiliary_fit():
    family = Car1Family()
    box = family.theta([-1.0])
    near_unit = AuxParam([np.exp(-0.2)], 1.0)
    assert heuristic_start(None, family, box, near_unit)[0] == pytest.approx(-0.2, rel=1e-12)
    assert heuristic_start(None, family, box, near_unit, h=0.5)[0] == pytest.approx(-0.4, rel=1e-12)
    # a fit outside (0, 1) falls back to the sample autocovariances
    series = car1_series(n=5000)
    assert heuristic_start(series, family, box, AuxParam([-0.3], 1.0))[0] == heuristic_start(series, family, box)[0]
    carma31 = Carma31Family()
    box31 = carma31.theta(CARMA31_THETA0)
    assert np.array_equal(heuristic_start(None, carma31, box31, AuxParam([0.5] * 5, 1.0)), box31.center())


# ---------------------------------------------------------------- analytic recovery

def test_analytic_recovery_car1():
    family = Car1Family()
    theta0 = family.theta([-2.0])
    estimate = analytic_estimate(theta0, family, IndirectConfig(r=3))
    assert not estimate.failed
    assert abs(estimate.theta_hat.values[0] + 2.0) < 1e-6
    assert estimate.diagnostics["mode"] == "analytic"


def test_analytic_recovery_carma31():
    family = Carma31Family()
    theta0 = family.theta(CARMA31_THETA0)
    cfg = IndirectConfig(r=5, optimizer=OptimizerSettings(max_evals=20_000),
                         start=np.array(CARMA31_THETA0) + 0.1)
    estimate = analytic_estimate(theta0, family, cfg)
    # the MA intercept enters the spectrum only through its square at 0
    error = np.abs(estimate.theta_hat.values - theta0.values)
    assert error[[0, 1, 2, 4]].max() < 1e-2
    assert error[3] < 0.1
    assert estimate.objective < 1e-6


def test_analytic_recovery_carma31_identified():
    family = Carma31Family()
    truth = [-1.0, -2.0, -2.0, 0.5, 1.0]
    theta0 = family.theta(truth)
    settings = OptimizerSettings(max_evals=50_000, restarts=4, xatol=1e-11, fatol=1e-24,
                                 jitter=1e-3, simplex_scale=0.01)
    cfg = IndirectConfig(r=5, optimizer=settings, start=np.array(truth) + 0.05)
    estimate = analytic_estimate(theta0, family, cfg)
    assert estimate.diagnostics["noise_scale"] == "known"
    assert np.max(np.abs(estimate.theta_hat.values - theta0.values)) < 1e-6


# ---------------------------------------------------------------- simulated estimates

def test_simulated_car1_estimate():
    family = Car1Family()
    series = car1_series()
    cfg = IndirectConfig(r=1, s=10, master_seed=5)
    estimate = indirect_estimate(series, family, cfg)
    assert estimate.estimator == "indirect"
    assert estimate.converged
    assert not estimate.on_boundary
    assert abs(estimate.theta_hat.values[0] + 2.0) < 0.7
    assert estimate.pi_hat is not None and estimate.evals > 0

    again = indirect_estimate(series, family, cfg)
    assert np.array_equal(again.theta_hat.values, estimate.theta_hat.values)

    ls = indirect_estimate(series, family, IndirectConfig(r=1, s=10, master_seed=5, data_leg="ls"))
    assert ls.estimator == "ls"
    assert abs(ls.theta_hat.values[0] + 2.0) < 0.7


def test_inverse_gm_cov_weighting():
    family = Car1Family()
    series = car1_series(n=1000)
    cfg = IndirectConfig(r=1, s=5, master_seed=2, omega_mode="inverse_gm_cov")
    estimate = indirect_estimate(series, family, cfg)
    assert np.isfinite(estimate.objective)
    assert estimate.diagnostics["omega_mode"] == "inverse_gm_cov"
    assert -10.0 < estimate.theta_hat.values[0] < -0.01


def test_simulated_length_without_series():
    family = Car1Family()
    pi0 = link_function(family.theta([-1.0]), family, 1.0, 1)
    cfg = IndirectConfig(r=1, s=2, optimizer=OptimizerSettings(max_evals=60, restarts=0))
    default = indirect_estimate(None, family, cfg, pi_hat=pi0)
    assert default.diagnostics["sim_length"] == 2 * DEFAULT_SIMULATED_LENGTH
    explicit = indirect_estimate(None, family, cfg, pi_hat=pi0, n=300)
    assert explicit.diagnostics["sim_length"] == 600
    # a supplied series fixes n
    from_series = indirect_estimate(car1_series(n=400), family, cfg, n=300)
    assert from_series.diagnostics["sim_length"] == 800
    assert from_series.diagnostics["noise_scale"] == "profiled"
    assert from_series.diagnostics["sigma_L2_hat"] > 0.0


def test_simulation_variance_shrinks_with_s():
    family = Car1Family()
    pi0 = link_function(family.theta([-2.0]), family, 1.0, 1)
    settings = OptimizerSettings(restarts=0)
    spread = {}
    for s in (20, 75):
        estimates = [
            indirect_estimate(None, family, IndirectConfig(r=1, s=s, master_seed=seed, optimizer=settings),
                              pi_hat=pi0, n=500).theta_hat.values[0]
            for seed in range(30)
        ]
        spread[s] = np.var(estimates)
    assert spread[75] < spread[20]


def test_near_unit_root_under_outliers():
    family = Car1Family()
    clean = car1_series(n=2000, seed=44, theta=-0.2)
    observed = contaminate(clean, OutlierConfig(gamma=0.1, xi=5.0), make_stream(45))
    indirect = indirect_estimate(observed, family, IndirectConfig(r=1, s=10, master_seed=6))
    qmle = qmle_estimate(observed, family, rng=make_stream(6))
    assert abs(indirect.theta_hat.values[0] + 0.2) <= 0.08
    assert abs(indirect.theta_hat.values[0] + 0.2) < abs(qmle.theta_hat.values[0] + 0.2)


def test_missing_data_leg():
    with pytest.raises(ValueError):
        indirect_estimate(None, Car1Family(), IndirectConfig(r=1))


# ---------------------------------------------------------------- covariances

def test_link_jacobian_car1():
    family = Car1Family()
    D = link_jacobian(family.theta([-2.0]), family, 1.0, 1)
    assert D.shape == (2, 1)
    assert D[0, 0] == pytest.approx(np.exp(-2.0), rel=1e-6)


def test_indirect_sandwich_formula():
    rng = make_stream(8)
    D = rng.standard_normal((3, 2))
    B = rng.standard_normal((3, 3))
    omega = B @ B.T + 3.0 * np.eye(3)
    C = rng.standard_normal((3, 3))
    xi_d = C @ C.T + np.eye(3)
    E = rng.standard_normal((3, 3))
    xi_s = E @ E.T + np.eye(3)

    H = np.linalg.solve(D.T @ omega @ D, D.T @ omega)
    assert np.allclose(indirect_sandwich(D, omega, xi_d, xi_s, None), H @ xi_d @ H.T, atol=1e-10)
    assert np.allclose(indirect_sandwich(D, omega, xi_d, xi_s, 4), H @ (xi_d + xi_s / 4) @ H.T, atol=1e-10)
    # invariant to rescaling Ω
    assert np.allclose(indirect_sandwich(D, 5.0 * omega, xi_d, xi_s, 4),
                       indirect_sandwich(D, omega, xi_d, xi_s, 4), atol=1e-10)
    with pytest.raises(EstimationError):
        indirect_sandwich(np.zeros((3, 2)), omega, xi_d, xi_s, 4)


def test_bartlett_long_run_cov():
    assert bartlett_lag(100) == 4
    assert bartlett_lag(1000) == 6
    rows = make_stream(9).standard_normal((5000, 2))
    cov = bartlett_long_run_cov(rows)
    assert np.allclose(cov, np.eye(2), atol=0.1)
    assert np.allclose(bartlett_long_run_cov(rows, lag=0), np.cov(rows.T, bias=True))


def test_asymptotic_cov_car1():
    family = Car1Family()
    series = car1_series()
    cfg = IndirectConfig(r=1, s=10, master_seed=5, data_leg="ls")
    estimate = indirect_estimate(series, family, cfg)
    cov = asymptotic_cov(estimate.theta_hat, family, cfg, series)
    assert cov.shape == (1, 1)
    assert 1e-4 < cov[0, 0] < 0.3


def test_asymptotic_cov_profiled_scale_is_wider():
    family = Car1Family()
    series = car1_series(n=1000, seed=46)
    theta0 = family.theta([-2.0])
    profiled = asymptotic_cov(theta0, family, IndirectConfig(r=1, s=20, master_seed=7), series)
    known = asymptotic_cov(theta0, family, IndirectConfig(r=1, s=20, master_seed=7, noise_scale="known"), series)
    assert profiled.shape == known.shape == (1, 1)
    # AR(1) coefficient alone: (1 − φ²)(1 + 1/s) / (n φ²) ≈ 0.056
    assert 0.035 <= profiled[0, 0] <= 0.15
    assert known[0, 0] < profiled[0, 0]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
