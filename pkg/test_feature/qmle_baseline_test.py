#!/usr/bin/env python3
"""
🧪 QMLE BASELINE TEST - Kalman quasi-likelihood and the Gaussian QMLE
"""

import sys
import os

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest
from scipy import linalg, stats

from src.estimation.optimizer import INFEASIBLE_PENALTY
from src.estimation.qmle_estimator import (
    INNOVATION_JITTER, kalman_innovations, kalman_quasi_loglik, profiled_noise_variance, qmle_estimate,
)
from src.model.carma_model import Car1Family, Carma31Family, build_state_space, stationary_state_cov
from src.model.exceptions import DegenerateSeriesError, ModelSpecificationError
from src.simulation.carma_simulator import brownian_state_noise_cov, simulate_carma_path
from src.simulation.levy_drivers import DriverConfig
from src.simulation.rng_streams import make_stream
from src.simulation.sampled_series import SampledSeries

CARMA31_THETA0 = [-1.0, -2.0, -2.0, 0.0, 1.0]


def simulated(family, values, n, seed):
    spec = build_state_space(family.theta(values), family)
    return simulate_carma_path(spec, n, 1.0, DriverConfig(), make_stream(seed))


def test_kalman_matches_exact_ar1_loglik():
    family = Car1Family()
    theta = family.theta([-1.0])
    series = simulated(family, [-1.0], 300, 51)
    y = series.values
    phi = np.exp(-1.0)
    q = (1.0 - phi ** 2) / 2.0
    exact = stats.norm.logpdf(y[0], scale=np.sqrt(0.5))
    exact += np.sum(stats.norm.logpdf(y[1:], loc=phi * y[:-1], scale=np.sqrt(q)))
    assert kalman_quasi_loglik(theta, family, series) == pytest.approx(exact, rel=1e-8)


def test_steady_state_switch_matches_full_recursion():
    family = Carma31Family()
    theta = family.theta(CARMA31_THETA0)
    series = simulated(family, CARMA31_THETA0, 400, 52)
    v, S, state = kalman_innovations(theta, family, series)

    spec = build_state_space(theta, family)
    F = linalg.expm(spec.A)
    Q = brownian_state_noise_cov(spec, 1.0)
    c = spec.c
    x = np.zeros(3)
    P = stationary_state_cov(spec)
    expected_v = np.empty(series.n)
    loglik = 0.0
    for m, y in enumerate(series.values):
        s = c @ P @ c + INNOVATION_JITTER
        expected_v[m] = y - c @ x
        loglik += stats.norm.logpdf(expected_v[m], scale=np.sqrt(s))
        K = F @ P @ c / s
        x = F @ x + K * expected_v[m]
        P = F @ P @ F.T + Q - s * np.outer(K, K)
    assert np.allclose(v, expected_v, atol=1e-8)
    assert np.all(S > 0)
    assert state.loglik_acc == pytest.approx(loglik, rel=1e-8)


def test_infeasible_theta_penalty():
    family = Car1Family()
    series = simulated(family, [-2.0], 50, 53)
    value = kalman_quasi_loglik(np.array([0.5]), family, series)
    assert value == pytest.approx(-(INFEASIBLE_PENALTY + 0.25), abs=1e-3)


def test_profiled_scale_rejected_for_free_ma_scale():
    family = Carma31Family()
    series = simulated(family, CARMA31_THETA0, 100, 54)
    with pytest.raises(ModelSpecificationError):
        qmle_estimate(series, family, noise_scale="profiled")


def test_empty_series_rejected():
    with pytest.raises(DegenerateSeriesError):
        qmle_estimate(SampledSeries(h=1.0, values=[]), Car1Family())


def test_qmle_recovers_car1():
    family = Car1Family()
    series = simulated(family, [-2.0], 2000, 55)
    estimate = qmle_estimate(series, family, rng=make_stream(55))
    assert estimate.estimator == "qmle"
    assert not estimate.failed
    assert abs(estimate.theta_hat.values[0] + 2.0) < 0.5
    assert estimate.diagnostics["loglik"] == pytest.approx(-estimate.objective * series.n)


def test_profiled_noise_variance_tracks_scale():
    family = Car1Family()
    base = simulated(family, [-2.0], 2000, 56)
    series = SampledSeries(h=1.0, values=3.0 * base.values)
    estimate = qmle_estimate(series, family, rng=make_stream(56))
    assert not estimate.failed
    assert estimate.diagnostics["noise_scale"] == "profiled"
    assert abs(estimate.theta_hat.values[0] + 2.0) < 0.6
    assert estimate.diagnostics["sigma_L2_hat"] == pytest.approx(9.0, rel=0.2)
    assert profiled_noise_variance(family.theta([-2.0]), family, series) == pytest.approx(9.0, rel=0.2)



def test_known_scale_is_misled_by_rescaled_data():
    family = Car1Family()
    base = simulated(family, [-2.0], 2000, 57)
    series = SampledSeries(h=1.0, values=3.0 * base.values)
    known = qmle_estimate(series, family, noise_scale="known", rng=make_stream(57))
    profiled = qmle_estimate(series, family, noise_scale="profiled", rng=make_stream(57))
    assert known.diagnostics["noise_scale"] == "known"
    assert "sigma_L2_hat" not in known.diagnostics
    # a unit σ_L² can only match the inflated variance through slower decay
    assert known.theta_hat.values[0] > -1.0
    assert abs(profiled.theta_hat.values[0] + 2.0) < 0.6


@pytest.mark.parametrize("profile_scale", [False, True])
def test_loglik_ignores_time_origin(profile_scale):
    family = Car1Family()
    theta = family.theta([-0.7])
    base = simulated(family, [-0.7], 300, 58)
    shifted = SampledSeries(h=1.0, values=base.values, start_time=500.0)
    assert shifted.times[0] == 500.0
    first = kalman_quasi_loglik(theta, family, base, profile_scale=profile_scale)
    second = kalman_quasi_loglik(theta, family, shifted, profile_scale=profile_scale)
    assert first == second


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
