#!/usr/bin/env python3
"""
Gaussian QMLE Baseline

Kalman filter for the sampled CARMA state space (transition e^{Ah}, state
noise Σ_h, observation row cᵀ, no observation noise), started at the
stationary law. Once the prediction covariance has settled, the remaining
innovations come from the time-invariant innovations filter through lfilter.
The likelihood is Gaussian whatever the driver law.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, signal

from src.estimation.optimizer import INFEASIBLE_PENALTY, OptimizerSettings, heuristic_start, minimize_in_box
from src.estimation.reports import ThetaEstimate
from src.model.carma_model import (
    CarmaFamily, ThetaParam, build_state_space, constraint_violation, resolve_noise_scale,
    stationary_state_cov,
)
from src.model.exceptions import CarmaError, DegenerateSeriesError, EstimationError
from src.simulation.carma_simulator import brownian_state_noise_cov
from src.simulation.sampled_series import SampledSeries

INNOVATION_JITTER = 1e-12
STEADY_TOL = 1e-13
LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class KalmanState:
    x_pred: np.ndarray
    P_pred: np.ndarray
    loglik_acc: float = 0.0


def kalman_innovations(theta: ThetaParam, family: CarmaFamily, series: SampledSeries, sigma_L2: float = 1.0):
    """Innovations v_m, their variances S_m and the final filter state."""
    spec = build_state_space(theta, family, sigma_L2)
    h = series.h
    F = linalg.expm(spec.A * h)
    Q = brownian_state_noise_cov(spec, h)
    c = spec.c
    y = series.values
    n = y.size

    state = KalmanState(np.zeros(spec.p), stationary_state_cov(spec))
    v = np.empty(n)
    S = np.empty(n)
    m = 0
    while m < n:
        P = state.P_pred
        s_m = float(c @ P @ c) + INNOVATION_JITTER
        if not s_m > 0:
            raise EstimationError(f"innovation variance {s_m} is not positive at step {m}")
        v[m] = y[m] - c @ state.x_pred
        S[m] = s_m
        state.loglik_acc -= 0.5 * (LOG_2PI + np.log(s_m) + v[m] ** 2 / s_m)
        gain = F @ P @ c / s_m
        state.x_pred = F @ state.x_pred + gain * v[m]
        P_next = F @ P @ F.T + Q - s_m * np.outer(gain, gain)
        P_next = 0.5 * (P_next + P_next.T)
        m += 1
        settled = np.max(np.abs(P_next - P)) <= STEADY_TOL * max(1.0, np.max(np.abs(P)))
        state.P_pred = P_next
        if settled and m < n:
            _steady_innovations(F, c, gain, state.x_pred, y[m:], v[m:])
            S[m:] = float(c @ P_next @ c) + INNOVATION_JITTER
            state.loglik_acc -= 0.5 * float(np.sum(LOG_2PI + np.log(S[m:]) + v[m:] ** 2 / S[m:]))
            break
    return v, S, state


def _steady_innovations(F, c, gain, x_start, y_rest, out):
    """v = y − cᵀx with x_{m+1} = (F − K cᵀ) x_m + K y_m, written into out."""
    M = F - np.outer(gain, c)
    num, den = signal.ss2tf(M, gain[:, None], -c[None, :], np.array([[1.0]]))
    out[:] = signal.lfilter(num[0], den, y_rest)
    # response to the state carried over from the exact recursion
    x = np.array(x_start, dtype=float)
    floor = 1e-17 * max(1.0, float(np.linalg.norm(x)))
    for j in range(y_rest.size):
        if np.linalg.norm(x) <= floor:
            break
        out[j] -= c @ x
        x = M @ x


def kalman_quasi_loglik(theta: ThetaParam, family: CarmaFamily, series: SampledSeries,
                        sigma_L2: float = 1.0, profile_scale: bool = False) -> float:
    """Gaussian quasi log-likelihood; infeasible ϑ get −(1e6 + violation²)."""
    if series.n < 1:
        raise DegenerateSeriesError("QMLE needs at least one observation")
    spec = build_state_space(theta, family, sigma_L2)
    violation = constraint_violation(spec, series.h)
    if violation > 0:
        return -(INFEASIBLE_PENALTY + violation ** 2)
    v, S, state = kalman_innovations(theta, family, series, sigma_L2)
    if profile_scale:
        scale = float(np.mean(v * v / S))
        return float(-0.5 * np.sum(LOG_2PI + np.log(scale * S) + 1.0))
    return float(state.loglik_acc)


def profiled_noise_variance(theta: ThetaParam, family: CarmaFamily, series: SampledSeries) -> float:
    v, S, _ = kalman_innovations(theta, family, series, 1.0)
    return float(np.mean(v * v / S))


def qmle_estimate(series: SampledSeries, family: CarmaFamily, settings: Optional[OptimizerSettings] = None,
                  theta_box: Optional[ThetaParam] = None, sigma_L2: float = 1.0, noise_scale: Optional[str] = None,
                  start=None, rng: Optional[np.random.Generator] = None, event_logger=None,
                  replication: int = 0) -> ThetaEstimate:
    """
    Maximize the Gaussian quasi log-likelihood over the box Θ.

    With noise_scale="profiled" (the default for a normalized MA vector) σ_L² is
    concentrated out and reported as diagnostics["sigma_L2_hat"].
    """
    if series.n < 1:
        raise DegenerateSeriesError("QMLE needs a non-empty series")
    profile_scale = resolve_noise_scale(family, noise_scale) == "profiled"
    settings = OptimizerSettings() if settings is None else settings
    box = theta_box if theta_box is not None else family.theta(0.5 * (family.lower + family.upper))
    n = series.n

    def objective(x):
        try:
            return -kalman_quasi_loglik(box.with_values(x), family, series, sigma_L2, profile_scale) / n
        except (CarmaError, np.linalg.LinAlgError):
            return INFEASIBLE_PENALTY + 1.0

    x0 = heuristic_start(series, family, box) if start is None else start
    outcome = minimize_in_box(objective, x0, box.lower, box.upper, settings, rng)
    theta_hat = box.with_values(outcome.x)
    diagnostics = {"loglik": -outcome.fun * n, "noise_scale": "profiled" if profile_scale else "known"}
    if profile_scale and outcome.fun < INFEASIBLE_PENALTY:
        diagnostics["sigma_L2_hat"] = profiled_noise_variance(theta_hat, family, series)
    estimate = ThetaEstimate(
        estimator="qmle",
        theta_hat=theta_hat,
        objective=outcome.fun,
        evals=outcome.evals,
        converged=outcome.converged,
        message=outcome.message,
        diagnostics=diagnostics,
    )
    if event_logger is not None:
        event_logger.log_estimation("qmle", {"replication": replication, **estimate.as_dict()})
    return estimate
