#!/usr/bin/env python3
"""
Asymptotic Covariance of the Indirect Estimator

    Ξ_Ind = 𝒥⁻¹ ℐ 𝒥⁻¹,  𝒥 = Dᵀ Ω D,  ℐ = Dᵀ Ω (Ξ_D + Ξ_S / s) Ω D

with D the Jacobian of the link function at ϑ̂, Ξ_D the sandwich covariance
of the data-leg estimator and Ξ_S that of LS on a path simulated at ϑ̂.
A profiled noise scale adds the column ∂π/∂λ to D and keeps the ϑ block.
"""

from typing import Optional

import numpy as np

from src.auxiliary.aux_ar import link_function, ls_estimate
from src.estimation.indirect_estimator import IndirectConfig, data_leg_estimate
from src.estimation.long_run_cov import estimator_sandwich
from src.model.carma_model import CarmaFamily, ThetaParam, build_state_space, resolve_noise_scale
from src.model.exceptions import EstimationError
from src.robust.gm_estimator import GmConfig
from src.simulation.carma_simulator import simulate_carma_path
from src.simulation.rng_streams import StreamRole, make_stream
from src.simulation.sampled_series import SampledSeries

RANK_CONDITION_LIMIT = 1e12


def link_jacobian(theta: ThetaParam, family: CarmaFamily, h: float, r: int,
                  sigma_L2: float = 1.0, rel_step: float = 1e-5) -> np.ndarray:
    """(r+1)×N(Θ) central differences of π(ϑ); steps may leave the box."""
    base = theta.values
    columns = []
    for i in range(base.size):
        step = rel_step * (1.0 + abs(base[i]))
        up, down = base.copy(), base.copy()
        up[i] += step
        down[i] -= step
        diff = (link_function(up, family, h, r, sigma_L2).as_vector()
                - link_function(down, family, h, r, sigma_L2).as_vector())
        columns.append(diff / (2.0 * step))
    return np.column_stack(columns)


def indirect_sandwich(D: np.ndarray, omega: np.ndarray, xi_d: np.ndarray, xi_s: np.ndarray,
                      s: Optional[float]) -> np.ndarray:
    """Ξ_Ind for link Jacobian D; s=None drops the simulation term (s → ∞)."""
    J = D.T @ omega @ D
    cond = np.linalg.cond(J)
    if not np.isfinite(cond) or cond > RANK_CONDITION_LIMIT:
        raise EstimationError(f"link Jacobian is rank deficient at theta_hat (condition number {cond:.3e})")
    middle = xi_d if s is None else xi_d + xi_s / float(s)
    info = D.T @ omega @ middle @ omega @ D
    J_inv = np.linalg.inv(J)
    xi = J_inv @ info @ J_inv
    return 0.5 * (xi + xi.T)


def asymptotic_cov(theta_hat: ThetaParam, family: CarmaFamily, cfg: IndirectConfig,
                   series: SampledSeries) -> np.ndarray:
    """Estimated covariance matrix of ϑ̂ (Ξ_Ind / n)."""
    h = series.h
    sigma_L2 = cfg.sim_driver.sigma_L2
    D = link_jacobian(theta_hat, family, h, cfg.r, sigma_L2)
    profiled = resolve_noise_scale(family, cfg.noise_scale) == "profiled"
    if profiled:
        # ∂π/∂λ at λ = 1 for the driver scale λ·σ_L
        scale_column = np.zeros(cfg.r + 1)
        scale_column[-1] = link_function(theta_hat, family, h, cfg.r, sigma_L2).sigma
        D = np.column_stack([D, scale_column])

    data_cfg = cfg.gm if cfg.data_leg == "gm" else GmConfig.least_squares()
    pi_data, _, _ = data_leg_estimate(series, cfg)
    xi_d = estimator_sandwich(series, pi_data, data_cfg)

    spec = build_state_space(theta_hat, family, sigma_L2)
    stream = make_stream(cfg.master_seed, cfg.replication, StreamRole.COVARIANCE)
    simulated = simulate_carma_path(spec, cfg.s * series.n, h, cfg.sim_driver, stream)
    xi_s = estimator_sandwich(simulated, ls_estimate(simulated, cfg.r), GmConfig.least_squares())

    omega = cfg.weighting_matrix()
    if cfg.omega_mode == "inverse_gm_cov":
        omega = np.linalg.inv(xi_d)
        omega = 0.5 * (omega + omega.T)
    cov = indirect_sandwich(D, omega, xi_d, xi_s, cfg.s) / series.n
    k = theta_hat.values.size
    return cov[:k, :k] if profiled else cov
