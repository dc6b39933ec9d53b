#!/usr/bin/env python3
"""
Indirect Estimator

Fits the auxiliary AR(r) model to the data (GM by default), then searches Θ
for the ϑ whose simulated path reproduces that fit:

    L(ϑ) = [π̂ − π̂^S(ϑ)]ᵀ Ω [π̂ − π̂^S(ϑ)]

One driver path is drawn per estimation run and reused for every ϑ, so L is
a deterministic function of ϑ. In analytic mode the simulation leg is
replaced by the link function itself.

With a profiled noise scale the simulated σ̂^S is rescaled by the λ ≥ 0
that minimizes L; the simulated path is linear in the driver, so this is
the same as estimating σ_L jointly with ϑ.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from src.auxiliary.aux_ar import AuxParam, link_function, ls_estimate
from src.estimation.long_run_cov import estimator_sandwich
from src.estimation.optimizer import (
    INFEASIBLE_PENALTY, OptimizerSettings, heuristic_start, minimize_in_box,
)
from src.estimation.reports import ThetaEstimate
from src.model.carma_model import (
    CarmaFamily, ThetaParam, build_state_space, constraint_violation, resolve_noise_scale,
)
from src.model.exceptions import CarmaError, ModelSpecificationError
from src.robust.gm_estimator import GmConfig, gm_estimate
from src.simulation.carma_simulator import DriverPath, draw_driver_path, simulate_from_driver
from src.simulation.levy_drivers import DriverConfig
from src.simulation.rng_streams import StreamRole, make_stream
from src.simulation.sampled_series import SampledSeries

DATA_LEGS = ("gm", "ls")
OMEGA_MODES = ("identity", "inverse_gm_cov")
MODES = ("simulation", "analytic")
# path length used when only π̂ is supplied and no series fixes n
DEFAULT_SIMULATED_LENGTH = 1000


@dataclass(frozen=True)
class IndirectConfig:
    r: int
    s: int = 75
    omega: Optional[np.ndarray] = None
    sim_driver: DriverConfig = field(default_factory=DriverConfig)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    master_seed: int = 0
    replication: int = 0
    gm: GmConfig = field(default_factory=GmConfig)
    data_leg: str = "gm"
    omega_mode: str = "identity"
    mode: str = "simulation"
    start: Optional[np.ndarray] = None
    demean: bool = False
    noise_scale: Optional[str] = None

    def __post_init__(self):
        if self.r < 1:
            raise ModelSpecificationError("auxiliary order r must be at least 1")
        if self.s < 1:
            raise ModelSpecificationError("simulation multiplier s must be at least 1")
        if self.data_leg not in DATA_LEGS:
            raise ModelSpecificationError(f"data_leg must be one of {DATA_LEGS}")
        if self.omega_mode not in OMEGA_MODES:
            raise ModelSpecificationError(f"omega_mode must be one of {OMEGA_MODES}")
        if self.mode not in MODES:
            raise ModelSpecificationError(f"mode must be one of {MODES}")
        if self.omega is not None:
            object.__setattr__(self, "omega", check_weighting_matrix(self.omega, self.r + 1))

    def weighting_matrix(self) -> np.ndarray:
        return np.eye(self.r + 1) if self.omega is None else self.omega

    def for_replication(self, replication: int) -> "IndirectConfig":
        return replace(self, replication=replication)


def check_weighting_matrix(omega, dim: int) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (dim, dim):
        raise ModelSpecificationError(f"Omega must be {dim}x{dim}, got {omega.shape}")
    if not np.allclose(omega, omega.T, rtol=1e-10, atol=1e-12):
        raise ModelSpecificationError("Omega must be symmetric")
    try:
        np.linalg.cholesky(omega)
    except np.linalg.LinAlgError:
        raise ModelSpecificationError("Omega must be positive definite")
    return omega


def _penalty(violation: float) -> float:
    return INFEASIBLE_PENALTY + violation ** 2


def simulated_aux(theta: ThetaParam, family: CarmaFamily, cfg: IndirectConfig,
                  levy_cache: Optional[DriverPath], h: float) -> AuxParam:
    """π̂^S(ϑ): LS fit on the path driven by levy_cache, or π(ϑ) in analytic mode."""
    if levy_cache is None:
        return link_function(theta, family, h, cfg.r, sigma_L2=cfg.sim_driver.sigma_L2)
    spec = build_state_space(theta, family, cfg.sim_driver.sigma_L2)
    return ls_estimate(simulate_from_driver(spec, levy_cache), cfg.r)


def profiled_distance(pi_hat: AuxParam, pi_sim: AuxParam, omega: np.ndarray) -> Tuple[float, float]:
    """
    min over λ ≥ 0 of the Ω-distance between π̂ and π̂^S with σ̂^S scaled by λ.

    Returns (distance, λ*). With Ω = I only the AR coefficients are matched.
    """
    base = pi_hat.as_vector() - pi_sim.as_vector()
    base[-1] = pi_hat.sigma
    direction = np.zeros_like(base)
    direction[-1] = pi_sim.sigma
    curvature = float(direction @ omega @ direction)
    scale = max(0.0, float(direction @ omega @ base) / curvature) if curvature > 0 else 0.0
    diff = base - scale * direction
    return float(diff @ omega @ diff), scale


def indirect_objective(theta: ThetaParam, pi_hat: AuxParam, cfg: IndirectConfig,
                       levy_cache: Optional[DriverPath], family: CarmaFamily, h: float = 1.0) -> float:
    try:
        spec = build_state_space(theta, family, cfg.sim_driver.sigma_L2)
    except ModelSpecificationError:
        return _penalty(1.0)
    violation = constraint_violation(spec, h)
    if violation > 0:
        return _penalty(violation)
    try:
        pi_sim = simulated_aux(theta, family, cfg, levy_cache, h)
    except (CarmaError, np.linalg.LinAlgError):
        return _penalty(1.0)
    if resolve_noise_scale(family, cfg.noise_scale) == "profiled":
        return profiled_distance(pi_hat, pi_sim, cfg.weighting_matrix())[0]
    diff = pi_hat.as_vector() - pi_sim.as_vector()
    return float(diff @ cfg.weighting_matrix() @ diff)


def data_leg_estimate(series: SampledSeries, cfg: IndirectConfig):
    """π̂_n with its convergence flag."""
    values = series.demeaned() if cfg.demean else series
    if cfg.data_leg == "ls":
        return ls_estimate(values, cfg.r), True, "least squares"
    fit = gm_estimate(values, cfg.r, cfg.gm)
    return fit.aux, fit.converged, fit.message


def _check_order(family: CarmaFamily, r: int):
    if r < 2 * family.p - 1:
        raise ModelSpecificationError(f"auxiliary order r={r} must be at least 2p-1={2 * family.p - 1}")


def indirect_estimate(series: Optional[SampledSeries], family: CarmaFamily, cfg: IndirectConfig,
                      theta_box: Optional[ThetaParam] = None, pi_hat: Optional[AuxParam] = None,
                      h: Optional[float] = None, event_logger=None, n: Optional[int] = None) -> ThetaEstimate:
    """
    Minimize the indirect objective over the box Θ.

    pi_hat overrides the data leg (used for noiseless self-tests); series may
    then be None. The simulated path has s·n points, with n taken from the
    series, else from the n argument, else DEFAULT_SIMULATED_LENGTH.
    """
    _check_order(family, cfg.r)
    noise_scale = resolve_noise_scale(family, cfg.noise_scale)
    cfg = replace(cfg, noise_scale=noise_scale)
    if h is None:
        h = series.h if series is not None else 1.0
    box = theta_box if theta_box is not None else family.theta(0.5 * (family.lower + family.upper))

    data_converged, data_message = True, "supplied"
    if pi_hat is None:
        if series is None:
            raise ValueError("indirect_estimate needs a series or an explicit pi_hat")
        series.require_length(cfg.r + 2, "indirect estimation")
        pi_hat, data_converged, data_message = data_leg_estimate(series, cfg)

    weighting = cfg
    if cfg.omega_mode == "inverse_gm_cov" and series is not None:
        gm_cfg = cfg.gm if cfg.data_leg == "gm" else GmConfig.least_squares()
        xi_d = estimator_sandwich(series, pi_hat, gm_cfg)
        omega = np.linalg.inv(xi_d)
        weighting = replace(cfg, omega=0.5 * (omega + omega.T))

    if series is not None:
        n = series.n
    elif n is None:
        n = DEFAULT_SIMULATED_LENGTH
    levy_cache = None
    if cfg.mode == "simulation":
        stream = make_stream(cfg.master_seed, cfg.replication, StreamRole.SIMULATION)
        levy_cache = draw_driver_path(cfg.sim_driver, cfg.s * n, h, family.p, stream)

    def objective(x):
        return indirect_objective(box.with_values(x), pi_hat, weighting, levy_cache, family, h)

    start = cfg.start if cfg.start is not None else heuristic_start(series, family, box, pi_hat, h)
    outcome = minimize_in_box(objective, start, box.lower, box.upper, cfg.optimizer,
                              make_stream(cfg.master_seed, cfg.replication, StreamRole.OPTIMIZER))
    theta_hat = box.with_values(outcome.x)

    diagnostics = {"mode": cfg.mode, "omega_mode": cfg.omega_mode, "s": cfg.s, "r": cfg.r,
                   "noise_scale": noise_scale, "sim_length": cfg.s * n if levy_cache is not None else 0}
    if noise_scale == "profiled" and outcome.fun < INFEASIBLE_PENALTY:
        try:
            pi_sim = simulated_aux(theta_hat, family, cfg, levy_cache, h)
            _, scale = profiled_distance(pi_hat, pi_sim, weighting.weighting_matrix())
            diagnostics["sigma_L2_hat"] = scale ** 2 * cfg.sim_driver.sigma_L2
        except (CarmaError, np.linalg.LinAlgError):
            pass

    estimator = "indirect" if cfg.data_leg == "gm" else "ls"
    message = outcome.message if data_converged else f"GM data leg: {data_message}"
    estimate = ThetaEstimate(
        estimator=estimator,
        theta_hat=theta_hat,
        objective=outcome.fun,
        pi_hat=pi_hat,
        evals=outcome.evals,
        converged=outcome.converged and data_converged,
        message=message,
        diagnostics=diagnostics,
    )
    if event_logger is not None:
        event_logger.log_estimation(estimator, {"replication": cfg.replication, **estimate.as_dict()})
    return estimate


def analytic_estimate(theta0: ThetaParam, family: CarmaFamily, cfg: IndirectConfig, h: float = 1.0) -> ThetaEstimate:
    """Noiseless self-test: both legs use the link function, π̂ = π(ϑ₀)."""
    pi_hat = link_function(theta0, family, h, cfg.r, sigma_L2=cfg.sim_driver.sigma_L2)
    return indirect_estimate(None, family, replace(cfg, mode="analytic"), theta_box=theta0,
                             pi_hat=pi_hat, h=h)
