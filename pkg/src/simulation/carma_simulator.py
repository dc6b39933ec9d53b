#!/usr/bin/env python3
"""
CARMA Path Simulator

Exact discretization of dX = A X dt + e_p dL on the grid h, 2h, …, nh.

Brownian drivers use the exact Gaussian state noise N(0, Σ_h). NIG drivers
integrate the kernel against fine-grid NIG increments (k subintervals per h,
midpoint rule). The state recursion runs through scipy.signal.lfilter so long
simulated paths cost no Python-level loop.

The random inputs live in a DriverPath that does not depend on ϑ, which lets
the indirect estimator reuse one path for every candidate parameter.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, signal

from src.model.carma_model import CarmaSpec, check_stationarity, mixing_rate, stationary_state_cov
from src.model.exceptions import NonStationaryError, SimulationError
from src.simulation.levy_drivers import DriverConfig, DriverKind, nig_increments
from src.simulation.sampled_series import SampledSeries

BURN_IN_HORIZON = 200.0


def brownian_state_noise_cov(spec: CarmaSpec, h: float) -> np.ndarray:
    """Σ_h = Σ − e^{Ah} Σ e^{Aᵀh}."""
    sigma = stationary_state_cov(spec)
    F = linalg.expm(spec.A * h)
    cov = sigma - F @ sigma @ F.T
    return 0.5 * (cov + cov.T)


def _fine_grid_kernel(spec: CarmaSpec, h: float, k: int) -> np.ndarray:
    """p×k matrix with columns e^{A(h−u_j)} e_p at the midpoints u_j."""
    dt = h / k
    step = linalg.expm(spec.A * dt)
    col = linalg.expm(spec.A * (0.5 * dt)) @ spec.e_p
    G = np.empty((spec.p, k))
    # the last subinterval is closest to (m+1)h
    for j in range(k - 1, -1, -1):
        G[:, j] = col
        col = step @ col
    return G


def fine_grid_noise_cov(spec: CarmaSpec, h: float, k: int, sigma_L2: Optional[float] = None) -> np.ndarray:
    """Covariance of the fine-grid state noise Σ_j e^{A(h−u_j)} e_p ΔL_j."""
    var = spec.sigma_L2 if sigma_L2 is None else sigma_L2
    G = _fine_grid_kernel(spec, h, k)
    return var * (h / k) * (G @ G.T)


def fine_grid_autocovariance(spec: CarmaSpec, h: float, k: int, max_lag: int = 1) -> np.ndarray:
    """Stationary γ(0..max_lag·h) of the sampled process under the fine-grid scheme."""
    F = linalg.expm(spec.A * h)
    P = linalg.solve_discrete_lyapunov(F, fine_grid_noise_cov(spec, h, k))
    v = P @ spec.c
    out = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        out[lag] = spec.c @ v
        v = F @ v
    return out


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Lower factor L with L Lᵀ = cov; eigen route for semidefinite input."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))


def filter_state_space(F: np.ndarray, C: np.ndarray, D: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """
    Outputs z_t = C x_t + D w_t of x_{t+1} = F x_t + w_t, x_0 = 0.

    inputs has shape (T, p); returns shape (T, rows of C).
    """
    p = F.shape[0]
    C = np.atleast_2d(C)
    D = np.atleast_2d(D)
    out = np.zeros((inputs.shape[0], C.shape[0]))
    eye = np.eye(p)
    for i in range(p):
        num, den = signal.ss2tf(F, eye[:, [i]], C, D[:, [i]])
        for j in range(C.shape[0]):
            out[:, j] += signal.lfilter(num[j], den, inputs[:, i])
    return out


@dataclass(frozen=True)
class DriverPath:
    """
    Frozen random inputs for one simulated path.

    Brownian: x0_normals (p,) and normals (n, p) standard normals.
    NIG: increments (burn_in_cap + n, k) fine-grid NIG increments.
    """

    kind: DriverKind
    n: int
    h: float
    p: int
    fine_grid_factor: int = 1
    sigma_L2: float = 1.0
    normals: Optional[np.ndarray] = None
    x0_normals: Optional[np.ndarray] = None
    increments: Optional[np.ndarray] = None
    burn_in_cap: int = 0


def draw_driver_path(driver: DriverConfig, n: int, h: float, p: int, rng: np.random.Generator) -> DriverPath:
    if n < 1:
        raise ValueError(f"path length must be positive, got {n}")
    if driver.kind is DriverKind.BROWNIAN:
        x0 = rng.standard_normal(p)
        normals = rng.standard_normal((n, p))
        x0.setflags(write=False)
        normals.setflags(write=False)
        return DriverPath(DriverKind.BROWNIAN, n, h, p, sigma_L2=driver.sigma_L2,
                          normals=normals, x0_normals=x0)
    k = driver.fine_grid_factor
    step_law = driver.nig.scaled(h / k)
    increments = nig_increments(step_law, (driver.burn_in_cap + n, k), rng)
    increments.setflags(write=False)
    return DriverPath(DriverKind.NIG, n, h, p, fine_grid_factor=k, sigma_L2=driver.sigma_L2,
                      increments=increments, burn_in_cap=driver.burn_in_cap)


def burn_in_steps(spec: CarmaSpec, h: float, cap: int) -> int:
    rho = mixing_rate(spec)
    if rho <= 0:
        return cap
    return int(min(cap, np.ceil(BURN_IN_HORIZON / (rho * h))))


def _state_inputs(spec: CarmaSpec, path: DriverPath, x0: Optional[np.ndarray]):
    """Input rows [X_start, ε_0, ε_1, …] and the number of leading outputs to drop."""
    if path.p != spec.p:
        raise ValueError(f"driver path built for p={path.p}, model has p={spec.p}")
    if not check_stationarity(spec):
        raise NonStationaryError(f"eigenvalues {spec.eigenvalues()} are not strictly stable")
    h = path.h
    if path.kind is DriverKind.BROWNIAN:
        model = spec.with_noise_variance(path.sigma_L2)
        noise = path.normals @ _psd_factor(brownian_state_noise_cov(model, h)).T
        start = _psd_factor(stationary_state_cov(model)) @ path.x0_normals if x0 is None else np.asarray(x0, float)
        return np.vstack([start, noise]), 1
    G = _fine_grid_kernel(spec, h, path.fine_grid_factor)
    if x0 is None:
        burn = burn_in_steps(spec, h, path.burn_in_cap)
        start = np.zeros(spec.p)
    else:
        burn = 0
        start = np.asarray(x0, float)
    used = path.increments[path.burn_in_cap - burn:]
    noise = used @ G.T
    return np.vstack([start, noise]), 1 + burn


def simulate_from_driver(spec: CarmaSpec, path: DriverPath, x0: Optional[np.ndarray] = None) -> np.ndarray:
    """Observations Y_h..Y_nh driven by a frozen DriverPath."""
    inputs, drop = _state_inputs(spec, path, x0)
    F = linalg.expm(spec.A * path.h)
    y = filter_state_space(F, (spec.c @ F)[None, :], spec.c[None, :], inputs)[drop:, 0]
    if not np.all(np.isfinite(y)):
        raise SimulationError("simulated path contains non-finite values")
    return y


def simulate_state_from_driver(spec: CarmaSpec, path: DriverPath, x0: Optional[np.ndarray] = None) -> np.ndarray:
    """States X_0..X_nh, shape (n + 1, p)."""
    inputs, drop = _state_inputs(spec, path, x0)
    F = linalg.expm(spec.A * path.h)
    # z_t = F x_t + w_t = x_{t+1}; keep X_0 from the row before the first ε
    states = filter_state_space(F, F, np.eye(spec.p), inputs)[drop - 1:]
    if not np.all(np.isfinite(states)):
        raise SimulationError("simulated state path contains non-finite values")
    return states


def simulate_carma_path(spec: CarmaSpec, n: int, h: float, driver: DriverConfig, rng: np.random.Generator,
                        x0: Optional[np.ndarray] = None, seed: Optional[int] = None) -> SampledSeries:
    path = draw_driver_path(driver, n, h, spec.p, rng)
    values = simulate_from_driver(spec, path, x0)
    return SampledSeries(h=h, values=values, driver=driver.kind.value, seed=seed)


def simulate_state_path(spec: CarmaSpec, n: int, h: float, driver: DriverConfig, rng: np.random.Generator,
                        x0: Optional[np.ndarray] = None) -> np.ndarray:
    path = draw_driver_path(driver, n, h, spec.p, rng)
    return simulate_state_from_driver(spec, path, x0)
