"""
Bartlett long-run covariance and sandwich covariances of the auxiliary
AR(r) estimators (GM on data, LS on simulations).
"""

from typing import Optional

import numpy as np

from src.auxiliary.aux_ar import AuxParam, SeriesLike
from src.model.exceptions import EstimationError
from src.robust.gm_estimator import GmConfig, estimating_functions


def bartlett_lag(n: int) -> int:
    return int(np.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def bartlett_long_run_cov(rows: np.ndarray, lag: Optional[int] = None) -> np.ndarray:
    """Σ_{|j|≤L} (1 − |j|/(L+1)) Γ̂_j of the (already mean-zero) rows."""
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[0]
    lag = bartlett_lag(n) if lag is None else int(lag)
    centered = rows - rows.mean(axis=0)
    cov = centered.T @ centered / n
    for j in range(1, min(lag, n - 1) + 1):
        gamma_j = centered[j:].T @ centered[:-j] / n
        cov += (1.0 - j / (lag + 1.0)) * (gamma_j + gamma_j.T)
    return 0.5 * (cov + cov.T)


def estimating_jacobian(series: SeriesLike, aux: AuxParam, cfg: GmConfig, rel_step: float = 1e-5) -> np.ndarray:
    """Central-difference derivative of the mean estimating function in (π, σ)."""
    theta = aux.as_vector()
    dim = theta.size
    J = np.empty((dim, dim))
    for i in range(dim):
        step = rel_step * (1.0 + abs(theta[i]))
        up, down = theta.copy(), theta.copy()
        up[i] += step
        down[i] -= step
        f_up = estimating_functions(series, AuxParam.from_vector(up), cfg).mean(axis=0)
        f_down = estimating_functions(series, AuxParam.from_vector(down), cfg).mean(axis=0)
        J[:, i] = (f_up - f_down) / (2.0 * step)
    return J


def estimator_sandwich(series: SeriesLike, aux: AuxParam, cfg: GmConfig, lag: Optional[int] = None) -> np.ndarray:
    """Ξ = J⁻¹ ℐ J⁻ᵀ, the asymptotic covariance of √N((π̂, σ̂) − (π, σ))."""
    rows = estimating_functions(series, aux, cfg)
    info = bartlett_long_run_cov(rows, lag)
    J = estimating_jacobian(series, aux, cfg)
    cond = np.linalg.cond(J)
    if not np.isfinite(cond) or cond > 1e12:
        raise EstimationError(f"estimating-function Jacobian is singular (condition number {cond:.3e})")
    J_inv = np.linalg.inv(J)
    xi = J_inv @ info @ J_inv.T
    return 0.5 * (xi + xi.T)
