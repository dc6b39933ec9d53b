#!/usr/bin/env python3
"""
GM-Estimation of AR(r) Parameters

Mallows-type GM-estimator φ(y, u) = w(y)·ψ(u) solved by iteratively
reweighted least squares: a Huber stage with a fixed number of sweeps, then a
bisquare stage that stops once the relative parameter change falls below the
tolerance. The scale σ solves mean χ(u²) = 0 with χ(x²) = ψ²(x) − E[ψ²(Z)].

Regressor norms are standardized by a MAD scale of the series times √r
before the weight function is applied, which keeps the estimator scale
equivariant.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

import numpy as np
from scipy import optimize, stats

from src.auxiliary.aux_ar import AuxParam, SeriesLike, lagged_design, ls_estimate, series_values
from src.model.exceptions import DegenerateSeriesError, EstimationError
from src.robust.psi_functions import PsiKind, PsiSpec, chi_reference

MAD_CONSISTENCY = stats.norm.ppf(0.75)
TUNING_K = 4.0


@dataclass(frozen=True)
class GmConfig:
    stage1: PsiSpec = PsiSpec(PsiKind.HUBER, TUNING_K)
    stage2: PsiSpec = PsiSpec(PsiKind.BISQUARE, TUNING_K)
    weight: PsiSpec = PsiSpec(PsiKind.BISQUARE, TUNING_K)
    huber_iters: int = 6
    bisquare_iters: int = 50
    convergence_tol: float = 1e-6
    chi_reference: str = "normal"

    def __post_init__(self):
        if self.huber_iters < 1 or self.bisquare_iters < 1:
            raise ValueError("GM iteration counts must be at least 1")
        if not self.convergence_tol > 0:
            raise ValueError("GM convergence tolerance must be positive")
        if self.chi_reference != "normal":
            raise ValueError(f"Unsupported chi reference '{self.chi_reference}'")

    @classmethod
    def least_squares(cls) -> "GmConfig":
        """φ(y, u) = u, χ(x) = x − 1: the GM form of the LS estimator."""
        identity = PsiSpec(PsiKind.IDENTITY)
        return cls(stage1=identity, stage2=identity, weight=identity, huber_iters=1)

    @classmethod
    def from_dict(cls, cfg: Dict[str, Any]) -> "GmConfig":
        base = cls()
        return replace(
            base,
            stage1=PsiSpec(PsiKind.HUBER, float(cfg.get("huber_k", base.stage1.k))),
            stage2=PsiSpec(PsiKind.BISQUARE, float(cfg.get("bisquare_k", base.stage2.k))),
            weight=PsiSpec.from_name(cfg.get("weight_kind", "bisquare"), float(cfg.get("weight_k", base.weight.k))),
            huber_iters=int(cfg.get("huber_iters", base.huber_iters)),
            bisquare_iters=int(cfg.get("bisquare_iters", base.bisquare_iters)),
            convergence_tol=float(cfg.get("convergence_tol", base.convergence_tol)),
        )


def mallows_phi(y, u, cfg: GmConfig, psi: Optional[PsiSpec] = None):
    """w(‖y‖)·ψ(u) for a standardized regressor y (last axis)."""
    psi = cfg.stage2 if psi is None else psi
    norm = np.linalg.norm(np.atleast_1d(y), axis=-1)
    return cfg.weight.weight(norm) * psi.psi(u)


def chi_fn(x2, cfg: GmConfig, psi: Optional[PsiSpec] = None):
    psi = cfg.stage2 if psi is None else psi
    x = np.sqrt(np.asarray(x2, dtype=float))
    return psi.psi(x) ** 2 - chi_reference(psi)


def robust_scale(values: np.ndarray) -> float:
    """Consistency-scaled median absolute deviation."""
    return float(np.median(np.abs(values - np.median(values))) / MAD_CONSISTENCY)


def _regressor_weights(X: np.ndarray, scale: float, cfg: GmConfig) -> np.ndarray:
    r = X.shape[1]
    norms = np.linalg.norm(X, axis=1) / (scale * np.sqrt(r))
    return cfg.weight.weight(norms)


def estimating_functions(series: SeriesLike, aux: AuxParam, cfg: GmConfig,
                         psi: Optional[PsiSpec] = None) -> np.ndarray:
    """
    Rows Ψ_k = (φ(y_k, u_k)·y_k, χ(u_k²)), k = 1..n−r, at the given (π, σ).
    """
    psi = cfg.stage2 if psi is None else psi
    y = series_values(series)
    X, target = lagged_design(y, aux.r)
    scale = robust_scale(y)
    if scale <= 0:
        raise DegenerateSeriesError("series has zero robust scale")
    u = (target - X @ aux.pis) / aux.sigma
    phi = _regressor_weights(X, scale, cfg) * psi.psi(u)
    chi = psi.psi(u) ** 2 - chi_reference(psi)
    return np.column_stack([phi[:, None] * X, chi])


@dataclass
class GmEstimate:
    aux: AuxParam
    converged: bool
    iterations: int
    regressor_scale: float
    message: str = ""
    weights: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def pis(self) -> np.ndarray:
        return self.aux.pis

    @property
    def sigma(self) -> float:
        return self.aux.sigma


def _scale_equation(resid: np.ndarray, psi: PsiSpec, c_ref: float):
    def g(sigma):
        return float(np.mean(psi.psi(resid / sigma) ** 2) - c_ref)
    return g


def _update_scale(resid: np.ndarray, sigma: float, psi: PsiSpec) -> float:
    """
    Solve mean ψ²(e/σ) = E[ψ²(Z)] for σ: one Newton step in v = 1/σ²,
    bracketing with brentq when the step is unusable.
    """
    c_ref = chi_reference(psi)
    v = 1.0 / sigma ** 2
    x = resid * np.sqrt(v)
    g = np.mean(psi.psi(x) ** 2) - c_ref
    slope = np.mean(psi.psi(x) * psi.psi_prime(x) * x) / v
    if slope > 0:
        v_new = v - g / slope
        if np.isfinite(v_new) and v_new > 0:
            return float(1.0 / np.sqrt(v_new))

    equation = _scale_equation(resid, psi, c_ref)
    grid = sigma * np.logspace(-3, 3, 61)
    vals = np.array([equation(s) for s in grid])
    # larger root: the decreasing branch where u behaves like N(0, 1)
    crossings = np.flatnonzero((vals[:-1] > 0) & (vals[1:] <= 0))
    if crossings.size == 0:
        raise EstimationError("scale equation has no root in the search bracket")
    i = crossings[-1]
    return float(optimize.brentq(equation, grid[i], grid[i + 1], xtol=1e-14 * grid[i]))


def _weighted_solve(X: np.ndarray, target: np.ndarray, omega: np.ndarray) -> np.ndarray:
    if not np.any(omega > 0):
        raise EstimationError("all GM weights vanished; weighted normal equations are empty")
    Xw = X * omega[:, None]
    gram = Xw.T @ X
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise EstimationError(f"weighted normal equations are singular (condition number {cond:.3e}, "
                              f"{int(np.sum(omega > 0))} positive weights)")
    return np.linalg.solve(gram, Xw.T @ target)


def gm_estimate(series: SeriesLike, r: int, cfg: Optional[GmConfig] = None) -> GmEstimate:
    cfg = GmConfig() if cfg is None else cfg
    y = series_values(series)
    if y.size <= r + 1:
        raise DegenerateSeriesError(f"GM estimation of order {r} needs more than {r + 1} observations")
    scale = robust_scale(y)
    if scale <= 0:
        raise DegenerateSeriesError("zero-variance regressors: series has zero robust scale")

    X, target = lagged_design(y, r)
    w_reg = _regressor_weights(X, scale, cfg)

    start = ls_estimate(y, r)
    pis = start.pis.copy()
    resid = target - X @ pis
    sigma = robust_scale(resid) if resid.size else 0.0
    if sigma <= 0:
        sigma = start.sigma
    if sigma <= 0:
        # exact AR fit: nothing left to robustify
        return GmEstimate(start, True, 0, scale, "exact fit", w_reg)

    iterations = 0
    converged = False
    omega = w_reg
    stages = ((cfg.stage1, cfg.huber_iters, False), (cfg.stage2, cfg.bisquare_iters, True))
    for psi, sweeps, check in stages:
        for _ in range(sweeps):
            iterations += 1
            u = resid / sigma
            omega = w_reg * psi.weight(u)
            new_pis = _weighted_solve(X, target, omega)
            resid = target - X @ new_pis
            new_sigma = _update_scale(resid, sigma, psi)
            old = np.append(pis, sigma)
            new = np.append(new_pis, new_sigma)
            pis, sigma = new_pis, new_sigma
            if check and np.linalg.norm(new - old) <= cfg.convergence_tol * max(np.linalg.norm(old), 1e-12):
                converged = True
                break

    message = "converged" if converged else f"no convergence after {cfg.bisquare_iters} bisquare sweeps"
    return GmEstimate(AuxParam(pis, sigma), converged, iterations, scale, message, omega)
