#!/usr/bin/env python3
"""
Box-Constrained Simplex Search

Nelder–Mead over the box Θ. Points outside the box are evaluated at their
clipped image plus a quadratic distance penalty, and the search is restarted
from jittered copies of the incumbent.
"""

from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, Optional

import numpy as np
from scipy import optimize

from src.auxiliary.aux_ar import AuxParam, sample_autocov
from src.model.carma_model import CarmaFamily, ThetaParam
from src.simulation.sampled_series import SampledSeries

OUT_OF_BOX_WEIGHT = 1e4
INFEASIBLE_PENALTY = 1e6


@dataclass(frozen=True)
class OptimizerSettings:
    method: str = "Nelder-Mead"
    max_evals: int = 2000
    restarts: int = 3
    xatol: float = 1e-8
    fatol: float = 1e-12
    jitter: float = 0.05
    simplex_scale: float = 0.1

    def __post_init__(self):
        if self.method != "Nelder-Mead":
            raise ValueError(f"Unsupported optimizer method '{self.method}'")
        if self.max_evals < 1 or self.restarts < 0:
            raise ValueError("max_evals must be positive and restarts nonnegative")

    @classmethod
    def from_dict(cls, cfg: Dict[str, Any]) -> "OptimizerSettings":
        base = cls()
        return replace(
            base,
            max_evals=int(cfg.get("max_evals", base.max_evals)),
            restarts=int(cfg.get("restarts", base.restarts)),
            xatol=float(cfg.get("xatol", base.xatol)),
            fatol=float(cfg.get("fatol", base.fatol)),
            jitter=float(cfg.get("jitter", base.jitter)),
            simplex_scale=float(cfg.get("simplex_scale", base.simplex_scale)),
        )


@dataclass
class OptimizeOutcome:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool
    message: str


def _initial_simplex(x0: np.ndarray, width: np.ndarray, lower, upper, scale: float) -> np.ndarray:
    simplex = np.tile(x0, (x0.size + 1, 1))
    for i in range(x0.size):
        step = scale * width[i]
        # step inward so every vertex starts inside the box
        simplex[i + 1, i] += step if x0[i] + step <= upper[i] else -step
    return simplex


def minimize_in_box(fun: Callable[[np.ndarray], float], x0, lower, upper,
                    settings: OptimizerSettings, rng: Optional[np.random.Generator] = None) -> OptimizeOutcome:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    width = np.maximum(upper - lower, 1e-12)
    rng = np.random.default_rng(0) if rng is None else rng

    def boxed(x):
        clipped = np.clip(x, lower, upper)
        excess = np.sum(((x - clipped) / width) ** 2)
        return float(fun(clipped)) + OUT_OF_BOX_WEIGHT * excess

    best = None
    evals = 0
    start = np.clip(np.asarray(x0, dtype=float), lower, upper)
    for attempt in range(settings.restarts + 1):
        if attempt > 0:
            start = np.clip(best.x + settings.jitter * width * rng.standard_normal(start.size), lower, upper)
        res = optimize.minimize(
            boxed, start, method="Nelder-Mead",
            options={
                "maxfev": settings.max_evals,
                "xatol": settings.xatol,
                "fatol": settings.fatol,
                "initial_simplex": _initial_simplex(start, width, lower, upper, settings.simplex_scale),
            },
        )
        evals += int(res.nfev)
        x = np.clip(res.x, lower, upper)
        if best is None or res.fun < best.fun:
            best = OptimizeOutcome(x, float(res.fun), evals, bool(res.success), str(res.message))
    best.evals = evals
    return best


def heuristic_start(series: Optional[SampledSeries], family: CarmaFamily, theta_box: ThetaParam,
                    pi_hat: Optional[AuxParam] = None, h: Optional[float] = None) -> np.ndarray:
    """
    CAR(1): match e^{ϑh} to π̂₁ when an auxiliary fit is given, else to
    γ̂(h)/γ̂(0); other families start at the box center.
    """
    if family.p != 1 or family.n_params != 1:
        return theta_box.center()
    if h is None:
        h = series.h if series is not None else 1.0
    if pi_hat is not None and 0.0 < pi_hat.pis[0] < 1.0:
        return theta_box.clip([np.log(pi_hat.pis[0]) / h])
    if series is not None and series.n > 2:
        ratio = sample_autocov(series, 1, 0, 1) / sample_autocov(series, 0, 0, 1)
        if 0.0 < ratio < 1.0:
            return theta_box.clip([np.log(ratio) / h])
    return theta_box.center()
