#!/usr/bin/env python3
"""
Auxiliary AR(r) Layer

The link function π(ϑ) from the Yule–Walker equations on the exact CARMA
autocovariance, non-mean-corrected sample autocovariances, and the least
squares AR(r) estimator used on simulated paths.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg

from src.model.carma_model import (
    CarmaFamily, ThetaParam, autocovariance_sequence, build_state_space,
    check_sampling_identifiability,
)
from src.model.exceptions import DegenerateSeriesError, ModelSpecificationError
from src.simulation.sampled_series import SampledSeries

CONDITION_LIMIT = 1e12

SeriesLike = Union[SampledSeries, np.ndarray]


@dataclass(frozen=True)
class AuxParam:
    """(π₁, …, π_r, σ) of the auxiliary AR(r) representation."""

    pis: np.ndarray
    sigma: float

    def __post_init__(self):
        pis = np.array(self.pis, dtype=float, copy=True).reshape(-1)
        if pis.size < 1:
            raise ModelSpecificationError("auxiliary order r must be at least 1")
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ModelSpecificationError(f"auxiliary sigma must be nonnegative, got {self.sigma}")
        pis.setflags(write=False)
        object.__setattr__(self, "pis", pis)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def r(self) -> int:
        return int(self.pis.size)

    def as_vector(self) -> np.ndarray:
        return np.append(self.pis, self.sigma)

    @classmethod
    def from_vector(cls, vector) -> "AuxParam":
        vector = np.asarray(vector, dtype=float)
        return cls(vector[:-1], vector[-1])

    def labels(self):
        return [f"pi{i + 1}" for i in range(self.r)] + ["sigma"]


def series_values(series: SeriesLike) -> np.ndarray:
    if isinstance(series, SampledSeries):
        return series.values
    return np.asarray(series, dtype=float).reshape(-1)


def _check_condition(matrix: np.ndarray, what: str, error=DegenerateSeriesError):
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise error(f"{what} is numerically singular (condition number {cond:.3e})")


def _solve_guarded(matrix: np.ndarray, rhs: np.ndarray, what: str, error=DegenerateSeriesError) -> np.ndarray:
    _check_condition(matrix, what, error)
    return linalg.solve(matrix, rhs, assume_a="sym")


def link_function(theta: ThetaParam, family: CarmaFamily, h: float, r: int,
                  sigma_L2: float = 1.0, method: str = "dense") -> AuxParam:
    """π(ϑ): Yule–Walker solution of order r on γ_ϑ(0..rh)."""
    if r < max(1, 2 * family.p - 1):
        raise ModelSpecificationError(f"auxiliary order r={r} must be at least 2p-1={2 * family.p - 1}")
    spec = build_state_space(theta, family, sigma_L2)
    if not check_sampling_identifiability(spec, h):
        raise ModelSpecificationError(f"eigenvalues {spec.eigenvalues()} alias on the grid h={h}")
    acf = autocovariance_sequence(spec, h, r)
    gamma = acf.values[1:r + 1]
    if method == "levinson":
        _check_condition(acf.toeplitz(r), "Toeplitz matrix of the link function", ModelSpecificationError)
        pis = linalg.solve_toeplitz(acf.values[:r], gamma)
    elif method == "dense":
        pis = _solve_guarded(acf.toeplitz(r), gamma, "Toeplitz matrix of the link function",
                             error=ModelSpecificationError)
    else:
        raise ValueError(f"Unknown link_function method '{method}'")
    sigma2 = acf.values[0] - pis @ gamma
    return AuxParam(pis, np.sqrt(max(sigma2, 0.0)))


def sample_autocov(series: SeriesLike, l: int, j: int, r: int) -> float:
    """(1/(n−r)) Σ_{k=1}^{n−r} Y_{k+l} Y_{k+j}, without mean correction."""
    y = series_values(series)
    n = y.size
    if n <= r:
        raise DegenerateSeriesError(f"sample autocovariance needs n > r, got n={n}, r={r}")
    if not (0 <= l <= r and 0 <= j <= r):
        raise ValueError(f"lag indices must lie in [0, {r}], got ({l}, {j})")
    m = n - r
    return float(y[l:l + m] @ y[j:j + m] / m)


def lagged_design(values: np.ndarray, r: int):
    """Regressor rows (Y_{k+r−1}, …, Y_k) and targets Y_{k+r}, k = 1..n−r."""
    windows = sliding_window_view(values, r + 1)
    return windows[:, r - 1::-1], windows[:, r]


def ls_estimate(series: SeriesLike, r: int, demean: bool = False) -> AuxParam:
    """Least squares AR(r) fit; σ̂² is the mean squared residual."""
    y = series_values(series)
    if y.size <= r + 1:
        raise DegenerateSeriesError(f"LS estimation of order {r} needs more than {r + 1} observations")
    if demean:
        y = y - y.mean()
    X, target = lagged_design(y, r)
    m = target.size
    gram = X.T @ X / m
    pis = _solve_guarded(gram, X.T @ target / m, "LS normal equations")
    resid = target - X @ pis
    return AuxParam(pis, np.sqrt(resid @ resid / m))
