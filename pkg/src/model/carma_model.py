#!/usr/bin/env python3
"""
CARMA Model Family

State-space construction for stationary Lévy-driven CARMA(p,q) processes:
companion matrix, MA vector, stationarity and sampling checks, the stationary
state covariance and the exact autocovariance function.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.model.exceptions import ModelSpecificationError, NonStationaryError

STABILITY_TOL = 1e-8


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ThetaParam:
    """Point ϑ of the parameter space together with the box bounds of Θ."""

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        values = _frozen(np.atleast_1d(self.values))
        lower = _frozen(np.atleast_1d(self.lower))
        upper = _frozen(np.atleast_1d(self.upper))
        if values.ndim != 1 or values.size < 1:
            raise ModelSpecificationError("theta must be a non-empty vector")
        if lower.shape != values.shape or upper.shape != values.shape:
            raise ModelSpecificationError(
                f"box bounds {lower.shape}/{upper.shape} do not match theta {values.shape}"
            )
        if np.any(lower > upper):
            raise ModelSpecificationError("lower bound exceeds upper bound")
        if np.any(values < lower) or np.any(values > upper):
            raise ModelSpecificationError(f"theta {values.tolist()} outside box")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def clip(self, values) -> np.ndarray:
        return np.clip(np.asarray(values, dtype=float), self.lower, self.upper)

    def with_values(self, values) -> "ThetaParam":
        return ThetaParam(self.clip(values), self.lower, self.upper)

    def on_boundary(self, rel_tol: float = 1e-6) -> bool:
        """True when any component sits within rel_tol box widths of a bound."""
        margin = rel_tol * np.maximum(self.width, 1e-300)
        near = (self.values - self.lower <= margin) | (self.upper - self.values <= margin)
        return bool(np.any(near))


class CarmaFamily:
    """
    Parametric model family ϑ ↦ (a₁..a_p, c₀..c_{p−1}).

    Subclasses override coefficients(); lower/upper give the default box Θ.
    """

    name = "custom"
    normalized_ma = False

    def __init__(self, p: int, lower: Sequence[float], upper: Sequence[float],
                 labels: Optional[Sequence[str]] = None):
        if p < 1:
            raise ModelSpecificationError("AR order p must be positive")
        self.p = int(p)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape:
            raise ModelSpecificationError("family box bounds differ in length")
        self.n_params = int(self.lower.size)
        self.labels = list(labels) if labels else [f"theta{i + 1}" for i in range(self.n_params)]

    def coefficients(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def theta(self, values, lower=None, upper=None) -> ThetaParam:
        lo = self.lower if lower is None else np.asarray(lower, dtype=float)
        hi = self.upper if upper is None else np.asarray(upper, dtype=float)
        return ThetaParam(np.asarray(values, dtype=float), lo, hi)

    def __repr__(self):
        return f"{type(self).__name__}(p={self.p}, n_params={self.n_params})"


class Car1Family(CarmaFamily):
    """CAR(1): A = [ϑ], c = [1]."""

    name = "car1"
    normalized_ma = True

    def __init__(self, lower=(-10.0,), upper=(-0.01,)):
        super().__init__(1, lower, upper, labels=["theta"])

    def coefficients(self, values):
        return np.array([-values[0]]), np.array([1.0])


class Carma31Family(CarmaFamily):
    """CARMA(3,1): last row of A = (ϑ₁, ϑ₂, ϑ₃), c = (ϑ₄, ϑ₅, 0)."""

    name = "carma31"

    def __init__(self, lower=(-8.0, -8.0, -8.0, -3.0, 0.05),
                 upper=(-0.05, -0.05, -0.05, 3.0, 4.0)):
        super().__init__(3, lower, upper, labels=[f"theta{i}" for i in range(1, 6)])

    def coefficients(self, values):
        # last companion row is (−a₃, −a₂, −a₁)
        a = -np.asarray(values[2::-1], dtype=float)
        c = np.array([values[3], values[4], 0.0])
        return a, c


class CustomFamily(CarmaFamily):
    """Generic family from a closure ϑ ↦ (a, c)."""

    def __init__(self, name: str, p: int,
                 mapping: Callable[[np.ndarray], Tuple[Sequence[float], Sequence[float]]],
                 lower: Sequence[float], upper: Sequence[float],
                 labels: Optional[Sequence[str]] = None, normalized_ma: bool = False):
        super().__init__(p, lower, upper, labels)
        self.name = name
        self.mapping = mapping
        self.normalized_ma = normalized_ma

    def coefficients(self, values):
        a, c = self.mapping(np.asarray(values, dtype=float))
        return np.asarray(a, dtype=float), np.asarray(c, dtype=float)


def family_from_name(name: str, lower=None, upper=None) -> CarmaFamily:
    """Built-in families by config name."""
    key = name.strip().lower().replace("(", "").replace(")", "").replace(",", "")
    builders = {"car1": Car1Family, "carma10": Car1Family, "carma31": Carma31Family}
    if key not in builders:
        raise ModelSpecificationError(f"Unknown model family '{name}'. Use one of {sorted(builders)}")
    family = builders[key]()
    if lower is not None:
        family.lower = np.asarray(lower, dtype=float)
    if upper is not None:
        family.upper = np.asarray(upper, dtype=float)
    if family.lower.size != family.n_params or family.upper.size != family.n_params:
        raise ModelSpecificationError(f"{family.name} box must have {family.n_params} components")
    return family


NOISE_SCALES = ("profiled", "known")


def resolve_noise_scale(family: CarmaFamily, noise_scale: Optional[str] = None) -> str:
    """
    How an estimator treats the driver scale σ_L.

    'profiled' estimates it jointly with ϑ and is the default whenever the MA
    vector is normalized; 'known' keeps the configured σ_L². A free MA vector
    already carries the scale, so profiling it would leave ϑ unidentified.
    """
    if noise_scale is None:
        return "profiled" if family.normalized_ma else "known"
    key = str(noise_scale).strip().lower()
    if key not in NOISE_SCALES:
        raise ModelSpecificationError(f"noise_scale must be one of {NOISE_SCALES}, got '{noise_scale}'")
    if key == "profiled" and not family.normalized_ma:
        raise ModelSpecificationError(
            f"{family.name} has a free MA scale; profiling sigma_L2 would leave it unidentified"
        )
    return key


@dataclass(frozen=True)
class CarmaSpec:
    """Companion matrix A_ϑ, MA vector c_ϑ and driver variance σ_L²."""

    A: np.ndarray
    c: np.ndarray
    sigma_L2: float = 1.0
    p: int = field(init=False)
    q: int = field(init=False)

    def __post_init__(self):
        A = _frozen(np.atleast_2d(self.A))
        c = _frozen(np.atleast_1d(self.c))
        p = c.size
        if A.shape != (p, p):
            raise ModelSpecificationError(f"A has shape {A.shape}, expected {(p, p)}")
        if not np.any(c != 0.0):
            raise ModelSpecificationError("MA vector c must not vanish")
        if not np.isfinite(self.sigma_L2) or self.sigma_L2 < 0:
            raise ModelSpecificationError("sigma_L2 must be a finite nonnegative number")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "sigma_L2", float(self.sigma_L2))
        object.__setattr__(self, "p", int(p))
        object.__setattr__(self, "q", int(np.flatnonzero(c)[-1]))

    @property
    def e_p(self) -> np.ndarray:
        e = np.zeros(self.p)
        e[-1] = 1.0
        return e

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    def with_noise_variance(self, sigma_L2: float) -> "CarmaSpec":
        return CarmaSpec(self.A, self.c, sigma_L2)


@dataclass(frozen=True)
class AcfTable:
    """γ(0), γ(h), …, γ(rh) of the sampled process."""

    h: float
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.size < 1 or values[0] <= 0:
            raise ModelSpecificationError("autocovariance at lag 0 must be positive")
        object.__setattr__(self, "values", values)

    @property
    def max_lag(self) -> int:
        return int(self.values.size - 1)

    def toeplitz(self, r: int) -> np.ndarray:
        """Γ^{(r−1)}: r×r Toeplitz matrix of γ(0..(r−1)h)."""
        return linalg.toeplitz(self.values[:r])


def build_state_space(theta: ThetaParam, family: CarmaFamily, sigma_L2: float = 1.0) -> CarmaSpec:
    values = theta.values if isinstance(theta, ThetaParam) else np.atleast_1d(np.asarray(theta, dtype=float))
    if values.size != family.n_params:
        raise ModelSpecificationError(
            f"{family.name} expects {family.n_params} parameters, got {values.size}"
        )
    a, c = family.coefficients(values)
    if a.size != family.p or c.size != family.p:
        raise ModelSpecificationError(f"{family.name} must return {family.p} AR and MA coefficients")
    if a[-1] == 0.0:
        raise ModelSpecificationError("a_p(theta) = 0 does not define a CARMA model")

    p = family.p
    A = np.zeros((p, p))
    if p > 1:
        A[:-1, 1:] = np.eye(p - 1)
    A[-1, :] = -a[::-1]
    return CarmaSpec(A, c, sigma_L2)


def check_stationarity(spec: CarmaSpec, tol: float = STABILITY_TOL) -> bool:
    return bool(np.all(spec.eigenvalues().real < -tol))


def check_sampling_identifiability(spec: CarmaSpec, h: float) -> bool:
    return bool(np.all(np.abs(spec.eigenvalues().imag) < np.pi / h))


def constraint_violation(spec: CarmaSpec, h: float, tol: float = STABILITY_TOL) -> float:
    """Zero for stationary, h-identifiable specs; otherwise the size of the breach."""
    lam = spec.eigenvalues()
    stationarity = max(0.0, float(np.max(lam.real)) + tol)
    aliasing = max(0.0, float(np.max(np.abs(lam.imag))) - np.pi / h)
    return stationarity + aliasing


def mixing_rate(spec: CarmaSpec) -> float:
    """ρ = min |Re λ|, the slowest exponential decay rate of the kernel."""
    return float(np.min(np.abs(spec.eigenvalues().real)))


def stationary_state_cov(spec: CarmaSpec) -> np.ndarray:
    """Σ_ϑ solving A Σ + Σ Aᵀ = −σ_L² e_p e_pᵀ."""
    if not check_stationarity(spec):
        raise NonStationaryError(f"eigenvalues {spec.eigenvalues()} are not strictly stable")
    rhs = -spec.sigma_L2 * np.outer(spec.e_p, spec.e_p)
    sigma = linalg.solve_continuous_lyapunov(spec.A, rhs)
    return 0.5 * (sigma + sigma.T)


def lyapunov_residual(spec: CarmaSpec, sigma: np.ndarray) -> float:
    """Relative Frobenius residual of the Lyapunov equation."""
    q = spec.sigma_L2 * np.outer(spec.e_p, spec.e_p)
    resid = spec.A @ sigma + sigma @ spec.A.T + q
    scale = np.linalg.norm(q)
    return float(np.linalg.norm(resid) / scale) if scale > 0 else float(np.linalg.norm(resid))


def autocovariance(spec: CarmaSpec, t: float, state_cov: Optional[np.ndarray] = None) -> float:
    """γ_ϑ(t) = cᵀ e^{At} Σ c."""
    if t < 0:
        raise ValueError(f"lag time must be nonnegative, got {t}")
    sigma = stationary_state_cov(spec) if state_cov is None else state_cov
    return float(spec.c @ linalg.expm(spec.A * t) @ sigma @ spec.c)


def autocovariance_sequence(spec: CarmaSpec, h: float, max_lag: int) -> AcfTable:
    """γ_ϑ(kh) for k = 0..max_lag from powers of e^{Ah}."""
    sigma = stationary_state_cov(spec)
    F = linalg.expm(spec.A * h)
    v = sigma @ spec.c
    gammas = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        gammas[k] = spec.c @ v
        v = F @ v
    return AcfTable(h, gammas)


def impulse_response(spec: CarmaSpec, u) -> np.ndarray:
    """Kernel f(u) = cᵀ e^{Au} e_p on an array of times."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.array([spec.c @ linalg.expm(spec.A * ui) @ spec.e_p for ui in u])
