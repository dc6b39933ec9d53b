#!/usr/bin/env python3
"""
Lévy Driver Increments

Brownian and normal inverse Gaussian (NIG) increments for the CARMA state
equation. NIG draws use the normal variance-mean mixture with an
inverse-Gaussian mixing variable sampled by the Michael–Schucany–Haas
transformation.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from src.model.exceptions import ModelSpecificationError

NIG_VARIANCE_TOL = 1e-3


@dataclass(frozen=True)
class NigParams:
    """Law of the unit-time increment L(t) − L(t−1)."""

    alpha: float
    beta: float
    delta: float
    mu: float
    mean: float = field(init=False)
    variance: float = field(init=False)

    def __post_init__(self):
        if self.delta <= 0:
            raise ModelSpecificationError(f"NIG delta must be positive, got {self.delta}")
        if not self.alpha > abs(self.beta):
            raise ModelSpecificationError(f"NIG requires alpha > |beta|, got {self.alpha}, {self.beta}")
        gamma = np.sqrt(self.alpha ** 2 - self.beta ** 2)
        object.__setattr__(self, "mean", float(self.mu + self.delta * self.beta / gamma))
        object.__setattr__(self, "variance", float(self.delta * self.alpha ** 2 / gamma ** 3))

    @property
    def gamma(self) -> float:
        return float(np.sqrt(self.alpha ** 2 - self.beta ** 2))

    def scaled(self, dt: float) -> "NigParams":
        """Increment law over a time step dt (NIG is closed under convolution)."""
        return NigParams(self.alpha, self.beta, self.delta * dt, self.mu * dt)

    @classmethod
    def reference(cls) -> "NigParams":
        return cls(alpha=3.0, beta=1.0, delta=2.5145, mu=-0.8890)


def inverse_gaussian_draws(mean: float, shape: float, size, rng: np.random.Generator) -> np.ndarray:
    """Michael–Schucany–Haas sampler; nonpositive or non-finite draws are redrawn."""
    out = np.empty(size)
    flat = out.reshape(-1)
    todo = np.arange(flat.size)
    while todo.size:
        nu = rng.standard_normal(todo.size)
        y = mean * nu * nu
        # larger root of the quadratic, then the smaller one via x₁x₂ = mean²
        big = mean + mean * y / (2.0 * shape) + (mean / (2.0 * shape)) * np.sqrt(4.0 * shape * y + y * y)
        small = mean * mean / big
        u = rng.random(todo.size)
        x = np.where(u <= mean / (mean + small), small, big)
        ok = np.isfinite(x) & (x > 0)
        flat[todo[ok]] = x[ok]
        todo = todo[~ok]
    return out


def nig_increments(params: NigParams, size, rng: np.random.Generator) -> np.ndarray:
    z = inverse_gaussian_draws(params.delta / params.gamma, params.delta ** 2, size, rng)
    return params.mu + params.beta * z + np.sqrt(z) * rng.standard_normal(z.shape)


def nig_increment(params: NigParams, rng: np.random.Generator) -> float:
    return float(nig_increments(params, 1, rng)[0])


class DriverKind(Enum):
    BROWNIAN = "brownian"
    NIG = "nig"


@dataclass(frozen=True)
class DriverConfig:
    kind: DriverKind = DriverKind.BROWNIAN
    sigma_L2: float = 1.0
    nig: Optional[NigParams] = None
    fine_grid_factor: int = 10
    burn_in_cap: int = 4000

    def __post_init__(self):
        if self.sigma_L2 < 0:
            raise ModelSpecificationError("driver sigma_L2 must be nonnegative")
        if self.fine_grid_factor < 1:
            raise ModelSpecificationError("fine_grid_factor must be at least 1")
        if self.burn_in_cap < 1:
            raise ModelSpecificationError("burn_in_cap must be at least 1")
        if self.kind is DriverKind.NIG:
            if self.nig is None:
                raise ModelSpecificationError("NIG driver needs NigParams")
            if abs(self.nig.variance - self.sigma_L2) > NIG_VARIANCE_TOL:
                raise ModelSpecificationError(
                    f"NIG implied variance {self.nig.variance:.6f} differs from sigma_L2 {self.sigma_L2}"
                )

    @classmethod
    def from_dict(cls, cfg: Dict[str, Any]) -> "DriverConfig":
        kind = DriverKind(str(cfg.get("kind", "brownian")).lower())
        nig = None
        if kind is DriverKind.NIG:
            nig_cfg = cfg.get("nig") or {}
            default = NigParams.reference()
            nig = NigParams(
                alpha=float(nig_cfg.get("alpha", default.alpha)),
                beta=float(nig_cfg.get("beta", default.beta)),
                delta=float(nig_cfg.get("delta", default.delta)),
                mu=float(nig_cfg.get("mu", default.mu)),
            )
        sigma_L2 = cfg.get("sigma_L2")
        if sigma_L2 is None:
            sigma_L2 = nig.variance if nig is not None else 1.0
        return cls(
            kind=kind,
            sigma_L2=float(sigma_L2),
            nig=nig,
            fine_grid_factor=int(cfg.get("fine_grid_factor", 10)),
            burn_in_cap=int(cfg.get("burn_in_cap", 4000)),
        )
