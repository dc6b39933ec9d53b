"""
ψ-function library for GM-estimation: Huber, Tukey bisquare and the
identity (least squares) limit, with derivatives, IRLS weights ψ(u)/u and
the centering constant E[ψ²(Z)] for Z ~ N(0, 1).
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate, stats

from src.model.exceptions import ModelSpecificationError


def huber_psi(u, k: float):
    """sign(u)·min(|u|, k)."""
    return np.clip(u, -k, k)


def bisquare_psi(u, k: float):
    """u(1 − u²/k²)² on |u| ≤ k, zero outside."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < k
    return np.where(inside, u * (1.0 - (u / k) ** 2) ** 2, 0.0)


class PsiKind(Enum):
    HUBER = "huber"
    BISQUARE = "bisquare"
    IDENTITY = "identity"


@dataclass(frozen=True)
class PsiSpec:
    kind: PsiKind
    k: float = np.inf

    def __post_init__(self):
        if self.kind is not PsiKind.IDENTITY and not (self.k > 0 and np.isfinite(self.k)):
            raise ModelSpecificationError(f"{self.kind.value} tuning constant must be positive, got {self.k}")

    def psi(self, u):
        if self.kind is PsiKind.HUBER:
            return huber_psi(u, self.k)
        if self.kind is PsiKind.BISQUARE:
            return bisquare_psi(u, self.k)
        return np.asarray(u, dtype=float)

    def psi_prime(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind is PsiKind.HUBER:
            return (np.abs(u) <= self.k).astype(float)
        if self.kind is PsiKind.BISQUARE:
            t = (u / self.k) ** 2
            return np.where(np.abs(u) < self.k, (1.0 - t) * (1.0 - 5.0 * t), 0.0)
        return np.ones_like(u)

    def weight(self, u):
        """ψ(u)/u, continuously extended by ψ′(0) = 1 at u = 0."""
        u = np.asarray(u, dtype=float)
        if self.kind is PsiKind.HUBER:
            a = np.abs(u)
            return np.where(a <= self.k, 1.0, self.k / np.maximum(a, self.k))
        if self.kind is PsiKind.BISQUARE:
            return np.where(np.abs(u) < self.k, (1.0 - (u / self.k) ** 2) ** 2, 0.0)
        return np.ones_like(u)

    @classmethod
    def from_name(cls, name: str, k: float = np.inf) -> "PsiSpec":
        return cls(PsiKind(name.lower()), float(k))


@lru_cache(maxsize=None)
def chi_reference(spec: PsiSpec) -> float:
    """E[ψ²(Z)] for Z ~ N(0, 1); ψ² is even so only the positive half is integrated."""
    if spec.kind is PsiKind.IDENTITY:
        return 1.0

    def integrand(z):
        return float(spec.psi(z)) ** 2 * stats.norm.pdf(z)

    inner, _ = integrate.quad(integrand, 0.0, spec.k, limit=200)
    if spec.kind is PsiKind.HUBER:
        outer = spec.k ** 2 * stats.norm.sf(spec.k)
    else:
        outer = 0.0
    return 2.0 * (inner + outer)
