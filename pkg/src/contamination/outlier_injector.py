#!/usr/bin/env python3
"""
Outlier Injection

Replacement (Y ← Z) and additive (Y ← Y + W) outliers, triggered by an
indicator sequence V that is either i.i.d. Bernoulli(γ) or patchy
(V_m = max of the last l+1 Bernoulli(ε) draws). The indicator is drawn
before the series values are touched, so it is independent of them.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.model.exceptions import ModelSpecificationError
from src.simulation.sampled_series import SampledSeries

ValueGenerator = Callable[[int, np.random.Generator], np.ndarray]


class OutlierMode(Enum):
    REPLACEMENT = "replacement"
    ADDITIVE = "additive"


class TemporalPattern(Enum):
    ISOLATED = "isolated"
    PATCHY = "patchy"


@dataclass(frozen=True)
class OutlierConfig:
    gamma: float = 0.0
    mode: OutlierMode = OutlierMode.ADDITIVE
    xi: float = 0.0
    generator: Optional[ValueGenerator] = None
    temporal: TemporalPattern = TemporalPattern.ISOLATED
    patch_length: int = 1
    patch_epsilon: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ModelSpecificationError(f"outlier gamma must lie in [0, 1], got {self.gamma}")
        if self.temporal is TemporalPattern.PATCHY:
            if self.patch_length < 1:
                raise ModelSpecificationError("patch length l must be at least 1")
            if not 0.0 <= self.patch_epsilon <= 1.0:
                raise ModelSpecificationError("patch epsilon must lie in [0, 1]")

    @property
    def effective_gamma(self) -> float:
        """Marginal outlier probability P(V_m = 1)."""
        if self.temporal is TemporalPattern.PATCHY:
            return 1.0 - (1.0 - self.patch_epsilon) ** (self.patch_length + 1)
        return self.gamma

    @property
    def is_clean(self) -> bool:
        return self.effective_gamma == 0.0

    @classmethod
    def from_dict(cls, cfg: Dict[str, Any]) -> "OutlierConfig":
        return cls(
            gamma=float(cfg.get("gamma", 0.0)),
            mode=OutlierMode(str(cfg.get("mode", "additive")).lower()),
            xi=float(cfg.get("xi", 0.0)),
            temporal=TemporalPattern(str(cfg.get("temporal", "isolated")).lower()),
            patch_length=int(cfg.get("patch_length", 1)),
            patch_epsilon=float(cfg.get("patch_epsilon", 0.0)),
        )


def isolated_indicator(n: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    return rng.random(n) < gamma


def patchy_indicator(n: int, epsilon: float, l: int, rng: np.random.Generator) -> np.ndarray:
    """V_m = max(B_{m−l}, …, B_m); draws before the sample start count as 0."""
    if n < 1:
        raise ValueError(f"indicator length must be positive, got {n}")
    b = rng.random(n) < epsilon
    padded = np.concatenate([np.zeros(l, dtype=bool), b])
    return sliding_window_view(padded, l + 1).max(axis=1)


def contaminate(series: SampledSeries, cfg: OutlierConfig, rng: np.random.Generator) -> SampledSeries:
    n = series.n
    if cfg.temporal is TemporalPattern.PATCHY:
        v = patchy_indicator(n, cfg.patch_epsilon, cfg.patch_length, rng)
    else:
        v = isolated_indicator(n, cfg.gamma, rng)

    if cfg.generator is not None:
        z = np.asarray(cfg.generator(n, rng), dtype=float)
        if z.shape != (n,):
            raise ValueError(f"outlier generator returned shape {z.shape}, expected {(n,)}")
    else:
        z = np.full(n, cfg.xi)

    y = series.values
    if cfg.mode is OutlierMode.REPLACEMENT:
        values = np.where(v, z, y)
    else:
        values = np.where(v, y + z, y)
    return series.with_values(values, contaminated=True, outlier_mask=v)
