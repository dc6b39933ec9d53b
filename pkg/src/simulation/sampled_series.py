"""
Equidistant observation series Y_h, …, Y_nh with provenance.
"""

import csv
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import pandas as pd

from src.model.exceptions import DegenerateSeriesError


@dataclass(frozen=True)
class SampledSeries:
    h: float
    values: np.ndarray
    driver: str = "brownian"
    seed: Optional[int] = None
    contaminated: bool = False
    outlier_mask: Optional[np.ndarray] = field(default=None, repr=False)
    start_time: Optional[float] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if self.h <= 0:
            raise DegenerateSeriesError(f"sampling step must be positive, got {self.h}")
        if not np.all(np.isfinite(values)):
            raise DegenerateSeriesError("series contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.start_time is None:
            object.__setattr__(self, "start_time", float(self.h))
        if self.outlier_mask is not None:
            mask = np.array(self.outlier_mask, dtype=bool, copy=True)
            if mask.shape != values.shape:
                raise DegenerateSeriesError("outlier mask length differs from series length")
            mask.setflags(write=False)
            object.__setattr__(self, "outlier_mask", mask)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def n(self) -> int:
        return len(self)

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.h * np.arange(self.n)

    def require_length(self, minimum: int, what: str = "estimation"):
        if self.n < minimum:
            raise DegenerateSeriesError(f"{what} needs at least {minimum} observations, got {self.n}")

    def with_values(self, values, contaminated: bool = True, outlier_mask=None) -> "SampledSeries":
        return replace(self, values=values, contaminated=contaminated, outlier_mask=outlier_mask)

    def demeaned(self) -> "SampledSeries":
        return replace(self, values=self.values - self.values.mean())

    def to_csv(self, path: str):
        """Dump as `t,value`, one row per observation."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["t", "value"])
            for t, y in zip(self.times, self.values):
                writer.writerow([format(t, ".10g"), repr(float(y))])

    @classmethod
    def from_csv(cls, path: str, h: Optional[float] = None, demean: bool = False) -> "SampledSeries":
        """
        Load a `t,value` file or a single value column. Without a time column
        the step defaults to 1 unless h is given.
        """
        df = pd.read_csv(path)
        if "value" in df.columns:
            values = df["value"].to_numpy(dtype=float)
        else:
            values = df.iloc[:, -1].to_numpy(dtype=float)
        start = None
        if "t" in df.columns and len(df) > 1:
            t = df["t"].to_numpy(dtype=float)
            steps = np.diff(t)
            if not np.allclose(steps, steps[0], rtol=1e-8, atol=1e-12):
                raise DegenerateSeriesError("time column is not equidistant")
            h = float(steps[0]) if h is None else h
            start = float(t[0])
        series = cls(h=1.0 if h is None else float(h), values=values, driver="data", start_time=start)
        return series.demeaned() if demean else series
