"""
Report Table

Mean, Bias and empirical Var per estimator and parameter component across
the successful replications; failed replications are counted, not averaged.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

COLUMNS = ["estimator", "component", "true_value", "mean", "bias", "var", "failures", "replications"]
TRACE_COLUMNS = ["replication", "estimator", "component", "true_value", "value", "failed", "reason"]


@dataclass
class EstimatorOutcome:
    """One estimator on one replication; values is None when it failed."""
    estimator: str
    values: Optional[np.ndarray]
    failed: bool
    reason: str = ""
    evals: int = 0

    @classmethod
    def failure(cls, estimator: str, reason: str) -> "EstimatorOutcome":
        return cls(estimator=estimator, values=None, failed=True, reason=reason)


class ReportTable:
    def __init__(self, rows: pd.DataFrame, traces: Optional[pd.DataFrame] = None, name: str = ""):
        self.rows = rows.reset_index(drop=True)
        self.traces = traces if traces is not None else pd.DataFrame(columns=TRACE_COLUMNS)
        self.name = name

    @classmethod
    def empty(cls, name: str = "") -> "ReportTable":
        return cls(pd.DataFrame(columns=COLUMNS), name=name)

    @classmethod
    def from_outcomes(cls, estimators: Sequence[str], labels: Dict[str, Sequence[str]],
                      true_values: Dict[str, np.ndarray],
                      outcomes: Sequence[Dict[str, EstimatorOutcome]], name: str = "") -> "ReportTable":
        """
        Aggregate per-replication outcomes, given in replication order.

        Bias is computed as mean − true so Bias = Mean − ϑ₀ holds exactly.
        Var uses ddof=1 and is 0.0 with a single success.
        """
        replications = len(outcomes)
        rows: List[dict] = []
        traces: List[dict] = []
        for estimator in estimators:
            truth = np.asarray(true_values[estimator], dtype=float)
            ok = [rep[estimator].values for rep in outcomes if not rep[estimator].failed]
            failures = replications - len(ok)
            estimates = np.vstack(ok) if ok else np.empty((0, truth.size))

            for j, component in enumerate(labels[estimator]):
                column = estimates[:, j]
                if column.size:
                    mean = float(np.mean(column))
                    var = float(np.var(column, ddof=1)) if column.size > 1 else 0.0
                else:
                    mean = var = float("nan")
                rows.append({
                    "estimator": estimator,
                    "component": component,
                    "true_value": float(truth[j]),
                    "mean": mean,
                    "bias": mean - float(truth[j]),
                    "var": var,
                    "failures": failures,
                    "replications": replications,
                })

            for rep, result in enumerate(outcomes):
                outcome = result[estimator]
                for j, component in enumerate(labels[estimator]):
                    traces.append({
                        "replication": rep,
                        "estimator": estimator,
                        "component": component,
                        "true_value": float(truth[j]),
                        "value": float("nan") if outcome.failed else float(outcome.values[j]),
                        "failed": outcome.failed,
                        "reason": outcome.reason,
                    })

        return cls(pd.DataFrame(rows, columns=COLUMNS), pd.DataFrame(traces, columns=TRACE_COLUMNS), name)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def estimators(self) -> List[str]:
        return list(dict.fromkeys(self.rows["estimator"]))

    def for_estimator(self, estimator: str) -> pd.DataFrame:
        return self.rows[self.rows["estimator"] == estimator].reset_index(drop=True)

    def row(self, estimator: str, component: str) -> pd.Series:
        match = self.rows[(self.rows["estimator"] == estimator) & (self.rows["component"] == component)]
        if match.empty:
            raise KeyError(f"No row for estimator '{estimator}', component '{component}'")
        return match.iloc[0]

    def mean(self, estimator: str) -> np.ndarray:
        return self.for_estimator(estimator)["mean"].to_numpy(dtype=float)

    def bias(self, estimator: str) -> np.ndarray:
        return self.for_estimator(estimator)["bias"].to_numpy(dtype=float)

    def var(self, estimator: str) -> np.ndarray:
        return self.for_estimator(estimator)["var"].to_numpy(dtype=float)

    def failures(self, estimator: str) -> int:
        rows = self.for_estimator(estimator)
        return int(rows["failures"].iloc[0]) if len(rows) else 0

    def successes(self, estimator: str) -> int:
        rows = self.for_estimator(estimator)
        return int(rows["replications"].iloc[0] - rows["failures"].iloc[0]) if len(rows) else 0

    def estimates(self, estimator: str) -> pd.DataFrame:
        """Successful per-replication values, one column per component."""
        traces = self.traces[(self.traces["estimator"] == estimator) & (~self.traces["failed"].astype(bool))]
        if traces.empty:
            return pd.DataFrame()
        return traces.pivot(index="replication", columns="component", values="value")

    def __repr__(self):
        return f"ReportTable(name={self.name!r}, rows={len(self.rows)})"
