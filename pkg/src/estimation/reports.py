"""
Estimator result records.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from src.auxiliary.aux_ar import AuxParam
from src.estimation.optimizer import INFEASIBLE_PENALTY
from src.model.carma_model import ThetaParam


@dataclass
class ThetaEstimate:
    estimator: str
    theta_hat: ThetaParam
    objective: float
    pi_hat: Optional[AuxParam] = None
    evals: int = 0
    converged: bool = False
    cov: Optional[np.ndarray] = None
    message: str = ""
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def on_boundary(self) -> bool:
        return self.theta_hat.on_boundary()

    @property
    def feasible(self) -> bool:
        return bool(np.isfinite(self.objective)) and abs(self.objective) < INFEASIBLE_PENALTY

    @property
    def failed(self) -> bool:
        """Non-convergence, an optimum on the edge of Θ, or an infeasible objective."""
        return (not self.converged) or self.on_boundary or not self.feasible

    @property
    def failure_reason(self) -> str:
        if not self.converged:
            return f"not converged: {self.message}"
        if self.on_boundary:
            return "optimum on the boundary of the parameter box"
        if not self.feasible:
            return "optimum is infeasible"
        return ""

    def as_dict(self) -> Dict[str, Any]:
        return {
            "estimator": self.estimator,
            "theta_hat": self.theta_hat.values.tolist(),
            "objective": self.objective,
            "evals": self.evals,
            "converged": self.converged,
            "on_boundary": self.on_boundary,
            "pi_hat": None if self.pi_hat is None else self.pi_hat.as_vector().tolist(),
            "message": self.message,
            **self.diagnostics,
        }
