"""
Exception hierarchy shared by every CARMA indirect-inference component.
"""


class CarmaError(Exception):
    """Base class for all errors raised by the library."""


class ModelSpecificationError(CarmaError, ValueError):
    """Parameter vector, family or auxiliary order do not define a valid model."""


class NonStationaryError(CarmaError, ValueError):
    """Companion matrix has an eigenvalue that is not strictly stable."""


class DegenerateSeriesError(CarmaError, ValueError):
    """Series too short, constant, or with singular normal equations."""


class SimulationError(CarmaError, RuntimeError):
    """Simulated path contains non-finite values."""


class EstimationError(CarmaError, RuntimeError):
    """Numerical breakdown inside an estimator (singular weights, rank loss, ...)."""
