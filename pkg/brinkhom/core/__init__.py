from brinkhom.core.exceptions import (
    CellIndexError,
    ConfigurationError,
    DomainError,
    HomogenizationError,
    InvalidInputError,
    InvalidParameterError,
    InvalidShapeError,
    InvalidSweepError,
    PicardStagnationError,
    PositivityFailureError,
    PseudoTimeDivergenceError,
    QuadratureError,
    RateFitError,
    ResolutionError,
    SolverError,
    SolverStagnationError,
)

__all__ = [
    "HomogenizationError",
    "ConfigurationError",
    "InvalidParameterError",
    "InvalidShapeError",
    "InvalidSweepError",
    "InvalidInputError",
    "CellIndexError",
    "DomainError",
    "SolverError",
    "ResolutionError",
    "SolverStagnationError",
    "PicardStagnationError",
    "PseudoTimeDivergenceError",
    "PositivityFailureError",
    "QuadratureError",
    "RateFitError",
]
