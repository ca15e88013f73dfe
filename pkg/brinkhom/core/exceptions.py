from typing import Any

EXIT_CONFIG_ERROR = 1
EXIT_SOLVER_ERROR = 2


class HomogenizationError(Exception):
    exit_code: int = EXIT_SOLVER_ERROR

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


# Configuration and input errors (exit code 1)
class ConfigurationError(HomogenizationError):
    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, detail: str = "Invalid configuration"):
        super().__init__(detail=detail)


class InvalidParameterError(ConfigurationError):
    def __init__(self, detail: str = "Invalid parameter"):
        super().__init__(detail=detail)


class InvalidShapeError(ConfigurationError):
    def __init__(self, detail: str = "Hole shape is not contained in the unit ball"):
        super().__init__(detail=detail)


class InvalidSweepError(ConfigurationError):
    def __init__(self, detail: str = "Epsilon sweep is too short or not ordered"):
        super().__init__(detail=detail)


class InvalidInputError(ConfigurationError):
    def __init__(self, detail: str = "Invalid input data"):
        super().__init__(detail=detail)


class CellIndexError(HomogenizationError, IndexError):
    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, index: int, count: int):
        super().__init__(detail=f"Cell index {index} out of range for {count} interior cells")
        self.index = index
        self.count = count


class DomainError(HomogenizationError, ValueError):
    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, detail: str = "Point outside the domain of definition"):
        super().__init__(detail=detail)


# Solver errors (exit code 2)
class SolverError(HomogenizationError):
    def __init__(self, detail: str = "Solver failure"):
        super().__init__(detail=detail)


class ResolutionError(SolverError):
    def __init__(self, detail: str = "Grid does not resolve the holes", minimal_cells: int = 0):
        if minimal_cells:
            detail = f"{detail} (minimal grid: {minimal_cells} cells per axis)"
        super().__init__(detail=detail)
        self.minimal_cells = minimal_cells


class SolverStagnationError(SolverError):
    def __init__(
        self,
        detail: str = "Iteration limit reached before tolerance",
        residual: float = float("nan"),
        best: Any = None,
        history: list[float] | None = None,
    ):
        super().__init__(detail=f"{detail} (residual {residual:.3e})")
        self.residual = residual
        self.best = best
        self.history = history or []


class PicardStagnationError(SolverStagnationError):
    def __init__(
        self,
        residual: float = float("nan"),
        best: Any = None,
        history: list[float] | None = None,
    ):
        super().__init__(
            detail="Picard iteration did not converge",
            residual=residual,
            best=best,
            history=history,
        )


class PseudoTimeDivergenceError(SolverError):
    def __init__(self, detail: str = "Pseudo-time iteration diverged", history: list[float] | None = None):
        super().__init__(detail=detail)
        self.history = history or []


class PositivityFailureError(SolverError):
    def __init__(self, detail: str = "Density became negative"):
        super().__init__(detail=detail)


class QuadratureError(SolverError):
    def __init__(self, region: str, error_estimate: float, detail: str = "Quadrature did not converge"):
        super().__init__(detail=f"{detail} on region {region} (error estimate {error_estimate:.3e})")
        self.region = region
        self.error_estimate = error_estimate


class RateFitError(HomogenizationError):
    def __init__(self, detail: str = "Need at least 3 positive pairs for a rate fit"):
        super().__init__(detail=detail)
