"""Run configuration: one TOML file with nested sections, overridden by command-line flags."""

from enum import Enum
from typing import Literal

from pydantic import Field, field_validator, model_validator

from brinkhom.schemas.common import StrictSchema


class Verbosity(str, Enum):
    QUIET = "quiet"
    NORMAL = "normal"
    VERBOSE = "verbose"


class ResistanceSource(str, Enum):
    COMPUTED = "computed"
    ZERO = "zero"


def _strictly_decreasing(values: list[float]) -> list[float]:
    if any(b >= a for a, b in zip(values[:-1], values[1:], strict=False)):
        raise ValueError(f"eps values must be strictly decreasing, got {values}")
    return values


class GeometryConfig(StrictSchema):
    outer: Literal["box", "ball"] = "box"
    lower: list[float] = Field(default=[-1.0, -1.0, -1.0], min_length=3, max_length=3)
    upper: list[float] = Field(default=[1.0, 1.0, 1.0], min_length=3, max_length=3)
    center: list[float] = Field(default=[0.0, 0.0, 0.0], min_length=3, max_length=3)
    radius: float = Field(default=1.0, gt=0)
    shape: Literal["ball", "scaled_ball", "superellipsoid"] = "ball"
    shape_params: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_bounds(self) -> "GeometryConfig":
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper, strict=True)):
            raise ValueError(f"Box bounds must satisfy lower < upper, got {self.lower} and {self.upper}")
        return self


class CellConfig(StrictSchema):
    R: float = Field(default=30.0, ge=10.0)
    h: float | None = Field(default=None, gt=0)
    tol: float = Field(default=1e-8, gt=0)
    growth: float = Field(default=1.2, gt=1.0)
    export_fields: bool = False


class CorrectorsConfig(StrictSchema):
    eps: list[float] = Field(default=[0.2, 0.1, 0.05], min_length=1)
    p: list[float] = Field(default=[2.0, 3.0], min_length=1)
    directions: list[int] = Field(default=[1], min_length=1)
    rate_tol: float = Field(default=0.3, gt=0)
    numerical_profile: bool = False  # use a solved cell problem instead of the analytic sphere

    @field_validator("eps")
    @classmethod
    def check_eps(cls, v: list[float]) -> list[float]:
        return _strictly_decreasing(v)

    @field_validator("p")
    @classmethod
    def check_powers(cls, v: list[float]) -> list[float]:
        if any(p <= 1.5 for p in v):
            raise ValueError(f"Corrector estimates need p > 3/2, got {v}")
        return v

    @field_validator("directions")
    @classmethod
    def check_directions(cls, v: list[int]) -> list[int]:
        if any(k not in (1, 2, 3) for k in v):
            raise ValueError(f"Directions are 1, 2 or 3, got {v}")
        return v


class ResistanceConfig(StrictSchema):
    eps: list[float] = Field(default=[0.2, 0.1, 0.05], min_length=1)

    @field_validator("eps")
    @classmethod
    def check_eps(cls, v: list[float]) -> list[float]:
        return _strictly_decreasing(v)


class SolverConfig(StrictSchema):
    mode: Literal["stokes", "nse", "compressible", "brinkman"] = "stokes"
    eps: float = Field(default=0.5, gt=0, lt=1)
    mu: float = Field(default=1.0, gt=0)
    eta: float = Field(default=0.0, ge=0)
    rho0: float = Field(default=1.0, gt=0)
    f: list[float] = Field(default=[1.0, 0.0, 0.0], min_length=3, max_length=3)
    g: Literal["swirl", "zero"] | list[float] = "swirl"
    tol: float = Field(default=1e-8, gt=0)
    cells_per_diameter: int = Field(default=4, ge=4)
    M: ResistanceSource = ResistanceSource.COMPUTED
    resistance: list[list[float]] | None = None  # explicit 3x3 matrix, overrides M
    export_fields: bool = False

    @field_validator("g")
    @classmethod
    def check_g(cls, v: str | list[float]) -> str | list[float]:
        if isinstance(v, list) and len(v) != 3:
            raise ValueError(f"g must be 'swirl', 'zero' or a 3-vector, got {v}")
        return v

    @field_validator("resistance")
    @classmethod
    def check_resistance(cls, v: list[list[float]] | None) -> list[list[float]] | None:
        if v is not None and (len(v) != 3 or any(len(row) != 3 for row in v)):
            raise ValueError("resistance must be a 3x3 matrix")
        return v


class CompressibleConfig(StrictSchema):
    gamma: float = Field(default=3.0, gt=1.5)
    beta: float = Field(default=13.0, gt=0)
    mass: float | None = Field(default=None, gt=0)
    dt_max: float = Field(default=0.25, gt=0)
    steady_tol: float = Field(default=1e-6, gt=0)
    max_steps: int = Field(default=5000, ge=1)


class HarnessConfig(StrictSchema):
    eps: list[float] = Field(default=[0.5, 0.4, 0.315], min_length=1)
    test_fields: int = Field(default=8, ge=1, le=8)
    reference_cells: int = Field(default=32, ge=8)

    @field_validator("eps")
    @classmethod
    def check_eps(cls, v: list[float]) -> list[float]:
        return _strictly_decreasing(v)


class BogovskiiConfig(StrictSchema):
    eps: list[float] = Field(default=[0.5, 0.35], min_length=1)

    @field_validator("eps")
    @classmethod
    def check_eps(cls, v: list[float]) -> list[float]:
        return _strictly_decreasing(v)


class RunConfig(StrictSchema):
    out: str = "runs/latest"
    verbosity: Verbosity = Verbosity.NORMAL
    max_workers: int | None = Field(default=None, ge=1)

    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    cell: CellConfig = Field(default_factory=CellConfig)
    correctors: CorrectorsConfig = Field(default_factory=CorrectorsConfig)
    resistance: ResistanceConfig = Field(default_factory=ResistanceConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    compressible: CompressibleConfig = Field(default_factory=CompressibleConfig)
    harness: HarnessConfig = Field(default_factory=HarnessConfig)
    bogovskii: BogovskiiConfig = Field(default_factory=BogovskiiConfig)

    @model_validator(mode="after")
    def check_mach_scaling(self) -> "RunConfig":
        if self.solver.mode == "compressible":
            gamma, beta = self.compressible.gamma, self.compressible.beta
            if not beta > 3.0 * (gamma + 1.0):
                raise ValueError(f"Compressible mode needs beta > 3 (gamma + 1), got beta={beta}, gamma={gamma}")
        return self
