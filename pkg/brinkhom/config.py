from functools import lru_cache

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="BRINKHOM_",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "brinkhom"
    output_dir: str = "runs/latest"

    # Logging
    log_level: str = "INFO"
    log_format: str = "text"  # "text" or "json"

    # Concurrency
    max_workers: int = 2

    # Output
    csv_float_format: str = "%.17g"

    # Quadrature
    quadrature_angular_order: int = 16
    quadrature_max_angular_order: int = 128
    quadrature_rel_tol: float = 1e-10
    quadrature_abs_tol: float = 1e-300

    # Linear solvers
    uzawa_tol: float = 1e-8
    uzawa_max_iter: int = 500
    inner_solver: str = "auto"  # "direct" (sparse LU), "cg" or "auto"
    direct_solver_max_unknowns: int = 250_000
    inner_tol: float = 1e-12
    inner_max_iter: int = 5000

    # Picard (convective term)
    picard_relaxation: float = 0.7
    picard_tol: float = 1e-8
    picard_max_iter: int = 100

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        return str(v).upper()

    @field_validator("log_format", "inner_solver", mode="before")
    @classmethod
    def normalize_choice(cls, v: str) -> str:
        return str(v).strip().lower()


@lru_cache
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
