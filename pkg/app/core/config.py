from typing import Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Version information
VERSION = "1.0.0"


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        case_sensitive=True,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    PROJECT_NAME: str = "RevLab"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOGS_DIR: str = "logs"
    LOG_TO_FILE: bool = False

    # Output
    REPORTS_DIR: str = "data/reports"

    # Randomness
    DEFAULT_SEED: int = 42

    # Pebble game search
    PEBBLE_SEARCH_MAX_NODES: int = 20
    PEBBLE_SEARCH_MAX_BUDGET: int = 8

    # Oracle self-reversibility sampling
    ORACLE_SAMPLE_TAPES: int = 1000

    # Euler tour
    EULER_DEFAULT_STEP_CAP: int = 1_000_000

    # Incompressible string search (2^l - 1 expansions)
    INCOMPRESSIBLE_MAX_LENGTH: int = 16

    # Experiment runner
    EXPERIMENT_WORKERS: int = 4
    EXPERIMENT_TIMEOUT_SECONDS: Optional[float] = None

    @field_validator(
        "PEBBLE_SEARCH_MAX_NODES",
        "PEBBLE_SEARCH_MAX_BUDGET",
        "ORACLE_SAMPLE_TAPES",
        "EULER_DEFAULT_STEP_CAP",
        "INCOMPRESSIBLE_MAX_LENGTH",
        "EXPERIMENT_WORKERS",
    )
    def check_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be positive, got {v}")
        return v

    @field_validator("LOG_LEVEL")
    def check_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {v}")
        return level


settings = Settings()
