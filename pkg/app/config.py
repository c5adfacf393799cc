"""
Configuration settings for the linkfit estimators and experiment runner.
"""

from typing import Optional
from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Logging
    log_level: str = Field("INFO", description="Root log level")
    log_format: str = Field(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="logging.basicConfig format string",
    )

    # Output
    output_dir: str = Field("results", description="Default artifact directory for runs")
    csv_precision: int = Field(17, description="Significant digits written to CSV files")

    # Validation strictness
    strict_range: bool = Field(True, description="Reject targets outside the link range")
    strict_tail: bool = Field(False, description="Turn tail-mass warnings into errors")
    tail_tolerance: float = Field(1e-4, description="Maximum probability mass outside a quadrature grid")
    row_sum_tolerance: float = Field(1e-6, description="Maximum row-sum deviation of a pdf matrix")

    # Reproducibility
    default_seed: int = Field(0, ge=0, description="Seed used when a run does not set one")

    # Optional run-config file picked up when --config is not given
    config_file: Optional[str] = Field(None, description="Default key=value run configuration")

    model_config = {
        "env_file": ".env",
        "env_prefix": "LINKFIT_",
        "case_sensitive": False,
        "extra": "ignore",
    }


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get the application settings."""
    return settings
