"""Core configuration management."""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings.

    Only presentation concerns live here. Anything that changes a computed
    number (seeds, sizes, schedules, paths) belongs to the run config or to
    command-line flags.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "subword-lm-toolkit"
    app_version: str = "0.1.0"
    environment: str = Field(default="development", alias="ENV")

    # Logging
    log_level: str = "INFO"
    log_format: str = "console"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
