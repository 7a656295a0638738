import warnings
from pathlib import Path
from typing import Literal

from pydantic import computed_field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="QAMLAB_",
        env_ignore_empty=True,
        extra="ignore",
    )
    API_V1_STR: str = "/api/v1"
    PROJECT_NAME: str = "qamlab"
    ENVIRONMENT: Literal["local", "staging", "production"] = "local"

    CORS_ORIGINS: list[str] = ["*"]

    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    # Witness and trace dumps land here when set
    TRACE_DIR: Path | None = None

    DISPLAY_DIGITS: int = 12

    # Round truncation horizon, as a multiple of the honest transcript length
    MAX_TRANSCRIPT_FACTOR: int = 4
    FALLBACK_MAX_TRANSCRIPT: int = 256
    HONEST_STEP_LIMIT: int = 10_000

    ADAPTIVE_ROUND_HORIZON: int = 8
    DEFAULT_SEARCH_DEPTH: int = 512
    CERTIFY_MAX_CONFIGS: int = 200

    # Principal-minor PSD test is exponential in the dimension
    PSD_MAX_DIM: int = 6

    @computed_field
    @property
    def TRACE_ENABLED(self) -> bool:
        """Whether witness dumps should be written to disk"""
        return self.TRACE_DIR is not None

    @model_validator(mode="after")
    def _enforce_display_digits(self) -> "Settings":
        self._check_display_digits(self.DISPLAY_DIGITS)
        return self

    def _check_display_digits(self, value: int) -> None:
        if not 4 <= value <= 40:
            message = (
                f"DISPLAY_DIGITS={value} is outside 4..40, "
                "approximate decimals will be unreadable or misleading."
            )
            if self.ENVIRONMENT == "local":
                warnings.warn(message, stacklevel=1)
            else:
                raise ValueError(message)


settings = Settings()


def get_settings() -> Settings:
    return settings
