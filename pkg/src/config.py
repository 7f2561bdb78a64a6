import os

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load .env file for local development
from dotenv import load_dotenv
load_dotenv()


class Settings(BaseSettings):
    # Service Configuration
    LOG_LEVEL: str = Field(default="INFO", validation_alias="PPROBE_LOG_LEVEL")
    LOG_FORMAT: str = Field(default="console", validation_alias="PPROBE_LOG_FORMAT")

    # Parallelism (0 means one worker per CPU)
    THREADS: int = Field(default=0, ge=0, validation_alias="PPROBE_THREADS")

    # Sampling and quadrature defaults
    SAMPLE_COUNT: int = Field(default=4096, ge=2, validation_alias="PPROBE_SAMPLE_COUNT")
    QUAD_ORDER: int = Field(default=8, ge=1, validation_alias="PPROBE_QUAD_ORDER")
    QUAD_RESOLUTION: float = Field(default=1.0, gt=0, validation_alias="PPROBE_QUAD_RESOLUTION")
    STABILITY_TOL: float = Field(default=0.05, gt=0, validation_alias="PPROBE_STABILITY_TOL")

    # Block geometry
    TRUNCATION_DEPTH: int = Field(default=3, ge=0, validation_alias="PPROBE_TRUNCATION_DEPTH")
    THETA_MAX_DEG: float = Field(default=89.0, gt=0, lt=90, validation_alias="PPROBE_THETA_MAX_DEG")
    N_MIN: int = Field(default=-8, validation_alias="PPROBE_N_MIN")
    N_MAX: int = Field(default=8, validation_alias="PPROBE_N_MAX")

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    @property
    def workers(self) -> int:
        """Effective worker count for thread pools and scipy.fft."""
        return self.THREADS or (os.cpu_count() or 1)


# Instantiate settings object for easy import
settings = Settings()
