from typing import Optional

from pydantic import ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Runtime settings using pydantic v2 + pydantic-settings.

    Loads environment variables and (for local runs) a `.env` file. The numeric
    defaults here are the library-wide fallbacks; experiment and solver configs
    override them per run.
    """

    # Allow extra keys in the .env file (do not fail on unknown env vars)
    model_config = ConfigDict(
        env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    # core
    STABKIT_SEED: Optional[int] = Field(
        None, description="Seed fallback when the CLI gets no --seed"
    )

    # eigensolver
    EIG_TOL: float = Field(1e-6, description="Power-iteration tolerance")
    EIG_MAX_ITERS: int = Field(1000, description="Iteration budget per eigenpair")
    EIG_SHIFT_PROBES: int = Field(20, description="Iterations for the norm shift")

    # monte carlo
    MC_SAMPLES: int = Field(4096, description="Default Monte Carlo sample count")
    MC_BLOCK: int = Field(1024, description="Draws per RNG substream block")

    # minimizer
    MINIMIZER_TOL: float = Field(1e-6, description="Gradient-norm target")
    MINIMIZER_MAX_ITERS: int = Field(5000, description="Gradient-descent budget")

    # experiments
    TIMING_REPEATS: int = Field(5, description="Repetitions per timed stage")
    MAX_DENSE_DIM: int = Field(512, description="Largest N for dense oracles")
    CACHE_DIR: str = Field(".stabkit_cache", description="Subspace cache directory")

    # logging & observability
    LOG_LEVEL: str = Field("INFO")
    LOG_FILE: str = Field("stabkit.log")
    LOG_DIR: str = Field("logs")
    LOG_TO_STDOUT: bool = Field(False, description="Skip the rotating file handler")
    LOG_JSON: bool = Field(False, description="JSON log lines if available")

    @field_validator("MC_BLOCK", "EIG_MAX_ITERS", "MINIMIZER_MAX_ITERS")
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    def public_dict(self) -> dict:
        """Return a settings dict safe for logging and run manifests."""
        return self.model_dump()


# singleton to import across the app
settings = Settings()
