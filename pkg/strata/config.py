"""Application configuration."""

import os

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


def _default_threads() -> int:
    return min(os.cpu_count() or 1, 8)


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(env_prefix="STRATA_")

    # Monte Carlo parallelism cap (STRATA_THREADS)
    threads: int = _default_threads()

    # Trials per Monte Carlo chunk; every chunk gets its own spawned seed
    chunk_size: int = 20_000

    default_seed: int = 2018

    # Extended-precision mode never drops below this many decimal digits
    extended_dps: int = Field(default=30, ge=30)

    # Adaptive quadrature for expected finishing times
    quad_epsabs: float = 1e-10
    quad_epsrel: float = 1e-7
    quad_limit: int = 500
    tail_cutoff: float = 1e-10

    # Prime-field codec (2^31 - 1)
    prime_modulus: int = 2_147_483_647

    # Real-mode generators are drawn from (seed, n, k_j)
    real_generator_seed: int = 20_180_611

    # Exhaustive oracles refuse larger search spaces
    brute_force_limit: int = 10_000_000

    # Virtual-time deadline for the execution harness (None = wait for every channel)
    harness_deadline: float | None = None

    log_level: str = "INFO"


settings = Settings()
