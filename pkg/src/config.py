"""
config.py - Process-level settings

Settings are read from the environment (optionally from a .env file) once per
process. Experiment-level parameters live in the JSON experiment config, see
src/models/experiment.py.
"""

import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load environment variables
load_dotenv()


class Settings(BaseModel):
    """Environment-driven defaults shared by the CLI, the API and the harness"""
    log_level: str = Field("INFO", description="Root logging level")
    pair_cap: int = Field(200_000, ge=1, description="Maximum snapshot pairs evaluated for Christoffel scores")
    sigma_eta: float = Field(0.1, gt=0, description="Default likelihood scale used by guidance and regularized OED")
    n_jobs: int = Field(1, description="Worker processes for benchmark sweeps (-1 = all cores)")
    output_dir: str = Field("results", description="Default directory for CLI outputs")
    api_host: str = Field("0.0.0.0", description="Bind address for the HTTP service")
    api_port: int = Field(8000, description="Port for the HTTP service")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Build the settings object from OSP_* environment variables."""
    return Settings(
        log_level=os.getenv("OSP_LOG_LEVEL", "INFO"),
        pair_cap=int(os.getenv("OSP_PAIR_CAP", "200000")),
        sigma_eta=float(os.getenv("OSP_SIGMA_ETA", "0.1")),
        n_jobs=int(os.getenv("OSP_N_JOBS", "1")),
        output_dir=os.getenv("OSP_OUTPUT_DIR", "results"),
        api_host=os.getenv("OSP_API_HOST", "0.0.0.0"),
        api_port=int(os.getenv("OSP_API_PORT", "8000")),
    )
