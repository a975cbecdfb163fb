from typing import Annotated, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class AppConfig(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", env_prefix="ROSENAU_", extra="ignore")

    log_level: str = "INFO"
    # caps the worker count of parallel convergence studies
    threads: Annotated[int, Field(ge=1)] = 1
    out_dir: str = "./out"
    # separate level for the per-iteration solver log (unset: same as log_level)
    solver_log_level: Optional[str] = None


def load_config() -> AppConfig:
    return AppConfig()
