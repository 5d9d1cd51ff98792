from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"
    DEFAULT_SEED: int = 0
    LEARNING_RATE: float = 0.01
    EPOCHS: int = 200
    BATCH_SIZE: int = 64
    CLIP_FLOOR: float = 0.01
    BANDWIDTH: float = 0.1
    WIRELESS_DATA_PATH: Optional[Path] = None
    WORKERS: int = 1
    MAX_FAILURE_FRACTION: float = 0.2

    model_config = SettingsConfigDict(env_file=".env", env_prefix="PBN_", extra="ignore")


settings = Settings()
