from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    PLATE_THREADS: int = Field(default=1, ge=1)  # ワーカー数の上限
    PLATE_OUTPUT_DIR: Path = Path("output")
    PLATE_LOG_LEVEL: str = "INFO"
    PLATE_SERIES_TERMS: int = Field(default=2000, ge=1)  # 二重級数の打ち切り
    PLATE_MAX_SERIES_TERMS: int = Field(default=100, ge=1)  # 中央たわみ単級数の打ち切り

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")


settings = Settings()
