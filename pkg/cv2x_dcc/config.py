from pathlib import Path

import yaml
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Process-level knobs (env CV2X_* or .env); run semantics live in RunConfig
    output_dir: str = "results"
    log_level: str = "INFO"
    workers: int = 1
    config_path: str = "configs/config.yaml"

    extra_config: dict = {}

    model_config = SettingsConfigDict(
        env_prefix="CV2X_",
        env_file=str(Path(__file__).parent.parent / ".env"),  # project root
        env_file_encoding="utf-8",
        extra="ignore",
    )


# Load .env first
settings = Settings()

# Then YAML defaults; keys already known to Settings are left to the env
config_path = Path(settings.config_path)
if config_path.exists():
    with open(config_path, "r", encoding="utf-8") as f:
        yaml_config = yaml.safe_load(f) or {}

    for key, value in yaml_config.items():
        if not hasattr(settings, key):
            settings.extra_config[key] = value
