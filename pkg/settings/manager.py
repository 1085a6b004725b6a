import json
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from utils.errors import ConfigError
from .config_model import ProjectConfig

CONFIG_FILE_NAME = "trboost.json"


class SettingsManager:
    def __init__(self, config_path: Optional[str] = None):
        if config_path is None:
            config_path = CONFIG_FILE_NAME
        self.config_path = Path(config_path)
        self._config: Optional[ProjectConfig] = None

    def load_settings(self) -> ProjectConfig:
        """Loads settings from the config file, or raises ConfigError if missing or invalid."""
        if not self.config_path.exists():
            raise ConfigError(f"Config file not found at {self.config_path}")

        try:
            with open(self.config_path, 'r', encoding="utf-8") as f:
                data = json.load(f)
            self._config = ProjectConfig(**data)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {self.config_path} is not valid JSON: {e}")
        except ValidationError as e:
            raise ConfigError(f"Invalid settings in {self.config_path}: {e}")
        return self._config

    def save_settings(self, config: ProjectConfig):
        """Saves the configuration to the file."""
        self._config = config
        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.config_path, 'w', encoding="utf-8") as f:
            f.write(config.model_dump_json(indent=4))

    def get_config(self) -> ProjectConfig:
        """Returns the loaded config; defaults when no file exists."""
        if self._config is None:
            if not self.exists():
                self._config = ProjectConfig()
                return self._config
            return self.load_settings()
        return self._config

    def exists(self) -> bool:
        return self.config_path.exists()
