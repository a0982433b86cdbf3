import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

logger = logging.getLogger(__name__)

OUTPUT_ENV_VAR = "WORMHOLE_LAB_OUT"

DEFAULTS: Dict[str, Any] = {
    "majorana_square": 0.5,  # psi^2; 0.5 or 1.0
    "support_threshold": 1e-8,
    "weight_floor": 1e-6,
    "winding_threshold": 0.8,
    "winding_beta": 4.0,
    "coupled_beta": 0.001,
    "mu": -12.0,
    "teleport_time": 2.8,
    "floquet_segment": 2.8,
    "floquet_start": "h0",  # h0, h1
    "interaction_normalization": "per_flavor",  # per_flavor, bare
    "grid_step": 0.05,
    "grid_stop": 50.0,
    "ensemble_samples": 1000,
    "ensemble_time": 2.8,
    "ensemble_policy": "sorted_dominance",  # sorted_dominance, max_bound, mean
    "seed": 0,
    "workers": 4,
    "coupling_window": 1e-3,
    "log_level": "INFO",
}

CHOICES = {
    "majorana_square": (0.5, 1.0),
    "floquet_start": ("h0", "h1"),
    "interaction_normalization": ("per_flavor", "bare"),
    "ensemble_policy": ("sorted_dominance", "max_bound", "mean"),
    "log_level": ("DEBUG", "INFO", "WARNING", "ERROR"),
}

POSITIVE = ("support_threshold", "weight_floor", "winding_threshold", "floquet_segment",
            "grid_step", "grid_stop", "ensemble_samples", "workers", "coupling_window")
NON_NEGATIVE = ("winding_beta", "coupled_beta", "teleport_time", "ensemble_time", "seed")


class ConfigError(ValueError):
    """Invalid configuration value from the settings file or the command line"""


def validate(settings: Mapping[str, Any]) -> Dict[str, Any]:
    """Coerce every value to the type of its default; raise ConfigError on bad input."""
    checked = {}
    for key, value in settings.items():
        if key not in DEFAULTS:
            raise ConfigError(f"Unknown setting: {key}")
        default = DEFAULTS[key]
        try:
            if isinstance(default, bool):
                value = bool(value)
            elif isinstance(default, int):
                if isinstance(value, float) and not value.is_integer():
                    raise ValueError(f"expected an integer, got {value}")
                value = int(value)
            elif isinstance(default, float):
                value = float(value)
            else:
                value = str(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid value for {key}: {e}") from e
        if key in CHOICES and value not in CHOICES[key]:
            raise ConfigError(f"{key} must be one of {CHOICES[key]}, got {value!r}")
        if key in POSITIVE and not value > 0:
            raise ConfigError(f"{key} must be positive, got {value}")
        if key in NON_NEGATIVE and value < 0:
            raise ConfigError(f"{key} must be non-negative, got {value}")
        checked[key] = value
    return checked


class LabSettings:
    """Persistent lab settings with built-in defaults"""

    def __init__(self, config_dir: Optional[Path] = None):
        self.config_dir = Path(config_dir) if config_dir else Path.home() / ".config" / "wormhole-lab"
        self.config_file = self.config_dir / "settings.json"
        self.defaults = DEFAULTS.copy()
        self.settings = self.load_settings()

    def load_settings(self) -> Dict[str, Any]:
        """Load settings from file merged over defaults.

        A missing file yields the defaults; a malformed one raises ConfigError.
        """
        merged = self.defaults.copy()
        if not self.config_file.exists():
            return merged
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                saved = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read {self.config_file}: {e}") from e
        if not isinstance(saved, dict):
            raise ConfigError(f"{self.config_file} must contain a JSON object")
        merged.update(validate(saved))
        logger.debug(f"Loaded settings from {self.config_file}")
        return merged

    def save_settings(self):
        self.config_dir.mkdir(parents=True, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=self.config_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(self.settings, f, indent=2, sort_keys=True)
            os.replace(tmp_path, self.config_file)
        except OSError as e:
            if os.path.exists(tmp_path):
                os.unlink(tmp_path)
            logger.error(f"Failed to save settings: {e}")
            raise

    def get(self, key: str, default: Any = None) -> Any:
        return self.settings.get(key, default)

    def set(self, key: str, value: Any):
        """Set a value and save"""
        self.settings.update(validate({key: value}))
        self.save_settings()

    def reset_to_defaults(self):
        self.settings = self.defaults.copy()
        self.save_settings()

    def resolved(self, overrides: Mapping[str, Any]) -> Dict[str, Any]:
        """Settings with command-line overrides (None means not given) applied on top"""
        result = self.settings.copy()
        result.update(validate({k: v for k, v in overrides.items() if v is not None}))
        return result


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV_VAR, "results"))
