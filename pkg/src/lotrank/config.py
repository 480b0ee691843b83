"""Flat key=value run configuration; command-line flags override file keys.

Example file::

    # pipeline inputs
    parking_file = data/lots.geojson
    chip_store   = data/store
    proximity_m  = 10
    tv_threshold = 0.2
    seed         = 7
"""

from __future__ import annotations

from pathlib import Path

# Documented keys and their casts; unknown keys are rejected to catch typos.
CONFIG_KEYS: dict[str, type] = {
    "poi_file": str,
    "parking_file": str,
    "chip_store": str,
    "out_dir": str,
    "proximity_m": float,
    "tv_threshold": float,
    "score_threshold": float,
    "ratio": float,
    "seed": int,
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "side": int,
    "lots_per_class": int,
    "n_weekends": int,
    "epsilon": float,
}


class ConfigError(ValueError):
    """Bad run-configuration file contents."""


def load_config(path: Path | str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def resolve(flag_value, config: dict[str, str], key: str, default):
    """Precedence: explicit flag > config file > default."""
    if flag_value is not None:
        return flag_value
    if key in config:
        cast = CONFIG_KEYS[key]
        try:
            return cast(config[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key}: {exc}") from exc
    return default
