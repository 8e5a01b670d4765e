"""Experiment configuration loading."""

from modgate.config.settings import (
    CONFIG_KEYS,
    METHODS,
    SAMPLERS,
    ConfigKey,
    ExperimentConfig,
    coerce_config,
    config_defaults,
    get_config_value,
    load_config,
    load_raw_config,
    parse_domains,
)

__all__ = [
    "CONFIG_KEYS",
    "METHODS",
    "SAMPLERS",
    "ConfigKey",
    "ExperimentConfig",
    "coerce_config",
    "config_defaults",
    "get_config_value",
    "load_config",
    "load_raw_config",
    "parse_domains",
]
