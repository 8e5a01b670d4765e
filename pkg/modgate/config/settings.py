"""Experiment configuration.

An experiment is described by one flat mapping of documented keys, read
from either a YAML file (``*.yaml``/``*.yml``) or a ``key=value`` text
file. ``${VAR}`` placeholders are expanded from the environment, unknown
keys are rejected, and every value is coerced to the type the key
declares.

Logging levels follow the usual precedence: ``MODGATE_*`` environment
variables, then the experiment config, then :data:`DEFAULT_VALUES`.
"""

import logging
import os
import re
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from dotenv import dotenv_values
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from modgate.constants import DEFAULT_VALUES, ENV_PREFIX, REJECTION_TRIALS_PER_EXPERT
from modgate.exceptions import ConfigurationError, UsageError
from modgate.experts.domains import DomainSpec, Rule

logger = logging.getLogger(__name__)

METHODS = ("exact", "primal-dual", "quadratic")
SAMPLERS = ("rejection", "sir")

# Matches ${VAR_NAME} where VAR_NAME starts with letter/underscore.
_ENV_PLACEHOLDER_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _expand_env_placeholders(value: Any, path: str = "", strict: bool = True) -> Any:
    """Expand ``${VAR}`` placeholders in string values from os.environ.

    When ``strict=True`` (default) an unset variable raises
    ``ConfigurationError`` naming the key and the variable; otherwise the
    literal placeholder is kept.
    """
    if isinstance(value, dict):
        return {
            k: _expand_env_placeholders(v, f"{path}.{k}" if path else str(k), strict=strict)
            for k, v in value.items()
        }
    if isinstance(value, list):
        return [
            _expand_env_placeholders(item, f"{path}[{i}]", strict=strict)
            for i, item in enumerate(value)
        ]
    if isinstance(value, str):

        def _substitute(match: re.Match[str]) -> str:
            var_name = match.group(1)
            if var_name not in os.environ:
                if not strict:
                    return match.group(0)
                raise ConfigurationError(
                    f"Unresolved env placeholder ${{{var_name}}} in {path or '<root>'}",
                    details=f"Set the environment variable {var_name}.",
                )
            return os.environ[var_name]

        return _ENV_PLACEHOLDER_RE.sub(_substitute, value)
    return value


# -- value coercion --------------------------------------------------------


def _is_unset(raw: Any) -> bool:
    return raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none", "auto"))


def _as_int(raw: Any) -> int:
    if isinstance(raw, bool):
        raise ValueError("expected an integer")
    if isinstance(raw, float) and not raw.is_integer():
        raise ValueError("expected an integer")
    return int(raw)


def _as_float(raw: Any) -> float:
    if isinstance(raw, bool):
        raise ValueError("expected a number")
    return float(raw)


def _as_str(raw: Any) -> str:
    return str(raw).strip()


def _as_floats(raw: Any) -> tuple[float, ...]:
    items = raw if isinstance(raw, list) else str(raw).split(",")
    return tuple(float(x) for x in items if str(x).strip())


def parse_domains(raw: Any) -> tuple[tuple[Rule, float], ...]:
    """``increment,decrement:0.1`` → ((INCREMENT, 0.0), (DECREMENT, 0.1))."""
    items = raw if isinstance(raw, list) else str(raw).split(",")
    out = []
    for item in items:
        text = str(item).strip()
        if not text:
            continue
        name, _, contamination = text.partition(":")
        try:
            rule = Rule(name.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown rule {name!r}; expected one of {[r.value for r in Rule]}"
            ) from None
        out.append((rule, float(contamination) if contamination else 0.0))
    return tuple(out)


def _optional(fn: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def parse(raw: Any) -> Any:
        return None if _is_unset(raw) else fn(raw)

    return parse


@dataclass(frozen=True)
class ConfigKey:
    """A documented experiment key."""

    name: str
    parse: Callable[[Any], Any]
    type_name: str
    help: str


CONFIG_KEYS: dict[str, ConfigKey] = {
    k.name: k
    for k in (
        ConfigKey("vocab_size", _as_int, "int", "Vocabulary size V"),
        ConfigKey("length", _as_int, "int", "Sequence length T"),
        ConfigKey("domains", _optional(parse_domains), "domains", "Comma list of rule[:contamination]"),
        ConfigKey("samples_per_domain", _as_int, "int", "Training samples per domain (0 = exact population)"),
        ConfigKey("alpha", _as_float, "float", "Additive smoothing of expert tables"),
        ConfigKey("seed", _as_int, "int", "Seed of every random generator"),
        ConfigKey("method", _as_str, "str", "Solver: exact, primal-dual or quadratic"),
        ConfigKey("iterations", _as_int, "int", "Solver iterations"),
        ConfigKey("eta_lambda", _optional(_as_float), "float|auto", "Mixture-weight step size"),
        ConfigKey("eta_g", _optional(_as_float), "float|auto", "Gate step size"),
        ConfigKey("eta_mu", _as_float, "float", "Multiplier step size (primal-dual)"),
        ConfigKey("ema_alpha", _as_float, "float", "EMA factor of the partition estimate"),
        ConfigKey("batch_size", _as_int, "int", "Samples per source per stochastic step"),
        ConfigKey("warmup", _as_int, "int", "Steps before the multiplier starts moving"),
        ConfigKey("beta", _as_float, "float", "Quadratic penalty weight"),
        ConfigKey("max_grad_norm", _optional(_as_float), "float|none", "Gradient clip for stochastic solvers"),
        ConfigKey("checkpoint_every", _as_int, "int", "Iterations between trace records"),
        ConfigKey("lambda_lower", _optional(_as_floats), "floats|none", "Lower bounds of the mixture set"),
        ConfigKey("lambda_upper", _optional(_as_floats), "floats|none", "Upper bounds of the mixture set"),
        ConfigKey("lambda_step", _as_float, "float", "Grid step of sweeps over lambda"),
        ConfigKey("resample", _as_int, "int", "Resampled test sets per sweep point (0 = exact)"),
        ConfigKey("test_size", _as_int, "int", "Sequences per resampled test set"),
        ConfigKey("sampler", _as_str, "str", "Sampler: rejection or sir"),
        ConfigKey("num_samples", _as_int, "int", "Corpus size written by sample"),
        ConfigKey("candidates", _as_int, "int", "SIR candidates per draw"),
        ConfigKey("max_trials", _optional(_as_int), "int|auto", "Rejection budget per draw (default 100*p)"),
        ConfigKey("corpus_size", _as_int, "int", "Teacher corpus size for distillation"),
        ConfigKey("router_steps", _as_int, "int", "Router gradient steps"),
        ConfigKey("router_eta", _as_float, "float", "Router step size"),
        ConfigKey("monolithic_alpha", _as_float, "float", "Smoothing of the monolithic student"),
        ConfigKey("log_level", _as_str, "str", "File log level"),
        ConfigKey("console_level", _as_str, "str", "Console log level"),
    )
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment settings."""

    vocab_size: int = 3
    length: int = 2
    domains: tuple[tuple[Rule, float], ...] | None = None
    samples_per_domain: int = 0
    alpha: float = 0.0
    seed: int = 0
    method: str = "exact"
    iterations: int = 2000
    eta_lambda: float | None = None
    eta_g: float | None = None
    eta_mu: float = 0.01
    ema_alpha: float = 0.9
    batch_size: int = 32
    warmup: int = 0
    beta: float = 1000.0
    max_grad_norm: float | None = None
    checkpoint_every: int = 50
    lambda_lower: tuple[float, ...] | None = None
    lambda_upper: tuple[float, ...] | None = None
    lambda_step: float = 0.1
    resample: int = 0
    test_size: int = 1000
    sampler: str = "rejection"
    num_samples: int = 1000
    candidates: int = 64
    max_trials: int | None = None
    corpus_size: int = 500
    router_steps: int = 4000
    router_eta: float = 0.5
    monolithic_alpha: float = 0.0
    log_level: str = field(default=DEFAULT_VALUES["LOG_LEVEL"])
    console_level: str = field(default=DEFAULT_VALUES["CON_LEVEL"])

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise UsageError(
                f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}",
                option="method",
            )
        if self.sampler not in SAMPLERS:
            raise UsageError(
                f"unknown sampler {self.sampler!r}; expected one of {', '.join(SAMPLERS)}",
                option="sampler",
            )
        checks = [
            (self.vocab_size >= 2, "vocab_size must be at least 2"),
            (self.length >= 1, "length must be at least 1"),
            (self.samples_per_domain >= 0, "samples_per_domain must be >= 0"),
            (self.alpha >= 0, "alpha must be >= 0"),
            (self.seed >= 0, "seed must be >= 0"),
            (self.iterations >= 1, "iterations must be positive"),
            (self.batch_size >= 1, "batch_size must be positive"),
            (self.warmup >= 0, "warmup must be >= 0"),
            (self.beta >= 0, "beta must be >= 0"),
            (self.checkpoint_every >= 1, "checkpoint_every must be positive"),
            (0 < self.lambda_step <= 1, "lambda_step must lie in (0, 1]"),
            (0 < self.ema_alpha < 1, "ema_alpha must lie in (0, 1)"),
            (self.resample >= 0, "resample must be >= 0"),
            (self.test_size >= 1, "test_size must be positive"),
            (self.num_samples >= 0, "num_samples must be >= 0"),
            (self.candidates >= 1, "candidates must be positive"),
            (
                self.max_trials is None or self.max_trials >= 1,
                "max_trials must be positive",
            ),
            (self.corpus_size >= 0, "corpus_size must be >= 0"),
            (self.router_steps >= 0, "router_steps must be >= 0"),
            (self.router_eta > 0, "router_eta must be positive"),
            (self.monolithic_alpha >= 0, "monolithic_alpha must be >= 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigurationError(message)
        for level_key in ("log_level", "console_level"):
            level = getattr(self, level_key).upper()
            if not isinstance(logging.getLevelName(level), int):
                raise ConfigurationError(f"{level_key}: unknown logging level {level!r}")
            object.__setattr__(self, level_key, level)
        if self.domains is not None:
            for _, c in self.domains:
                if not 0.0 <= c <= 1.0:
                    raise ConfigurationError(f"domain contamination {c} outside [0, 1]")

    @property
    def num_domains(self) -> int:
        return len(self.domains or ())

    def domain_specs(self) -> list[DomainSpec]:
        """DomainSpec per configured domain; the key is required here."""
        if not self.domains:
            raise ConfigurationError(
                "missing required key 'domains'",
                details="e.g. domains=increment,decrement",
            )
        return [
            DomainSpec(self.vocab_size, self.length, rule, contamination)
            for rule, contamination in self.domains
        ]

    def lambda_grid(self) -> list[float]:
        """λ₁ values 0, step, …, 1 without floating-point drift."""
        n = round(1.0 / self.lambda_step)
        if abs(n * self.lambda_step - 1.0) > 1e-9:
            raise ConfigurationError("lambda_step must divide 1 evenly")
        return [round(i / n, 12) for i in range(n + 1)]

    def trials_budget(self, num_experts: int) -> int:
        if self.max_trials is None:
            return REJECTION_TRIALS_PER_EXPERT * num_experts
        return self.max_trials

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def _load_yaml(path: Path) -> dict[str, Any]:
    yaml = YAML(typ="safe")
    with path.open("r", encoding="utf-8") as f:
        data = yaml.load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path.name} must contain a flat mapping of keys")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigurationError(f"nested value under {key!r}; the config is flat")
    return {str(k): v for k, v in data.items()}


def load_raw_config(path: Path) -> dict[str, Any]:
    """Key/value mapping of a config file before coercion."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            raw = _load_yaml(path)
        else:
            raw = dict(dotenv_values(path))
    except (OSError, YAMLError) as e:
        raise ConfigurationError(f"failed to read {path}: {e}") from e
    logger.debug("Loaded %d config keys from %s", len(raw), path)
    return _expand_env_placeholders(raw)


def coerce_config(raw: Mapping[str, Any]) -> dict[str, Any]:
    """Type every value through the key schema; unknown keys are errors."""
    out: dict[str, Any] = {}
    for key, value in raw.items():
        spec = CONFIG_KEYS.get(key.strip().lower())
        if spec is None:
            raise ConfigurationError(
                f"unknown config key {key!r}",
                details="run 'modgate keys' for the list of accepted keys",
            )
        if value is None and spec.type_name not in ("domains",) and "|" not in spec.type_name:
            raise ConfigurationError(f"key {key!r} has no value")
        try:
            out[spec.name] = spec.parse(value)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(
                f"invalid value {value!r} for {key!r} ({spec.type_name}): {e}"
            ) from e
    return out


def load_config(path: Path | None = None, **overrides: Any) -> ExperimentConfig:
    """ExperimentConfig from an optional file plus non-None overrides."""
    values = coerce_config(load_raw_config(path)) if path is not None else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def config_defaults() -> dict[str, Any]:
    """Default value of every documented key."""
    return {f.name: f.default for f in fields(ExperimentConfig)}


def get_config_value(key: str, config: ExperimentConfig | None = None) -> str:
    """
    Get a configuration value with the following priority:
    1. Environment variable MODGATE_<KEY> (highest priority)
    2. Experiment configuration
    3. Default value (lowest priority)
    """
    env_value = os.environ.get(f"{ENV_PREFIX}{key}")
    if env_value:
        return env_value

    key_mapping = {
        "LOG_LEVEL": "log_level",
        "CON_LEVEL": "console_level",
    }
    config_key = key_mapping.get(key, key.lower())
    if config is not None and hasattr(config, config_key):
        value = getattr(config, config_key)
        if value is not None:
            return str(value)

    return DEFAULT_VALUES.get(key, "")
