#!/usr/bin/env python3

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Optional

import typer
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from modgate import __version__
from modgate.commands import analyze, distill, fit_experts, sample, solve, sweep
from modgate.config.settings import (
    CONFIG_KEYS,
    ExperimentConfig,
    config_defaults,
    get_config_value,
    load_config,
)
from modgate.exceptions import error_handler

# MODGATE_* variables may live in a .env file next to the run
load_dotenv()

LOG_FORMAT = "[%(asctime)s] [%(levelname)s] %(name)s: %(message)s"

logger = logging.getLogger(__name__)

console = Console()
app = typer.Typer(
    name="modgate",
    help=f"modgate v{__version__} - robust gating of frozen sequence experts: "
    "fit experts, solve the minimax gate, sample, distill and analyze.",
    add_completion=False,
)


# -----------------------------------------------------------------------------
# Logging Setup
# -----------------------------------------------------------------------------


def _marked(target: logging.Logger, marker: str) -> logging.Handler | None:
    for existing in target.handlers:
        if getattr(existing, "_modgate_handler", None) == marker:
            return existing
    return None


def setup_logging(out_dir: Path, cfg: ExperimentConfig | None = None) -> None:
    """Attach the console and run-directory file handlers to the package logger.

    Safe to call repeatedly; the file handler follows the latest ``--out``.
    """
    modgate_logger = logging.getLogger("modgate")
    modgate_logger.setLevel(get_config_value("LOG_LEVEL", cfg))
    modgate_logger.propagate = False

    console_handler = _marked(modgate_logger, "console")
    if console_handler is None:
        console_handler = RichHandler(
            rich_tracebacks=True,
            markup=True,
            show_path=False,
            show_time=False,
            console=Console(stderr=True),
        )
        console_handler._modgate_handler = "console"  # type: ignore[attr-defined]
        modgate_logger.addHandler(console_handler)
    console_handler.setLevel(get_config_value("CON_LEVEL", cfg))

    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = (out_dir / get_config_value("LOG_FILENAME", cfg)).resolve()
    file_handler = _marked(modgate_logger, "file")
    if file_handler is not None:
        if Path(getattr(file_handler, "baseFilename", "")) == log_path:
            return
        modgate_logger.removeHandler(file_handler)
        file_handler.close()
    file_handler = RotatingFileHandler(log_path, maxBytes=5_000_000, backupCount=3)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    file_handler._modgate_handler = "file"  # type: ignore[attr-defined]
    modgate_logger.addHandler(file_handler)


# -----------------------------------------------------------------------------
# Commands
# -----------------------------------------------------------------------------

ConfigOption = typer.Option(
    None, "--config", "-c", help="Experiment config file (key=value or YAML)."
)
SeedOption = typer.Option(None, "--seed", help="Random seed; overrides the config.")
OutOption = typer.Option(
    Path("run"), "--out", "-o", help="Run directory shared by all subcommands."
)


def _prepare(config: Optional[Path], out: Path, **overrides: Any) -> ExperimentConfig:
    cfg = load_config(config, **overrides)
    setup_logging(out, cfg)
    logger.debug("modgate %s, run directory %s", __version__, out)
    return cfg


def version_callback(value: bool):
    if value:
        print(f"modgate version: {__version__}")
        raise typer.Exit()


@app.callback()
def main_options(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Show the application's version and exit.",
    ),
):
    """Robust modular generative modeling lab."""


@app.command(name="fit-experts")
@error_handler()
def fit_experts_command(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Path = OutOption,
):
    """Fit one Markov expert per configured domain and write the manifest."""
    cfg = _prepare(config, out, seed=seed)
    fit_experts(cfg, out)


@app.command(name="solve")
@error_handler()
def solve_command(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Path = OutOption,
    method: Optional[str] = typer.Option(
        None, "--method", "-m", help="Solver: exact, primal-dual or quadratic."
    ),
):
    """Solve the minimax gate and write gate, trace and bound report."""
    cfg = _prepare(config, out, seed=seed, method=method)
    solve(cfg, out)


@app.command(name="sweep")
@error_handler()
def sweep_command(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Path = OutOption,
    resample: Optional[int] = typer.Option(
        None, "--resample", "-r", help="Resampled test sets per grid point."
    ),
):
    """Score the gate and the baselines along the two-domain mixture."""
    cfg = _prepare(config, out, seed=seed, resample=resample)
    sweep(cfg, out)


@app.command(name="sample")
@error_handler()
def sample_command(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Path = OutOption,
    sampler: Optional[str] = typer.Option(
        None, "--sampler", "-s", help="Sampler: rejection or sir."
    ),
):
    """Draw a corpus from the robust model."""
    cfg = _prepare(config, out, seed=seed, sampler=sampler)
    sample(cfg, out)


@app.command(name="distill")
@error_handler()
def distill_command(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Path = OutOption,
):
    """Distill the robust model into a causal router and a Markov student."""
    cfg = _prepare(config, out, seed=seed)
    distill(cfg, out)


@app.command(name="analyze")
@error_handler()
def analyze_command(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Path = OutOption,
):
    """Compute game values, bound terms and modularity constants."""
    cfg = _prepare(config, out, seed=seed)
    analyze(cfg, out)


@app.command(name="keys")
def keys_command():
    """List the accepted experiment config keys."""
    defaults = config_defaults()
    table = Table(title="Experiment config keys", show_header=True, header_style="bold cyan")
    table.add_column("Key", style="bold")
    table.add_column("Type")
    table.add_column("Default")
    table.add_column("Description")
    for name, key in CONFIG_KEYS.items():
        default = defaults.get(name)
        table.add_row(name, key.type_name, "auto" if default is None else str(default), key.help)
    console.print(table)


def main():
    app()


def entrypoint():
    """Entry point for the application when packaged."""
    main()


if __name__ == "__main__":
    main()
