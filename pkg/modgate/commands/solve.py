"""solve: run one of the minimax solvers and persist gate, trace and bounds."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from modgate.analysis.bounds import BoundReport, robust_bound_report
from modgate.analysis.diagnostics import worst_case_risk
from modgate.commands.common import RunContext, console, lambda_set_from, load_run, summary_table
from modgate.config.settings import ExperimentConfig
from modgate.gates.featurized import FeatGate
from modgate.gates.tabular import TabularGate, partition_Z
from modgate.solvers.exact import solve_exact
from modgate.solvers.primal_dual import PDConfig, solve_primal_dual, solve_quadratic_penalty
from modgate.solvers.trace import GameTrace, least_favorable_mixture
from modgate.storage.textio import save_gate, write_csv
from modgate.utils.progress import step_progress

logger = logging.getLogger(__name__)


@dataclass
class SolveResult:
    trace: GameTrace
    report: BoundReport
    worst_case_risk: float
    partition: float


def pd_config(cfg: ExperimentConfig) -> PDConfig:
    """Stochastic-solver settings; unset step sizes take the solver defaults."""
    defaults = PDConfig()
    return PDConfig(
        eta_g=cfg.eta_g or defaults.eta_g,
        eta_lambda=cfg.eta_lambda or defaults.eta_lambda,
        eta_mu=cfg.eta_mu,
        alpha=cfg.ema_alpha,
        iterations=cfg.iterations,
        batch_size=cfg.batch_size,
        warmup=cfg.warmup,
        seed=cfg.seed,
        max_grad_norm=cfg.max_grad_norm,
        checkpoint_every=cfg.checkpoint_every,
    )


def run_solver(cfg: ExperimentConfig, ctx: RunContext) -> GameTrace:
    """Dispatch on ``cfg.method``."""
    lambda_set = lambda_set_from(cfg, ctx.num_experts)
    with step_progress(f"Solving ({cfg.method})", cfg.iterations) as progress:
        if cfg.method == "exact":
            return solve_exact(
                ctx.sources,
                ctx.experts,
                lambda_set=lambda_set,
                iterations=cfg.iterations,
                eta_lambda=cfg.eta_lambda,
                eta_g=cfg.eta_g,
                checkpoint_every=cfg.checkpoint_every,
                progress=progress,
            )
        gate = FeatGate.zeros(ctx.vocab_size, ctx.num_experts)
        if cfg.method == "primal-dual":
            return solve_primal_dual(
                ctx.sources, ctx.experts, gate, pd_config(cfg), lambda_set, progress
            )
        return solve_quadratic_penalty(
            ctx.sources, ctx.experts, gate, cfg.beta, pd_config(cfg), lambda_set, progress
        )


def solve(cfg: ExperimentConfig, out_dir: Path) -> SolveResult:
    ctx = load_run(out_dir)
    trace = run_solver(cfg, ctx)
    gate = trace.final_gate
    lam_bar = least_favorable_mixture(trace)

    save_gate(gate, ctx.paths.gate)
    write_csv(ctx.paths.trace, trace.csv_header(), trace.csv_rows())
    report = robust_bound_report(ctx.sources, ctx.experts, lam_bar, lam_bar, gate=gate)
    write_csv(ctx.paths.bounds, ["quantity", "value"], report.rows(), ctx.provenance())

    lambda_set = lambda_set_from(cfg, ctx.num_experts)
    risk = worst_case_risk(ctx.sources, ctx.experts, gate, lambda_set)
    if isinstance(gate, TabularGate):
        Z = partition_Z(gate, ctx.experts)
    else:
        Z = trace.final_record.z_ema
    console.print(
        summary_table(
            f"Robust gate ({trace.method})",
            [
                ("lambda_bar", np.array2string(lam_bar.values, precision=4)),
                ("worst-case risk", f"{risk:.6g}"),
                ("bound at lambda_bar", f"{report.value:.6g}"),
                ("Z", f"{Z:.6g}"),
                ("final gap", f"{trace.final_record.gap:.4g}"),
            ],
        )
    )
    return SolveResult(trace=trace, report=report, worst_case_risk=risk, partition=Z)
