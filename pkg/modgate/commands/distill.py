"""distill: structural and monolithic students of the robust model."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from modgate.commands.common import (
    console,
    expected_nll,
    load_run,
    require_gate,
    require_two_sources,
    summary_table,
    two_source_target,
)
from modgate.config.settings import ExperimentConfig
from modgate.distill.routers import CausalRouter, inversion_rate, router_sample, student_log_prob
from modgate.distill.structural import (
    ChainRuleReport,
    chain_rule_decomposition,
    generate_cached_dataset,
    monolithic_distill,
    train_router,
)
from modgate.gates.base import evaluate_gate
from modgate.gates.tabular import TabularGate
from modgate.storage.textio import save_cache, save_router, write_csv

logger = logging.getLogger(__name__)

DISTILL_COLUMNS = ["lambda", "teacher_nll", "causal_router_nll", "monolithic_nll"]


@dataclass
class DistillResult:
    router: CausalRouter
    rows: list[list[float]]
    inversion_rate: float | None
    chain_rule: ChainRuleReport | None

    def column(self, name: str) -> np.ndarray:
        j = DISTILL_COLUMNS.index(name)
        return np.array([row[j] for row in self.rows])


def distill(cfg: ExperimentConfig, out_dir: Path) -> DistillResult:
    """Train both students on one teacher corpus and score them along λ.

    The cached dataset and the monolithic student are built from the same
    seed, so both see the identical rejection-sampled corpus.
    """
    ctx = load_run(out_dir)
    require_two_sources(ctx, "distill")
    gate = require_gate(ctx.paths)
    V, T, p = ctx.vocab_size, ctx.length, ctx.num_experts
    budget = cfg.trials_budget(p)

    dataset = generate_cached_dataset(gate, ctx.experts, cfg.corpus_size, cfg.seed, budget)
    save_cache(dataset, V, T, ctx.paths.cache)
    router = train_router(
        dataset,
        CausalRouter.zeros(V, T, p),
        steps=cfg.router_steps,
        eta=cfg.router_eta,
        seed=cfg.seed,
    )
    save_router(router, ctx.paths.router)
    monolithic = monolithic_distill(
        gate, ctx.experts, cfg.corpus_size, cfg.monolithic_alpha, cfg.seed, budget
    )

    support = ctx.sources[0].support
    tokens = support.tokens
    teacher = evaluate_gate(gate, ctx.experts, support)
    log_probs = {
        "teacher": teacher.logpi - np.log(teacher.Z),
        "causal_router": student_log_prob(router, ctx.experts, tokens),
        "monolithic": monolithic.log_prob(tokens),
    }
    rows = []
    for lam in cfg.lambda_grid():
        target = two_source_target(ctx.sources, lam)
        rows.append([lam] + [expected_nll(target, log_probs[k]) for k in log_probs])
    write_csv(ctx.paths.distill, DISTILL_COLUMNS, rows, ctx.provenance())

    rate = None
    if V >= 3 and cfg.num_samples > 0:
        rate = inversion_rate(router_sample(router, ctx.experts, cfg.seed, cfg.num_samples), V)
    chain = None
    if isinstance(gate, TabularGate):
        chain = chain_rule_decomposition(gate, ctx.experts, router)

    summary = [(f"{name} NLL at 0.5", f"{value:.6g}") for name, value in _at_half(rows)]
    if rate is not None:
        summary.append(("router inversion rate", f"{rate:.4f}"))
    if chain is not None:
        summary += [
            ("KL(teacher || router)", f"{chain.total_kl:.6g}"),
            ("stepwise KL sum", f"{chain.stepwise_sum:.6g}"),
            ("routing KL bound", f"{chain.router_bound:.6g}"),
        ]
    console.print(summary_table("Distillation", summary))
    return DistillResult(router=router, rows=rows, inversion_rate=rate, chain_rule=chain)


def _at_half(rows: list[list[float]]) -> list[tuple[str, float]]:
    row = min(rows, key=lambda r: abs(r[0] - 0.5))
    return [(name.removesuffix("_nll"), row[j]) for j, name in enumerate(DISTILL_COLUMNS) if j]
