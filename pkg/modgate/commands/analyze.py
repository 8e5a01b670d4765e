"""analyze: game values, bound terms and modularity constants of a run."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from modgate.analysis.bounds import jsd_gap_lower_bound, robust_bound_report
from modgate.analysis.diagnostics import (
    dominance_report,
    game_value,
    lipschitz_estimate,
    worst_case_risk,
)
from modgate.analysis.linear_family import coincidence_norm, loss_bound, loss_lipschitz
from modgate.commands.common import console, lambda_set_from, load_run, summary_table
from modgate.config.settings import ExperimentConfig
from modgate.solvers.lambdas import LambdaSet
from modgate.storage.textio import load_gate, write_csv

logger = logging.getLogger(__name__)


@dataclass
class AnalysisResult:
    rows: list[tuple[str, float]]

    def value(self, quantity: str) -> float:
        return dict(self.rows)[quantity]


def _prefixed(prefix: str, rows: list[tuple[str, float]]) -> list[tuple[str, float]]:
    return [(f"{prefix}.{name}", value) for name, value in rows]


def analyze(cfg: ExperimentConfig, out_dir: Path) -> AnalysisResult:
    """Collect every computable quantity into ``quantity,value`` rows.

    Bound reports are taken at the least-favorable mixture and at each
    vertex of the configured mixture set. Gate-dependent rows appear only
    when ``solve`` has written a gate.
    """
    ctx = load_run(out_dir)
    sources, experts = ctx.sources, ctx.experts
    support = sources[0].support
    p = ctx.num_experts
    lambda_set = lambda_set_from(cfg, p)
    grid_set = lambda_set or LambdaSet.simplex(p)

    rows: list[tuple[str, float]] = []
    value, lam_star = game_value(sources, experts, lambda_set)
    rows.append(("game_value", value))
    rows += [(f"lambda_star_{k + 1}", float(v)) for k, v in enumerate(lam_star.values)]

    gate = load_gate(ctx.paths.gate) if ctx.paths.gate.exists() else None
    rows += _prefixed(
        "lambda_star", robust_bound_report(sources, experts, lam_star, lam_star, gate).rows()
    )
    for j, vertex in enumerate(grid_set.vertices()):
        report = robust_bound_report(sources, experts, lam_star, vertex)
        rows += _prefixed(f"vertex_{j + 1}", report.rows())
        rows.append(
            (f"vertex_{j + 1}.jsd_gap", jsd_gap_lower_bound(sources, report.epsilons, vertex))
        )

    rows.append(("coincidence_norm", coincidence_norm(experts, support)))
    rows.append(("lipschitz_estimate", lipschitz_estimate(sources, experts)))
    if lambda_set is not None:
        dominance = dominance_report(sources, experts, lambda_set)
        rows += [
            ("value_restricted", dominance.value_restricted),
            ("value_full", dominance.value_full),
            ("hausdorff_l1", dominance.hausdorff),
            ("improvement_ceiling", dominance.improvement_ceiling),
        ]
    if gate is not None:
        rows += [
            ("gate.worst_case_risk", worst_case_risk(sources, experts, gate, lambda_set)),
            ("gate.loss_bound", loss_bound(gate, experts, support)),
            ("gate.loss_lipschitz", loss_lipschitz(gate, experts, support)),
        ]

    write_csv(ctx.paths.analysis, ["quantity", "value"], rows, ctx.provenance())
    headline = {"game_value", "coincidence_norm", "lipschitz_estimate", "lambda_star.bound"}
    console.print(
        summary_table(
            "Analysis",
            [
                (name, np.format_float_positional(val, precision=6, trim="-"))
                for name, val in rows
                if name in headline or name.startswith("gate.") or name == "hausdorff_l1"
            ],
        )
    )
    logger.info("wrote %d quantities to %s", len(rows), ctx.paths.analysis)
    return AnalysisResult(rows=rows)
