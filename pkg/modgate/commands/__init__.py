"""Pipelines behind the modgate subcommands."""

from modgate.commands.analyze import AnalysisResult, analyze
from modgate.commands.distill import DistillResult, distill
from modgate.commands.fit_experts import FitResult, fit_experts
from modgate.commands.sample import SampleResult, sample
from modgate.commands.solve import SolveResult, solve
from modgate.commands.sweep import SweepResult, sweep

__all__ = [
    "AnalysisResult",
    "DistillResult",
    "FitResult",
    "SampleResult",
    "SolveResult",
    "SweepResult",
    "analyze",
    "distill",
    "fit_experts",
    "sample",
    "solve",
    "sweep",
]
