"""Samplers for the gated mixture."""

from modgate.sampling.samplers import (
    SampleStats,
    empirical_dist,
    exact_model_dist,
    log_proposal,
    proposal_sample,
    rejection_sample,
    rejection_sample_batch,
    sir_sample,
    sir_sample_batch,
    total_variation,
)

__all__ = [
    "SampleStats",
    "empirical_dist",
    "exact_model_dist",
    "log_proposal",
    "proposal_sample",
    "rejection_sample",
    "rejection_sample_batch",
    "sir_sample",
    "sir_sample_batch",
    "total_variation",
]
