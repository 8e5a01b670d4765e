"""Distillation of the gated teacher into causal students."""

from modgate.distill.routers import (
    CausalRouter,
    PosteriorRouter,
    Router,
    TabularRouter,
    UniformRouter,
    inversion_rate,
    posterior_router,
    posterior_table,
    prefix_features,
    router_feature_dim,
    router_sample,
    student_log_prob,
    student_seq_logprob,
)
from modgate.distill.structural import (
    CachedTuple,
    ChainRuleReport,
    cache_sequences,
    chain_rule_decomposition,
    dataset_arrays,
    generate_cached_dataset,
    monolithic_distill,
    router_loss,
    train_router,
)

__all__ = [
    "CachedTuple",
    "CausalRouter",
    "ChainRuleReport",
    "PosteriorRouter",
    "Router",
    "TabularRouter",
    "UniformRouter",
    "cache_sequences",
    "chain_rule_decomposition",
    "dataset_arrays",
    "generate_cached_dataset",
    "inversion_rate",
    "monolithic_distill",
    "posterior_router",
    "posterior_table",
    "prefix_features",
    "router_feature_dim",
    "router_loss",
    "router_sample",
    "student_log_prob",
    "student_seq_logprob",
    "train_router",
]
