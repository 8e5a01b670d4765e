"""Discrete distributions over enumerated sequence supports."""

from modgate.core.distributions import (
    INF_KL,
    DiscreteDist,
    MixtureWeights,
    Seq,
    SupportSet,
    align,
    as_token_array,
    as_weights,
    entropy,
    jsd,
    kl,
    log_sum_exp,
    mixture,
    relative_entropy,
    require_shared_support,
)

__all__ = [
    "INF_KL",
    "DiscreteDist",
    "MixtureWeights",
    "Seq",
    "SupportSet",
    "align",
    "as_token_array",
    "as_weights",
    "entropy",
    "jsd",
    "kl",
    "log_sum_exp",
    "mixture",
    "relative_entropy",
    "require_shared_support",
]
