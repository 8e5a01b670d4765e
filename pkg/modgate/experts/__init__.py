"""Expert sequence models and the synthetic rule domains."""

from modgate.experts.base import (
    SequenceExpert,
    epsilon,
    expert_logprob,
    expert_sample,
    induced_dist,
    likelihood_matrix,
    log_likelihood_matrix,
)
from modgate.experts.domains import DomainSpec, Rule, domain_dist, trajectories
from modgate.experts.markov import MarkovExpert, fit_mle, fit_mle_weighted, fit_unigram

__all__ = [
    "DomainSpec",
    "MarkovExpert",
    "Rule",
    "SequenceExpert",
    "domain_dist",
    "epsilon",
    "expert_logprob",
    "expert_sample",
    "fit_mle",
    "fit_mle_weighted",
    "fit_unigram",
    "induced_dist",
    "likelihood_matrix",
    "log_likelihood_matrix",
    "trajectories",
]
