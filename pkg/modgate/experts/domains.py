"""Synthetic rule domains: deterministic modular counting sequences.

Domain A follows x_{t+1} = x_t + 1 (mod V) and domain B follows
x_{t+1} = x_t − 1 (mod V), each with a uniformly random first token.
A contamination fraction mixes in the opposite rule's trajectories.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from modgate.core.distributions import DiscreteDist, SupportSet
from modgate.exceptions import ValidationError


class Rule(str, Enum):
    """Counting direction of a domain."""

    INCREMENT = "increment"
    DECREMENT = "decrement"

    @property
    def opposite(self) -> "Rule":
        return Rule.DECREMENT if self is Rule.INCREMENT else Rule.INCREMENT

    @property
    def step(self) -> int:
        return 1 if self is Rule.INCREMENT else -1


@dataclass(frozen=True)
class DomainSpec:
    """A rule domain over length-T sequences on [0, V)."""

    vocab_size: int
    length: int
    rule: Rule
    contamination: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "rule", Rule(self.rule))
        if self.vocab_size < 2:
            raise ValidationError("vocab_size must be at least 2", field="vocab_size")
        if self.length < 1:
            raise ValidationError("length must be at least 1", field="length")
        if not 0.0 <= self.contamination <= 1.0:
            raise ValidationError(
                f"contamination {self.contamination} outside [0, 1]",
                field="contamination",
            )

    @property
    def label(self) -> str:
        if self.contamination:
            return f"{self.rule.value}:{self.contamination:g}"
        return self.rule.value


def trajectories(rule: Rule, vocab_size: int, length: int) -> np.ndarray:
    """The V deterministic trajectories of ``rule``, ordered by first token."""
    starts = np.arange(vocab_size)[:, None]
    offsets = Rule(rule).step * np.arange(length)[None, :]
    return (starts + offsets) % vocab_size


def domain_dist(spec: DomainSpec) -> DiscreteDist:
    """Exact population distribution of a (possibly contaminated) domain."""
    V, T, c = spec.vocab_size, spec.length, spec.contamination
    weights: dict[tuple[int, ...], float] = {}
    for rule, mass in ((spec.rule, 1.0 - c), (spec.rule.opposite, c)):
        if mass <= 0.0:
            continue
        for row in trajectories(rule, V, T).tolist():
            key = tuple(row)
            weights[key] = weights.get(key, 0.0) + mass / V
    support = SupportSet.from_sequences(weights.keys(), V)
    return DiscreteDist(support, np.fromiter(weights.values(), dtype=np.float64))
