"""Gates over expert ensembles: tabular, featurized and the 𝒢₁ projection."""

from modgate.gates.base import Gate, GateEval, evaluate_gate, gate_log_prob, gate_logpi
from modgate.gates.featurized import (
    FeatGate,
    feature_dim,
    featgate_weights,
    sequence_features,
)
from modgate.gates.projection import (
    check_feasible,
    project_G1,
    project_onto_normalized_gates,
    simplex_project_rows,
)
from modgate.gates.tabular import TabularGate, is_normalized, partition_Z

__all__ = [
    "FeatGate",
    "Gate",
    "GateEval",
    "TabularGate",
    "check_feasible",
    "evaluate_gate",
    "feature_dim",
    "featgate_weights",
    "gate_log_prob",
    "gate_logpi",
    "is_normalized",
    "partition_Z",
    "project_G1",
    "project_onto_normalized_gates",
    "sequence_features",
    "simplex_project_rows",
]
