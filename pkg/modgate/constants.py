"""Constants module for modgate."""

# Default values used if environment variables and the experiment config
# don't provide values
DEFAULT_VALUES = {
    "LOG_FILENAME": "modgate.log",
    "LOG_LEVEL": "DEBUG",
    "CON_LEVEL": "INFO",
}

# Environment variables consulted before the experiment config
ENV_PREFIX = "MODGATE_"

# Normalization tolerances
CONSTRUCTION_TOL = 1e-12
ARITHMETIC_TOL = 1e-9
ROW_SIMPLEX_TOL = 1e-10
PROJECTION_TOL = 1e-10
G1_MEMBERSHIP_TOL = 1e-6

# Cap applied to KL gains before multiplicative-weights updates (nats)
GAIN_CAP = 50.0

# Floor applied to pi_g in gradient denominators
PI_FLOOR = 1e-300

# Bisection budgets
BISECTION_MAX_ITER = 200
BRACKET_WIDEN = 10.0

# Sampling defaults
DEFAULT_SIR_CANDIDATES = 64
REJECTION_TRIALS_PER_EXPERT = 100

# Versioned text-format headers
EXPERT_HEADER = "modgate-expert v1"
GATE_TAB_HEADER = "modgate-gate-tab v1"
GATE_FEAT_HEADER = "modgate-gate-feat v1"
ROUTER_HEADER = "modgate-router v1"
CACHE_HEADER = "modgate-cache v1"
CORPUS_HEADER = "# modgate-corpus v1"

# Significant digits for every persisted float
FLOAT_FORMAT = ".17g"
