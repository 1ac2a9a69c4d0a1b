import os

# Annealing schedule defaults
DEFAULT_T0 = 0.99
DEFAULT_ALPHA = 0.8
DEFAULT_K = 0.1
DEFAULT_WAIT = 10
DEFAULT_STOP = 20
DEFAULT_T_MIN = 1e-6
DEFAULT_RESTARTS = 1

DEFAULT_HILL_CLIMB_STEPS = 1000

# Numerical tolerances
ROW_TOLERANCE = 1e-6
IMPROVEMENT_EPSILON = 1e-12
DRIFT_TOLERANCE = 1e-6
RESCALE_HIGH = 1e100
RESCALE_LOW = 1e-100

DEFAULT_ORACLE_CAP = 2**20
ORACLE_CAP_ENV = "AMAP_ORACLE_CAP"
LOG_LEVEL_ENV = "AMAP_LOG_LEVEL"

# Seed stream used for problem generation inside a benchmark case
PROBLEM_STREAM = 0x5EED

REPORT_COLUMNS = (
    "network",
    "case_id",
    "algorithm",
    "seed",
    "log10_prob",
    "prob",
    "sweeps",
    "restarts_used",
    "best_found_sweep",
    "reheats",
    "wall_ms",
    "matches_oracle",
    "n_map",
    "n_evid",
)

TRACE_COLUMNS = (
    "component",
    "restart",
    "sweep",
    "temperature",
    "current_logp",
    "best_logp",
    "specific_heat",
    "reheated",
    "resampled",
)


def oracle_cap() -> int:
    raw = os.environ.get(ORACLE_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_ORACLE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"{ORACLE_CAP_ENV} must be an integer, got {raw!r}")
    if cap < 1:
        raise ValueError(f"{ORACLE_CAP_ENV} must be positive, got {cap}")
    return cap


def log_level(verbosity: int = 0) -> str:
    if verbosity >= 2:
        return "DEBUG"
    if verbosity == 1:
        return "INFO"
    return os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
