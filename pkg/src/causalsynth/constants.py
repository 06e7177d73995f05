"""Constants and defaults for causalsynth.

This module contains the numerical defaults, file names and other fixed values
used throughout the package. Import from here instead of hardcoding values.
"""

from typing import Final

# =============================================================================
# VERSION
# =============================================================================
VERSION: Final[str] = "0.1.0"

# =============================================================================
# NNGP
# =============================================================================
DEFAULT_NEIGHBORS: Final[int] = 15
CORRELATION_JITTER: Final[float] = 1e-10
PHI_LOWER_FRACTION: Final[float] = 0.05  # lower range bound as a fraction of max distance
PHI_UPPER_FRACTION: Final[float] = 2.0
DEFAULT_COEFF_CACHE_SIZE: Final[int] = 64

# =============================================================================
# SAMPLER DEFAULTS
# =============================================================================
DEFAULT_N_ITER: Final[int] = 2000
DEFAULT_N_BURN: Final[int] = 500
DEFAULT_THIN: Final[int] = 1
DEFAULT_SEED: Final[int] = 20240101
DEFAULT_PHI_PROPOSAL_SD: Final[float] = 0.5  # in units of covariate distance
DEFAULT_LOG_EVERY: Final[int] = 250
DEFAULT_IG_SHAPE: Final[float] = 2.0  # delta in IG(delta/2, eta/2)
DEFAULT_IG_SCALE: Final[float] = 1.0  # eta in IG(delta/2, eta/2)

# =============================================================================
# AGENTS
# =============================================================================
SE_FLOOR: Final[float] = 1e-8
AM_BOOTSTRAP_REPS: Final[int] = 200
AM_MIN_ROWS: Final[int] = 20
AM_GCV_CYCLES: Final[int] = 10
AM_MAX_KNOTS: Final[int] = 20
AM_DISCRETE_MAX_LEVELS: Final[int] = 5  # columns with at most this many values use group means
AM_LAMBDA_GRID: Final[tuple[float, float, int]] = (-4.0, 4.0, 17)  # log10 range and size
AM_RIDGE_FLOOR: Final[float] = 1e-8  # per unit weight, keeps every smoother system definite
KNN_EXPONENT: Final[float] = 0.6
KNN_SUBSAMPLE_REPS: Final[int] = 100
ORACLE_NOISE_SD: Final[float] = 0.1
PROPENSITY_MAX_ITER: Final[int] = 100
PROPENSITY_TOLERANCE: Final[float] = 1e-8
PROPENSITY_SEPARATION_BOUND: Final[float] = 30.0
PROPENSITY_CLIP_LOW: Final[float] = 0.01
PROPENSITY_CLIP_HIGH: Final[float] = 0.99

# =============================================================================
# AGENT NAMES (for consistent referencing)
# =============================================================================
AGENT_LINEAR: Final[str] = "lm"
AGENT_ADDITIVE: Final[str] = "am"
AGENT_KNN: Final[str] = "knn"
AGENT_ORACLE: Final[str] = "oracle"
AGENT_EXTERNAL: Final[str] = "external"
METHOD_BCS: Final[str] = "bcs"

# =============================================================================
# SUMMARIES
# =============================================================================
INTERVAL_LEVEL: Final[float] = 0.95
CSV_FLOAT_FORMAT: Final[str] = "%.10g"

# =============================================================================
# FILES
# =============================================================================
CONFIG_FILE_NAME: Final[str] = ".causalsynth.yaml"
CHAIN_DIR_NAME: Final[str] = "chain"
CHAIN_MANIFEST_NAME: Final[str] = "manifest.json"
CHAIN_FORMAT_VERSION: Final[int] = 1
TAU_SUMMARY_FILE: Final[str] = "tau_summary.csv"
COEFFICIENTS_FILE: Final[str] = "coefficients.csv"
DIAGNOSTICS_FILE: Final[str] = "chain_diagnostics.json"
AGENTS_FILE: Final[str] = "agents.csv"
PREDICTIONS_FILE: Final[str] = "predictions.csv"
REPORT_CSV_FILE: Final[str] = "report.csv"
REPORT_JSON_FILE: Final[str] = "report.json"
REPLICATES_FILE: Final[str] = "replicates.csv"

# =============================================================================
# ENVIRONMENT
# =============================================================================
WORKERS_ENV_VAR: Final[str] = "CAUSALSYNTH_WORKERS"

# =============================================================================
# LOGGING
# =============================================================================
LOG_FORMAT: Final[str] = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
LOG_DATE_FORMAT: Final[str] = "%Y-%m-%d %H:%M:%S"

# =============================================================================
# GEWEKE TEST
# =============================================================================
GEWEKE_DRAWS: Final[int] = 5000
GEWEKE_MIN_DRAWS: Final[int] = 100
GEWEKE_BATCHES: Final[int] = 50
GEWEKE_N: Final[int] = 10
GEWEKE_AGENTS: Final[int] = 2
GEWEKE_NEIGHBORS: Final[int] = 3
GEWEKE_IG_DELTA: Final[float] = 10.0  # informative so monitored moments are finite
GEWEKE_IG_ETA: Final[float] = 10.0
GEWEKE_Z_THRESHOLD: Final[float] = 4.0
