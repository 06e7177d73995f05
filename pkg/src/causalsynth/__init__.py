"""causalsynth - Bayesian synthesis of heterogeneous treatment effect estimators."""

__version__ = "0.1.0"
