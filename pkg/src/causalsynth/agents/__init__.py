"""Built-in treatment-effect agents and the propensity estimator.

Components:
    LinearAgent: OLS on [1, X, T, T*X]
    AdditiveAgent: Penalized additive model with bootstrap se
    KnnAgent: Nearest-neighbor T-learner with half-sampling se
    OracleAgent: Truth plus noise, simulation only
    ExternalAgent: Estimates read from a plug-in CSV file
    estimate_propensity: Logistic regression of T on X

Example:
    from causalsynth.agents import fit_knn_agent, resolve_propensity

    data = resolve_propensity(data)
    knn = fit_knn_agent(data, seed=3, j=1)
"""

from causalsynth.agents.additive import AdditiveAgent, fit_additive_agent
from causalsynth.agents.external import ExternalAgent
from causalsynth.agents.knn import KnnAgent, fit_knn_agent
from causalsynth.agents.linear import LinearAgent, fit_linear_agent
from causalsynth.agents.oracle import OracleAgent
from causalsynth.agents.propensity import estimate_propensity, resolve_propensity

__all__ = [
    "AdditiveAgent",
    "ExternalAgent",
    "KnnAgent",
    "LinearAgent",
    "OracleAgent",
    "estimate_propensity",
    "fit_additive_agent",
    "fit_knn_agent",
    "fit_linear_agent",
    "resolve_propensity",
]
