"""Propensity score estimation.

Logistic regression of T on [1, X] fitted by Newton-Raphson on the mean
log-likelihood. Fitted scores are clipped to [0.01, 0.99] so the overlap
condition holds numerically.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.special import expit

from causalsynth.constants import (
    PROPENSITY_CLIP_HIGH,
    PROPENSITY_CLIP_LOW,
    PROPENSITY_MAX_ITER,
    PROPENSITY_SEPARATION_BOUND,
    PROPENSITY_TOLERANCE,
)
from causalsynth.exceptions import PropensityError
from causalsynth.logging import get_logger
from causalsynth.models import ObservedData, PropensityModel

logger = get_logger(__name__)

CLIP_BOUNDS = (PROPENSITY_CLIP_LOW, PROPENSITY_CLIP_HIGH)


def estimate_propensity(
    data: ObservedData,
    *,
    max_iter: int = PROPENSITY_MAX_ITER,
    tolerance: float = PROPENSITY_TOLERANCE,
) -> tuple[PropensityModel, np.ndarray]:
    """Fit P(T=1 | X) and return the model with clipped fitted scores.

    Args:
        data: Observed data; only ``t`` and ``x`` are used.
        max_iter: Newton iteration limit.
        tolerance: Convergence threshold on the gradient norm of the mean
            log-likelihood.

    Raises:
        PropensityError: If one arm is empty, the Hessian is singular, or a
            coefficient exceeds 30 in absolute value (complete separation).
    """
    t = data.t
    if np.all(t == t[0]):
        raise PropensityError("Both treatment arms are required to estimate propensities")

    n = data.n
    design = np.column_stack([np.ones(n), data.x])
    coef = np.zeros(design.shape[1])
    gradient_norm = np.inf
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        p = expit(design @ coef)
        gradient = design.T @ (t - p) / n
        gradient_norm = float(np.linalg.norm(gradient))
        if gradient_norm < tolerance:
            converged = True
            iterations -= 1
            break
        hessian = (design * (p * (1.0 - p))[:, None]).T @ design / n
        try:
            coef = coef + linalg.solve(hessian, gradient, assume_a="pos")
        except (linalg.LinAlgError, ValueError) as e:
            raise PropensityError(
                "Propensity Hessian is singular; covariates may be collinear",
                {"iteration": iterations},
            ) from e
        if np.max(np.abs(coef)) > PROPENSITY_SEPARATION_BOUND:
            raise PropensityError(
                "Complete separation detected; supply known propensities with a pi column",
                {"iteration": iterations, "max_abs_coefficient": float(np.max(np.abs(coef)))},
            )
    else:
        p = expit(design @ coef)
        gradient_norm = float(np.linalg.norm(design.T @ (t - p) / n))
        converged = gradient_norm < tolerance

    if not converged:
        logger.warning(
            "Propensity model did not converge",
            extra={"iterations": iterations, "gradient_norm": gradient_norm},
        )

    model = PropensityModel(
        coefficients=[float(c) for c in coef],
        converged=converged,
        iterations=iterations,
        gradient_norm=gradient_norm,
    )
    logger.debug("Fitted propensity model", extra={"iterations": iterations})
    return model, model.predict(data.x, clip=CLIP_BOUNDS)


def resolve_propensity(data: ObservedData) -> ObservedData:
    """Return ``data`` with clipped propensities, estimating them when absent."""
    if data.pi is not None:
        return data.with_pi(np.clip(data.pi, *CLIP_BOUNDS))
    _, pi = estimate_propensity(data)
    return data.with_pi(pi)
