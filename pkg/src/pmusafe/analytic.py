"""First-order (linearised) propagation of input uncertainties."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtri

from .distributions import InputSet, validate
from .errors import PropagationError
from .model import MeasurementModel, gradient
from .montecarlo import PropagationResult, column_order


def coverage_factor(coverage: float) -> float:
    """1.96 for the customary 95% level, the normal quantile otherwise."""
    if not 0 < coverage < 1:
        raise ValueError(f"coverage must lie in (0, 1), got {coverage}")
    if coverage == 0.95:
        return 1.96
    return float(ndtri(0.5 * (1 + coverage)))


def _linearise(model: MeasurementModel, inputs: InputSet):
    order = column_order(model, inputs)
    mu = inputs.means[order]
    cov = inputs.covariance[np.ix_(order, order)]
    # Inputs without variance contribute nothing; skipping them avoids
    # differentiating where it does not matter.
    active = [i for i in range(len(order)) if cov[i, i] > 0]
    estimate = model(mu)
    return estimate, gradient(model, mu, active), cov


def _result(estimate, u, coverage, method):
    k = coverage_factor(coverage)
    return PropagationResult(
        estimate=estimate,
        u_prop=u,
        interval=(estimate - k * u, estimate + k * u),
        method=method,
        coverage=coverage,
    )


def propagate_uncorrelated(model: MeasurementModel, inputs: InputSet, coverage: float = 0.95) -> PropagationResult:
    """Root-sum-square of sensitivity-weighted standard uncertainties, at the input means."""
    validate(inputs)
    cov = inputs.covariance
    if np.any(cov[~np.eye(inputs.n, dtype=bool)] != 0):
        raise PropagationError(
            "inputs are correlated; use propagate_correlated", "correlated-inputs-rejected"
        )
    estimate, g, cov = _linearise(model, inputs)
    u = math.sqrt(float(np.sum(g**2 * np.diag(cov))))
    return _result(estimate, u, coverage, "analytic-uncorrelated")


def propagate_correlated(model: MeasurementModel, inputs: InputSet, coverage: float = 0.95) -> PropagationResult:
    """Full quadratic form g^T Σ g of the sensitivity vector g, at the input means."""
    validate(inputs)
    estimate, g, cov = _linearise(model, inputs)
    var = float(g @ cov @ g)
    if var < 0:
        # Rounding on a PSD matrix can leave a tiny negative value.
        scale = float(np.abs(g) @ np.abs(cov) @ np.abs(g))
        if var < -1e-12 * scale:
            raise PropagationError(
                f"negative propagated variance {var:.3g}; covariance inconsistent", "negative-radicand"
            )
        var = 0.0
    return _result(estimate, math.sqrt(var), coverage, "analytic-correlated")
