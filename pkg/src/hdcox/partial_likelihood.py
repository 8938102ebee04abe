"""Negative log partial likelihood of the working hazard model.

Value, exact gradient and exact Hessian for
    l(beta) = -(1/n) sum_i status_i * [x_i'beta - log mu0(Y_i; beta)],
all driven by one risk-moments pass per beta. The Hessian is also available
through an independent factored route (per-event weighted centered outer
products) used as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RiskMoments, SurvivalDataset, risk_moments


@dataclass(frozen=True)
class PartialLikelihoodEval:
    """One evaluation of the objective at a fixed beta."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray | None
    moments: RiskMoments


def evaluate(ds: SurvivalDataset, beta, with_hessian: bool = False) -> PartialLikelihoodEval:
    """Value and gradient (optionally Hessian) from a single moments sweep."""
    rm = risk_moments(ds, beta)
    pos = rm.event_pos
    eta_events = rm.x_sorted[pos] @ np.asarray(beta, dtype=float)
    n = rm.n
    value = -(eta_events - rm.log_mu0).sum() / n
    means = rm.mean_at_events()
    grad = -(rm.x_sorted[pos] - means).sum(axis=0) / n
    hess = _hessian_from_moments(rm) if with_hessian else None
    return PartialLikelihoodEval(value=float(value), gradient=grad, hessian=hess, moments=rm)


def _hessian_from_moments(rm: RiskMoments) -> np.ndarray:
    # (1/n) sum_events [mu2/mu0 - mean mean'], both halves as single Gram products
    second = rm.mu2_weighted_sum(1.0 / rm.s0_rev[rm.risk_start])
    means = rm.mean_at_events()
    h = (second - means.T @ means) / rm.n
    return (h + h.T) / 2.0


def neg_log_partial_likelihood(ds: SurvivalDataset, beta) -> float:
    return evaluate(ds, beta).value


def gradient(ds: SurvivalDataset, beta) -> np.ndarray:
    return evaluate(ds, beta).gradient


def hessian(ds: SurvivalDataset, beta) -> np.ndarray:
    return evaluate(ds, beta, with_hessian=True).hessian


def hessian_via_factor(ds: SurvivalDataset, beta) -> np.ndarray:
    """Hessian by summing weighted centered outer products per event.

    Independent of `hessian`: each event contributes
    (1/n) * sum_{j in risk set} wtilde_ij (x_j - m_i)(x_j - m_i)'
    with risk-set weights wtilde summing to one. Quadratic in n; intended for
    identity checks at small n.
    """
    rm = risk_moments(ds, beta)
    means = rm.mean_at_events()
    p = rm.x_sorted.shape[1]
    acc = np.zeros((p, p))
    for i, start in enumerate(rm.risk_start):
        wt = rm.w_sorted[start:] / rm.s0_rev[start]
        z = rm.x_sorted[start:] - means[i]
        acc += (z * wt[:, None]).T @ z
    acc /= rm.n
    return (acc + acc.T) / 2.0


def risk_set_weights(ds: SurvivalDataset, beta) -> np.ndarray:
    """Risk-set weight matrix wtilde, one row per event, columns in original order.

    wtilde[i, j] = 1(Y_j >= Y_(i)) exp(x_j'beta) / (n * mu0(Y_(i))); every row
    sums to one. Materializes an (events x n) block, so test-scale only.
    """
    rm = risk_moments(ds, beta)
    m = rm.event_pos.shape[0]
    out = np.zeros((m, ds.n))
    inv_order = ds.sort_order  # column j of the sorted block maps back via this
    for i, start in enumerate(rm.risk_start):
        row_sorted = np.zeros(ds.n)
        row_sorted[start:] = rm.w_sorted[start:] / rm.s0_rev[start]
        out[i, inv_order] = row_sorted
    return out
