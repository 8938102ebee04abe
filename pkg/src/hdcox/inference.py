"""Debiased coordinates, their variances, intervals and multiple testing.

The debiased estimate is beta_hat minus the relaxed inverse applied to the
score. Two variances are reported per coordinate: the sandwich form built
from per-observation score residuals (valid even when the hazard model is
wrong) and the model-based form theta' Hessian theta (valid only under a
correct model). The score residuals are evaluated at the fitted
coefficients; an oracle override is available for benchmarking against a
known generating value.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data import SurvivalDataset, risk_moments
from .errors import DimensionMismatchError, PrecisionError
from .nodewise import PrecisionSurrogate
from .lasso import LassoFit
from .partial_likelihood import evaluate, hessian


@dataclass(frozen=True)
class ScoreResiduals:
    """Per-observation score contributions v_i, rows in original order."""

    v_hat: np.ndarray


@dataclass(frozen=True)
class InferenceReport:
    b_hat: np.ndarray
    sigma_robust: np.ndarray
    sigma_model: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    z_scores: np.ndarray
    p_values: np.ndarray
    p_holm: np.ndarray
    level: float
    variance: str
    n: int


def desparsify(ds: SurvivalDataset, fit: LassoFit, prec: PrecisionSurrogate) -> np.ndarray:
    """Debiased coordinates: subtract the relaxed-inverse-projected score."""
    if fit.beta_hat.shape[0] != ds.p or prec.p != ds.p:
        raise DimensionMismatchError("fit, precision surrogate and data disagree on p")
    grad = evaluate(ds, fit.beta_hat).gradient
    return fit.beta_hat - prec.theta @ grad


def score_residuals(ds: SurvivalDataset, beta) -> ScoreResiduals:
    """Event part minus compensator for every observation, O(n p) overall.

    The compensator accumulates, along ascending event times, the inverse
    risk-set masses and risk-set means; each observation then reads the two
    cumulative sums at its own time.
    """
    rm = risk_moments(ds, beta)
    n, p = rm.n, rm.x_sorted.shape[1]
    means = rm.mean_at_events()

    event_part = np.zeros((n, p))
    event_part[rm.event_pos] = rm.x_sorted[rm.event_pos] - means

    inv_mass = 1.0 / rm.s0_rev[rm.risk_start]
    e0 = np.zeros(n)
    np.add.at(e0, rm.event_pos, inv_mass)
    e1 = np.zeros((n, p))
    np.add.at(e1, rm.event_pos, means * inv_mass[:, None])
    cum0 = np.cumsum(e0)
    cum1 = np.cumsum(e1, axis=0)

    # number of sorted entries with time <= own time; >= 1 for every row
    idx = np.searchsorted(rm.times_sorted, rm.times_sorted, side="right") - 1
    a = cum0[idx]
    b = cum1[idx]
    comp = rm.w_sorted[:, None] * (rm.x_sorted * a[:, None] - b)

    v_sorted = event_part - comp
    v = np.empty_like(v_sorted)
    v[ds.sort_order] = v_sorted
    return ScoreResiduals(v_hat=v)


def robust_variance(
    ds: SurvivalDataset,
    beta_hat,
    prec: PrecisionSurrogate,
    at_beta=None,
) -> np.ndarray:
    """Sandwich variances: mean squared projections of the score residuals.

    sigma_j^2 = (1/n) sum_i (theta_j' v_i)^2, computed row-wise so the p x p
    middle matrix never materializes. `at_beta` evaluates the residuals at a
    supplied coefficient vector instead of the fitted one (oracle mode).
    """
    point = beta_hat if at_beta is None else at_beta
    v = score_residuals(ds, point).v_hat
    proj = v @ prec.theta.T
    sig2 = np.mean(proj * proj, axis=0)
    if np.any(sig2 <= 0.0):
        j = int(np.argmin(sig2))
        raise PrecisionError(
            f"zero variance: score-residual projections vanish at coordinate {j}",
            coordinate=j,
        )
    return sig2


def model_variance(ds: SurvivalDataset, beta_hat, prec: PrecisionSurrogate) -> np.ndarray:
    """Model-based variances theta_j' Hessian theta_j."""
    sigma = hessian(ds, beta_hat)
    return np.einsum("jk,kl,jl->j", prec.theta, sigma, prec.theta)


def holm_adjust(p_values) -> np.ndarray:
    """Step-down adjusted p-values: sort, scale by remaining count, enforce
    monotonicity, cap at one."""
    p = np.asarray(p_values, dtype=float).reshape(-1)
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.shape[0]
    order = np.argsort(p, kind="stable")
    scaled = (m - np.arange(m)) * p[order]
    adj = np.minimum(np.maximum.accumulate(scaled), 1.0)
    out = np.empty(m)
    out[order] = adj
    return out


def confidence_intervals(
    b_hat,
    sigma_robust_sq,
    sigma_model_sq,
    n: int,
    level: float = 0.95,
    variance: str = "robust",
) -> InferenceReport:
    """Two-sided normal intervals, z-scores, p-values and their Holm adjustment.

    `variance` picks which sigma drives the intervals and tests; both sigmas
    are always carried in the report.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be inside (0, 1)")
    if variance not in ("robust", "model"):
        raise ValueError("variance must be 'robust' or 'model'")
    b_hat = np.asarray(b_hat, dtype=float)
    sig_r = np.sqrt(np.asarray(sigma_robust_sq, dtype=float))
    sig_m = np.sqrt(np.asarray(sigma_model_sq, dtype=float))
    sel = sig_r if variance == "robust" else sig_m
    if np.any(sel <= 0.0) or not np.all(np.isfinite(sel)):
        raise PrecisionError("selected standard errors must be positive and finite")
    z_crit = float(norm.ppf(0.5 + level / 2.0))
    half = z_crit * sel / np.sqrt(n)
    z = np.sqrt(n) * b_hat / sel
    pvals = 2.0 * norm.sf(np.abs(z))
    return InferenceReport(
        b_hat=b_hat,
        sigma_robust=sig_r,
        sigma_model=sig_m,
        ci_lower=b_hat - half,
        ci_upper=b_hat + half,
        z_scores=z,
        p_values=pvals,
        p_holm=holm_adjust(pvals),
        level=level,
        variance=variance,
        n=n,
    )


REPORT_FIELDS = (
    "j", "b_hat", "sigma_robust", "sigma_model",
    "ci_lo", "ci_hi", "z", "p", "p_holm",
)


def _report_rows(report: InferenceReport):
    for j in range(report.b_hat.shape[0]):
        yield {
            "j": j + 1,
            "b_hat": float(report.b_hat[j]),
            "sigma_robust": float(report.sigma_robust[j]),
            "sigma_model": float(report.sigma_model[j]),
            "ci_lo": float(report.ci_lower[j]),
            "ci_hi": float(report.ci_upper[j]),
            "z": float(report.z_scores[j]),
            "p": float(report.p_values[j]),
            "p_holm": float(report.p_holm[j]),
        }


def write_report_csv(report: InferenceReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_FIELDS)
        for row in _report_rows(report):
            writer.writerow(
                [row["j"]] + [format(row[k], ".12g") for k in REPORT_FIELDS[1:]]
            )


def write_report_jsonl(report: InferenceReport, path) -> None:
    with open(path, "w") as fh:
        for row in _report_rows(report):
            fh.write(json.dumps({k: row[k] for k in REPORT_FIELDS}) + "\n")
