"""Relaxed inverse of the fitted Hessian via nodewise l1 regressions.

Because the Hessian factors as a Gram matrix, regressing one factor column
on the rest is the same quadratic program as working directly on the p x p
Hessian, so the huge factor matrix is never formed. Row j of the output is
(1/tau_j^2) * (e_j - embedded gamma_j), and each row carries the certificate

    || Sigma theta_j - e_j ||_inf  <=  lam_j / tau_j^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._cd import solve_penalized_quadratic
from .data import SurvivalDataset
from .errors import ConvergenceError, NoEventsError, PrecisionError, ScenarioError
from .lasso import _fold_assignment
from .partial_likelihood import hessian

CERT_SLACK = 1e-6
SE_RULE_FRACTION = 0.25


@dataclass(frozen=True)
class PrecisionSurrogate:
    """Nodewise coefficients, scales and the assembled relaxed inverse."""

    gamma: list[np.ndarray]
    tau_sq: np.ndarray
    theta: np.ndarray
    lambdas: np.ndarray

    @property
    def p(self) -> int:
        return self.theta.shape[0]


def nodewise_regression(sigma_hat: np.ndarray, j: int, lambda_j: float,
                        warm_start: np.ndarray | None = None) -> np.ndarray:
    """gamma_j minimizing the column-j nodewise objective at penalty lambda_j.

    Solved on the p x p matrix with coordinate j masked; the optional warm
    start is a full-length vector whose j-th entry is ignored.
    """
    if lambda_j <= 0:
        raise ValueError("lambda_j must be positive")
    p = sigma_hat.shape[0]
    if p == 1:
        return np.zeros(0)
    b = sigma_hat[:, j].copy()
    x, kkt, ok = solve_penalized_quadratic(
        sigma_hat, b, float(lambda_j), x0=warm_start, skip=j
    )
    if not ok or kkt > 1e-8:
        raise ConvergenceError(
            f"nodewise regression for coordinate {j} did not meet its KKT "
            f"certificate (residual {kkt:.2e})"
        )
    return np.delete(x, j)


def tau_squared(sigma_hat: np.ndarray, j: int, gamma_j: np.ndarray) -> float:
    """Residual scale: sigma_jj minus the explained part of column j."""
    others = np.delete(np.arange(sigma_hat.shape[0]), j)
    t2 = float(sigma_hat[j, j] - sigma_hat[j, others] @ gamma_j)
    if t2 <= 0.0:
        raise PrecisionError(
            f"nonpositive residual scale tau^2 at coordinate {j} "
            "(ill-conditioned Hessian or penalty too small)",
            coordinate=j,
        )
    return t2


def default_lambdas(p: int, n: int, c: float = 0.5) -> np.ndarray:
    """Rate-based fallback penalties c * sqrt(log p / n) when CV is off."""
    return np.full(p, c * np.sqrt(np.log(max(p, 2)) / n))


def build_precision(sigma_hat: np.ndarray, lambdas) -> PrecisionSurrogate:
    """Run all p nodewise regressions and assemble the relaxed inverse."""
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    p = sigma_hat.shape[0]
    lambdas = np.asarray(lambdas, dtype=float).reshape(-1)
    if lambdas.shape[0] != p:
        raise ValueError("need one penalty per coordinate")
    gammas = []
    tau_sq = np.empty(p)
    theta = np.zeros((p, p))
    for j in range(p):
        if p == 1:
            gamma_j = np.zeros(0)
        else:
            gamma_j = nodewise_regression(sigma_hat, j, float(lambdas[j]))
        gammas.append(gamma_j)
        tau_sq[j] = tau_squared(sigma_hat, j, gamma_j)
        row = np.zeros(p)
        row[j] = 1.0
        row[np.arange(p) != j] = -gamma_j
        theta[j] = row / tau_sq[j]
    resid = sigma_hat @ theta.T - np.eye(p)
    bound = lambdas / tau_sq + CERT_SLACK
    worst = np.abs(resid).max(axis=0)
    if np.any(worst > bound):
        j_bad = int(np.argmax(worst - bound))
        raise PrecisionError(
            f"relaxed-inverse certificate failed at coordinate {j_bad} "
            f"({worst[j_bad]:.2e} > {bound[j_bad]:.2e})",
            coordinate=j_bad,
        )
    return PrecisionSurrogate(gamma=gammas, tau_sq=tau_sq, theta=theta, lambdas=lambdas)


def _nodewise_grid(sigma_hat, j, size, min_ratio):
    others_max = float(np.max(np.abs(np.delete(sigma_hat[:, j], j))))
    if others_max <= 0.0:
        return None
    return others_max * np.logspace(0.0, np.log10(min_ratio), size)


def cv_nodewise(
    ds: SurvivalDataset,
    beta_hat: np.ndarray,
    folds: int = 10,
    seed: int = 0,
    grid_size: int = 10,
    grid_min_ratio: float = 0.01,
    c_default: float = 0.5,
) -> np.ndarray:
    """Per-coordinate penalties by K-fold quadratic prediction error.

    Folds are formed on observations; the Hessian at `beta_hat` is recomputed
    on each training part, candidate fits are scored by the validation
    quadratic form v' Sigma_val v with v = e_j - embedded gamma. Near-ties
    (within a quarter standard error of the best mean loss) resolve toward
    the heavier penalty. Deterministic given `seed`.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if ds.n < folds:
        raise ValueError(f"n={ds.n} smaller than folds={folds}")
    p = ds.p
    fallback = default_lambdas(p, ds.n, c_default)
    if p == 1:
        return fallback

    sigma_full = hessian(ds, beta_hat)
    grids = [_nodewise_grid(sigma_full, j, grid_size, grid_min_ratio) for j in range(p)]

    assign = None
    for attempt in range(20):
        cand = _fold_assignment(ds.n, folds, np.random.default_rng(seed + attempt))
        ok = all(ds.status[cand != k].sum() >= 1 for k in range(folds))
        if ok:
            assign = cand
            break
    if assign is None:
        raise ScenarioError("could not form folds whose training parts all retain an event")

    losses = np.full((folds, p, grid_size), np.nan)
    used_folds = 0
    for k in range(folds):
        train_rows = np.flatnonzero(assign != k)
        val_rows = np.flatnonzero(assign == k)
        sigma_train = hessian(ds.subset(train_rows), beta_hat)
        try:
            sigma_val = hessian(ds.subset(val_rows), beta_hat)
        except NoEventsError:
            continue  # eventless validation folds rank every candidate equally
        used_folds += 1
        for j in range(p):
            if grids[j] is None:
                continue
            warm = None
            for gi, lam in enumerate(grids[j]):
                x, _, ok = solve_penalized_quadratic(
                    sigma_train, sigma_train[:, j].copy(), float(lam), x0=warm, skip=j
                )
                if not ok:
                    losses[k, j, gi] = np.inf
                    continue
                warm = x.copy()
                v = -x
                v[j] = 1.0
                losses[k, j, gi] = float(v @ sigma_val @ v)

    # parsimony tie-break: heaviest penalty whose mean loss stays within a
    # quarter of a fold-level standard error of the minimum
    out = np.empty(p)
    for j in range(p):
        cells = losses[:, j, :]
        valid = ~np.isnan(cells).all(axis=1)
        if grids[j] is None or used_folds == 0 or not valid.any():
            out[j] = fallback[j]
            continue
        cells = cells[valid]
        mean = cells.mean(axis=0)
        if not np.any(np.isfinite(mean)):
            out[j] = fallback[j]
            continue
        best = int(np.nanargmin(np.where(np.isfinite(mean), mean, np.inf)))
        se = cells[:, best].std(ddof=1) / np.sqrt(cells.shape[0]) if cells.shape[0] > 1 else 0.0
        slack = SE_RULE_FRACTION * se
        ok_idx = np.flatnonzero(np.isfinite(mean) & (mean <= mean[best] + slack))
        out[j] = grids[j][int(ok_idx.min())]  # grid is descending: min index = largest lam
    return out
