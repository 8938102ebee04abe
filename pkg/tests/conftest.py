"""Shared fixtures and independent reference implementations.

The references here are deliberately naive (double loops over the defining
sums, finite differences, literal factor-matrix construction, grid searches)
so that the package's optimized paths are checked against something that
cannot share their bugs.
"""

from __future__ import annotations

import numpy as np
import pytest

import hdcox as hx


def random_instance(seed, n=25, p=3, censor_q=0.8, beta_scale=0.5):
    """Small censored dataset with continuous times and a mild true signal."""
    rng = np.random.default_rng(seed)
    x = np.clip(rng.standard_normal((n, p)), -3, 3)
    beta_true = beta_scale * rng.standard_normal(p)
    t = rng.exponential(np.exp(-(x @ beta_true)))
    c = np.quantile(t, censor_q)
    y = np.minimum(t, c)
    delta = (t <= c).astype(float)
    if delta.sum() < 1:
        delta[np.argmin(y)] = 1.0
    return hx.new_dataset(y, delta, x)


@pytest.fixture
def tiny_ds():
    """The two-observation instance whose values are known by hand."""
    return hx.new_dataset([1.0, 2.0], [1, 1], [[1.0], [0.0]])


# ---------------------------------------------------------------------------
# naive references

def naive_mu(ds, beta, t, order=0):
    """Defining sum for the risk-set moments, straight double loop."""
    acc = 0.0 if order == 0 else np.zeros(ds.p)
    for j in range(ds.n):
        if ds.times[j] >= t:
            w = np.exp(float(ds.design[j] @ beta))
            acc = acc + w * (1.0 if order == 0 else ds.design[j])
    return acc / ds.n


def naive_neg_log_pl(ds, beta):
    total = 0.0
    for i in range(ds.n):
        if ds.status[i] == 1:
            mu0 = naive_mu(ds, beta, ds.times[i], order=0)
            total += float(ds.design[i] @ beta) - np.log(mu0)
    return -total / ds.n


def fd_gradient(f, beta, eps=1e-5):
    beta = np.asarray(beta, dtype=float)
    g = np.zeros(beta.size)
    for j in range(beta.size):
        hi, lo = beta.copy(), beta.copy()
        hi[j] += eps
        lo[j] -= eps
        g[j] = (f(hi) - f(lo)) / (2 * eps)
    return g


def literal_factor_matrix(ds, beta):
    """The (n^2 x p) factor whose Gram product is the Hessian, built literally.

    Row (i, j) is nonzero only when observation i is an event and j is in its
    risk set; it holds the square-root-weighted centered covariate row.
    """
    n, p = ds.n, ds.p
    beta = np.asarray(beta, dtype=float)
    rows = np.zeros((n * n, p))
    for i in range(n):
        if ds.status[i] != 1:
            continue
        mu0 = naive_mu(ds, beta, ds.times[i], order=0)
        mu1 = naive_mu(ds, beta, ds.times[i], order=1)
        center = mu1 / mu0
        for j in range(n):
            if ds.times[j] >= ds.times[i]:
                w = np.sqrt(np.exp(float(ds.design[j] @ beta)) / mu0)
                rows[i * n + j] = (ds.design[j] - center) * w / n
    return rows


def brute_force_lasso_2d(ds, lam, span=2.5, coarse=41, polish_rounds=40):
    """Grid search plus coordinate-wise golden-section polish on p <= 2.

    Independent of the package solver: evaluates the penalized objective
    directly on a shrinking lattice.
    """

    def objective(beta):
        return hx.neg_log_partial_likelihood(ds, beta) + 2 * lam * np.abs(beta).sum()

    p = ds.p
    grids = [np.linspace(-span, span, coarse) for _ in range(p)]
    best, best_val = None, np.inf
    mesh = np.meshgrid(*grids, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    for candidate in flat:
        val = objective(candidate)
        if val < best_val:
            best, best_val = candidate.copy(), val
    width = 2 * span / (coarse - 1)
    for _ in range(polish_rounds):
        improved = False
        for j in range(p):
            for mult in (-1.0, -0.5, 0.5, 1.0):
                cand = best.copy()
                cand[j] += mult * width
                # snap near-zero candidates onto the kink of the l1 term
                if abs(cand[j]) < 0.6 * width:
                    cand[j] = 0.0
                val = objective(cand)
                if val < best_val - 1e-14:
                    best, best_val = cand, val
                    improved = True
        if not improved:
            width *= 0.5
        if width < 1e-7:
            break
    return best
