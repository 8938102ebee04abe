"""Cyclic coordinate descent for l1-penalized quadratics.

Solves min_x 0.5 x'Ax - b'x + lam ||x||_1 for PSD A. One kernel serves both
the proximal-Newton subproblem of the survival Lasso and the nodewise
regressions on the Hessian. Sweeps run over a working set (nonzeros plus KKT
violators) in ascending index order, so results are deterministic. The inner
sweep is jit-compiled when numba is available; the fallback is bit-for-bit
the same update sequence in plain Python.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a soft dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        return deco if not (args and callable(args[0])) else args[0]


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@njit(cache=True)
def _cd_sweeps(A, b, lam, x, r, work, coord_tol, max_sweeps):
    """Sweep the working set until coordinate updates stall; mutates x and r."""
    n = A.shape[0]
    for sweep in range(max_sweeps):
        delta = 0.0
        for idx in range(work.shape[0]):
            k = work[idx]
            d = A[k, k]
            if d <= 0.0:
                continue
            z = b[k] - (r[k] - d * x[k])
            if z > lam:
                new = (z - lam) / d
            elif z < -lam:
                new = (z + lam) / d
            else:
                new = 0.0
            step = new - x[k]
            if step != 0.0:
                for i in range(n):
                    r[i] += A[i, k] * step
                x[k] = new
                if abs(step) > delta:
                    delta = abs(step)
        if delta <= coord_tol:
            return sweep + 1
    return max_sweeps


def solve_penalized_quadratic(
    A: np.ndarray,
    b: np.ndarray,
    lam: float,
    x0: np.ndarray | None = None,
    skip: int | None = None,
    coord_tol: float = 1e-10,
    max_passes: int = 50,
    max_sweeps_per_pass: int = 50,
):
    """Minimize 0.5 x'Ax - b'x + lam ||x||_1 by active-set cyclic CD.

    `skip` pins one coordinate at zero (used by the nodewise regressions,
    which operate on the full matrix with the target column masked).

    Returns (x, kkt_violation, converged). The KKT violation is measured on
    the subgradient residual A x - b + lam * sign(x), excluding `skip`.
    """
    A = np.ascontiguousarray(A, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    p = A.shape[0]
    x = np.zeros(p) if x0 is None else np.array(x0, dtype=float)
    if skip is not None:
        x[skip] = 0.0
    r = _matvec(A, x)
    lam = float(lam)
    admit_slack = 1e-12
    not_skip = _not_skip_mask(p, skip)

    for _ in range(max_passes):
        # grow the working set from a full KKT pass
        g = r - b
        viol_zero = (np.abs(g) > lam + admit_slack) & (x == 0.0)
        work = np.flatnonzero(((x != 0.0) | viol_zero) & not_skip)
        if work.size == 0:
            return x, _kkt_violation(g, x, lam, skip), True

        _cd_sweeps(A, b, lam, x, r, work, float(coord_tol), max_sweeps_per_pass)

        r = _matvec(A, x)  # refresh to drop incremental drift
        g = r - b
        kkt = _kkt_violation(g, x, lam, skip)
        if kkt <= max(10 * coord_tol, 1e-9) and not np.any(
            (np.abs(g) > lam + admit_slack) & (x == 0.0) & not_skip
        ):
            return x, kkt, True

    return x, _kkt_violation(_matvec(A, x) - b, x, lam, skip), False


def _matvec(A, x):
    """A @ x exploiting sparsity of x (supports are tiny in the nodewise runs)."""
    nz = np.flatnonzero(x)
    if nz.size == 0:
        return np.zeros(A.shape[0])
    if nz.size * 8 < A.shape[0]:
        return A[:, nz] @ x[nz]
    return A @ x


def _not_skip_mask(p, skip):
    if skip is None:
        return np.ones(p, dtype=bool)
    m = np.ones(p, dtype=bool)
    m[skip] = False
    return m


def _kkt_violation(g, x, lam, skip=None):
    """Max subgradient residual: active coords need g = -lam*sign(x), inactive |g| <= lam."""
    active = x != 0.0
    if skip is not None:
        g = g.copy()
        g[skip] = 0.0
        active = active.copy()
        active[skip] = False
    v_active = np.abs(g[active] + lam * np.sign(x[active]))
    v_inactive = np.maximum(np.abs(g[~active]) - lam, 0.0)
    hi = 0.0
    if v_active.size:
        hi = float(v_active.max())
    if v_inactive.size:
        hi = max(hi, float(v_inactive.max()))
    return hi
