"""Censored survival data: validated container, time ordering, risk-set moments.

Everything downstream consumes observations through `SurvivalDataset` (which
fixes a stable ascending-time order once) and `risk_moments` (which evaluates
the weighted risk-set averages at the event times via one reverse cumulative
sweep).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    NoEventsError,
    NonFiniteError,
    NonPositiveTimeError,
    SchemaError,
    SolverError,
)


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SurvivalDataset:
    """Validated (time, status, covariates) triple with a fixed sort order.

    `sort_order` is the stable permutation putting times in ascending order;
    ties keep their original relative position. Instances are immutable and
    safe to share across threads.
    """

    times: np.ndarray
    status: np.ndarray
    design: np.ndarray
    sort_order: np.ndarray

    @property
    def n(self) -> int:
        return self.times.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.status.sum())

    @property
    def times_sorted(self) -> np.ndarray:
        return self.times[self.sort_order]

    @property
    def status_sorted(self) -> np.ndarray:
        return self.status[self.sort_order]

    @property
    def design_sorted(self) -> np.ndarray:
        return self.design[self.sort_order]

    @property
    def event_positions(self) -> np.ndarray:
        """Positions (within the ascending-time order) of the event rows."""
        return np.flatnonzero(self.status_sorted == 1)

    def subset(self, rows: np.ndarray) -> "SurvivalDataset":
        """New dataset from a row selection; risk sets are re-derived inside it."""
        rows = np.asarray(rows)
        return new_dataset(self.times[rows], self.status[rows], self.design[rows])


def new_dataset(times, status, design) -> SurvivalDataset:
    """Validate raw arrays and build a `SurvivalDataset`.

    Raises a distinct error per defect: mismatched lengths, non-finite
    entries, nonpositive times, and zero events.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    status = np.asarray(status, dtype=float).reshape(-1)
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design.reshape(-1, 1)
    n = times.shape[0]
    if status.shape[0] != n or design.shape[0] != n:
        raise DimensionMismatchError(
            f"times ({n}), status ({status.shape[0]}) and design rows "
            f"({design.shape[0]}) must agree"
        )
    if n < 2:
        raise DimensionMismatchError("need at least two observations")
    if design.shape[1] < 1:
        raise DimensionMismatchError("design needs at least one column")
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(design))):
        raise NonFiniteError("times and design must be finite")
    if not np.all(np.isfinite(status)):
        raise NonFiniteError("status must be finite")
    if np.any(times <= 0):
        raise NonPositiveTimeError("times must be strictly positive")
    uniq = np.unique(status)
    if not np.all(np.isin(uniq, (0.0, 1.0))):
        raise SchemaError(f"status must be 0/1, saw values {uniq[:5]}")
    status = status.astype(np.int8)
    if status.sum() < 1:
        raise NoEventsError("no events in the data (all observations censored)")
    order = np.argsort(times, kind="stable")
    return SurvivalDataset(
        times=_frozen(times),
        status=_frozen(status),
        design=_frozen(design),
        sort_order=_frozen(order),
    )


def load_csv(path) -> SurvivalDataset:
    """Read `time,status,<features...>` with a header row.

    Rows with any empty cell are dropped (no imputation) with a warning;
    malformed cells or a bad header raise `SchemaError`.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "time" or header[1] != "status":
            raise SchemaError(
                f"{path}: header must be time,status,<feature...>; got {header[:4]}"
            )
        width = len(header)
        rows = []
        n_rejected = 0
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            cells = [c.strip() for c in raw]
            if len(cells) != width or any(c == "" for c in cells):
                n_rejected += 1
                continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
    if n_rejected:
        warnings.warn(f"{path}: dropped {n_rejected} row(s) with missing cells")
    if not rows:
        raise SchemaError(f"{path}: no usable data rows")
    arr = np.asarray(rows, dtype=float)
    return new_dataset(arr[:, 0], arr[:, 1], arr[:, 2:])


@dataclass(frozen=True)
class RiskMoments:
    """Risk-set averages at the event times for a fixed coefficient vector.

    `mu0[i]` and `mu1[i]` are the order-0/1 weighted risk-set means at the
    i-th event time (ascending). The order-2 moment is exposed only through
    operators (`mu2_over_mu0_quadratic`, `mu2_weighted_sum`) so no p x p
    block is ever stored per event time. Linear predictors are shifted by
    their max before exponentiation; ratios are shift-free and `log_mu0`
    adds the shift back exactly once.
    """

    event_times: np.ndarray
    mu0: np.ndarray
    mu1: np.ndarray
    log_mu0: np.ndarray
    shift: float
    # stabilized internals, all in ascending-time order
    event_pos: np.ndarray = field(repr=False)
    risk_start: np.ndarray = field(repr=False)
    w_sorted: np.ndarray = field(repr=False)
    x_sorted: np.ndarray = field(repr=False)
    s0_rev: np.ndarray = field(repr=False)
    times_sorted: np.ndarray = field(repr=False)
    s1_rev: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.w_sorted.shape[0]

    def mean_at_events(self) -> np.ndarray:
        """mu1 / mu0 per event, computed in the shifted scale."""
        return self.s1_rev[self.risk_start] / self.s0_rev[self.risk_start, None]

    def mu2_over_mu0_quadratic(self, v) -> np.ndarray:
        """Per-event values of v' (mu2/mu0) v."""
        z = self.x_sorted @ np.asarray(v, dtype=float)
        s2v = np.cumsum((self.w_sorted * z * z)[::-1])[::-1]
        return s2v[self.risk_start] / self.s0_rev[self.risk_start]

    def mu2_weighted_sum(self, coeffs) -> np.ndarray:
        """Sum_i coeffs[i] * (stabilized mu2 sum at Y_i), as one p x p matrix.

        The stabilized order-2 sum at event i is Sum_{j in risk set} w_j x_j x_j'.
        Pushing the per-event coefficients onto risk-set rows turns the double
        sum into a cumulative sum plus a single weighted Gram product; callers
        fold any normalization (n, mu0) into `coeffs` via `s0_rev`.
        """
        c = np.asarray(coeffs, dtype=float)
        a = np.zeros(self.n)
        np.add.at(a, self.risk_start, c)
        a = np.cumsum(a)
        wa = self.w_sorted * a
        return (self.x_sorted * wa[:, None]).T @ self.x_sorted

    def mu0_at(self, ts) -> np.ndarray:
        """Evaluate mu0 at arbitrary times (true scale)."""
        idx = np.searchsorted(self.times_sorted, np.atleast_1d(ts), side="left")
        s0 = np.concatenate([self.s0_rev, [0.0]])
        return np.exp(self.shift) * (s0[idx] / self.n)

    def mu1_at(self, ts) -> np.ndarray:
        """Evaluate mu1 at arbitrary times (true scale), one row per time."""
        idx = np.searchsorted(self.times_sorted, np.atleast_1d(ts), side="left")
        s1 = np.vstack([self.s1_rev, np.zeros(self.x_sorted.shape[1])])
        return np.exp(self.shift) * (s1[idx] / self.n)


def risk_moments(ds: SurvivalDataset, beta) -> RiskMoments:
    """Order-0/1 risk-set moments at every event time, one O(n p) sweep."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != ds.p:
        raise DimensionMismatchError(f"beta has length {beta.shape[0]}, expected {ds.p}")
    if not np.all(np.isfinite(beta)):
        raise NonFiniteError("beta must be finite")
    x = ds.design_sorted
    eta = x @ beta
    shift = float(eta.max())
    w = np.exp(eta - shift)
    s0_rev = np.cumsum(w[::-1])[::-1]
    s1_rev = np.cumsum((x * w[:, None])[::-1], axis=0)[::-1]
    pos = ds.event_positions
    times_sorted = ds.times_sorted
    event_times = times_sorted[pos]
    # risk set of an event is keyed by its time, so ties share one start index
    start = np.searchsorted(times_sorted, event_times, side="left")
    if np.any(s0_rev[start] <= 0.0) or not np.all(np.isfinite(s0_rev)):
        raise SolverError(
            "risk-set mass vanished after stabilization; linear predictor "
            "spread violates the boundedness contract"
        )
    n = ds.n
    scale = np.exp(shift)  # applied after the 1/n division so beta=0 stays exact
    return RiskMoments(
        event_times=_frozen(event_times),
        mu0=_frozen(scale * (s0_rev[start] / n)),
        mu1=_frozen(scale * (s1_rev[start] / n)),
        log_mu0=_frozen(shift + np.log(s0_rev[start] / n)),
        shift=shift,
        event_pos=_frozen(pos),
        risk_start=_frozen(start),
        w_sorted=_frozen(w),
        x_sorted=x,
        s0_rev=_frozen(s0_rev),
        times_sorted=_frozen(times_sorted),
        s1_rev=_frozen(s1_rev),
    )
