"""Figure rendering for the report paths.

The library emits delimited data; these helpers turn a finished report into
a PNG saved next to it. Import is headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .inference import InferenceReport
from .simulation import CoverageReport


def render_inference_figure(report: InferenceReport, path) -> str:
    """Interval plot of the debiased coordinates with both standard errors."""
    p = report.b_hat.shape[0]
    idx = np.arange(1, p + 1)
    half_sel = report.ci_upper - report.b_hat
    crit = half_sel / (report.sigma_robust if report.variance == "robust"
                       else report.sigma_model)
    other_sigma = report.sigma_model if report.variance == "robust" else report.sigma_robust
    half_other = crit * other_sigma

    fig, ax = plt.subplots(figsize=(max(6.0, min(0.12 * p, 14.0)), 4.0))
    ax.axhline(0.0, color="0.6", lw=0.8, zorder=0)
    ax.errorbar(idx, report.b_hat, yerr=half_sel, fmt="o", ms=2.5, lw=1.0,
                capsize=0, label=f"{report.variance} CI", color="C0")
    ax.errorbar(idx + 0.18, report.b_hat, yerr=half_other, fmt="none", lw=0.8,
                alpha=0.6, label="other variance", color="C1")
    ax.set_xlabel("coordinate")
    ax.set_ylabel("debiased estimate")
    ax.set_title(f"{int(report.level * 100)}% intervals (n={report.n}, p={p})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def render_coverage_figure(report: CoverageReport, level: float, path) -> str:
    """Per-coordinate empirical coverage for both variance estimators."""
    cov_r = report.robust.per_coordinate_coverage
    cov_m = report.model.per_coordinate_coverage
    idx = np.arange(1, cov_r.shape[0] + 1)

    fig, ax = plt.subplots(figsize=(max(6.0, min(0.12 * idx.size, 14.0)), 4.0))
    ax.axhline(level, color="0.4", lw=1.0, ls="--", label=f"nominal {level:.2f}")
    ax.plot(idx, cov_r, "o", ms=3, label="robust", color="C0")
    ax.plot(idx, cov_m, "x", ms=3, label="model", color="C1")
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel("coordinate")
    ax.set_ylabel("empirical coverage")
    ax.set_title(f"{report.scenario}: {report.replication_count} replicates")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
