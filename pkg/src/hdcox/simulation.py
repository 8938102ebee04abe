"""Simulation bench: designs, survival generators, censoring calibration,
replication runner and a large-sample limiting-coefficient oracle.

Scenarios are described by a `ScenarioSpec` (usually read from a key=value
config file). A replication samples a truncated-Gaussian design, draws
survival times from one of the registered true hazards, applies a constant
censoring time calibrated to the requested rate, runs the full inference
pipeline, and records per-coordinate coverage/length/rejection for both
variance estimators. Replicates use independent generator streams
(seed + replicate index), so results do not depend on worker scheduling.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import new_dataset
from .errors import HdcoxError, ScenarioError, SolverError
from .inference import confidence_intervals
from .partial_likelihood import evaluate
from .pipeline import fit_and_infer

PILOT_N = 200_000
_PILOT_CHUNK = 20_000


# ---------------------------------------------------------------------------
# designs

def build_covariance(kind: str, p: int, rho: float = 0.8) -> np.ndarray:
    """Design covariance: identity, equal-correlation, or the two block forms."""
    if p < 1:
        raise ScenarioError("p must be >= 1")
    if kind == "independent":
        return np.eye(p)
    if kind == "equal_corr":
        return _equal_corr(p, rho)
    if kind == "block_i":
        if p < 2:
            raise ScenarioError("block_i needs p >= 2")
        out = np.eye(p)
        out[1:, 1:] = _equal_corr(p - 1, rho)
        return out
    if kind == "block_ii":
        if p < 4:
            raise ScenarioError("block_ii needs p >= 4")
        out = np.eye(p)
        out[1:3, 1:3] = _equal_corr(2, rho)
        out[3:, 3:] = _equal_corr(p - 3, rho)
        return out
    raise ScenarioError(
        f"unknown covariance kind {kind!r}; valid: independent, equal_corr, block_i, block_ii"
    )


def _equal_corr(p, rho):
    return np.full((p, p), rho) + (1.0 - rho) * np.eye(p)


def sample_design(n: int, sigma: np.ndarray, bound: float, rng,
                  mode: str = "clamp") -> np.ndarray:
    """Gaussian rows with covariance `sigma`, truncated elementwise to [-bound, bound].

    "clamp" clips each element; "reject" redraws whole rows until all their
    elements are in bounds (kept for sensitivity runs, it perturbs the
    correlations differently).
    """
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ScenarioError(f"covariance is not positive definite: {exc}") from None
    p = sigma.shape[0]
    x = rng.standard_normal((n, p)) @ chol.T
    if mode == "clamp":
        return np.clip(x, -bound, bound)
    if mode == "reject":
        for _ in range(1000):
            bad = np.flatnonzero(np.any(np.abs(x) > bound, axis=1))
            if bad.size == 0:
                return x
            x[bad] = rng.standard_normal((bad.size, p)) @ chol.T
        raise ScenarioError("rejection sampling did not terminate; bound too tight")
    raise ScenarioError(f"unknown truncation mode {mode!r}")


# ---------------------------------------------------------------------------
# survival generators

def _linear_score(x):
    if x.shape[1] < 3:
        raise ScenarioError("this hazard needs p >= 3 (it reads X1, X2, X3)")
    return x[:, 0] ** 2 + 0.5 * x[:, 1] + x[:, 2]


def _constant_hazard_times(h, rng):
    if np.any(h <= 0.0):
        raise ScenarioError("hazard is nonpositive for some sampled rows")
    u = np.clip(rng.uniform(size=h.shape[0]), 1e-300, None)
    return -np.log(u) / h


HAZARDS = {
    "cox_linear": dict(kind="constant", needs_beta=True),
    "exp_quadratic": dict(kind="constant", needs_beta=False),
    "exp_row1": dict(kind="constant", needs_beta=False),
    "additive_row2": dict(kind="constant", needs_beta=False),
    "log_row3": dict(kind="constant", needs_beta=False),
    "aft_lognormal_row4": dict(kind="aft", needs_beta=False),
    "aft_exponential_row5": dict(kind="aft", needs_beta=False),
}


def generate_survival(x: np.ndarray, hazard: str, rng, beta=None) -> np.ndarray:
    """Failure times under the named true model.

    Constant-in-time hazards h(X) give T = -log(U)/h(X); the two accelerated
    forms transform the linear score with lognormal or additive-exponential
    noise.
    """
    if hazard not in HAZARDS:
        raise ScenarioError(
            f"unknown hazard {hazard!r}; valid: {', '.join(sorted(HAZARDS))}"
        )
    if hazard == "cox_linear":
        if beta is None:
            raise ScenarioError("cox_linear needs a coefficient vector")
        return _constant_hazard_times(np.exp(x @ beta), rng)
    if hazard == "exp_quadratic":
        return _constant_hazard_times(np.exp(x[:, 0] ** 2), rng)
    if hazard == "exp_row1":
        return _constant_hazard_times(np.exp(_linear_score(x)), rng)
    if hazard == "additive_row2":
        return _constant_hazard_times(_linear_score(x) + 5.0, rng)
    if hazard == "log_row3":
        return _constant_hazard_times(np.log(_linear_score(x) + 6.0), rng)
    if hazard == "aft_lognormal_row4":
        phi = 0.5 * rng.standard_normal(x.shape[0])
        return np.exp(-_linear_score(x) + phi)
    if hazard == "aft_exponential_row5":
        return np.exp(-_linear_score(x)) + rng.exponential(size=x.shape[0])
    raise AssertionError("unreachable")


def check_hazard_feasible(hazard: str, bound: float) -> None:
    """Worst-case positivity of the row-2/row-3 hazards under the clamp bound."""
    worst = -0.5 * bound - bound  # X1^2 >= 0
    if hazard == "additive_row2" and worst + 5.0 <= 0.0:
        raise ScenarioError("additive_row2 hazard can reach <= 0 under this bound")
    if hazard == "log_row3" and worst + 6.0 <= 1.0:
        raise ScenarioError("log_row3 hazard can reach <= 0 under this bound")


# ---------------------------------------------------------------------------
# censoring

def calibrate_censoring(sample_times, target_rate: float, pilot_n: int = PILOT_N,
                        rng=None) -> float:
    """Constant censoring time c with P(T > c) close to `target_rate`.

    `sample_times(n, rng)` draws failure times. Bisection on the empirical
    survival curve of one pilot sample; the result is then checked on an
    independent pilot and must land within +-0.01 of the target.
    """
    if not 0.0 < target_rate < 1.0:
        raise ScenarioError("target censoring rate must be in (0, 1)")
    rng = np.random.default_rng(rng)
    t = np.asarray(sample_times(pilot_n, rng), dtype=float)
    lo, hi = 0.0, float(t.max())
    if np.mean(t > hi) > target_rate:
        raise ScenarioError("target rate below anything achievable (heavy upper tail)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.mean(t > mid) > target_rate:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    t2 = np.asarray(sample_times(pilot_n, rng), dtype=float)
    achieved = float(np.mean(t2 > c))
    if abs(achieved - target_rate) > 0.01:
        raise ScenarioError(
            f"censoring target {target_rate:.3f} not achievable by a constant "
            f"(independent pilot reached {achieved:.3f})"
        )
    return float(c)


# ---------------------------------------------------------------------------
# scenarios

_SCENARIO_KEYS = {
    "name": str, "n": int, "p": int, "covariance": str, "rho": float,
    "truncation": float, "truncation_mode": str, "hazard": str,
    "s0": int, "coef_seed": int, "target_censoring": float,
    "replications": int, "seed": int, "ci_level": float,
}
_FITTING_KEYS = {
    "lambda_policy": str, "cv_folds": int, "grid_size": int,
    "grid_min_ratio": float, "nodewise_policy": str, "nodewise_folds": int,
    "nodewise_grid_size": int, "nodewise_c": float, "threads": int,
}


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete generative and fitting description of one experiment."""

    name: str
    n: int
    p: int
    hazard: str
    target_censoring: float
    replications: int
    seed: int
    covariance: str = "independent"
    rho: float = 0.8
    truncation: float = 3.0
    truncation_mode: str = "clamp"
    s0: int = 0
    coef_seed: int = 0
    ci_level: float = 0.95
    lambda_policy: str = "cv"
    cv_folds: int = 10
    grid_size: int = 100
    grid_min_ratio: float = 0.01
    nodewise_policy: str = "cv"
    nodewise_folds: int = 10
    nodewise_grid_size: int = 10
    nodewise_c: float = 0.5
    threads: int = 0

    def __post_init__(self):
        if self.n < 20:
            raise ScenarioError("n must be >= 20")
        if self.p < 1:
            raise ScenarioError("p must be >= 1")
        if not 0.0 < self.target_censoring < 1.0:
            raise ScenarioError("target_censoring must be in (0, 1)")
        if self.replications < 1:
            raise ScenarioError("replications must be >= 1")
        if not 0.0 < self.ci_level < 1.0:
            raise ScenarioError("ci_level must be in (0, 1)")
        if self.hazard not in HAZARDS:
            raise ScenarioError(
                f"unknown hazard {self.hazard!r}; valid: {', '.join(sorted(HAZARDS))}"
            )
        if self.hazard == "cox_linear" and not 1 <= self.s0 <= self.p:
            raise ScenarioError("cox_linear needs 1 <= s0 <= p")
        if self.truncation_mode == "clamp":
            check_hazard_feasible(self.hazard, self.truncation)
        build_covariance(self.covariance, self.p, self.rho)  # validates the layout
        if self.lambda_policy != "cv":
            try:
                lam = float(self.lambda_policy)
            except ValueError:
                raise ScenarioError("lambda_policy must be 'cv' or a positive number") from None
            if lam <= 0:
                raise ScenarioError("fixed lambda must be positive")
        if self.nodewise_policy not in ("cv", "default"):
            raise ScenarioError("nodewise_policy must be 'cv' or 'default'")


def scenario_coefficients(spec: ScenarioSpec) -> np.ndarray:
    """Limiting coefficient vector used to score coverage.

    For the correctly specified generator this is the fixed coefficient
    realization (uniform on [0, 2] from `coef_seed`, placed on the first s0
    coordinates); all misspecified generators here have a zero limiting
    vector, which the large-sample oracle can confirm.
    """
    beta0 = np.zeros(spec.p)
    if spec.hazard == "cox_linear":
        coef_rng = np.random.default_rng(spec.coef_seed)
        beta0[: spec.s0] = coef_rng.uniform(0.0, 2.0, spec.s0)
    return beta0


def load_scenario(path, overrides: dict | None = None) -> ScenarioSpec:
    """Parse a key = value scenario file ([scenario] plus optional [fitting])."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ScenarioError(f"cannot read scenario file {path}")
    if "scenario" not in parser:
        raise ScenarioError(f"{path}: missing [scenario] section")
    kwargs = {}
    for section, known in (("scenario", _SCENARIO_KEYS), ("fitting", _FITTING_KEYS)):
        if section not in parser:
            continue
        for key, raw in parser[section].items():
            if key not in known:
                raise ScenarioError(f"{path}: unknown key {key!r} in [{section}]")
            conv = known[key]
            try:
                kwargs[key] = conv(raw) if conv is not str else raw
            except ValueError:
                raise ScenarioError(f"{path}: bad value for {key}: {raw!r}") from None
    if overrides:
        kwargs.update(overrides)
    kwargs.setdefault("name", os.path.splitext(os.path.basename(str(path)))[0])
    missing = [k for k in ("n", "p", "hazard", "target_censoring", "replications", "seed")
               if k not in kwargs]
    if missing:
        raise ScenarioError(f"{path}: missing required keys {missing}")
    try:
        return ScenarioSpec(**kwargs)
    except TypeError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# replication runner

@dataclass(frozen=True)
class VarianceStats:
    """Coverage/length/rejection summaries for one variance estimator."""

    avgcov_s0: float
    avglength_s0: float
    avgcov_s0c: float
    avglength_s0c: float
    per_coordinate_coverage: np.ndarray
    empirical_size: float | None


@dataclass(frozen=True)
class CoverageReport:
    scenario: str
    robust: VarianceStats
    model: VarianceStats
    replication_count: int
    failure_count: int
    flagged_invalid: bool


def _sample_failure_times(spec: ScenarioSpec, sigma, beta, n, rng):
    x = sample_design(n, sigma, spec.truncation, rng, spec.truncation_mode)
    t = generate_survival(x, spec.hazard, rng, beta=beta)
    return x, t


def _pilot_sampler(spec: ScenarioSpec, sigma, beta):
    def sample(n, rng):
        out = np.empty(n)
        done = 0
        while done < n:
            k = min(_PILOT_CHUNK, n - done)
            _, t = _sample_failure_times(spec, sigma, beta, k, rng)
            out[done:done + k] = t
            done += k
        return out

    return sample


def calibrate_scenario_censoring(spec: ScenarioSpec, pilot_n: int = PILOT_N) -> float:
    sigma = build_covariance(spec.covariance, spec.p, spec.rho)
    beta = scenario_coefficients(spec) if spec.hazard == "cox_linear" else None
    rng = np.random.default_rng([spec.seed, 0xCA11B])
    return calibrate_censoring(
        _pilot_sampler(spec, sigma, beta), spec.target_censoring, pilot_n, rng
    )


def _lambda_policy_value(spec: ScenarioSpec):
    return "cv" if spec.lambda_policy == "cv" else float(spec.lambda_policy)


def _run_one_replicate(spec: ScenarioSpec, sigma, gen_beta, beta0, censor_c, rep):
    rng = np.random.default_rng(spec.seed + rep)
    x, t = _sample_failure_times(spec, sigma, gen_beta, spec.n, rng)
    y = np.minimum(t, censor_c)
    delta = (t <= censor_c).astype(float)
    try:
        ds = new_dataset(y, delta, x)
        result = fit_and_infer(
            ds,
            lambda_policy=_lambda_policy_value(spec),
            nodewise_policy=spec.nodewise_policy,
            level=spec.ci_level,
            variance="robust",
            seed=spec.seed + rep,
            cv_folds=spec.cv_folds,
            grid_size=spec.grid_size,
            grid_min_ratio=spec.grid_min_ratio,
            nodewise_folds=spec.nodewise_folds,
            nodewise_grid_size=spec.nodewise_grid_size,
            nodewise_c=spec.nodewise_c,
        )
    except HdcoxError as exc:
        return {"rep": rep, "failed": True, "error": f"{type(exc).__name__}: {exc}"}

    out = {"rep": rep, "failed": False, "b_hat": result.b_hat}
    for label, sig2 in (("robust", result.sigma_robust_sq),
                        ("model", result.sigma_model_sq)):
        rep_ci = confidence_intervals(
            result.b_hat, result.sigma_robust_sq, result.sigma_model_sq,
            ds.n, level=spec.ci_level,
            variance=label,
        )
        covered = (rep_ci.ci_lower <= beta0) & (beta0 <= rep_ci.ci_upper)
        out[label] = {
            "covered": covered.astype(float),
            "length": rep_ci.ci_upper - rep_ci.ci_lower,
            "reject1": float(not (rep_ci.ci_lower[0] <= 0.0 <= rep_ci.ci_upper[0])),
            "sigma_sq": np.asarray(sig2, dtype=float),
        }
    return out


def _fsum_columns(rows) -> np.ndarray:
    mat = np.asarray(rows, dtype=float)
    return np.array([math.fsum(mat[:, j]) for j in range(mat.shape[1])])


def _variance_stats(payloads, label, s0_mask, test_size):
    covered = _fsum_columns([p[label]["covered"] for p in payloads]) / len(payloads)
    length = _fsum_columns([p[label]["length"] for p in payloads]) / len(payloads)
    s0c_mask = ~s0_mask
    size = None
    if test_size:
        size = math.fsum(p[label]["reject1"] for p in payloads) / len(payloads)
    return VarianceStats(
        avgcov_s0=float(covered[s0_mask].mean()) if s0_mask.any() else float("nan"),
        avglength_s0=float(length[s0_mask].mean()) if s0_mask.any() else float("nan"),
        avgcov_s0c=float(covered[s0c_mask].mean()) if s0c_mask.any() else float("nan"),
        avglength_s0c=float(length[s0c_mask].mean()) if s0c_mask.any() else float("nan"),
        per_coordinate_coverage=covered,
        empirical_size=size,
    )


def resolve_threads(requested: int | None) -> int:
    """Worker count: HDCOX_THREADS env wins, 0/None means available parallelism."""
    env = os.environ.get("HDCOX_THREADS")
    if env is not None:
        try:
            requested = int(env)
        except ValueError:
            raise ScenarioError(f"HDCOX_THREADS must be an integer, got {env!r}") from None
    if not requested or requested < 1:
        return os.cpu_count() or 1
    return requested


def run_replications(spec: ScenarioSpec, threads: int | None = None,
                     raw_path=None, censor_c: float | None = None) -> CoverageReport:
    """Run the scenario end to end and aggregate a coverage report.

    Replicate r draws from generator stream seed + r, so reports are
    identical for any worker count. Failed replicates are excluded and
    counted; more than 2% of them flags the report invalid.
    """
    workers = resolve_threads(spec.threads if threads is None else threads)
    sigma = build_covariance(spec.covariance, spec.p, spec.rho)
    beta0 = scenario_coefficients(spec)
    gen_beta = beta0 if spec.hazard == "cox_linear" else None
    if censor_c is None:
        censor_c = calibrate_scenario_censoring(spec)

    reps = range(spec.replications)
    if workers > 1 and spec.replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                _replicate_task,
                [(spec, sigma, gen_beta, beta0, censor_c, r) for r in reps],
                chunksize=max(1, spec.replications // (4 * workers)),
            ))
    else:
        results = [_run_one_replicate(spec, sigma, gen_beta, beta0, censor_c, r)
                   for r in reps]
    results.sort(key=lambda d: d["rep"])

    if raw_path is not None:
        _write_raw_stream(results, raw_path)

    payloads = [r for r in results if not r["failed"]]
    failures = len(results) - len(payloads)
    if not payloads:
        raise ScenarioError("every replicate failed; see the raw stream for errors")

    s0_mask = beta0 != 0.0
    test_size = bool(beta0[0] == 0.0)
    return CoverageReport(
        scenario=spec.name,
        robust=_variance_stats(payloads, "robust", s0_mask, test_size),
        model=_variance_stats(payloads, "model", s0_mask, test_size),
        replication_count=len(payloads),
        failure_count=failures,
        flagged_invalid=failures > 0.02 * spec.replications,
    )


def _replicate_task(args):
    return _run_one_replicate(*args)


def _write_raw_stream(results, path):
    with open(path, "w") as fh:
        for r in results:
            if r["failed"]:
                fh.write(json.dumps({"rep": r["rep"], "failed": True,
                                     "error": r["error"]}) + "\n")
                continue
            fh.write(json.dumps({
                "rep": r["rep"],
                "failed": False,
                "b_hat": [float(v) for v in r["b_hat"]],
                "sigma_robust_sq": [float(v) for v in r["robust"]["sigma_sq"]],
                "sigma_model_sq": [float(v) for v in r["model"]["sigma_sq"]],
            }) + "\n")


COVERAGE_FIELDS = (
    "scenario", "replications", "failures", "flagged_invalid",
    "avgcov_s0_robust", "avglength_s0_robust", "avgcov_s0c_robust",
    "avglength_s0c_robust", "size_robust",
    "avgcov_s0_model", "avglength_s0_model", "avgcov_s0c_model",
    "avglength_s0c_model", "size_model",
)


def _coverage_row(report: CoverageReport):
    def block(stats):
        return [stats.avgcov_s0, stats.avglength_s0, stats.avgcov_s0c,
                stats.avglength_s0c,
                "" if stats.empirical_size is None else stats.empirical_size]

    return ([report.scenario, report.replication_count, report.failure_count,
             report.flagged_invalid]
            + block(report.robust) + block(report.model))


def write_coverage_csv(report: CoverageReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COVERAGE_FIELDS)
        writer.writerow([
            v if isinstance(v, (str, int, bool)) else format(v, ".10g")
            for v in _coverage_row(report)
        ])


def format_coverage_text(report: CoverageReport) -> str:
    lines = [
        f"scenario {report.scenario}: {report.replication_count} replicates "
        f"({report.failure_count} failed"
        + (", REPORT FLAGGED INVALID)" if report.flagged_invalid else ")"),
    ]
    for label, stats in (("robust", report.robust), ("model", report.model)):
        size = ("" if stats.empirical_size is None
                else f"  size={stats.empirical_size:.3f}")
        lines.append(
            f"  {label:>6}: avgcov S0={stats.avgcov_s0:.3f} "
            f"len S0={stats.avglength_s0:.3f}  "
            f"avgcov S0c={stats.avgcov_s0c:.3f} "
            f"len S0c={stats.avglength_s0c:.3f}{size}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# limiting-coefficient oracle

def pseudo_true_oracle(
    hazard: str,
    covariance: str = "independent",
    p: int = 5,
    n_large: int = 200_000,
    target_censoring: float | None = 0.15,
    censor_c: float | None = None,
    seed: int = 0,
    truncation: float = 3.0,
    truncation_mode: str = "clamp",
    rho: float = 0.8,
    beta=None,
    s0: int = 0,
    coef_seed: int = 0,
) -> np.ndarray:
    """Limit of the unpenalized working-model fit, by one huge sample.

    Draws `n_large` observations from the stated generator, censors at a
    constant (given, or calibrated to `target_censoring`), and runs Newton
    iterations on the unpenalized objective. The M-estimator on a sample this
    size pins the limiting coefficient vector to a couple of decimals.
    """
    if p > 10:
        raise ScenarioError("the oracle is for low-dimensional checks (p <= 10)")
    if hazard == "cox_linear" and beta is None:
        coef_rng = np.random.default_rng(coef_seed)
        beta = np.zeros(p)
        beta[:s0] = coef_rng.uniform(0.0, 2.0, s0)
    sigma = build_covariance(covariance, p, rho)
    spec_like = ScenarioSpec(
        name="oracle", n=max(n_large, 20), p=p, hazard=hazard,
        target_censoring=target_censoring if target_censoring else 0.15,
        replications=1, seed=seed, covariance=covariance, rho=rho,
        truncation=truncation, truncation_mode=truncation_mode,
        s0=max(s0, 1) if hazard == "cox_linear" else 0, coef_seed=coef_seed,
    )
    if censor_c is None:
        if target_censoring is None:
            raise ScenarioError("give either censor_c or target_censoring")
        rng_c = np.random.default_rng([seed, 0xCA11B])
        censor_c = calibrate_censoring(
            _pilot_sampler(spec_like, sigma, beta), target_censoring,
            PILOT_N, rng_c,
        )
    rng = np.random.default_rng([seed, 0x0AC])
    x, t = _sample_failure_times(spec_like, sigma, beta, n_large, rng)
    y = np.minimum(t, censor_c)
    delta = (t <= censor_c).astype(float)
    ds = new_dataset(y, delta, x)
    return _newton_unpenalized(ds)


def _newton_unpenalized(ds, tol: float = 1e-9, max_iterations: int = 100) -> np.ndarray:
    beta = np.zeros(ds.p)
    ev = evaluate(ds, beta, with_hessian=True)
    for _ in range(max_iterations):
        if np.abs(ev.gradient).max() <= tol:
            break
        try:
            step = np.linalg.solve(ev.hessian, ev.gradient)
        except np.linalg.LinAlgError:
            raise SolverError("singular Hessian during Newton iteration") from None
        t_step = 1.0
        descended = False
        for _ in range(60):
            cand = beta - t_step * step
            cand_ev = evaluate(ds, cand, with_hessian=True)
            if cand_ev.value < ev.value:
                beta, ev = cand, cand_ev
                descended = True
                break
            t_step *= 0.5
        if not descended:
            if np.abs(ev.gradient).max() <= 1000 * tol:
                break  # flat to machine precision; good enough for the oracle
            raise SolverError("Newton line search failed to descend")
    else:
        raise SolverError(f"Newton did not converge in {max_iterations} iterations")
    try:
        np.linalg.cholesky(ev.hessian + 1e-12 * np.eye(ds.p))
    except np.linalg.LinAlgError:
        raise SolverError(
            "curvature at the optimum is not positive definite; the limiting "
            "system is degenerate for this generator"
        ) from None
    return beta
