"""Monte Carlo engine for the limit-theorem verification experiments.

Generates replicated-design regression data, fits every configured method on
the same error draws (paired comparison), and aggregates scaled samples, KS
distances against the applicable limit laws, quantile tables, rate slopes,
and covariance comparisons into a reproducible report.

Stream discipline: replication r at sample size n uses the derived stream
``stream_seed(master_seed, n, r)``; the direct-simulation reference samples
use the two streams just past the last replication. Results are therefore
bit-identical for a given master seed regardless of execution order or the
number of worker processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import evt
from .closed_form import closed_form_fit, lse_fit
from .errors import (
    EmptySampleError,
    ExperimentError,
    ExperimentFailureRateError,
    InfiniteVarianceError,
    SingularDesignError,
    SolverStatusError,
)
from .evt import ErrorModel, LimitLaw
from .lp import SolverConfig, minimax_fit_lp
from .model import Dataset, ReplicatedDesign, group_extremes_replicated, simulate_dataset

METHODS = ("lp", "closed_form", "lse")

# Per-replication fit failures beyond this fraction invalidate the run.
MAX_FAILURE_RATE = 1e-3

# Absolute slack allowed on the almost-sure bound checks.
BOUND_TOL = 1e-12

QUANTILE_GRID = (0.1, 0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a Monte Carlo run needs, including its reproducibility seed."""

    model: ErrorModel
    levels: np.ndarray
    n_values: tuple
    replications: int
    master_seed: int
    true_theta: np.ndarray
    methods: tuple = ("lp",)
    reference_draws: int = 1_000_000
    ks_threshold: float = 0.05
    jobs: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        if lv.ndim == 1:
            lv = lv.reshape(-1, 1)
        object.__setattr__(self, "levels", lv)
        th = np.asarray(self.true_theta, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "true_theta", th)
        ns = tuple(int(n) for n in (self.n_values if np.iterable(self.n_values) else [self.n_values]))
        object.__setattr__(self, "n_values", ns)
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replications < 1:
            raise ExperimentError(f"replications must be >= 1, got {self.replications}")
        if len(ns) == 0 or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ExperimentError(f"n ladder must be strictly increasing, got {ns}")
        if any(n < 2 for n in ns):
            raise ExperimentError("every n must be >= 2")
        if th.shape[0] != lv.shape[1]:
            raise ExperimentError(
                f"theta has {th.shape[0]} entries but levels have {lv.shape[1]} columns"
            )
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ExperimentError(f"unknown methods {unknown}; valid: {METHODS}")
        if not self.methods:
            raise ExperimentError("at least one method is required")
        if "closed_form" in self.methods and lv.shape[0] != lv.shape[1]:
            raise ExperimentError(
                f"closed_form needs k = q levels, got k={lv.shape[0]}, q={lv.shape[1]}"
            )
        # Level-row distinctness is enforced here so a bad config fails fast.
        ReplicatedDesign(lv, 2)

    @property
    def k(self) -> int:
        return self.levels.shape[0]

    @property
    def q(self) -> int:
        return self.levels.shape[1]

    def echo(self) -> dict:
        return {
            "family": self.model.family,
            "alpha": self.model.alpha,
            "levels": [[float(v) for v in row] for row in self.levels],
            "n_values": list(self.n_values),
            "replications": self.replications,
            "master_seed": int(self.master_seed),
            "true_theta": [float(t) for t in self.true_theta],
            "methods": list(self.methods),
            "reference_draws": int(self.reference_draws),
            "ks_threshold": float(self.ks_threshold),
        }


@dataclass
class MethodSamples:
    """Raw and scaled per-replication outcomes for one (n, method) cell."""

    method: str
    delta: np.ndarray
    theta: np.ndarray
    nonunique: np.ndarray
    valid: np.ndarray
    failures: int
    delta_scaled: np.ndarray = None
    theta_scaled: np.ndarray = None
    ks: dict = field(default_factory=dict)
    theta_abs_quantiles: list = field(default_factory=list)
    theta_scaled_cov: Optional[np.ndarray] = None


@dataclass
class PerNResult:
    n: int
    a_n: float
    b_n: float
    methods: dict


@dataclass
class SimulationReport:
    config: ExperimentConfig
    per_n: list
    rate_slopes: dict
    bound_checks: dict

    def cell(self, n: int, method: str) -> MethodSamples:
        for entry in self.per_n:
            if entry.n == n:
                return entry.methods[method]
        raise KeyError(f"no results for n={n}")

    def to_dict(self) -> dict:
        """Plain-type summary with stable structure for canonical serialization."""
        results = []
        for entry in self.per_n:
            methods = {}
            for name in sorted(entry.methods):
                cell = entry.methods[name]
                methods[name] = {
                    "failures": int(cell.failures),
                    "replications_used": int(cell.valid.sum()),
                    "nonunique_count": int(cell.nonunique[cell.valid].sum()),
                    "ks": {k: float(v) for k, v in sorted(cell.ks.items())},
                    "theta_abs_quantile_grid": list(QUANTILE_GRID),
                    "theta_abs_quantiles": [
                        [float(v) for v in row] for row in cell.theta_abs_quantiles
                    ],
                    "theta_scaled_cov": (
                        None if cell.theta_scaled_cov is None
                        else [[float(v) for v in row] for row in cell.theta_scaled_cov]
                    ),
                    "delta_scaled_median": float(np.median(cell.delta_scaled))
                    if cell.delta_scaled.size else None,
                }
            results.append(
                {"n": entry.n, "a_n": entry.a_n, "b_n": entry.b_n, "methods": methods}
            )
        return {
            "config": self.config.echo(),
            "results": results,
            "rate_slopes": {
                m: [float(s) for s in slopes] for m, slopes in sorted(self.rate_slopes.items())
            },
            "bound_checks": self.bound_checks,
        }


def ks_distance(samples, target: Union[LimitLaw, Callable, np.ndarray]) -> float:
    """Two-sided Kolmogorov-Smirnov distance of a sample to a target CDF.

    The target may be a LimitLaw, any vectorized CDF callable, or a reference
    sample whose empirical CDF stands in for the law (direct-simulation
    targets); the sup is taken at the sample's step points.
    """
    s = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
    m = s.shape[0]
    if m == 0:
        raise EmptySampleError("KS distance of an empty sample is undefined")
    if isinstance(target, LimitLaw):
        f = evt.limit_cdf(target, s)
    elif callable(target):
        f = np.asarray(target(s), dtype=np.float64)
    else:
        ref = np.sort(np.asarray(target, dtype=np.float64).reshape(-1))
        if ref.shape[0] == 0:
            raise EmptySampleError("empty reference sample")
        f = np.searchsorted(ref, s, side="right") / ref.shape[0]
    grid_hi = np.arange(1, m + 1) / m
    grid_lo = np.arange(0, m) / m
    return float(max((grid_hi - f).max(), (f - grid_lo).max()))


def _fit_one(method: str, dataset: Dataset, solver: SolverConfig):
    if method == "lp":
        return minimax_fit_lp(dataset, solver)
    if method == "closed_form":
        return closed_form_fit(dataset)
    return lse_fit(dataset)


def _run_block(config: ExperimentConfig, n: int, reps: range) -> dict:
    """Fit every method on each replication in ``reps`` at sample size n."""
    k, q = config.k, config.q
    design = ReplicatedDesign(config.levels, n)
    theta = config.true_theta
    count = len(reps)
    out = {
        m: {
            "delta": np.full(count, np.nan),
            "theta": np.full((count, q), np.nan),
            "nonunique": np.zeros(count, dtype=bool),
            "valid": np.zeros(count, dtype=bool),
        }
        for m in config.methods
    }
    intercept = bool(np.all(config.levels[:, 0] == 1.0))
    remark3 = bool(k < q and np.linalg.matrix_rank(config.levels) == k)
    s1_violations = 0
    r3_violations = 0
    for idx, r in enumerate(reps):
        eps = evt.sample(config.model, k * n, evt.stream_seed(config.master_seed, n, r))
        dataset = simulate_dataset(design, theta, eps)
        errors = dataset.errors()
        ext = group_extremes_replicated(errors, k, n)
        half_range = (errors.max() - errors.min()) / 2.0
        half_max_group_range = float(ext.r.max()) / 2.0
        for m in config.methods:
            try:
                fit = _fit_one(m, dataset, config.solver)
            except (SolverStatusError, SingularDesignError):
                continue
            out[m]["delta"][idx] = fit.delta_hat
            out[m]["theta"][idx] = fit.theta_hat
            out[m]["nonunique"][idx] = bool(fit.diagnostics.get("nonunique_suspected", False))
            out[m]["valid"][idx] = True
            if m in ("lp", "closed_form"):
                if intercept and fit.delta_hat > half_range + BOUND_TOL:
                    s1_violations += 1
                if remark3 and fit.delta_hat > half_max_group_range + BOUND_TOL:
                    r3_violations += 1
    return {
        "fits": out,
        "statement1_applicable": intercept,
        "remark3_applicable": remark3,
        "statement1_violations": s1_violations,
        "remark3_violations": r3_violations,
    }


def _reference_coefficient_samples(config: ExperimentConfig, n: int) -> np.ndarray:
    """Direct simulation of the k = q limit law of the scaled coefficients.

    Draws two independent matrices of G variates and solves V d = zeta - zeta'
    column-wise; row i is the reference sample for coefficient i.
    """
    att = config.model.attraction
    q = config.q
    draws = config.reference_draws
    zeta = evt.sample_attraction(
        att, q * draws, evt.stream_seed(config.master_seed, n, config.replications)
    ).reshape(q, draws)
    zeta_p = evt.sample_attraction(
        att, q * draws, evt.stream_seed(config.master_seed, n, config.replications + 1)
    ).reshape(q, draws)
    return np.linalg.solve(config.levels, zeta - zeta_p)


def _aggregate(config: ExperimentConfig, n: int, cell: MethodSamples,
               constants: evt.NormingConstants,
               reference: Optional[np.ndarray]) -> None:
    valid = cell.valid
    a_n, b_n = constants.a, constants.b
    delta = cell.delta[valid]
    theta = cell.theta[valid]
    cell.delta_scaled = 2.0 * b_n * (delta - a_n)
    cell.theta_scaled = 2.0 * b_n * (theta - config.true_theta)
    abs_err = np.abs(theta - config.true_theta)
    cell.theta_abs_quantiles = [
        list(np.quantile(abs_err[:, i], QUANTILE_GRID)) if abs_err.size else []
        for i in range(config.q)
    ]
    if theta.shape[0] >= 2:
        cell.theta_scaled_cov = np.cov(cell.theta_scaled, rowvar=False).reshape(
            config.q, config.q
        )
    if config.k != config.q or delta.size == 0 or cell.method == "lse":
        return
    att = config.model.attraction
    cell.ks["delta_qpower"] = ks_distance(
        cell.delta_scaled, LimitLaw("qpower", att, q=config.q)
    )
    if config.model.family == "uniform_symmetric":
        cell.ks["delta_uniform_delta"] = ks_distance(
            n * (1.0 - delta), LimitLaw("uniform_delta", q=config.q)
        )
    if reference is not None:
        for i in range(config.q):
            cell.ks[f"theta{i}_detlaw"] = ks_distance(cell.theta_scaled[:, i], reference[i])
    if config.q == 1 and att.kind == "gumbel":
        cell.ks["theta0_logistic"] = ks_distance(cell.theta_scaled[:, 0], LimitLaw("logistic"))


def run_experiment(config: ExperimentConfig) -> SimulationReport:
    """Run the full experiment ladder and aggregate the report.

    Per-replication fit failures are recorded and the affected replication is
    excluded; a failure rate above MAX_FAILURE_RATE raises.
    """
    m_reps = config.replications
    per_n = []
    bound = {
        "statement1_applicable": False,
        "remark3_applicable": False,
        "statement1_violations": 0,
        "remark3_violations": 0,
    }
    distributional = (
        config.k == config.q
        and any(m in ("lp", "closed_form") for m in config.methods)
        and np.linalg.matrix_rank(config.levels) == config.q
    )
    for n in config.n_values:
        constants = evt.norming_constants(config.model, n)
        blocks = _dispatch_blocks(config, n)
        cells = {}
        for method in config.methods:
            delta = np.concatenate([b["fits"][method]["delta"] for b in blocks])
            theta = np.vstack([b["fits"][method]["theta"] for b in blocks])
            nonunique = np.concatenate([b["fits"][method]["nonunique"] for b in blocks])
            valid = np.concatenate([b["fits"][method]["valid"] for b in blocks])
            failures = int(m_reps - valid.sum())
            if failures > MAX_FAILURE_RATE * m_reps:
                raise ExperimentFailureRateError(
                    f"{failures}/{m_reps} replications failed for method {method} at n={n}",
                    failures=failures,
                    total=m_reps,
                )
            cells[method] = MethodSamples(
                method=method, delta=delta, theta=theta,
                nonunique=nonunique, valid=valid, failures=failures,
            )
        reference = _reference_coefficient_samples(config, n) if distributional else None
        for cell in cells.values():
            _aggregate(config, n, cell, constants, reference)
        for b in blocks:
            bound["statement1_applicable"] |= b["statement1_applicable"]
            bound["remark3_applicable"] |= b["remark3_applicable"]
            bound["statement1_violations"] += b["statement1_violations"]
            bound["remark3_violations"] += b["remark3_violations"]
        per_n.append(PerNResult(n=n, a_n=constants.a, b_n=constants.b, methods=cells))
    return SimulationReport(
        config=config,
        per_n=per_n,
        rate_slopes=_slopes_from_cells(config, per_n),
        bound_checks=bound,
    )


def _dispatch_blocks(config: ExperimentConfig, n: int) -> list:
    reps = range(config.replications)
    if config.jobs <= 1 or config.replications < 4 * config.jobs:
        return [_run_block(config, n, reps)]
    chunks = np.array_split(np.arange(config.replications), config.jobs)
    ranges = [range(int(c[0]), int(c[-1]) + 1) for c in chunks if c.size]
    with ProcessPoolExecutor(max_workers=config.jobs) as pool:
        return list(pool.map(_run_block, [config] * len(ranges), [n] * len(ranges), ranges))


def _slopes_from_cells(config: ExperimentConfig, per_n: list) -> dict:
    """OLS slope of log median |theta_i - theta| against log n, per method."""
    if len(per_n) < 2:
        return {}
    slopes = {}
    log_n = np.log([entry.n for entry in per_n])
    median_col = QUANTILE_GRID.index(0.5)
    for method in config.methods:
        per_coef = []
        for i in range(config.q):
            med = np.array(
                [entry.methods[method].theta_abs_quantiles[i][median_col] for entry in per_n]
            )
            if np.any(med <= 0.0):
                per_coef.append(float("nan"))
                continue
            slope = np.polyfit(log_n, np.log(med), 1)[0]
            per_coef.append(float(slope))
        slopes[method] = per_coef
    return slopes


def rate_slope(config: ExperimentConfig) -> dict:
    """Run the ladder and return per-method, per-coefficient log-log slopes."""
    if len(config.n_values) < 4:
        raise ExperimentError("rate estimation needs an n ladder with >= 4 values")
    if config.replications < 500:
        raise ExperimentError("rate estimation needs >= 500 replications per n")
    return run_experiment(config).rate_slopes


@dataclass(frozen=True)
class CovarianceComparison:
    sample_cov: np.ndarray
    target: np.ndarray
    entrywise_abs: np.ndarray
    frobenius_rel: float
    sigma_sq: float


def covariance_check(config: ExperimentConfig,
                     report: Optional[SimulationReport] = None,
                     method: str = "closed_form") -> CovarianceComparison:
    """Sample covariance of the scaled coefficient deviations against
    2 sigma_G^2 (V'V)^{-1}; refuses attraction laws without finite variance."""
    sigma_sq = evt.variance_of_attraction(config.model.attraction)
    if not np.isfinite(sigma_sq):
        raise InfiniteVarianceError(
            f"attraction law of {config.model.family} has no finite variance"
        )
    if method not in config.methods:
        raise ExperimentError(f"method {method!r} not present in config.methods")
    if report is None:
        report = run_experiment(config)
    cell = report.cell(config.n_values[-1], method)
    if cell.theta_scaled_cov is None:
        raise ExperimentError("covariance needs at least 2 successful replications")
    V = config.levels
    target = 2.0 * sigma_sq * np.linalg.inv(V.T @ V)
    diff = cell.theta_scaled_cov - target
    return CovarianceComparison(
        sample_cov=cell.theta_scaled_cov,
        target=target,
        entrywise_abs=np.abs(diff),
        frobenius_rel=float(np.linalg.norm(diff) / np.linalg.norm(target)),
        sigma_sq=float(sigma_sq),
    )


@dataclass(frozen=True)
class MethodDiscrepancy:
    max_delta_diff: float
    max_theta_diff: float
    compared: int
    theta_compared: int


def cross_validate_methods(config: ExperimentConfig,
                           report: Optional[SimulationReport] = None) -> MethodDiscrepancy:
    """Max per-replication LP vs closed-form disagreement on a k = q design.

    Theta is only compared on replications whose LP basis did not flag
    non-uniqueness; delta is compared on every jointly valid replication.
    """
    if config.k != config.q:
        raise ExperimentError("method cross-validation needs a k = q design")
    for needed in ("lp", "closed_form"):
        if needed not in config.methods:
            raise ExperimentError(f"config.methods must include {needed!r}")
    if report is None:
        report = run_experiment(config)
    max_delta = 0.0
    max_theta = 0.0
    compared = 0
    theta_compared = 0
    for entry in report.per_n:
        a = entry.methods["lp"]
        b = entry.methods["closed_form"]
        both = a.valid & b.valid
        if not both.any():
            continue
        compared += int(both.sum())
        max_delta = max(max_delta, float(np.abs(a.delta[both] - b.delta[both]).max()))
        unique = both & ~a.nonunique
        if unique.any():
            theta_compared += int(unique.sum())
            max_theta = max(
                max_theta,
                float(np.abs(a.theta[unique] - b.theta[unique]).max()),
            )
    return MethodDiscrepancy(
        max_delta_diff=max_delta,
        max_theta_diff=max_theta,
        compared=compared,
        theta_compared=theta_compared,
    )


def ecdf_table(samples, max_points: int = 4096) -> np.ndarray:
    """Two-column (x, F(x)) empirical CDF table, quantile-thinned to max_points."""
    s = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
    m = s.shape[0]
    if m == 0:
        raise EmptySampleError("cannot tabulate an empty sample")
    if m <= max_points:
        idx = np.arange(m)
    else:
        idx = np.unique(np.round(np.linspace(0, m - 1, max_points)).astype(int))
    return np.column_stack([s[idx], (idx + 1) / m])
