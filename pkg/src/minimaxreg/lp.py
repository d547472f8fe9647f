"""Minimax fitting as a linear program, with a dual optimality certificate.

The fitting problem  min_tau max_j |y_j - x_j.tau|  is the LP

    min Delta   s.t.   x_j.tau + Delta >= y_j,   -x_j.tau + Delta >= -y_j,

with tau free. Because every constraint row carries Delta with coefficient
one and the rows come in +/- pairs, Delta >= max_j |r_j| >= 0 is implied, so
the explicit lower bound on Delta is redundant and the LP dual lives on

    D* = { u >= 0 :  sum_r u_r a_r = 0,  sum_r u_r = 1 },

maximizing  sum_r u_r h_r  over the constraint rows (a_r, h_r). The solver
works on that dual in standard form: its q+1 rows make each pivot cheap no
matter how many observations there are, the optimal basic solution IS the
dual certificate, and the final-basis multipliers hand back (tau, Delta).

For replicated designs the per-level maximum absolute deviation is attained
at the level maximum or minimum, so the 2N constraints collapse to 2k rows
built from per-level extremes of y; the dual variables of that reduced
system are exactly the per-level multipliers (u_1..u_k, u'_1..u'_k).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import simplex
from .errors import (
    DimensionMismatchError,
    DualityGapError,
    SolverStatusError,
)
from .model import (
    Dataset,
    FitResult,
    ReplicatedDesign,
    group_extremes_replicated,
    max_abs_residual,
)


@dataclass(frozen=True)
class SolverConfig:
    """Numeric knobs for the LP path (absolute tolerances, O(1)-scaled data)."""

    feasibility_tol: float = 1e-9
    optimality_tol: float = 1e-9
    duality_gap_tol: float = 1e-8
    nonunique_tol: float = 1e-9
    max_iter: Optional[int] = None

    def iteration_cap(self, n_constraints: int, n_vars: int) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return 50 * (n_constraints + n_vars)


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class LinearProgram:
    """The primal minimax LP: min c.z  s.t.  A z >= b, with z = (tau, Delta).

    All constraints have sense >=; tau variables are free and the Delta
    variable is bounded below by zero (redundantly, see module docstring).
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    var_nonneg: np.ndarray

    @property
    def n_constraints(self) -> int:
        return self.A.shape[0]

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class LpSolution:
    """Terminal LP state: optimal value, primal point, basis, and duals.

    ``primal`` is (tau_1..tau_q, Delta). ``dual`` holds one multiplier per
    constraint row of the solved system; ``scheme`` records what those rows
    are: ("observation", N) for the 2N-row form (uppers first, then lowers)
    or ("group", k) for the replicated 2k-row form (Z rows, then W rows).
    """

    status: str
    value: Optional[float]
    primal: Optional[np.ndarray]
    dual: Optional[np.ndarray]
    basis: Optional[np.ndarray]
    iterations: int
    scheme: tuple = ("observation", 0)
    degenerate_basis: bool = False

    @property
    def theta(self) -> np.ndarray:
        return self.primal[:-1]

    @property
    def delta(self) -> float:
        return float(self.primal[-1])


@dataclass(frozen=True)
class DualCertificate:
    """A dual feasible point and its objective, checked against the primal.

    ``u`` carries the multipliers of the upper (max-side) constraints and
    ``u_prime`` those of the lower (min-side) ones, per level for replicated
    designs and per observation otherwise.
    """

    u: np.ndarray
    u_prime: np.ndarray
    value: float
    gap: float
    zero_sum_residual: np.ndarray
    normalization_residual: float
    min_multiplier: float
    scheme: tuple

    def max_infeasibility(self) -> float:
        return max(
            float(np.abs(self.zero_sum_residual).max()),
            abs(self.normalization_residual),
            max(0.0, -self.min_multiplier),
        )


def build_primal(dataset: Dataset) -> LinearProgram:
    """The 2N-constraint primal LP of the minimax fit (uppers, then lowers)."""
    X = dataset.design.matrix()
    y = dataset.y
    n, q = X.shape
    ones = np.ones((n, 1))
    A = np.vstack([np.hstack([X, ones]), np.hstack([-X, ones])])
    b = np.concatenate([y, -y])
    c = np.zeros(q + 1)
    c[q] = 1.0
    var_nonneg = np.zeros(q + 1, dtype=bool)
    var_nonneg[q] = True
    return LinearProgram(A=A, b=b, c=c, var_nonneg=var_nonneg)


def _solve_rows(G: np.ndarray, h: np.ndarray, scheme: tuple,
                config: SolverConfig) -> LpSolution:
    """Solve  min Delta  s.t.  G_r.tau + Delta >= h_r  through its dual."""
    n_rows, q = G.shape
    A_dual = np.vstack([G.T, np.ones((1, n_rows))])
    b_dual = np.zeros(q + 1)
    b_dual[q] = 1.0
    c_dual = -h
    cap = config.iteration_cap(n_rows, q + 1)
    res = simplex.solve_standard_form(
        A_dual, b_dual, c_dual, tol=config.optimality_tol, max_iter=cap
    )
    if res.status != simplex.OPTIMAL:
        # The dual is feasible and bounded for every minimax system, so only
        # the iteration cap can realistically surface here.
        status = res.status if res.status == simplex.ITERATION_LIMIT else simplex.INFEASIBLE
        return LpSolution(
            status=status, value=None, primal=None, dual=None,
            basis=None, iterations=res.iterations, scheme=scheme,
        )
    primal = -res.multipliers
    u = res.x
    # A basic multiplier at level ~0 (including a pinned artificial on a
    # dependent row) signals alternative optimal bases, hence a possibly
    # non-unique fitted theta.
    basic_vals = np.array([u[j] if j < n_rows else 0.0 for j in res.basis])
    degenerate = bool(np.any(basic_vals <= config.nonunique_tol))
    return LpSolution(
        status=simplex.OPTIMAL,
        value=float(h @ u),
        primal=primal,
        dual=u,
        basis=res.basis,
        iterations=res.iterations,
        scheme=scheme,
        degenerate_basis=degenerate,
    )


def simplex_solve(lp: LinearProgram, config: SolverConfig = DEFAULT_CONFIG) -> LpSolution:
    """Solve a minimax-shaped LinearProgram.

    The solver is special-purpose: it requires the minimax shape (every
    constraint row ends with a +1 coefficient on Delta and the objective is
    Delta alone), which is what ``build_primal`` produces.
    """
    A, c = lp.A, lp.c
    q = A.shape[1] - 1
    if not (np.all(A[:, -1] == 1.0) and c[-1] == 1.0 and np.all(c[:-1] == 0.0)):
        raise DimensionMismatchError(
            "simplex_solve handles minimax-fit LPs only: last column must be "
            "all ones and the objective the last variable"
        )
    n_rows = A.shape[0]
    scheme = ("observation", n_rows // 2)
    return _solve_rows(A[:, :q], lp.b, scheme, config)


def _minimax_rows(dataset: Dataset):
    """Constraint rows (G, h) and scheme for the dataset, reduced if replicated."""
    design = dataset.design
    if isinstance(design, ReplicatedDesign):
        ext = group_extremes_replicated(dataset.y, design.n_levels, design.reps)
        V = design.levels
        G = np.vstack([V, -V])
        h = np.concatenate([ext.z, -ext.w])
        return G, h, ("group", design.n_levels)
    X = design.matrix()
    G = np.vstack([X, -X])
    h = np.concatenate([dataset.y, -dataset.y])
    return G, h, ("observation", design.n_obs)


def minimax_fit_lp(dataset: Dataset, config: SolverConfig = DEFAULT_CONFIG) -> FitResult:
    """Fit by the LP route and package diagnostics.

    Raises SolverStatusError when the solve does not reach optimality; the
    Monte Carlo engine treats that as a recorded per-replication failure.
    """
    G, h, scheme = _minimax_rows(dataset)
    sol = _solve_rows(G, h, scheme, config)
    if sol.status != simplex.OPTIMAL:
        raise SolverStatusError(f"LP terminated with status {sol.status}", sol.status)
    theta = sol.theta
    recomputed = max_abs_residual(dataset, theta)
    diagnostics = {
        "duality_gap": abs(float(sol.delta) - float(sol.value)),
        "iterations": sol.iterations,
        "nonunique_suspected": sol.degenerate_basis,
        "max_abs_residual": recomputed,
    }
    d_hat = None
    if dataset.true_theta is not None:
        d_hat = theta - dataset.true_theta
        if isinstance(dataset.design, ReplicatedDesign):
            diagnostics["gamma"] = dataset.design.levels @ d_hat
    return FitResult(
        theta_hat=theta,
        delta_hat=float(sol.value),
        method="lp_primal",
        d_hat=d_hat,
        diagnostics=diagnostics,
        lp_solution=sol,
    )


def dual_certificate(dataset: Dataset, solution: LpSolution,
                     config: SolverConfig = DEFAULT_CONFIG) -> DualCertificate:
    """Validate the dual point of a solved minimax LP against the dataset.

    Checks feasibility in the dual domain (zero-sum rows, normalization,
    nonnegativity) and that the dual objective matches the primal optimum;
    a gap beyond tolerance raises DualityGapError since it signals a solver
    bug rather than a property of the data.
    """
    if solution.status != simplex.OPTIMAL or solution.dual is None:
        raise SolverStatusError(
            f"cannot certify a solution with status {solution.status}",
            solution.status,
        )
    kind, count = solution.scheme
    dual = solution.dual
    if dual.shape[0] != 2 * count:
        raise DimensionMismatchError(
            f"dual vector has {dual.shape[0]} entries, expected {2 * count}"
        )
    design = dataset.design
    replicated = isinstance(design, ReplicatedDesign)
    if kind == "group":
        if not replicated or count != design.n_levels:
            raise DimensionMismatchError("group-scheme solution does not match dataset")
        u, u_prime = dual[:count], dual[count:]
        rows = design.levels
        ext = group_extremes_replicated(dataset.y, design.n_levels, design.reps)
        value = float(u @ ext.z - u_prime @ ext.w)
    else:
        if count != design.n_obs:
            raise DimensionMismatchError("observation-scheme solution does not match dataset")
        u_obs, up_obs = dual[:count], dual[count:]
        if replicated:
            # Aggregate per level: active upper rows sit at the level maximum
            # of y and active lower rows at the minimum, so level sums give
            # the per-level multipliers.
            labels = design.group_index()
            k = design.n_levels
            u = np.bincount(labels, weights=u_obs, minlength=k)
            u_prime = np.bincount(labels, weights=up_obs, minlength=k)
            rows = design.levels
            ext = group_extremes_replicated(dataset.y, k, design.reps)
            value = float(u @ ext.z - u_prime @ ext.w)
        else:
            u, u_prime = u_obs, up_obs
            rows = design.matrix()
            value = float(u @ dataset.y - u_prime @ dataset.y)
    zero_sum = rows.T @ (u - u_prime)
    normalization = float(u.sum() + u_prime.sum() - 1.0)
    min_mult = float(min(u.min(), u_prime.min()))
    # Compare the recomputed dual objective against the primal-side optimum
    # (Delta read off the final-basis multipliers).
    gap = abs(value - solution.delta)
    if gap > config.duality_gap_tol:
        raise DualityGapError(
            f"duality gap {gap:.3e} exceeds tolerance {config.duality_gap_tol:.1e}",
            gap,
        )
    return DualCertificate(
        u=u,
        u_prime=u_prime,
        value=value,
        gap=gap,
        zero_sum_residual=zero_sum,
        normalization_residual=normalization,
        min_multiplier=min_mult,
        scheme=solution.scheme,
    )
