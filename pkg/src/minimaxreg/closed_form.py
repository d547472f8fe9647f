"""Exact non-LP solution paths: midrange fits, square replicated designs, LSE.

For a replicated design with as many levels as parameters (k = q) and a
nonsingular level matrix, the minimax fit has a closed form: the fitted mean
response at each level is the level midrange of y, and the optimal deviation
is half the largest level range. The per-coefficient offsets follow by
Cramer's rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    EmptyGroupError,
    RankDeficientError,
    SingularDesignError,
    WrongShapeError,
)
from .model import (
    Dataset,
    FitResult,
    GroupExtremes,
    ReplicatedDesign,
    group_extremes_replicated,
    max_abs_residual,
)


def singularity_threshold(V: np.ndarray) -> float:
    """|det V| at or below this is treated as singular."""
    q = V.shape[0]
    scale = float(np.abs(V).max())
    return 1e-12 * scale**q


def midrange_fit(values) -> tuple[float, float]:
    """Minimizer and optimal value of  min_s max_j |t_j - s|.

    Returns (midrange, half range): the one-dimensional minimax fit.
    """
    t = np.asarray(values, dtype=np.float64).reshape(-1)
    if t.shape[0] == 0:
        raise EmptyGroupError("midrange of an empty sequence is undefined")
    z = float(t.max())
    w = float(t.min())
    return (z + w) / 2.0, (z - w) / 2.0


def solve_cramer(V, rhs) -> np.ndarray:
    """Solve V d = rhs by ratios of determinants (LU-based determinants)."""
    V = np.asarray(V, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64).reshape(-1)
    q = V.shape[0]
    if V.shape != (q, q) or rhs.shape[0] != q:
        raise WrongShapeError(f"need a square system, got V {V.shape}, rhs {rhs.shape}")
    det_v = float(np.linalg.det(V))
    if abs(det_v) <= singularity_threshold(V):
        raise SingularDesignError(
            f"level matrix is numerically singular (|det| = {abs(det_v):.3e})",
            det=det_v,
        )
    out = np.empty(q)
    for i in range(q):
        Vi = V.copy()
        Vi[:, i] = rhs
        out[i] = np.linalg.det(Vi) / det_v
    return out


@dataclass(frozen=True)
class SquareDesignFit:
    """Detailed record of a k = q closed-form fit."""

    levels: np.ndarray
    det_levels: float
    extremes: GroupExtremes
    theta_hat: np.ndarray
    delta_hat: float
    theta_offset: Optional[np.ndarray] = None


def square_design_fit(dataset: Dataset) -> SquareDesignFit:
    """Closed-form solve on a k = q replicated dataset.

    With true parameters known the offsets d_hat come from Cramer's rule on
    the per-level error midranges; otherwise theta_hat is solved directly
    from the per-level midranges of y. Either way the optimal deviation is
    half the largest per-level range of y.
    """
    design = dataset.design
    if not isinstance(design, ReplicatedDesign):
        raise WrongShapeError("closed-form fit needs a replicated design")
    k, q = design.n_levels, design.n_params
    if k != q:
        raise WrongShapeError(f"closed-form fit needs k = q levels, got k={k}, q={q}")
    V = design.levels
    det_v = float(np.linalg.det(V))
    if abs(det_v) <= singularity_threshold(V):
        raise SingularDesignError(
            f"level matrix is numerically singular (|det| = {abs(det_v):.3e})",
            det=det_v,
        )
    ext_y = group_extremes_replicated(dataset.y, k, design.reps)
    delta = float(ext_y.r.max()) / 2.0
    if dataset.true_theta is not None:
        eps = dataset.errors()
        ext_e = group_extremes_replicated(eps, k, design.reps)
        d_hat = solve_cramer(V, ext_e.q)
        theta = dataset.true_theta + d_hat
    else:
        d_hat = None
        theta = solve_cramer(V, ext_y.q)
    return SquareDesignFit(
        levels=V,
        det_levels=det_v,
        extremes=ext_y,
        theta_hat=theta,
        delta_hat=delta,
        theta_offset=d_hat,
    )


def closed_form_fit(dataset: Dataset) -> FitResult:
    """FitResult wrapper around the k = q closed form."""
    sq = square_design_fit(dataset)
    binding = np.flatnonzero(sq.extremes.r == sq.extremes.r.max())
    diagnostics = {
        "det_levels": sq.det_levels,
        "binding_levels": [int(i) for i in binding],
        "max_abs_residual": max_abs_residual(dataset, sq.theta_hat),
    }
    d_hat = sq.theta_offset
    if d_hat is None and dataset.true_theta is not None:
        d_hat = sq.theta_hat - dataset.true_theta
    if d_hat is not None:
        diagnostics["gamma"] = sq.levels @ d_hat
    return FitResult(
        theta_hat=sq.theta_hat,
        delta_hat=sq.delta_hat,
        method="closed_form",
        d_hat=d_hat,
        diagnostics=diagnostics,
    )


def lse_fit(dataset: Dataset) -> FitResult:
    """Least squares baseline, with the max absolute residual for comparability."""
    X = dataset.design.matrix()
    y = dataset.y
    q = X.shape[1]
    theta, _, rank, sing = np.linalg.lstsq(X, y, rcond=None)
    if rank < q:
        raise RankDeficientError(
            f"design has rank {rank} < {q}; least squares fit is not identified"
        )
    resid = y - X @ theta
    diagnostics = {
        "rank": int(rank),
        "normal_eq_residual": float(np.abs(X.T @ resid).max()),
    }
    d_hat = None
    if dataset.true_theta is not None:
        d_hat = theta - dataset.true_theta
    return FitResult(
        theta_hat=theta,
        delta_hat=float(np.abs(resid).max()),
        method="lse",
        d_hat=d_hat,
        diagnostics=diagnostics,
    )
