"""Dense two-phase primal simplex for standard-form linear programs.

Solves   min c.x   subject to   A x = b,  x >= 0.

Pricing is Dantzig (most negative reduced cost); after a stall of
consecutive degenerate pivots the solver switches to Bland's rule until a
nondegenerate pivot occurs, which guarantees termination on the highly
degenerate bases the minimax fitting problem produces. The basic solution
and the multipliers are re-derived from the final basis by direct solves,
so no pivoting drift survives into the reported answer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

# Consecutive degenerate pivots tolerated before anti-cycling kicks in.
STALL_LIMIT = 50


@dataclass
class StandardFormSolution:
    """Terminal state of a standard-form solve.

    ``multipliers`` is the vector y solving B'y = c_B at the final basis; for
    an optimal basis these are the duals of the equality constraints.
    """

    status: str
    x: Optional[np.ndarray]
    objective: Optional[float]
    basis: Optional[np.ndarray]
    multipliers: Optional[np.ndarray]
    iterations: int


def _pivot_loop(A, b, c, basis, enterable, tol, max_iter, iters):
    """Run simplex pivots until optimal/unbounded/limit. Mutates basis/enterable."""
    m = A.shape[0]
    stall = 0
    bland = False
    while True:
        if iters >= max_iter:
            return ITERATION_LIMIT, iters
        B = A[:, basis]
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, c[basis])
        reduced = c - A.T @ y
        reduced[basis] = 0.0
        candidates = enterable & (reduced < -tol)
        if not candidates.any():
            return OPTIMAL, iters
        if bland:
            enter = int(np.flatnonzero(candidates)[0])
        else:
            masked = np.where(candidates, reduced, np.inf)
            enter = int(np.argmin(masked))
        w = np.linalg.solve(B, A[:, enter])
        positive = w > tol
        if not positive.any():
            return UNBOUNDED, iters
        ratios = np.full(m, np.inf)
        ratios[positive] = np.maximum(xb[positive], 0.0) / w[positive]
        t = ratios.min()
        ties = np.flatnonzero(ratios <= t + 1e-12 * (1.0 + abs(t)))
        if bland:
            leave_row = int(ties[np.argmin(basis[ties])])
        else:
            # Highest column index leaves first: artificial columns sit at the
            # end, so this drives them out of the basis on ties.
            leave_row = int(ties[np.argmax(basis[ties])])
        basis[leave_row] = enter
        iters += 1
        if t <= tol:
            stall += 1
            if stall >= STALL_LIMIT:
                bland = True
        else:
            stall = 0
            bland = False


def solve_standard_form(A, b, c, *, tol: float = 1e-9,
                        max_iter: int | None = None) -> StandardFormSolution:
    """Two-phase simplex on  min c.x  s.t.  A x = b, x >= 0."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).reshape(-1).copy()
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    m, n = A.shape
    if b.shape[0] != m or c.shape[0] != n:
        raise ValueError(f"inconsistent LP shapes: A {A.shape}, b {b.shape}, c {c.shape}")
    if max_iter is None:
        max_iter = 50 * (m + n)

    # Orient rows so the artificial start is feasible; multipliers of flipped
    # rows change sign and are restored before returning.
    flip = b < 0
    if flip.any():
        A = A.copy()
        A[flip] *= -1.0
        b[flip] *= -1.0

    # Phase 1: artificial basis, minimize total infeasibility.
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = np.arange(n, n + m)
    enterable = np.ones(n + m, dtype=bool)
    status, iters = _pivot_loop(A1, b, c1, basis, enterable, tol, max_iter, 0)
    if status != OPTIMAL:
        return StandardFormSolution(status, None, None, None, None, iters)
    xb = np.linalg.solve(A1[:, basis], b)
    infeasibility = float(c1[basis] @ xb)
    if infeasibility > tol * (1.0 + float(np.abs(b).sum())):
        return StandardFormSolution(INFEASIBLE, None, None, None, None, iters)

    # Pivot surviving artificials out where the row admits a real column;
    # rows that admit none are linearly dependent and keep a pinned artificial.
    for row in range(m):
        if basis[row] < n:
            continue
        B = A1[:, basis]
        ident = np.zeros(m)
        ident[row] = 1.0
        row_of_inv = np.linalg.solve(B.T, ident)
        coeffs = row_of_inv @ A
        usable = np.flatnonzero((np.abs(coeffs) > 1e-7) & enterable[:n])
        usable = [j for j in usable if j not in basis]
        if usable:
            basis[row] = usable[0]

    # Phase 2: real objective; artificials frozen out of pricing.
    c2 = np.concatenate([c, np.zeros(m)])
    enterable[n:] = False
    status, iters = _pivot_loop(A1, b, c2, basis, enterable, tol, max_iter, iters)
    if status != OPTIMAL:
        return StandardFormSolution(status, None, None, None, None, iters)

    B = A1[:, basis]
    xb = np.linalg.solve(B, b)
    y = np.linalg.solve(B.T, c2[basis])
    y[flip] *= -1.0
    x = np.zeros(n)
    real = basis < n
    x[basis[real]] = xb[real]
    return StandardFormSolution(
        status=OPTIMAL,
        x=x,
        objective=float(c @ x),
        basis=basis.copy(),
        multipliers=y,
        iterations=iters,
    )
