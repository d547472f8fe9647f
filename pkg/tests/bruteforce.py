"""Independent exhaustive oracle for small minimax fitting instances."""

import itertools

import numpy as np


def brute_force_minimax(X, y, feas_tol=1e-9):
    """Optimal (theta, delta) by enumerating all q+1 active-constraint sets.

    Solves every (q+1)x(q+1) system picked from the 2N constraint rows of the
    fitting LP and keeps the feasible point with the smallest delta. Valid
    whenever X has full column rank, which guarantees a vertex optimum.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, q = X.shape
    rows = np.vstack([
        np.column_stack([X, np.ones(n)]),
        np.column_stack([-X, np.ones(n)]),
    ])
    rhs = np.concatenate([y, -y])
    best = None
    for combo in itertools.combinations(range(2 * n), q + 1):
        sub = rows[list(combo)]
        try:
            z = np.linalg.solve(sub, rhs[list(combo)])
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(z)) or z[-1] < -feas_tol:
            continue
        if np.all(rows @ z >= rhs - feas_tol) and (best is None or z[-1] < best[-1]):
            best = z
    assert best is not None, "no feasible vertex: is the design rank-deficient?"
    return best[:q], float(best[-1])
