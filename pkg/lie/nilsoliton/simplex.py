"""
Module for a small dense linear programming engine used by the criterion.

:obj:`solve_lp` minimizes c·x subject to

.. math::

    A_{eq} x = b_{eq}, \\quad A_{ub} x \\le b_{ub}, \\quad x_j \\ge 0 \\ (j \\notin \\mathrm{free})

with a two-phase tableau simplex. Pivots follow Bland's rule (smallest entering index,
smallest leaving basis index among ratio ties), which cannot cycle and makes the
result reproducible bit for bit. The programs solved here have at most a few hundred
rows and columns, so the dense tableau is adequate.

"""
__all__ = [
    "LPResult",
    "solve_lp",
]

import numpy as np
from typing import Iterable, Optional
import lie.nilsoliton.core as core


class LPResult:
    """Outcome of :obj:`solve_lp`.

    Attributes:
        status: One of ``optimal``, ``infeasible`` or ``unbounded``.
        x: The optimal point in the original variables, None unless optimal.
        objective: c·x at the optimum, None unless optimal.
        iterations: Pivots taken over both phases.
    """

    def __init__(self, status: str, x=None, objective=None, iterations: int = 0):
        self.status = status
        self.x = x
        self.objective = objective
        self.iterations = iterations

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def __repr__(self):
        return f"LPResult(status={self.status!r}, objective={self.objective!r})"


def _pivot(T: np.ndarray, row: int, col: int):
    T[row, :] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r, :] -= T[r, col] * T[row, :]


def _simplex(T: np.ndarray, basis: list, eps: float, max_iter: int) -> tuple:
    """Pivot until no reduced cost in the last row is negative."""
    for it in range(max_iter):
        enter = np.flatnonzero(T[-1, :-1] < -eps)
        if enter.size == 0:
            return "optimal", it
        col = int(enter[0])
        column = T[:-1, col]
        rows = np.flatnonzero(column > eps)
        if rows.size == 0:
            return "unbounded", it
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + eps * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
    raise core.LPNumericalFailure(f"simplex did not terminate in {max_iter} pivots")


def solve_lp(
    c,
    A_eq=None,
    b_eq=None,
    A_ub=None,
    b_ub=None,
    free: Optional[Iterable[int]] = None,
    eps: float = 1e-10,
    max_iter: int = 5000,
) -> LPResult:
    """Minimize c·x over a polyhedron with a two-phase dense simplex.

    Free variables are split into a difference of two nonnegative ones, inequality
    rows receive slack columns, and every row gets an artificial variable for phase
    one. Rows whose artificial cannot be pivoted out after phase one are redundant
    equalities and are dropped.

    Args:
        c: Objective coefficients, length N.
        A_eq: Equality rows (p, N) with right-hand side ``b_eq``.
        A_ub: Inequality rows (q, N) with right-hand side ``b_ub``.
        free: Indices of variables without sign constraint.
        eps: Pivot and reduced-cost threshold.
        max_iter: Pivot limit per phase.

    Returns:
        An :obj:`LPResult`.

    Examples:

        Maximize x + y on the unit simplex, as a minimization.

        >>> r = solve_lp([-1.0, -1.0], A_ub=[[1.0, 1.0]], b_ub=[1.0])
        >>> r.status, round(r.objective, 12)
        ('optimal', -1.0)

        A free variable reaching a negative optimum.

        >>> r = solve_lp([1.0], A_eq=[[1.0]], b_eq=[-2.5], free=[0])
        >>> r.x.tolist()
        [-2.5]

        >>> solve_lp([1.0], A_eq=[[1.0], [1.0]], b_eq=[1.0, 2.0]).status
        'infeasible'
        >>> solve_lp([-1.0], A_ub=[[-1.0]], b_ub=[0.0]).status
        'unbounded'
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    n = len(c)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    if len(b_eq) != A_eq.shape[0] or len(b_ub) != A_ub.shape[0]:
        raise core.DimensionMismatch("constraint rows and right-hand sides differ in length")
    free = sorted(set(int(j) for j in ([] if free is None else free)))

    # Columns: x (n), negative parts of free variables, slacks, artificials.
    nf = len(free)
    p, q = A_eq.shape[0], A_ub.shape[0]
    m = p + q
    A = np.zeros((m, n + nf + q))
    A[:p, :n] = A_eq
    A[p:, :n] = A_ub
    A[:, n : n + nf] = -A[:, free]
    A[p:, n + nf :] = np.eye(q)
    b = np.concatenate([b_eq, b_ub])
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    cost = np.concatenate([c, -c[free], np.zeros(q)])
    ncol = A.shape[1]

    T = np.zeros((m + 1, ncol + m + 1))
    T[:m, :ncol] = A
    T[:m, ncol : ncol + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, ncol : ncol + m] = 1.0
    T[-1, :] -= T[:m, :].sum(axis=0)
    basis = list(range(ncol, ncol + m))

    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    _, it1 = _simplex(T, basis, eps, max_iter)
    if -T[-1, -1] > 1e-9 * scale:
        return LPResult("infeasible", iterations=it1)

    keep = []
    for r in range(m):
        if basis[r] >= ncol:
            cols = np.flatnonzero(np.abs(T[r, :ncol]) > eps)
            if cols.size == 0:
                continue
            _pivot(T, r, int(cols[0]))
            basis[r] = int(cols[0])
        keep.append(r)

    T2 = np.zeros((len(keep) + 1, ncol + 1))
    T2[:-1, :ncol] = T[keep, :ncol]
    T2[:-1, -1] = T[keep, -1]
    basis2 = [basis[r] for r in keep]
    T2[-1, :ncol] = cost
    for r, bc in enumerate(basis2):
        if cost[bc] != 0.0:
            T2[-1, :] -= cost[bc] * T2[r, :]

    status, it2 = _simplex(T2, basis2, eps, max_iter)
    if status != "optimal":
        return LPResult(status, iterations=it1 + it2)

    z = np.zeros(ncol)
    for r, bc in enumerate(basis2):
        z[bc] = T2[r, -1]
    x = z[:n].copy()
    x[free] -= z[n : n + nf]
    return LPResult("optimal", x, float(c @ x), it1 + it2)
