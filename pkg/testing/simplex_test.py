import lie.nilsoliton as ns
import numpy as np
import pytest
import scipy.optimize


@pytest.mark.parametrize("seed", range(12))
def test_matches_linprog(seed):
    """Optimal values agree with scipy's HiGHS on random bounded programs."""
    rng = np.random.default_rng(seed)
    n = 5
    c = rng.normal(size=n)
    A_ub = rng.uniform(0.1, 1.1, size=(4, n))
    b_ub = rng.uniform(1.0, 2.0, size=4)
    A_eq = rng.normal(size=(2, n))
    b_eq = A_eq @ (0.05 * rng.uniform(0.5, 1.5, size=n))

    mine = ns.simplex.solve_lp(c, A_eq, b_eq, A_ub, b_ub)
    ref = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq)
    assert ref.status == 0
    assert mine.status == "optimal"
    assert mine.objective == pytest.approx(ref.fun, abs=1e-8)
    assert A_eq @ mine.x == pytest.approx(b_eq, abs=1e-9)
    assert np.all(A_ub @ mine.x <= b_ub + 1e-9)
    assert np.all(mine.x >= -1e-9)


@pytest.mark.parametrize("seed", range(8))
def test_free_variables_match_linprog(seed):
    """Free variables in a box cut by random half-spaces."""
    rng = np.random.default_rng(100 + seed)
    n = 4
    c = rng.normal(size=n)
    A_ub = np.vstack([np.eye(n), -np.eye(n), rng.normal(size=(3, n))])
    b_ub = np.ones(2 * n + 3)

    mine = ns.simplex.solve_lp(c, A_ub=A_ub, b_ub=b_ub, free=range(n))
    ref = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * n)
    assert ref.status == 0
    assert mine.objective == pytest.approx(ref.fun, abs=1e-8)


def test_redundant_equalities():
    """A repeated equality row is dropped after phase one."""
    r = ns.simplex.solve_lp(
        [1.0, 2.0], A_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 2.0]
    )
    assert r.optimal
    assert r.x.tolist() == pytest.approx([1.0, 0.0])


def test_degenerate_vertex():
    """Bland's rule terminates on a degenerate program."""
    A_ub = [[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [1.0, -1.0]]
    r = ns.simplex.solve_lp([-1.0, -1.0], A_ub=A_ub, b_ub=[1.0, 1.0, 1.0, 1.0])
    assert r.objective == pytest.approx(-1.0)


def test_failures():
    """Pivot limits and malformed shapes raise."""
    with pytest.raises(ns.core.LPNumericalFailure):
        ns.simplex.solve_lp([-1.0, -1.0], A_ub=[[1.0, 1.0]], b_ub=[1.0], max_iter=0)
    with pytest.raises(ns.core.DimensionMismatch):
        ns.simplex.solve_lp([1.0], A_ub=[[1.0]], b_ub=[1.0, 2.0])
