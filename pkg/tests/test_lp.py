import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from mtebounds.analytic import BoundsConfig, clamp, mte_bounds_pair, pair_inputs
from mtebounds.lp import (
    INFEASIBLE,
    OPTIMAL,
    LPProblem,
    MtrGrid,
    build_lp,
    default_tolerance,
    lp_mte_bounds,
    solve_lp,
)
from mtebounds.moments import InputError, MomentTable
from mtebounds.propensity import propensity_bounds
from mtebounds.simulation import compliant_spec, population_moments, true_mte


def enumerate_optimum(prob: LPProblem):
    """Best objective over all basic solutions of the box + equality system.

    A vertex fixes n - m' variables at a bound and solves the m' rows for the
    rest; equality slack is treated as an extra bounded variable per row.
    """
    n = prob.n
    A, b, t = prob.A_eq, prob.b_eq, prob.eq_tol
    m = b.size
    # variables: x (n) then slacks s_i in [-t_i, t_i] with A x - s = b
    full_A = np.hstack([A, -np.eye(m)]) if m else np.zeros((0, n))
    lo = np.concatenate([prob.lo, -t])
    hi = np.concatenate([prob.hi, t])
    c = np.concatenate([prob.c, np.zeros(m)])
    N = n + m
    best = None
    for basic in itertools.combinations(range(N), m):
        nonbasic = [j for j in range(N) if j not in basic]
        B = full_A[:, list(basic)]
        if m and abs(np.linalg.det(B)) < 1e-12:
            continue
        for ends in itertools.product(*[(lo[j], hi[j]) for j in nonbasic]):
            x = np.empty(N)
            x[nonbasic] = ends
            if m:
                x[list(basic)] = np.linalg.solve(B, b - full_A[:, nonbasic] @ x[nonbasic])
            if ((x < lo - 1e-9) | (x > hi + 1e-9)).any():
                continue
            val = c @ x
            if best is None or (val > best if prob.sense == "max" else val < best):
                best = val
    return best


def random_lp(rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(0, 3))
    c = rng.integers(-3, 4, n).astype(float)
    lo = rng.integers(-2, 1, n).astype(float)
    hi = lo + rng.integers(0, 3, n)
    A = rng.integers(-2, 3, (m, n)).astype(float)
    # rhs from a random box point keeps most problems feasible
    x0 = lo + rng.random(n) * (hi - lo)
    b = A @ x0 if rng.random() < 0.85 else rng.normal(0, 5, m)
    tol = np.where(rng.random(m) < 0.5, 0.0, rng.uniform(0, 0.5, m))
    return LPProblem(c, lo, hi, A, b, tol, sense=str(rng.choice(["max", "min"])))


def test_box_only():
    res = solve_lp(LPProblem(np.array([1.0]), np.array([0.0]), np.array([1.0])))
    assert res.status == OPTIMAL and res.value == 1.0


def test_tight_equality():
    prob = LPProblem(np.array([1.0, 1.0]), np.zeros(2), np.ones(2), np.array([[1.0, 1.0]]), np.array([1.0]))
    res = solve_lp(prob)
    assert res.status == OPTIMAL and res.value == pytest.approx(1.0, abs=1e-12)


def test_infeasible_reported():
    prob = LPProblem(np.array([1.0, 1.0]), np.zeros(2), np.ones(2), np.array([[1.0, 1.0]]), np.array([3.0]))
    res = solve_lp(prob)
    assert res.status == INFEASIBLE and math.isnan(res.value) and res.x is None


def test_unbounded_box_rejected():
    with pytest.raises(InputError):
        LPProblem(np.array([1.0]), np.array([0.0]), np.array([np.inf]))


@pytest.mark.parametrize("seed", range(60))
def test_simplex_matches_enumeration(seed):
    prob = random_lp(np.random.default_rng(seed))
    res = solve_lp(prob)
    best = enumerate_optimum(prob)
    if best is None:
        assert res.status == INFEASIBLE
    else:
        assert res.status == OPTIMAL
        assert res.value == pytest.approx(best, abs=1e-9)
        assert prob.is_feasible(res.x)


@pytest.mark.parametrize("seed", range(30))
def test_inequality_rows_match_linprog(seed):
    rng = np.random.default_rng(100 + seed)
    n, m = 6, 4
    c = rng.normal(size=n)
    lo, hi = -rng.random(n), rng.random(n)
    A_ub = rng.normal(size=(m, n))
    b_ub = A_ub @ (lo + rng.random(n) * (hi - lo)) + rng.uniform(-0.2, 0.5, m)
    A_eq = rng.normal(size=(1, n))
    b_eq = A_eq @ (lo + rng.random(n) * (hi - lo))
    prob = LPProblem(c, lo, hi, A_eq, b_eq, 0.0, A_ub, b_ub, "min")
    ref = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=list(zip(lo, hi)), method="highs")
    res = solve_lp(prob)
    if ref.status == 2:
        assert res.status == INFEASIBLE
    else:
        assert res.status == OPTIMAL
        assert res.value == pytest.approx(ref.fun, abs=1e-8)


def test_deterministic():
    prob = random_lp(np.random.default_rng(5))
    a, b = solve_lp(prob), solve_lp(prob)
    assert a.value == b.value or (math.isnan(a.value) and math.isnan(b.value))
    assert a.iterations == b.iterations


# ---------------------------------------------------------------- grid LP

def test_outside_window_hits_box_corners():
    grid = MtrGrid(20, (0.0, 1.0))
    prob = build_lp([0.1], [(0.6, 0.3)], grid, 0.9)
    assert solve_lp(prob).value == pytest.approx(1.0)
    assert solve_lp(prob.with_sense("min")).value == pytest.approx(-1.0)


def test_grid_weights():
    grid = MtrGrid(10, (0, 1))
    w = grid.weights(0.1, 0.7)
    assert w.sum() == pytest.approx(0.6)
    np.testing.assert_allclose(grid.weights(0.1, 0.7, "midpoint"), w)
    w = grid.weights(0.15, 0.7)
    assert w.sum() == pytest.approx(0.55)
    assert grid.weights(0.15, 0.7, "midpoint").sum() == pytest.approx(0.6)
    assert grid.cell_of(0.4) in (3, 4)
    with pytest.raises(InputError):
        MtrGrid(10, None)
    with pytest.raises(InputError):
        MtrGrid(10, (0, np.inf))


def test_small_grid_lp_matches_enumeration():
    grid = MtrGrid(2, (0.0, 1.0))
    for v, dy in itertools.product((0.2, 0.8), (-0.2, 0.1, 0.3)):
        prob = build_lp([dy], [(1.0, 0.5)], grid, v)
        for sense in ("max", "min"):
            p = prob.with_sense(sense)
            assert solve_lp(p).value == pytest.approx(enumerate_optimum(p), abs=1e-9)


def _truth_vector(spec, grid):
    c = grid.centers
    return np.concatenate([spec.m1(c), spec.m0(c)])


def test_truth_feasible_at_true_p(compliant_moments):
    spec = compliant_spec()
    grid = MtrGrid(200, (0.0, 1.0))
    dy = compliant_moments.ey[1] - compliant_moments.ey[0]
    prob = build_lp([dy], [(0.7, 0.1)], grid, 0.4, lipschitz_b=1.0)
    assert prob.is_feasible(_truth_vector(spec, grid), tol=1e-12)


def _no_misreport_design():
    spec = compliant_spec()
    m = population_moments(spec)
    # same outcomes, truthful reports: propensities are point identified
    return spec, MomentTable(m.labels, m.ey, np.array([0.1, 0.7]), m.n)


def test_envelope_at_true_p_contains_truth_and_lipschitz_never_widens():
    spec, m = _no_misreport_design()
    pb = propensity_bounds(m, 0.0)
    grid = MtrGrid(40, (0.0, 1.0))
    for v in np.linspace(0.0125, 0.9875, 9):
        plain = lp_mte_bounds(m, pb, v, grid, p_grid_n=1)
        lips = lp_mte_bounds(m, pb, v, grid, p_grid_n=1, lipschitz_b=1.0)
        truth = float(true_mte(spec, grid.centers[grid.cell_of(v)]))
        assert plain.contains(truth, 1e-9) and lips.contains(truth, 1e-9)
        assert lips.issubset(plain, 1e-12)


def test_lp_with_lipschitz_not_wider_than_analytic():
    _, m = _no_misreport_design()
    pb = propensity_bounds(m, 0.0)
    grid = MtrGrid(40, (0.0, 1.0))
    cfg = BoundsConfig(b=1.0, y_support=(0, 1))
    for g in (4, 12, 20, 30):
        v = float(grid.centers[g])
        lips = lp_mte_bounds(m, pb, v, grid, p_grid_n=1, lipschitz_b=1.0, tol=1e-13)
        ana = clamp(mte_bounds_pair(pair_inputs(m, pb, "0.7", "0.1"), 1.0, v), cfg)
        assert lips.issubset(ana, 1e-9)


def test_p_grid_envelope_grows_on_nested_grids(compliant_moments):
    pb = propensity_bounds(compliant_moments, 0.15)
    grid = MtrGrid(20, (0.0, 1.0))
    prev = None
    for n in (1, 3, 5):
        iv = lp_mte_bounds(compliant_moments, pb, 0.42, grid, p_grid_n=n)
        if prev is not None and not prev.empty:
            assert prev.issubset(iv, 1e-9)
        prev = iv
    truth = float(true_mte(compliant_spec(), grid.centers[grid.cell_of(0.42)]))
    assert prev.contains(truth, 1e-9)


def test_default_tolerance_uses_variances():
    m = MomentTable(("a", "b"), [0, 1], [0.2, 0.6], [100, 400], var_y=[1.0, 4.0])
    assert default_tolerance(m, [("b", "a")])[0] == pytest.approx(2 * math.sqrt(0.01 + 0.01))
    m = MomentTable(("a", "b"), [0, 1], [0.2, 0.6], [100, 400])
    assert default_tolerance(m, [("b", "a")])[0] == 1e-6


def test_all_candidates_infeasible_is_empty():
    m = MomentTable(("a", "b"), [0.0, 0.9], [0.4, 0.5], [1, 1])
    pb = propensity_bounds(m, 0.0)
    iv = lp_mte_bounds(m, pb, 0.45, MtrGrid(10, (0, 1)), p_grid_n=1)
    assert iv.empty
