"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import itertools

import numpy as np
import pytest

from mtebounds.analytic import (
    BoundsConfig,
    PairInputs,
    ate_bounds_analytic,
    ate_bounds_numeric,
    b_denominator,
    b_from_ate,
    breakdown_b,
    clamp,
    mte_bounds_multi,
    mte_bounds_pair,
    mte_curve,
    three_valued_tch_bounds,
)
from mtebounds.inference import ate_set_ci, bootstrap_curve_se, ci_coverage
from mtebounds.lp import OPTIMAL, INFEASIBLE, MtrGrid, build_lp, solve_lp
from mtebounds.moments import MomentTable, estimate_moments
from mtebounds.simulation import linear_design_spec, compliant_spec, population_moments, simulate, true_mte

from test_analytic import _generic, _nested, _random_config, _random_moments, _three_valued_case
from test_lp import enumerate_optimum, random_lp

SNAP = MomentTable(("z0", "z1"), np.array([0.44, 0.41]), np.array([0.38, 0.49]), np.array([1.0, 1.0]))


@pytest.fixture
def verdict(capsys):
    def record(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return record


def test_criterion_01_b_selection_anchors(verdict):
    den = b_denominator(0.49, 0.38)
    bd = breakdown_b(-0.03, 0.49, 0.38)
    b = b_from_ate(-0.162, -0.03, 0.49, 0.38)
    ok = abs(den - 0.510466667) <= 1e-8 and abs(bd - 0.534270483) <= 1e-6 and abs(b - 0.22) <= 5e-3
    verdict(1, ok, f"denominator={den:.9f} breakdown_b={bd:.9f} b_from_ate={b:.4f}")


def test_criterion_02_population_containment(verdict):
    spec = compliant_spec()
    m = population_moments(spec)
    cfg = BoundsConfig(b=1.0, alpha=0.15, grid_n=101)
    curve = mte_curve(m, cfg)
    at = curve[int(np.argmin(np.abs(curve.vstars - 0.4)))]
    point_ok = abs(at.lo - 0.0) <= 1e-12 and abs(at.hi - 0.72) <= 1e-12
    contains = bool(curve.contains(0.75 * curve.vstars).all())
    verdict(2, point_ok and contains, f"MTE(0.4) in [{at.lo:.3g}, {at.hi:.15g}], truth inside at 101 points: {contains}")


@pytest.mark.slow
def test_criterion_03_sampled_containment(verdict):
    spec = compliant_spec()
    cfg = BoundsConfig(b=1.0, alpha=0.15, grid_n=101)
    hits = 0
    for seed in range(20):
        sample = simulate(spec, 200_000, seed=1000 + seed)
        curve = mte_curve(estimate_moments(sample, spec.ordering), cfg)
        se_lo, se_hi = bootstrap_curve_se(sample, spec.ordering, cfg, B=100, seed=seed)
        truth = true_mte(spec, curve.vstars)
        hits += bool(((curve.lo - 3 * se_lo <= truth) & (truth <= curve.hi + 3 * se_hi)).all())
    verdict(3, hits >= 19, f"{hits}/20 seeds contain the true curve after widening by 3 bootstrap SEs")


def test_criterion_04_analytic_numeric_ate(verdict):
    worst = 0.0
    cases = [(-0.03, 0.49, 0.38, 1.0), (-0.03, 0.49, 0.38, 0.22), (0.18, 0.7, 0.1, 1.0), (0.05, 0.9, 0.3, 2.0)]
    for dy, p1, p0, b in cases:
        m = MomentTable(("lo", "hi"), [0.0, dy], [p0, p1], [1, 1])
        num = ate_bounds_numeric(mte_curve(m, BoundsConfig(b=b, grid_n=10001)))
        ana = ate_bounds_analytic(dy, p1, p0, b)
        worst = max(worst, abs(num.lo - ana.lo), abs(num.hi - ana.hi))
    verdict(4, worst <= 1e-6, f"max |numeric - analytic| = {worst:.2e} over {len(cases)} designs at grid_n=10001")


def test_criterion_05_nesting_suite(verdict):
    rng = np.random.default_rng(2024)
    bad = {"variant": 0, "multi": 0, "alpha": 0, "b": 0}
    for _ in range(1000):
        m = _random_moments(rng, k=int(rng.integers(2, 5)))
        top = min(m.pdstar.min(), 1 - m.pdstar.max())
        a1, a2 = np.sort(rng.uniform(0, top, 2))
        b1, b2 = np.sort(rng.uniform(0, 3, 2))
        cfg = _random_config(rng, alpha=float(a1), b=float(b1))
        base = mte_curve(m, cfg)
        bad["variant"] += not _nested(mte_curve(m, cfg.with_(variant="smooth_monotone")), base)
        bad["alpha"] += not _nested(base, mte_curve(m, cfg.with_(alpha=float(a2))))
        bad["b"] += not _nested(base, mte_curve(m, cfg.with_(b=float(b2))))
        bad["multi"] += not all(_nested(base, mte_curve(m, cfg, pairs=[p])) for p in m.ordering.pairs())
    verdict(5, sum(bad.values()) == 0, f"violations over 1000 fuzz instances: {bad}")


def test_criterion_06_three_valued_closed_forms(verdict):
    rng = np.random.default_rng(606)
    worst, mismatched_empty = 0.0, 0
    for _ in range(1000):
        dy, p, dlp, dup, v, b = _three_valued_case(rng)
        closed = three_valued_tch_bounds(v, b, dy, p, dlp, dup)
        generic = _generic(dy, p, dlp, dup, v, b)
        if closed.empty or generic.empty:
            mismatched_empty += closed.empty != generic.empty
        else:
            worst = max(worst, abs(closed.lo - generic.lo), abs(closed.hi - generic.hi))
    verdict(6, worst <= 1e-12 and mismatched_empty == 0,
            f"max difference {worst:.1e}, EMPTY disagreements {mismatched_empty} over 1000 inputs")


def test_criterion_07_lp_correctness(verdict):
    rng = np.random.default_rng(707)
    wrong = 0
    for _ in range(200):
        prob = random_lp(rng)
        res = solve_lp(prob)
        best = enumerate_optimum(prob)
        if best is None:
            wrong += res.status != INFEASIBLE
        else:
            wrong += res.status != OPTIMAL or abs(res.value - best) > 1e-9

    spec = compliant_spec()
    m = population_moments(spec)
    dy = m.ey[1] - m.ey[0]
    grid = MtrGrid(200, (0.0, 1.0))
    miss, widened = 0, 0
    for v in (0.05, 0.25, 0.4, 0.55, 0.9):
        c = grid.centers[grid.cell_of(v)]
        truth = float(true_mte(spec, c))
        bounds = {}
        for lips in (None, 1.0):
            prob = build_lp([dy], [(0.7, 0.1)], grid, v, lipschitz_b=lips)
            bounds[lips] = (solve_lp(prob.with_sense("min")).value, solve_lp(prob).value)
            miss += not (bounds[lips][0] - 1e-9 <= truth <= bounds[lips][1] + 1e-9)
        widened += bounds[1.0][0] < bounds[None][0] - 1e-12 or bounds[1.0][1] > bounds[None][1] + 1e-12
    ok = wrong == 0 and miss == 0 and widened == 0
    verdict(7, ok, f"simplex/enumeration mismatches {wrong}/200; truth outside envelope {miss}; Lipschitz widened {widened}")


def test_criterion_08_ate_table_pattern(verdict):
    alphas, bs = (0.2, 0.1, 0.0), (1.0, 0.5, 0.1)
    published = {
        (0.2, 1.0): (-1.00, 0.00), (0.2, 0.5): (-0.96, 0.00), (0.2, 0.1): (-0.48, -0.04),
        (0.1, 1.0): (-0.94, 0.00), (0.1, 0.5): (-0.81, 0.00), (0.1, 0.1): (-0.38, -0.09),
        (0.0, 1.0): (-0.72, -0.02), (0.0, 0.5): (-0.50, -0.05), (0.0, 0.1): (-0.28, -0.18),
    }
    ours = {}
    for a, b in itertools.product(alphas, bs):
        cfg = BoundsConfig(b=b, alpha=a, tch=True, y_support=(0.0, 1.0))
        iv = ate_bounds_numeric(mte_curve(SNAP, cfg))
        ours[(a, b)] = (round(iv.lo, 2) + 0.0, round(iv.hi, 2) + 0.0)
    anchor = ate_bounds_numeric(mte_curve(SNAP, BoundsConfig(b=1.0, tch=True, y_support=(0, 1))))
    anchor_ok = abs(anchor.lo + 0.72) <= 0.05 and abs(anchor.hi + 0.02) <= 0.05
    signs_ok = all(np.sign(ours[k][j]) == np.sign(published[k][j]) for k in published for j in (0, 1))

    def steps(table, axis_keys):
        return [np.sign(np.diff([table[k][j] for k in keys])).tolist() for keys in axis_keys for j in (0, 1)]

    along_alpha = [[(a, b) for a in alphas] for b in bs]
    along_b = [[(a, b) for b in bs] for a in alphas]
    order_ok = steps(ours, along_alpha) == steps(published, along_alpha) and steps(ours, along_b) == steps(published, along_b)
    verdict(8, anchor_ok and signs_ok and order_ok,
            f"(alpha=0,b=1) = [{anchor.lo:.3f}, {anchor.hi:.3f}]; signs match {signs_ok}; ordering matches {order_ok}; "
            f"grid {ours}")


@pytest.mark.slow
def test_criterion_09_ci_coverage(verdict):
    spec = compliant_spec()
    cfg = BoundsConfig(b=1.0, alpha=0.15)
    target = ate_bounds_numeric(mte_curve(population_moments(spec), cfg))
    covered = 0
    for rep in range(500):
        sample = simulate(spec, 5000, seed=50_000 + rep)
        ci = ate_set_ci(sample, spec.ordering, cfg, B=199, seed=rep, level=0.95)
        covered += ci_coverage(ci, target)
    rate = covered / 500
    verdict(9, rate >= 0.93, f"coverage of [{target.lo:.4f}, {target.hi:.4f}] = {rate:.3f} over 500 replications")


def test_criterion_10_monotone_band_inside_smooth(verdict):
    spec = linear_design_spec("verbatim_onesided")
    m = population_moments(spec)
    checked, outside = 0, 0
    for support in (None, (0.0, 1.0)):
        for b in (0.5, 1.0, 2.0):
            cfg = BoundsConfig(b=b, alpha=0.15, y_support=support, grid_n=401)
            smooth = mte_curve(m, cfg)
            mono = mte_curve(m, cfg.with_(variant="smooth_monotone"))
            outside += int((~((smooth.lo <= mono.lo) & (mono.hi <= smooth.hi))).sum())
            checked += smooth.vstars.size
    verdict(10, outside == 0, f"monotone band outside smooth band at {outside} of {checked} grid points")
