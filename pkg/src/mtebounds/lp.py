"""MTE bounds without shape restrictions, via a grid linear program.

The treatment responses ``m1, m0`` are discretised to piecewise-constant
values on ``G`` equal cells of [0, 1], boxed by the outcome support. For a
fixed propensity vector, each instrument pair contributes one row

    sum_g w_g (m1_g - m0_g) = E[Y|z] - E[Y|z'],

where ``w_g`` is the length of cell g inside (p(z'), p(z)). The bound on
``MTE(v*)`` is the min and max of ``m1 - m0`` at the cell holding v*. When
propensities are only set identified, the bound is the union over a grid of
candidate propensity vectors.

The solver is a dense two-phase simplex on box-bounded variables with
Bland's rule; problems here have at most a few hundred columns.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .analytic import Interval, normalize_support
from .moments import InputError, MomentTable
from .propensity import PropensityBounds

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LPProblem:
    """Optimise ``c @ x`` subject to equality rows (with slack), ``<=`` rows and a box.

    Equality row i holds as ``|A_eq[i] @ x - b_eq[i]| <= eq_tol[i]``.
    """

    c: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    eq_tol: np.ndarray = None
    A_ub: np.ndarray = None
    b_ub: np.ndarray = None
    sense: str = "max"

    def __post_init__(self):
        c = np.asarray(self.c, float)
        n = c.size
        lo = np.broadcast_to(np.asarray(self.lo, float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.hi, float), (n,)).copy()
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise InputError("every LP variable needs a finite box")
        if (lo > hi).any():
            raise InputError("LP box has lo > hi")
        A_eq = np.zeros((0, n)) if self.A_eq is None else np.atleast_2d(np.asarray(self.A_eq, float))
        b_eq = np.zeros(0) if self.b_eq is None else np.atleast_1d(np.asarray(self.b_eq, float))
        tol = np.zeros(b_eq.size) if self.eq_tol is None else np.broadcast_to(np.asarray(self.eq_tol, float), b_eq.shape).copy()
        A_ub = np.zeros((0, n)) if self.A_ub is None else np.atleast_2d(np.asarray(self.A_ub, float))
        b_ub = np.zeros(0) if self.b_ub is None else np.atleast_1d(np.asarray(self.b_ub, float))
        if A_eq.shape != (b_eq.size, n) or A_ub.shape != (b_ub.size, n):
            raise InputError("constraint matrices do not match the variable count")
        if (tol < 0).any():
            raise InputError("equality slack must be nonnegative")
        if self.sense not in ("max", "min"):
            raise InputError("sense must be 'max' or 'min'")
        for name, val in (("c", c), ("lo", lo), ("hi", hi), ("A_eq", A_eq), ("b_eq", b_eq),
                          ("eq_tol", tol), ("A_ub", A_ub), ("b_ub", b_ub)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.c.size

    def with_sense(self, sense: str) -> "LPProblem":
        return LPProblem(self.c, self.lo, self.hi, self.A_eq, self.b_eq, self.eq_tol, self.A_ub, self.b_ub, sense)

    def is_feasible(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, float)
        if ((x < self.lo - tol) | (x > self.hi + tol)).any():
            return False
        if self.b_eq.size and (np.abs(self.A_eq @ x - self.b_eq) > self.eq_tol + tol).any():
            return False
        return not (self.b_ub.size and (self.A_ub @ x > self.b_ub + tol).any())


@dataclass(frozen=True)
class LPResult:
    value: float
    status: str
    x: Optional[np.ndarray]
    iterations: int


def _standard_form(prob: LPProblem):
    """Shift to ``0 <= y <= u`` and append one bounded slack per row.

    Returns the row matrix ``M``, right-hand side ``r >= 0``, column upper
    bounds, and for each row a column that can start in the basis (a slack
    when its initial value is within bounds, else a fresh artificial).
    """
    n = prob.n
    u = prob.hi - prob.lo
    rows, rhs, slack_hi = [], [], []
    for a, b, t in zip(prob.A_eq, prob.b_eq, prob.eq_tol):
        # a.y + s = b - a.lo + t with s in [0, 2t]
        rows.append(a)
        rhs.append(b - a @ prob.lo + t)
        slack_hi.append(2 * t)
    for a, b in zip(prob.A_ub, prob.b_ub):
        # a.y + s = b - a.lo with s in [0, rhs - min(a.y)]
        r = b - a @ prob.lo
        rows.append(a)
        rhs.append(r)
        slack_hi.append(r - np.minimum(a, 0.0) @ u)
    m = len(rows)
    M = np.zeros((m, n + m))
    if m:
        M[:, :n] = np.array(rows)
        M[:, n:] = np.eye(m)
    rhs = np.array(rhs, float)
    upper = np.concatenate([u, np.array(slack_hi, float)])
    infeasible = bool((upper < -1e-12).any())
    upper = np.maximum(upper, 0.0)

    start, art_rows = [], []
    for i in range(m):
        if 0.0 <= rhs[i] <= upper[n + i]:
            start.append(n + i)
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    if n_art:
        flip = rhs < 0
        M[flip] *= -1
        rhs = np.abs(rhs)
        art = np.zeros((m, n_art))
        for k, i in enumerate(art_rows):
            art[i, k] = 1.0
        M = np.hstack([M, art])
        upper = np.concatenate([upper, np.full(n_art, np.inf)])
        start_cols = np.empty(m, dtype=np.int64)
        it_art = iter(range(n_art))
        for i in range(m):
            start_cols[i] = n + m + next(it_art) if i in art_rows else n + i
    else:
        start_cols = np.array(start, dtype=np.int64)
    return M, rhs, upper, start_cols, n, n + m, infeasible


class _Tableau:
    def __init__(self, M, rhs, upper, start_cols):
        self.T = np.ascontiguousarray(M, dtype=np.float64)
        self.rhs = rhs
        self.upper = upper
        self.start = start_cols  # columns holding B^-1 after every pivot
        self.basis = start_cols.copy()
        self.at_upper = np.zeros(M.shape[1], dtype=bool)
        self.iterations = 0

    def basic_values(self):
        x = self.T[:, self.start] @ self.rhs
        up = np.flatnonzero(self.at_upper)
        if up.size:
            x = x - self.T[:, up] @ self.upper[up]
        return x

    def full_solution(self):
        y = np.where(self.at_upper, self.upper, 0.0)
        y[self.basis] = self.basic_values()
        return y

    def run(self, cost, allowed, max_iter, eps=1e-9):
        """Minimise ``cost @ y`` from the current basis; returns a status."""
        T = self.T
        m = T.shape[0]
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            xB = self.basic_values()
            rc = cost - cost[self.basis] @ T
            rc[self.basis] = 0.0
            improving = allowed & np.where(self.at_upper, rc > eps, (rc < -eps) & (self.upper > 0))
            cand = np.flatnonzero(improving)
            if cand.size == 0:
                return OPTIMAL
            entering = int(cand[0])
            direction = -1 if self.at_upper[entering] else 1
            g = direction * T[:, entering]
            ub = self.upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                down = np.where(g > eps, np.maximum(xB, 0.0) / g, math.inf)
                up = np.where((g < -eps) & np.isfinite(ub), np.maximum(ub - xB, 0.0) / -g, math.inf)
            ratio = np.minimum(down, up)
            theta = float(ratio.min()) if m else math.inf
            leave = -1
            if math.isfinite(theta):
                ties = np.flatnonzero(ratio <= theta + 1e-12)
                leave = int(ties[np.argmin(self.basis[ties])])
                leave_to_upper = bool(up[leave] < down[leave])
            self.iterations += 1
            if self.upper[entering] <= theta:
                self.at_upper[entering] = not self.at_upper[entering]
                continue
            if leave < 0:
                return UNBOUNDED
            _kernels.pivot(T, leave, entering)
            old = self.basis[leave]
            self.at_upper[old] = leave_to_upper
            self.at_upper[entering] = False
            self.basis[leave] = entering


def solve_lp(prob: LPProblem, max_iter: int = 50_000) -> LPResult:
    """Two-phase bounded-variable simplex with Bland's rule."""
    M, rhs, upper, start, n, n_real, infeasible = _standard_form(prob)
    if infeasible:
        return LPResult(math.nan, INFEASIBLE, None, 0)
    m, ncol = M.shape
    if m == 0:
        # box only: each variable goes to the better end
        maximise = prob.sense == "max"
        x = np.where((prob.c > 0) == maximise, prob.hi, prob.lo)
        x = np.where(prob.c == 0, prob.lo, x)
        return LPResult(float(prob.c @ x), OPTIMAL, x, 0)

    tab = _Tableau(M, rhs, upper, start)
    allowed = np.ones(ncol, dtype=bool)
    if ncol > n_real:
        cost1 = np.zeros(ncol)
        cost1[n_real:] = 1.0
        status = tab.run(cost1, allowed, max_iter)
        if status == ITERATION_LIMIT:
            return LPResult(math.nan, status, None, tab.iterations)
        y = tab.full_solution()
        scale = 1.0 + np.abs(rhs).max()
        if y[n_real:].sum() > 1e-9 * scale:
            return LPResult(math.nan, INFEASIBLE, None, tab.iterations)
        for i in range(m):
            if tab.basis[i] >= n_real:
                row = tab.T[i, :n_real]
                cand = np.flatnonzero((np.abs(row) > 1e-9) & ~np.isin(np.arange(n_real), tab.basis))
                if cand.size:
                    j = int(cand[0])
                    _kernels.pivot(tab.T, i, j)
                    tab.at_upper[tab.basis[i]] = False
                    tab.at_upper[j] = False
                    tab.basis[i] = j
        tab.upper = upper.copy()
        tab.upper[n_real:] = 0.0
        allowed[n_real:] = False
    cost = np.zeros(ncol)
    cost[:n] = -prob.c if prob.sense == "max" else prob.c
    status = tab.run(cost, allowed, max_iter)
    if status != OPTIMAL:
        return LPResult(math.nan, status, None, tab.iterations)
    y = tab.full_solution()
    x = prob.lo + np.clip(y[:n], 0.0, upper[:n])
    return LPResult(float(prob.c @ x), OPTIMAL, x, tab.iterations)


# ---------------------------------------------------------------------------
# grid LP for MTE bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MtrGrid:
    """``G`` equal cells on [0, 1]; m1 and m0 boxed by their outcome supports."""

    G: int = 200
    y_support: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.G < 2:
            raise InputError("the response grid needs at least two cells")
        sup = normalize_support(self.y_support)
        if sup is None:
            raise InputError("the LP route requires a bounded outcome support")
        for lo, hi in sup:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise InputError("the LP route requires a bounded outcome support")
        object.__setattr__(self, "y_support", sup)

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.G + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return (e[1:] + e[:-1]) / 2

    @property
    def width(self) -> float:
        return 1.0 / self.G

    def cell_of(self, vstar: float) -> int:
        """Cell whose center is nearest to v*."""
        if not 0.0 <= vstar <= 1.0:
            raise InputError("v* must lie in [0, 1]")
        return int(np.argmin(np.abs(self.centers - vstar)))

    def weights(self, a: float, b: float, rule: str = "overlap") -> np.ndarray:
        """Per-cell weight of the window (a, b).

        ``overlap`` uses the exact length of each cell inside the window;
        ``midpoint`` counts a whole cell when its center is inside.
        """
        lo, hi = min(a, b), max(a, b)
        e = self.edges
        if rule == "overlap":
            return np.clip(np.minimum(e[1:], hi) - np.maximum(e[:-1], lo), 0.0, None)
        if rule == "midpoint":
            c = self.centers
            return np.where((c > lo) & (c < hi), self.width, 0.0)
        raise InputError(f"unknown weight rule {rule!r}")


def build_lp(delta_ys, p_pairs, grid: MtrGrid, vstar: float, sense: str = "max",
             lipschitz_b: Optional[float] = None, tol=1e-6, weights: str = "overlap") -> LPProblem:
    """Grid LP for one fixed propensity vector.

    Variables are ``[m1_0 .. m1_{G-1}, m0_0 .. m0_{G-1}]``. ``p_pairs`` holds
    ``(p(z), p(z'))`` for each row of ``delta_ys``.
    """
    G = grid.G
    delta_ys = np.atleast_1d(np.asarray(delta_ys, float))
    if len(p_pairs) != delta_ys.size:
        raise InputError("need one propensity pair per contrast")
    A = np.zeros((delta_ys.size, 2 * G))
    for k, (p_hi, p_lo) in enumerate(p_pairs):
        if not p_hi >= p_lo:
            raise InputError("each propensity pair must be ordered (p(z), p(z')) with p(z) >= p(z')")
        w = grid.weights(p_lo, p_hi, weights)
        A[k, :G] = w
        A[k, G:] = -w
    c = np.zeros(2 * G)
    g = grid.cell_of(vstar)
    c[g], c[G + g] = 1.0, -1.0
    (y1lo, y1hi), (y0lo, y0hi) = grid.y_support
    lo = np.concatenate([np.full(G, y1lo), np.full(G, y0lo)])
    hi = np.concatenate([np.full(G, y1hi), np.full(G, y0hi)])
    A_ub = b_ub = None
    if lipschitz_b is not None:
        if lipschitz_b < 0:
            raise InputError("Lipschitz constant must be nonnegative")
        D = np.zeros((G - 1, G))
        idx = np.arange(G - 1)
        D[idx, idx + 1], D[idx, idx] = 1.0, -1.0
        Z = np.zeros_like(D)
        diff = np.vstack([np.hstack([D, Z]), np.hstack([Z, D])])
        A_ub = np.vstack([diff, -diff])
        b_ub = np.full(A_ub.shape[0], lipschitz_b * grid.width)
    return LPProblem(c, lo, hi, A, delta_ys, tol, A_ub, b_ub, sense)


def _candidate_grid(pbounds: PropensityBounds, labels, pairs, n: int):
    axes = []
    for lab in labels:
        lo, hi = pbounds.interval(lab)
        axes.append(np.unique(np.linspace(lo, hi, n)))
    pos = {lab: i for i, lab in enumerate(labels)}
    for cand in itertools.product(*axes):
        ok = True
        for hi, lo in pairs:
            d = cand[pos[hi]] - cand[pos[lo]]
            dlo, dhi = pbounds.pair(hi, lo)
            if not (d > 0 and dlo - 1e-12 <= d <= dhi + 1e-12):
                ok = False
                break
        if ok:
            yield cand


def default_tolerance(moments: MomentTable, pairs) -> np.ndarray:
    """Two standard errors of each contrast when stratum variances are known, else 1e-6."""
    if moments.var_y is None:
        return np.full(len(pairs), 1e-6)
    out = []
    for hi, lo in pairs:
        i, j = moments.index(hi), moments.index(lo)
        se = math.sqrt(moments.var_y[i] / moments.n[i] + moments.var_y[j] / moments.n[j])
        out.append(max(2 * se, 1e-6))
    return np.array(out)


def lp_mte_bounds(moments: MomentTable, pbounds: PropensityBounds, vstar: float, grid: MtrGrid = None,
                  p_grid_n: int = 21, lipschitz_b: Optional[float] = None, tol=None, pairs=None,
                  weights: str = "overlap") -> Interval:
    """Union over candidate propensity vectors of the fixed-p LP bounds.

    Candidates form a ``p_grid_n``-point grid over each ``[p_lo(z), p_hi(z)]``,
    kept only if every pairwise difference is positive and inside its
    ``[dp_lo, dp_hi]`` window. Returns EMPTY when no candidate is feasible.
    """
    if p_grid_n < 1:
        raise InputError("p_grid_n must be at least 1")
    grid = MtrGrid() if grid is None else grid
    labels = moments.labels
    pairs = moments.ordering.pairs() if pairs is None else [(str(a), str(b)) for a, b in pairs]
    dys = np.array([moments.ey[moments.index(hi)] - moments.ey[moments.index(lo)] for hi, lo in pairs])
    tol = default_tolerance(moments, pairs) if tol is None else tol
    pos = {lab: i for i, lab in enumerate(labels)}
    best_lo, best_hi = math.inf, -math.inf
    for cand in _candidate_grid(pbounds, labels, pairs, p_grid_n):
        p_pairs = [(cand[pos[hi]], cand[pos[lo]]) for hi, lo in pairs]
        prob = build_lp(dys, p_pairs, grid, vstar, "max", lipschitz_b, tol, weights)
        top = solve_lp(prob)
        if top.status != OPTIMAL:
            continue
        bottom = solve_lp(prob.with_sense("min"))
        best_hi = max(best_hi, top.value)
        best_lo = min(best_lo, bottom.value)
    return Interval(best_lo, best_hi)
