"""Closed-form MTE, LATE and ATE bounds under Lipschitz-smooth treatment responses.

For a pair of instrument values ``z`` (higher propensity) and ``z'`` the
IV contrast satisfies

    dY - I(v*)  <=  MTE(v*) * dp  <=  dY + I(v*),

    I(v*) = kappa * b * integral_{p_l(z')}^{p_u(z)} |v - v*| dv,

with ``kappa = 2`` under smoothness alone and ``kappa = 1`` when both
treatment responses are also nondecreasing. The unknown propensity contrast
``dp`` ranges over ``[dp_lo, dp_hi]``. Solving for ``MTE(v*)`` over that range
gives the pair's bound; several pairs are intersected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .moments import InputError, MomentTable
from .propensity import PropensityBounds, check_alpha, propensity_bounds

KAPPA = {"smooth": 2.0, "smooth_monotone": 1.0}
CASE_LABELS = {
    _kernels.CASE_POSITIVE: "positive",
    _kernels.CASE_NEGATIVE: "negative",
    _kernels.CASE_UNDETERMINED: "undetermined",
    _kernels.CASE_CONFLICT: "conflict",
}
CASE3_RULES = ("union", "printed")

if hasattr(np, "trapezoid"):
    _trapezoid = np.trapezoid
else:  # pragma: no cover - numpy < 2
    _trapezoid = np.trapz


@dataclass(frozen=True)
class Interval:
    """A closed interval; ``lo > hi`` (or NaN) marks the EMPTY set."""

    lo: float
    hi: float

    @classmethod
    def empty_set(cls) -> "Interval":
        return cls(math.inf, -math.inf)

    @property
    def empty(self) -> bool:
        return not (self.lo <= self.hi)

    @property
    def width(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return not self.empty and self.lo - tol <= x <= self.hi + tol

    def issubset(self, other: "Interval", tol: float = 0.0) -> bool:
        if self.empty:
            return True
        if other.empty:
            return False
        return other.lo - tol <= self.lo and self.hi <= other.hi + tol

    def as_tuple(self) -> tuple:
        return (self.lo, self.hi)


def normalize_support(y_support):
    """Return ``((y1_lo, y1_hi), (y0_lo, y0_hi))`` or None.

    Accepts a common ``(lo, hi)`` for both arms or a per-arm pair.
    """
    if y_support is None:
        return None
    ys = tuple(y_support)
    if len(ys) == 2 and all(np.isscalar(v) for v in ys):
        arms = (tuple(map(float, ys)), tuple(map(float, ys)))
    elif len(ys) == 2:
        arms = (tuple(map(float, ys[0])), tuple(map(float, ys[1])))
    else:
        raise InputError(f"cannot interpret outcome support {y_support!r}")
    for lo, hi in arms:
        if not lo <= hi:
            raise InputError(f"outcome support needs lo <= hi, got {(lo, hi)}")
    return arms


@dataclass(frozen=True)
class BoundsConfig:
    """Maintained assumptions and numerical settings for one bound computation.

    ``case3`` selects how a pair whose sign is undetermined is bounded:
    ``"union"`` (default) is the exact range of ``MTE`` over the admissible
    propensity contrasts; ``"printed"`` keeps the max/min combination as
    commonly stated, which is narrower and can exclude the truth.
    """

    b: float
    alpha: float = 0.0
    variant: str = "smooth"
    tch: bool = False
    nonnegative: bool = False
    y_support: Optional[tuple] = None
    grid_n: int = 401
    case3: str = "union"

    def __post_init__(self):
        if not (self.b >= 0 and math.isfinite(self.b)):
            raise InputError(f"smoothness constant b must be finite and >= 0, got {self.b}")
        check_alpha(self.alpha)
        if self.variant not in KAPPA:
            raise InputError(f"variant must be one of {sorted(KAPPA)}, got {self.variant!r}")
        if self.grid_n < 3:
            raise InputError("grid_n must be at least 3")
        if self.case3 not in CASE3_RULES:
            raise InputError(f"case3 must be one of {CASE3_RULES}")
        object.__setattr__(self, "y_support", normalize_support(self.y_support))

    @property
    def kappa(self) -> float:
        return KAPPA[self.variant]

    def effect_range(self) -> tuple:
        """Worst-case range of Y1 - Y0 implied by the support (and sign) restrictions."""
        lo, hi = -math.inf, math.inf
        if self.y_support is not None:
            (y1lo, y1hi), (y0lo, y0hi) = self.y_support
            lo, hi = y1lo - y0hi, y1hi - y0lo
        if self.tch:
            hi = min(hi, 0.0)
        if self.nonnegative:
            lo = max(lo, 0.0)
        return lo, hi

    def vstars(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_n)

    def with_(self, **changes) -> "BoundsConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class PairInputs:
    """Everything one instrument pair contributes to an MTE bound."""

    delta_y: float
    dp_lo: float
    dp_hi: float
    p_hi_of_z: float
    p_lo_of_zprime: float

    def __post_init__(self):
        if not self.dp_lo <= self.dp_hi:
            raise InputError(f"need dp_lo <= dp_hi, got {(self.dp_lo, self.dp_hi)}")
        for p in (self.p_hi_of_z, self.p_lo_of_zprime):
            if not 0.0 <= p <= 1.0:
                raise InputError(f"propensity bound {p} outside [0, 1]")


def pair_inputs(moments: MomentTable, pbounds: PropensityBounds, z_hi, z_lo) -> PairInputs:
    i, j = moments.index(z_hi), moments.index(z_lo)
    dp_lo, dp_hi = pbounds.pair(z_hi, z_lo)
    return PairInputs(
        delta_y=float(moments.ey[i] - moments.ey[j]),
        dp_lo=float(dp_lo),
        dp_hi=float(dp_hi),
        p_hi_of_z=float(pbounds.p_hi[i]),
        p_lo_of_zprime=float(pbounds.p_lo[j]),
    )


@dataclass(frozen=True)
class IntervalCurve:
    """Bounds on MTE(v*) over a strictly increasing grid of v*."""

    vstars: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    case: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.vstars, float)
        lo = np.asarray(self.lo, float)
        hi = np.asarray(self.hi, float)
        if not (v.shape == lo.shape == hi.shape) or v.ndim != 1:
            raise InputError("curve arrays must be 1-d and of equal length")
        if v.size > 1 and not (np.diff(v) > 0).all():
            raise InputError("v* grid must be strictly increasing")
        case = np.zeros(v.shape, np.int8) if self.case is None else np.asarray(self.case, np.int8)
        object.__setattr__(self, "vstars", v)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "case", case)

    def __len__(self):
        return self.vstars.size

    def __getitem__(self, i) -> Interval:
        return Interval(float(self.lo[i]), float(self.hi[i]))

    @property
    def empty_mask(self) -> np.ndarray:
        return ~(self.lo <= self.hi)

    @property
    def any_empty(self) -> bool:
        return bool(self.empty_mask.any())

    def contains(self, values, tol: float = 0.0) -> np.ndarray:
        values = np.asarray(values, float)
        return (self.lo - tol <= values) & (values <= self.hi + tol)

    def case_labels(self) -> list:
        labels = [CASE_LABELS[int(c)] for c in self.case]
        return ["empty" if e else lab for lab, e in zip(labels, self.empty_mask)]


# ---------------------------------------------------------------------------
# pointwise bounds
# ---------------------------------------------------------------------------

def abs_moment_integral(p_lo: float, p_hi: float, vstar: float) -> float:
    """Integral of |v - vstar| over [p_lo, p_hi], in closed form."""
    if p_lo > p_hi:
        raise InputError(f"integration window reversed: {p_lo} > {p_hi}")
    if vstar <= p_lo:
        return (p_hi ** 2 - p_lo ** 2) / 2 + vstar * (p_lo - p_hi)
    if vstar >= p_hi:
        return (p_lo ** 2 - p_hi ** 2) / 2 + vstar * (p_hi - p_lo)
    return vstar ** 2 - vstar * (p_hi + p_lo) + (p_hi ** 2 + p_lo ** 2) / 2


def _check_point(b, vstar, variant):
    if not b >= 0:
        raise InputError(f"b must be >= 0, got {b}")
    if not 0.0 <= vstar <= 1.0:
        raise InputError(f"v* must lie in [0, 1], got {vstar}")
    if variant not in KAPPA:
        raise InputError(f"unknown variant {variant!r}")


def _pair_arrays(pairs: Sequence[PairInputs]):
    if not pairs:
        raise InputError("at least one instrument pair is required")
    dy = np.array([[p.delta_y for p in pairs]])
    l = np.array([[p.dp_lo for p in pairs]])
    u = np.array([[p.dp_hi for p in pairs]])
    w_lo = np.array([[p.p_lo_of_zprime for p in pairs]])
    w_hi = np.array([[p.p_hi_of_z for p in pairs]])
    return dy, l, u, w_lo, w_hi


def _point(pairs, b, vstar, variant, case3):
    _check_point(b, vstar, variant)
    if case3 not in CASE3_RULES:
        raise InputError(f"case3 must be one of {CASE3_RULES}")
    dy, l, u, w_lo, w_hi = _pair_arrays(pairs)
    lb, ub, case = _kernels.bounds_grid(
        np.array([float(vstar)]), dy, l, u, w_lo, w_hi, np.array([KAPPA[variant] * b]), case3 == "printed"
    )
    return Interval(float(lb[0, 0]), float(ub[0, 0])), int(case[0, 0])


def mte_bounds_pair(inputs: PairInputs, b: float, vstar: float, variant: str = "smooth", case3: str = "union") -> Interval:
    """MTE(v*) bound from a single instrument pair (no support or sign clamp).

    When ``dY - I >= 0`` the bound is ``[(dY-I)/dp_hi, (dY+I)/dp_lo]``; when
    ``dY + I <= 0`` it is ``[(dY-I)/dp_lo, (dY+I)/dp_hi]``. Otherwise the
    default rule returns ``[(dY-I)/dp_lo, (dY+I)/dp_lo]``. A nonpositive
    denominator makes the affected side infinite.
    """
    return _point([inputs], b, vstar, variant, case3)[0]


def mte_bounds_multi(pairs: Sequence[PairInputs], b: float, vstar: float, variant: str = "smooth", case3: str = "union") -> Interval:
    """Intersect the bounds of several instrument pairs at one v*.

    An EMPTY result is returned rather than raised: it is evidence against the
    maintained assumptions.
    """
    return _point(list(pairs), b, vstar, variant, case3)[0]


def sign_case(pairs: Sequence[PairInputs], b: float, vstar: float, variant: str = "smooth") -> str:
    """Which sign certificate fires at v*: positive, negative, undetermined or conflict."""
    return CASE_LABELS[_point(list(pairs), b, vstar, variant, "union")[1]]


def clamp(interval: Interval, config: BoundsConfig) -> Interval:
    """Intersect with the support-implied effect range and any sign restriction."""
    lo, hi = config.effect_range()
    return Interval(max(interval.lo, lo), min(interval.hi, hi))


def _clamp_arrays(lo, hi, config):
    elo, ehi = config.effect_range()
    return np.maximum(lo, elo), np.minimum(hi, ehi)


def _resolve_pairs(moments, pairs):
    if pairs is None:
        return moments.ordering.pairs()
    pairs = [(str(hi), str(lo)) for hi, lo in pairs]
    for hi, lo in pairs:
        if moments.index(hi) <= moments.index(lo):
            raise InputError(f"pair ({hi}, {lo}) is not ordered high-to-low")
    return pairs


def _curves_from_arrays(v, dy, dp_lo, dp_hi, w_lo, w_hi, config):
    scale = np.full(dy.shape[0], config.kappa * config.b)
    lb, ub, case = _kernels.bounds_grid(v, dy, dp_lo, dp_hi, w_lo, w_hi, scale, config.case3 == "printed")
    lb, ub = _clamp_arrays(lb, ub, config)
    # a contrast window with dp_lo > dp_hi means the data reject this alpha
    rejected = (dp_lo > dp_hi).any(axis=1)
    lb[rejected], ub[rejected] = math.inf, -math.inf
    return lb, ub, case


def batch_curves(ey, pdstar, labels, config: BoundsConfig, pairs=None, vstars=None):
    """Clamped bound curves for R moment sets at once.

    ``ey`` and ``pdstar`` have shape (R, K). Used by the bootstrap, where R is
    the number of replicates. Returns ``(lb, ub, case)`` of shape (R, G).
    """
    from .propensity import delta_p_interval, propensity_interval

    ey = np.atleast_2d(np.asarray(ey, float))
    pd = np.atleast_2d(np.asarray(pdstar, float))
    labels = tuple(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    if pairs is None:
        pairs = [(hi, lo) for k, lo in enumerate(labels) for hi in labels[k + 1:]]
    hi_idx = np.array([index[hi] for hi, _ in pairs])
    lo_idx = np.array([index[lo] for _, lo in pairs])
    p_lo, p_hi = propensity_interval(pd, config.alpha)
    p_lo, p_hi = np.atleast_2d(p_lo), np.atleast_2d(p_hi)
    dd = pd[:, hi_idx] - pd[:, lo_idx]
    dp_lo, dp_hi = delta_p_interval(np.clip(dd, -1, 1), config.alpha)
    v = config.vstars() if vstars is None else np.asarray(vstars, float)
    return _curves_from_arrays(
        v, ey[:, hi_idx] - ey[:, lo_idx], np.atleast_2d(dp_lo), np.atleast_2d(dp_hi),
        p_lo[:, lo_idx], p_hi[:, hi_idx], config,
    )


def mte_curve(moments: MomentTable, config: BoundsConfig, pairs=None, pbounds: Optional[PropensityBounds] = None) -> IntervalCurve:
    """Clamped MTE bounds on a uniform grid of ``config.grid_n`` points in [0, 1].

    ``pairs`` defaults to every ordered pair of instrument values. If the
    misreporting level is incompatible with an observed contrast (its
    ``dp_lo > dp_hi``) every grid point is EMPTY.
    """
    pairs = _resolve_pairs(moments, pairs)
    if pbounds is None:
        pbounds = propensity_bounds(moments, config.alpha)
    elif not math.isclose(pbounds.alpha, config.alpha):
        raise InputError("propensity bounds were computed for a different misreporting level")
    hi = [moments.index(a) for a, _ in pairs]
    lo = [moments.index(b) for _, b in pairs]
    windows = np.array([pbounds.pair(a, b) for a, b in pairs])
    v = config.vstars()
    lb, ub, case = _curves_from_arrays(
        v,
        (moments.ey[hi] - moments.ey[lo])[None, :],
        windows[None, :, 0],
        windows[None, :, 1],
        pbounds.p_lo[lo][None, :],
        pbounds.p_hi[hi][None, :],
        config,
    )
    return IntervalCurve(v, lb[0], ub[0], case[0])


# ---------------------------------------------------------------------------
# LATE and ATE
# ---------------------------------------------------------------------------

def late_bounds(delta_y: float, dp: float, b: float) -> Interval:
    """LATE bound over (p(z'), p(z)) when the propensity contrast ``dp`` is known."""
    if not dp > 0:
        raise InputError("the propensity contrast must be positive")
    band = 2 * b / 3 * dp ** 3
    return Interval((delta_y - band) / dp, (delta_y + band) / dp)


def b_denominator(p1: float, p0: float) -> float:
    """(2/3)(p1^3-p0^3)/dp - (p1^2-p0^2)/dp + 1, the per-unit-b widening of the ATE bound."""
    dp = p1 - p0
    if dp == 0:
        raise InputError("propensities at the two instrument values must differ")
    return 2.0 / 3.0 * (p1 ** 3 - p0 ** 3) / dp - (p1 ** 2 - p0 ** 2) / dp + 1.0


def ate_upper_analytic(delta_y: float, p1: float, p0: float, b: float) -> float:
    """Integral over v* in [0, 1] of the no-misreporting MTE upper bound."""
    return delta_y / (p1 - p0) + b * b_denominator(p1, p0) if p1 != p0 else _raise_equal()


def ate_lower_analytic(delta_y: float, p1: float, p0: float, b: float) -> float:
    return delta_y / (p1 - p0) - b * b_denominator(p1, p0) if p1 != p0 else _raise_equal()


def _raise_equal():
    raise InputError("propensities at the two instrument values must differ")


def ate_bounds_analytic(delta_y: float, p1: float, p0: float, b: float) -> Interval:
    return Interval(ate_lower_analytic(delta_y, p1, p0, b), ate_upper_analytic(delta_y, p1, p0, b))


def ate_lower_analytic_tch(delta_y: float, p1u: float, p0l: float, dp_lo: float, b: float) -> float:
    """ATE lower bound under misreporting when treatment cannot hurt.

    Integrates the negative-sign MTE lower bound over v* in [0, 1]. The caller
    clamps the result at the support-implied floor.
    """
    if not dp_lo > 0:
        raise InputError("the lower propensity contrast must be positive")
    num = (
        delta_y
        - 2 * b / 3 * (p1u ** 3 - p0l ** 3)
        + b * (p1u ** 2 - p0l ** 2)
        - b * (p1u - p0l)
    )
    return num / dp_lo


def ate_bounds_numeric(curve: IntervalCurve, rule: str = "trapezoid") -> Interval:
    """Average the bound curves over v*.

    ``rule="trapezoid"`` integrates over [0, 1]; ``rule="plain"`` is the equal
    weight mean over grid points. Any EMPTY grid point makes the result EMPTY.
    """
    if curve.any_empty:
        return Interval.empty_set()
    if rule == "trapezoid":
        span = curve.vstars[-1] - curve.vstars[0]
        with np.errstate(invalid="ignore"):
            lo = _trapezoid(curve.lo, curve.vstars) / span
            hi = _trapezoid(curve.hi, curve.vstars) / span
    elif rule == "plain":
        lo, hi = curve.lo.mean(), curve.hi.mean()
    else:
        raise InputError(f"unknown mean rule {rule!r}")
    return Interval(float(lo), float(hi))


def average_rows(values: np.ndarray, vstars: np.ndarray, rule: str = "trapezoid") -> np.ndarray:
    """Row-wise version of the averaging in :func:`ate_bounds_numeric`."""
    if rule == "plain":
        return values.mean(axis=-1)
    return _trapezoid(values, vstars, axis=-1) / (vstars[-1] - vstars[0])


# ---------------------------------------------------------------------------
# choosing b
# ---------------------------------------------------------------------------

def b_from_ate(ate_ref: float, delta_y: float, p1: float, p0: float) -> float:
    """Smallest b whose no-misreporting ATE upper bound reaches ``ate_ref``."""
    return (ate_ref - delta_y / (p1 - p0)) / b_denominator(p1, p0)


def breakdown_b(delta_y: float, p1: float, p0: float) -> float:
    """Smallest b at which the no-misreporting ATE bound no longer excludes zero."""
    return abs(delta_y / (p1 - p0)) / b_denominator(p1, p0)


def heldout_consistent(curve: IntervalCurve, delta_y: float, lo_window, hi_window, dp_window, window_n: int = 41, tol: float = 1e-9) -> bool:
    """Can the curve reproduce a held-out contrast for some admissible propensities?

    Checks ``min integral(lb) <= delta_y <= max integral(ub)`` over
    ``[p(z'), p(z)]`` with ``p(z')`` in ``lo_window``, ``p(z)`` in
    ``hi_window`` and ``p(z) - p(z')`` in ``dp_window``. Optimising over the
    windows keeps the check conservative: b is refuted only if no admissible
    propensity pair is consistent.
    """
    if curve.any_empty:
        return False
    v = curve.vstars
    a = np.unique(np.linspace(lo_window[0], lo_window[1], window_n))
    c = np.unique(np.linspace(hi_window[0], hi_window[1], window_n))
    A, C = np.meshgrid(a, c, indexing="ij")
    width = C - A
    ok = (width > 0) & (width >= dp_window[0] - 1e-12) & (width <= dp_window[1] + 1e-12)
    if not ok.any():
        ok = width > 0
    if not ok.any():
        return True

    def primitive(f):
        if not np.isfinite(f).all():
            return None
        cum = np.concatenate([[0.0], np.cumsum((f[1:] + f[:-1]) / 2 * np.diff(v))])
        return lambda x: np.interp(x, v, cum)

    Fl, Fu = primitive(curve.lo), primitive(curve.hi)
    lower_ok = Fl is None or (Fl(C) - Fl(A))[ok].min() <= delta_y + tol
    upper_ok = Fu is None or (Fu(C) - Fu(A))[ok].max() >= delta_y - tol
    return bool(lower_ok and upper_ok)


def b_feasible(b: float, moments: MomentTable, alpha: float = 0.0, *, variant: str = "smooth", y_support=None, tch: bool = False, fit_pair=None, grid_n: int = 1001) -> bool:
    """Is smoothness constant ``b`` consistent with the data?

    Bounds are built from ``fit_pair`` alone (default: the extreme instrument
    values) and every other pair is held out: its observed contrast must lie
    between the integrals of the lower and upper bound over its propensity
    window. Needs at least three instrument values.
    """
    labels = moments.labels
    if len(labels) < 3:
        raise InputError("choosing b from the data needs at least three instrument values")
    fit_pair = (labels[-1], labels[0]) if fit_pair is None else (str(fit_pair[0]), str(fit_pair[1]))
    config = BoundsConfig(b=b, alpha=alpha, variant=variant, y_support=y_support, tch=tch, grid_n=grid_n)
    pb = propensity_bounds(moments, alpha)
    curve = mte_curve(moments, config, pairs=[fit_pair], pbounds=pb)
    for hi, lo in moments.ordering.pairs():
        if (hi, lo) == fit_pair:
            continue
        dy = float(moments.ey[moments.index(hi)] - moments.ey[moments.index(lo)])
        if not heldout_consistent(curve, dy, pb.interval(lo), pb.interval(hi), pb.pair(hi, lo)):
            return False
    return True


def feasible_b_values(b_grid, moments: MomentTable, alpha: float = 0.0, **kwargs) -> list:
    """The values in ``b_grid`` that :func:`b_feasible` does not refute."""
    return [float(b) for b in b_grid if b_feasible(float(b), moments, alpha, **kwargs)]


# ---------------------------------------------------------------------------
# three-valued instrument, treatment cannot hurt, Y in [0, 1]
# ---------------------------------------------------------------------------

def three_valued_tch_bounds(vstar, b, dy, p, dlp, dup) -> Interval:
    """Explicit five-region formulas for a three-valued instrument.

    Assumes treatment cannot hurt, outcomes in [0, 1] and
    ``p_l0 <= p_l1 <= p_u1 <= p_u2``. ``dy``, ``dlp`` and ``dup`` map the
    pair keys ``"21"``, ``"20"``, ``"10"`` to the outcome contrast and the
    lower/upper propensity contrast; ``p`` maps ``"l0", "l1", "u1", "u2"``
    to propensity bounds. Kept as written (no shared helpers) so it can serve
    as a cross-check on the generic pair machinery.
    """
    pl0, pl1, pu1, pu2 = p["l0"], p["l1"], p["u1"], p["u2"]
    if not pl0 <= pl1 <= pu1 <= pu2:
        raise InputError("requires p_l0 <= p_l1 <= p_u1 <= p_u2")
    v = vstar
    below = lambda hi, lo: (hi ** 2 - lo ** 2) / 2 + v * (lo - hi)
    inside = lambda hi, lo: v ** 2 - v * (hi + lo) + (hi ** 2 + lo ** 2) / 2
    above = lambda hi, lo: (lo ** 2 - hi ** 2) / 2 + v * (hi - lo)
    if v <= pl0:
        w21, w20, w10 = below(pu2, pl1), below(pu2, pl0), below(pu1, pl0)
    elif v <= pl1:
        w21, w20, w10 = below(pu2, pl1), inside(pu2, pl0), inside(pu1, pl0)
    elif v <= pu1:
        w21, w20, w10 = inside(pu2, pl1), inside(pu2, pl0), inside(pu1, pl0)
    elif v <= pu2:
        w21, w20, w10 = inside(pu2, pl1), inside(pu2, pl0), above(pu1, pl0)
    else:
        w21, w20, w10 = above(pu2, pl1), above(pu2, pl0), above(pu1, pl0)
    lo = max(
        -1.0,
        (dy["21"] - 2 * b * w21) / dlp["21"],
        (dy["20"] - 2 * b * w20) / dlp["20"],
        (dy["10"] - 2 * b * w10) / dlp["10"],
    )
    hi = min(
        0.0,
        (dy["21"] + 2 * b * w21) / dup["21"],
        (dy["20"] + 2 * b * w20) / dup["20"],
        (dy["10"] + 2 * b * w10) / dup["10"],
    )
    return Interval(lo, hi)
