"""Bootstrap standard errors and confidence sets for bounded parameters.

Replicate ``r`` resamples rows with a generator seeded from child ``r`` of
``SeedSequence(seed)``, so results do not depend on how replicates are
scheduled across threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm

from . import _kernels
from .analytic import (
    BoundsConfig,
    Interval,
    ate_bounds_numeric,
    ate_lower_analytic_tch,
    average_rows,
    batch_curves,
    mte_curve,
)
from .moments import (
    InputError,
    InstrumentOrdering,
    MomentTable,
    Sample,
    estimate_moments,
)
from .propensity import check_alpha

MAX_DROP_SHARE = 0.10


class BootstrapError(RuntimeError):
    """Too many bootstrap replicates produced a non-finite statistic."""


@dataclass(frozen=True)
class CiResult:
    point_lo: float
    point_hi: float
    ci_lo: float
    ci_hi: float
    se_lo: float
    se_hi: float
    level: float
    replicates: int = 0
    seed: Optional[int] = None
    dropped: int = 0

    @property
    def empty(self) -> bool:
        return not (self.point_lo <= self.point_hi)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"empty": self.empty}


def _resample_indices(n, B, seed, codes=None):
    """One index vector per replicate; stratified draws keep each z stratum's size."""
    children = np.random.SeedSequence(seed).spawn(B)
    if codes is None:
        return (np.random.default_rng(ss).integers(0, n, n) for ss in children)
    strata = [np.flatnonzero(codes == k) for k in np.unique(codes)]

    def draw(ss):
        rng = np.random.default_rng(ss)
        return np.concatenate([s[rng.integers(0, s.size, s.size)] for s in strata])

    return (draw(ss) for ss in children)


def _check_drops(values: np.ndarray, B: int, max_drop: float):
    finite = np.isfinite(values).all(axis=tuple(range(1, values.ndim)))
    dropped = int(B - finite.sum())
    if dropped > max_drop * B:
        raise BootstrapError(f"{dropped} of {B} bootstrap replicates were non-finite")
    return values[finite], dropped


def bootstrap_replicates(sample: Sample, statistic: Callable[[Sample], float], B: int, seed: int,
                         stratify: Optional[InstrumentOrdering] = None, n_jobs: int = 1,
                         max_drop: float = MAX_DROP_SHARE):
    """Statistic values on ``B`` row resamples, non-finite ones dropped.

    Returns ``(values, dropped)``. With ``stratify`` set, rows are resampled
    within each instrument stratum.
    """
    if B < 2:
        raise InputError("the bootstrap needs at least two replicates")
    codes = sample.codes(stratify) if stratify is not None else None
    idx = list(_resample_indices(len(sample), B, seed, codes))

    def one(ix):
        return np.asarray(statistic(sample.take(ix)), dtype=float)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            vals = list(pool.map(one, idx))
    else:
        vals = [one(ix) for ix in idx]
    return _check_drops(np.array(vals), B, max_drop)


def bootstrap_sd(sample: Sample, statistic: Callable[[Sample], float], B: int, seed: int, **kwargs) -> float:
    """Standard deviation of a scalar statistic over row resamples."""
    vals, _ = bootstrap_replicates(sample, statistic, B, seed, **kwargs)
    if vals.size < 2:
        raise BootstrapError("fewer than two finite replicates")
    return float(np.std(vals, ddof=1))


def bootstrap_moments(sample: Sample, ordering: InstrumentOrdering, B: int, seed: int, stratify: bool = False):
    """Replicated ``(ey, pdstar)`` arrays of shape (B, K) without materialising resamples.

    Uses the same resample indices as :func:`bootstrap_replicates` with the
    same seed.
    """
    if B < 2:
        raise InputError("the bootstrap needs at least two replicates")
    codes = sample.codes(ordering)
    k = len(ordering)
    d = sample.dstar.astype(np.float64)
    ey = np.empty((B, k))
    pd = np.empty((B, k))
    idx_iter = _resample_indices(len(sample), B, seed, codes if stratify else None)
    for r, idx in enumerate(idx_iter):
        counts, sy, _, sd = _kernels.resampled_strata_sums(idx.astype(np.int64), codes, sample.y, d, k)
        with np.errstate(divide="ignore", invalid="ignore"):
            ey[r] = sy / counts
            pd[r] = sd / counts
    return ey, np.clip(pd, 0.0, 1.0)


def set_ci(point_lo: float, point_hi: float, se_lo: float, se_hi: float, n: int, level: float = 0.95,
           replicates: int = 0, seed=None, dropped: int = 0) -> CiResult:
    """Confidence set ``[lo - z se_lo, hi + z se_hi]`` with ``z`` the ``(1+level)/2`` normal quantile.

    The standard errors are those of the bound estimates themselves, so no
    further division by sqrt(n) is applied; ``n`` is recorded only.
    """
    if not 0.0 < level < 1.0:
        raise InputError("confidence level must lie in (0, 1)")
    if n < 1:
        raise InputError("n must be positive")
    if se_lo < 0 or se_hi < 0:
        raise InputError("standard errors must be nonnegative")
    z = float(norm.ppf((1.0 + level) / 2.0))
    return CiResult(point_lo, point_hi, point_lo - z * se_lo, point_hi + z * se_hi, se_lo, se_hi,
                    level, replicates, seed, dropped)


def _replicate_sd(values: np.ndarray) -> np.ndarray:
    """Column standard deviations; +inf where any replicate is infinite."""
    with np.errstate(invalid="ignore"):
        sd = np.std(values, axis=0, ddof=1)
    return np.where(np.isfinite(values).all(axis=0), sd, np.inf)


def bootstrap_curve_se(sample: Sample, ordering: InstrumentOrdering, config: BoundsConfig, B: int, seed: int,
                       pairs=None, stratify: bool = False):
    """Bootstrap standard errors of the lower and upper MTE curves at every grid point."""
    ey, pd = bootstrap_moments(sample, ordering, B, seed, stratify)
    lb, ub, _ = batch_curves(ey, pd, ordering.labels, config, pairs)
    return _replicate_sd(lb), _replicate_sd(ub)


def ate_set_ci(sample: Sample, ordering: InstrumentOrdering, config: BoundsConfig, B: int = 199, seed: int = 0,
               level: float = 0.95, rule: str = "trapezoid", pairs=None, stratify: bool = False,
               max_drop: float = MAX_DROP_SHARE) -> CiResult:
    """Point estimate and bootstrap confidence set for the ATE bound.

    Replicates whose curve is EMPTY somewhere, or whose average is not
    finite, are dropped; more than ``max_drop`` of them is an error.
    """
    moments = estimate_moments(sample, ordering)
    point = ate_bounds_numeric(mte_curve(moments, config, pairs=pairs), rule)
    ey, pd = bootstrap_moments(sample, ordering, B, seed, stratify)
    lb, ub, _ = batch_curves(ey, pd, ordering.labels, config, pairs)
    v = config.vstars()
    with np.errstate(invalid="ignore"):
        lo = average_rows(lb, v, rule)
        hi = average_rows(ub, v, rule)
    empty = ~(lb <= ub).all(axis=1)
    reps = np.where(empty[:, None], np.nan, np.column_stack([lo, hi]))
    reps, dropped = _check_drops(reps, B, max_drop)
    se_lo, se_hi = (float(np.std(reps[:, j], ddof=1)) for j in (0, 1))
    return set_ci(point.lo, point.hi, se_lo, se_hi, len(sample), level, B, seed, dropped)


def ate_outer_plugin(moments: MomentTable, alpha_misreport: float, b: float, pair, y_support=None) -> Interval:
    """ATE bound under misreporting when treatment cannot hurt, with kink-free propensity substitutes.

    Uses ``P(D*=1|z) + alpha`` and ``P(D*=1|z') - alpha`` in place of the
    tight propensity bounds, which keeps the estimator smooth in the
    moments. The upper end is 0.
    """
    alpha = check_alpha(alpha_misreport)
    z_hi, z_lo = str(pair[0]), str(pair[1])
    i, j = moments.index(z_hi), moments.index(z_lo)
    p1u = moments.pdstar[i] + alpha
    p0l = moments.pdstar[j] - alpha
    if p1u > 1.0:
        raise InputError(f"outer bound needs P(D*=1|{z_hi}) + alpha <= 1, got {p1u:.6g}")
    if p0l < 0.0:
        raise InputError(f"outer bound needs P(D*=1|{z_lo}) - alpha >= 0, got {p0l:.6g}")
    dy = float(moments.ey[i] - moments.ey[j])
    dp_lo = float(moments.pdstar[i] - moments.pdstar[j])
    lo = ate_lower_analytic_tch(dy, float(p1u), float(p0l), dp_lo, b)
    if y_support is not None:
        lo = max(lo, BoundsConfig(b=b, y_support=y_support).effect_range()[0])
    return Interval(lo, 0.0)


def ci_coverage(ci: CiResult, target: Interval) -> bool:
    """Does the confidence set contain the whole target set?"""
    return not target.empty and ci.ci_lo <= target.lo and target.hi <= ci.ci_hi


__all__ = [
    "BootstrapError",
    "CiResult",
    "ate_outer_plugin",
    "ate_set_ci",
    "bootstrap_curve_se",
    "bootstrap_moments",
    "bootstrap_replicates",
    "bootstrap_sd",
    "ci_coverage",
    "set_ci",
]
