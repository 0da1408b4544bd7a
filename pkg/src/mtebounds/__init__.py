"""Partial-identification bounds for marginal treatment effects under treatment misreporting."""
__version__ = "0.1.0"

from ._kernels import backend
from .analytic import (
    BoundsConfig,
    Interval,
    IntervalCurve,
    PairInputs,
    abs_moment_integral,
    ate_bounds_analytic,
    ate_bounds_numeric,
    ate_lower_analytic,
    ate_lower_analytic_tch,
    ate_upper_analytic,
    b_feasible,
    b_from_ate,
    breakdown_b,
    clamp,
    late_bounds,
    mte_bounds_multi,
    mte_bounds_pair,
    mte_curve,
    three_valued_tch_bounds,
)
from .moments import InputError, InstrumentOrdering, MomentTable, Sample, estimate_moments, pair_deltas
from .propensity import PropensityBounds, delta_p_interval, propensity_bounds, propensity_interval

__all__ = [
    "BoundsConfig", "InputError", "InstrumentOrdering", "Interval", "IntervalCurve", "MomentTable",
    "PairInputs", "PropensityBounds", "Sample", "abs_moment_integral", "ate_bounds_analytic",
    "ate_bounds_numeric", "ate_lower_analytic", "ate_lower_analytic_tch", "ate_upper_analytic",
    "b_feasible", "b_from_ate", "backend", "breakdown_b", "clamp", "delta_p_interval",
    "estimate_moments", "late_bounds", "mte_bounds_multi", "mte_bounds_pair", "mte_curve",
    "pair_deltas", "propensity_bounds", "propensity_interval", "three_valued_tch_bounds",
]
