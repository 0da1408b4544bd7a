"""Interval identification of true propensity scores under a known misreporting rate.

With ``alpha = P(eps = 1)`` fixed and ``eps`` independent of the instrument,
the observed share ``P(D*=1|Z=z)`` pins the true propensity ``p(z)`` to an
interval, and the observed contrast between two instrument values pins the
true contrast ``p(z) - p(z')`` to another.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .moments import InputError, MomentTable


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha < 0.5:
        raise InputError(f"misreporting level must lie in [0, 0.5), got {alpha}")
    return alpha


def propensity_interval(pdstar, alpha):
    """Bounds on p(z) given P(D*=1|Z=z) and misreporting level ``alpha``.

    Works elementwise on arrays. The result is clipped to [0, 1]; for
    ``alpha < 0.5`` the clip only guards against rounding, since the smaller
    of the two upper branches never exceeds one.
    """
    alpha = check_alpha(alpha)
    pd = np.asarray(pdstar, dtype=np.float64)
    if ((pd < 0) | (pd > 1)).any():
        raise InputError("P(D*=1|Z=z) must lie in [0, 1]")
    lo = np.maximum(pd - alpha, alpha - pd)
    hi = np.minimum(pd + alpha, (1 - alpha) + (1 - pd))
    lo, hi = np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


def delta_p_interval(delta_dstar, alpha):
    """Bounds on p(z) - p(z') given the observed contrast in reported treatment."""
    alpha = check_alpha(alpha)
    dd = np.asarray(delta_dstar, dtype=np.float64)
    if (np.abs(dd) > 1).any():
        raise InputError("a difference of probabilities must lie in [-1, 1]")
    lo = dd
    hi = np.minimum(np.minimum(1.0, 2 * alpha + dd), 2 * (1 - alpha) - dd)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo.copy(), hi


def outer_propensity_interval(pdstar, alpha):
    """Kink-free outer bounds (P(D*=1|z) - alpha, P(D*=1|z) + alpha).

    Unlike :func:`propensity_interval` these are smooth in the observed share,
    so plug-in estimators built on them are asymptotically normal.
    """
    alpha = check_alpha(alpha)
    pd = np.asarray(pdstar, dtype=np.float64)
    lo, hi = pd - alpha, pd + alpha
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


@dataclass(frozen=True)
class PropensityBounds:
    labels: tuple
    alpha: float
    p_lo: np.ndarray
    p_hi: np.ndarray
    dp: dict  # (z_hi, z_lo) -> (dp_lo, dp_hi)

    def interval(self, label) -> tuple:
        i = self.labels.index(str(label))
        return float(self.p_lo[i]), float(self.p_hi[i])

    def pair(self, z_hi, z_lo) -> tuple:
        return self.dp[(str(z_hi), str(z_lo))]

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "p": {lab: [float(self.p_lo[i]), float(self.p_hi[i])] for i, lab in enumerate(self.labels)},
            "dp": {f"{hi}>{lo}": [float(a), float(b)] for (hi, lo), (a, b) in self.dp.items()},
        }


def propensity_bounds(moments: MomentTable, alpha: float) -> PropensityBounds:
    """Propensity and contrast intervals for every label and ordered pair."""
    p_lo, p_hi = propensity_interval(moments.pdstar, alpha)
    dp = {}
    for hi, lo in moments.ordering.pairs():
        dd = moments.pdstar[moments.index(hi)] - moments.pdstar[moments.index(lo)]
        dp[(hi, lo)] = delta_p_interval(dd, alpha)
    return PropensityBounds(moments.labels, float(alpha), p_lo, p_hi, dp)
