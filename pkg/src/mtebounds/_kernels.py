"""Hot numeric loops, each with a numba and a pure-numpy implementation.

The numba versions are used when numba imports cleanly and the environment
variable ``MTEBOUNDS_DISABLE_NUMBA`` is unset (or ``0``). Both paths are kept
importable as ``nb_*`` / ``np_*`` so tests and the benchmark can compare them.

Case codes returned by the bound kernels::

     1  some pair certifies MTE >= 0
    -1  some pair certifies MTE <= 0
     0  sign undetermined
     2  both certificates fire (conflicting data)
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

CASE_POSITIVE = 1
CASE_NEGATIVE = -1
CASE_UNDETERMINED = 0
CASE_CONFLICT = 2


def _numba_requested():
    flag = os.environ.get("MTEBOUNDS_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


USE_NUMBA = numba is not None and _numba_requested()


def backend():
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def np_abs_integral(lo, hi, v):
    """Elementwise integral of |x - v| over [lo, hi] (lo <= hi assumed)."""
    lo, hi, v = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float), np.asarray(v, float))
    below = (hi * hi - lo * lo) / 2 + v * (lo - hi)
    above = (lo * lo - hi * hi) / 2 + v * (hi - lo)
    inside = v * v - v * (hi + lo) + (hi * hi + lo * lo) / 2
    return np.where(v <= lo, below, np.where(v >= hi, above, inside))


def _np_lower_div(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), -np.inf)


def _np_upper_div(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)


def np_bounds_grid(vstars, dy, dp_lo, dp_hi, w_lo, w_hi, scale, printed=False):
    """MTE bounds on a v* grid for R moment sets of P pairs each.

    ``dy, dp_lo, dp_hi, w_lo, w_hi`` have shape (R, P); ``scale`` has shape (R,)
    and holds kappa * b. Returns ``(lb, ub, case)`` of shape (R, G).
    """
    v = np.asarray(vstars, float)[None, :, None]
    dy = np.asarray(dy, float)[:, None, :]
    l = np.asarray(dp_lo, float)[:, None, :]
    u = np.asarray(dp_hi, float)[:, None, :]
    a = np.minimum(w_lo, w_hi)[:, None, :]
    c = np.maximum(w_lo, w_hi)[:, None, :]
    slack = np.asarray(scale, float)[:, None, None] * np_abs_integral(a, c, v)
    A = dy - slack
    B = dy + slack
    s1 = (A >= 0).any(axis=2)
    s2 = (B <= 0).any(axis=2)
    if printed:
        lo_pos = _np_lower_div(A, u).max(axis=2)
        hi_pos = _np_upper_div(B, l).min(axis=2)
        lo_neg = _np_lower_div(A, l).max(axis=2)
        hi_neg = _np_upper_div(B, u).min(axis=2)
        mixed = ~(s1 ^ s2)
        lb = np.where(mixed, np.maximum(lo_pos, lo_neg), np.where(s1, lo_pos, lo_neg))
        ub = np.where(mixed, np.minimum(hi_pos, hi_neg), np.where(s1, hi_pos, hi_neg))
    else:
        lb = np.where(A >= 0, _np_lower_div(A, u), _np_lower_div(A, l)).max(axis=2)
        ub = np.where(B >= 0, _np_upper_div(B, l), _np_upper_div(B, u)).min(axis=2)
    case = np.where(s1 & s2, CASE_CONFLICT, np.where(s1, CASE_POSITIVE, np.where(s2, CASE_NEGATIVE, CASE_UNDETERMINED)))
    return lb, ub, case.astype(np.int8)


def np_strata_sums(codes, y, d, k):
    counts = np.bincount(codes, minlength=k).astype(np.float64)
    sy = np.bincount(codes, weights=y, minlength=k)
    syy = np.bincount(codes, weights=y * y, minlength=k)
    sd = np.bincount(codes, weights=d, minlength=k)
    return counts, sy, syy, sd


def np_resampled_strata_sums(idx, codes, y, d, k):
    return np_strata_sums(codes[idx], y[idx], d[idx], k)


def np_pivot(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if numba is not None:
    _njit = numba.njit(cache=True, nogil=True)

    @_njit
    def _nb_abs_integral_scalar(lo, hi, v):
        if v <= lo:
            return (hi * hi - lo * lo) / 2 + v * (lo - hi)
        if v >= hi:
            return (lo * lo - hi * hi) / 2 + v * (hi - lo)
        return v * v - v * (hi + lo) + (hi * hi + lo * lo) / 2

    @_njit
    def _nb_lower_div(num, den):
        if den > 0:
            return num / den
        return -np.inf

    @_njit
    def _nb_upper_div(num, den):
        if den > 0:
            return num / den
        return np.inf

    @_njit
    def _nb_bounds_grid(vstars, dy, dp_lo, dp_hi, w_lo, w_hi, scale, printed):
        R, P = dy.shape
        G = vstars.shape[0]
        lb = np.empty((R, G))
        ub = np.empty((R, G))
        case = np.empty((R, G), dtype=np.int8)
        for r in range(R):
            for g in range(G):
                v = vstars[g]
                lo_u = -np.inf
                hi_u = np.inf
                lo_pos = -np.inf
                hi_pos = np.inf
                lo_neg = -np.inf
                hi_neg = np.inf
                s1 = False
                s2 = False
                for k in range(P):
                    a = min(w_lo[r, k], w_hi[r, k])
                    c = max(w_lo[r, k], w_hi[r, k])
                    slack = scale[r] * _nb_abs_integral_scalar(a, c, v)
                    A = dy[r, k] - slack
                    B = dy[r, k] + slack
                    l = dp_lo[r, k]
                    u = dp_hi[r, k]
                    if A >= 0:
                        s1 = True
                    if B <= 0:
                        s2 = True
                    if printed:
                        lo_pos = max(lo_pos, _nb_lower_div(A, u))
                        hi_pos = min(hi_pos, _nb_upper_div(B, l))
                        lo_neg = max(lo_neg, _nb_lower_div(A, l))
                        hi_neg = min(hi_neg, _nb_upper_div(B, u))
                    else:
                        cand_lo = _nb_lower_div(A, u) if A >= 0 else _nb_lower_div(A, l)
                        cand_hi = _nb_upper_div(B, l) if B >= 0 else _nb_upper_div(B, u)
                        lo_u = max(lo_u, cand_lo)
                        hi_u = min(hi_u, cand_hi)
                if printed:
                    if s1 and not s2:
                        lo_u, hi_u = lo_pos, hi_pos
                    elif s2 and not s1:
                        lo_u, hi_u = lo_neg, hi_neg
                    else:
                        lo_u = max(lo_pos, lo_neg)
                        hi_u = min(hi_pos, hi_neg)
                lb[r, g] = lo_u
                ub[r, g] = hi_u
                if s1 and s2:
                    case[r, g] = CASE_CONFLICT
                elif s1:
                    case[r, g] = CASE_POSITIVE
                elif s2:
                    case[r, g] = CASE_NEGATIVE
                else:
                    case[r, g] = CASE_UNDETERMINED
        return lb, ub, case

    @_njit
    def nb_strata_sums(codes, y, d, k):
        counts = np.zeros(k)
        sy = np.zeros(k)
        syy = np.zeros(k)
        sd = np.zeros(k)
        for i in range(codes.shape[0]):
            j = codes[i]
            counts[j] += 1.0
            sy[j] += y[i]
            syy[j] += y[i] * y[i]
            sd[j] += d[i]
        return counts, sy, syy, sd

    @_njit
    def nb_resampled_strata_sums(idx, codes, y, d, k):
        counts = np.zeros(k)
        sy = np.zeros(k)
        syy = np.zeros(k)
        sd = np.zeros(k)
        for t in range(idx.shape[0]):
            i = idx[t]
            j = codes[i]
            counts[j] += 1.0
            sy[j] += y[i]
            syy[j] += y[i] * y[i]
            sd[j] += d[i]
        return counts, sy, syy, sd

    @_njit
    def nb_pivot(T, r, c):
        m, n = T.shape
        p = T[r, c]
        for j in range(n):
            T[r, j] /= p
        for i in range(m):
            if i == r:
                continue
            f = T[i, c]
            if f != 0.0:
                for j in range(n):
                    T[i, j] -= f * T[r, j]

    def nb_bounds_grid(vstars, dy, dp_lo, dp_hi, w_lo, w_hi, scale, printed=False):
        return _nb_bounds_grid(
            np.ascontiguousarray(vstars, dtype=np.float64),
            np.ascontiguousarray(dy, dtype=np.float64),
            np.ascontiguousarray(dp_lo, dtype=np.float64),
            np.ascontiguousarray(dp_hi, dtype=np.float64),
            np.ascontiguousarray(w_lo, dtype=np.float64),
            np.ascontiguousarray(w_hi, dtype=np.float64),
            np.ascontiguousarray(scale, dtype=np.float64),
            bool(printed),
        )
else:  # pragma: no cover
    nb_bounds_grid = np_bounds_grid
    nb_strata_sums = np_strata_sums
    nb_resampled_strata_sums = np_resampled_strata_sums
    nb_pivot = np_pivot


if USE_NUMBA:
    bounds_grid = nb_bounds_grid
    strata_sums = nb_strata_sums
    resampled_strata_sums = nb_resampled_strata_sums
    pivot = nb_pivot
else:
    bounds_grid = np_bounds_grid
    strata_sums = np_strata_sums
    resampled_strata_sums = np_resampled_strata_sums
    pivot = np_pivot
