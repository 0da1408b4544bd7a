import os
import subprocess
import sys

import numpy as np
import pytest

from mtebounds import _kernels as K

pytestmark = pytest.mark.skipif(K.numba is None, reason="numba not installed")


def random_inputs(rng, R=3, P=4, G=57):
    v = np.linspace(0, 1, G)
    dy = rng.normal(0, 0.3, (R, P))
    l = rng.uniform(-0.1, 0.6, (R, P))
    u = l + rng.uniform(0, 0.4, (R, P))
    w_lo = rng.uniform(0, 1, (R, P))
    w_hi = rng.uniform(0, 1, (R, P))
    scale = rng.uniform(0, 4, R)
    return v, dy, l, u, w_lo, w_hi, scale


@pytest.mark.parametrize("printed", [False, True])
@pytest.mark.parametrize("seed", range(5))
def test_bounds_grid_backends_agree(seed, printed):
    args = random_inputs(np.random.default_rng(seed))
    a = K.np_bounds_grid(*args, printed=printed)
    b = K.nb_bounds_grid(*args, printed=printed)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-13, atol=1e-15)
    np.testing.assert_array_equal(a[2], b[2])


def test_abs_integral_matches_scalar_kernel():
    rng = np.random.default_rng(1)
    for _ in range(200):
        lo, hi = np.sort(rng.uniform(0, 1, 2))
        v = rng.uniform(0, 1)
        assert K.np_abs_integral(lo, hi, v) == pytest.approx(K._nb_abs_integral_scalar(lo, hi, v), abs=1e-15)


def test_strata_sums_agree():
    rng = np.random.default_rng(2)
    codes = rng.integers(0, 4, 1000)
    y = rng.normal(size=1000)
    d = rng.integers(0, 2, 1000).astype(float)
    idx = rng.integers(0, 1000, 1000)
    for a, b in zip(K.np_strata_sums(codes, y, d, 4), K.nb_strata_sums(codes, y, d, 4)):
        np.testing.assert_allclose(a, b, rtol=1e-12)
    for a, b in zip(K.np_resampled_strata_sums(idx, codes, y, d, 4), K.nb_resampled_strata_sums(idx, codes, y, d, 4)):
        np.testing.assert_allclose(a, b, rtol=1e-12)


def test_pivot_agrees():
    rng = np.random.default_rng(3)
    T = rng.normal(size=(5, 9))
    A, B = T.copy(), T.copy()
    K.np_pivot(A, 2, 4)
    K.nb_pivot(B, 2, 4)
    np.testing.assert_allclose(A, B, rtol=1e-12, atol=1e-14)
    assert A[2, 4] == pytest.approx(1.0)
    assert np.allclose(np.delete(A[:, 4], 2), 0.0)


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("0", "numba"), ("", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, MTEBOUNDS_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "import mtebounds; print(mtebounds.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected
