import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dhtlab.estimate import kernels
from dhtlab.estimate.windowed import WindowedOperator
from dhtlab.operators import H, H0, I, K, R

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


def dense_oracle(row, x):
    N = (x.size - 1) // 2
    n = np.arange(x.size)
    return row[n[:, None] - n[None, :] + 2 * N] @ x


def windows(max_N=40):
    return st.integers(1, max_N).flatmap(
        lambda N: st.tuples(
            arrays(np.float64, 4 * N + 1, elements=st.floats(-1e3, 1e3)),
            arrays(np.float64, 2 * N + 1, elements=st.floats(-1e3, 1e3)),
        )
    )


@given(windows())
def test_numpy_convolutions_match_dense(rx):
    row, x = rx
    want = dense_oracle(row, x)
    scale = np.abs(row).max() * np.abs(x).sum() + 1e-300
    assert np.allclose(kernels.direct_convolve_np(row, x), want, atol=1e-12 * scale)
    assert np.allclose(kernels.compensated_convolve_np(row, x), want, atol=1e-12 * scale)


@needs_numba
@given(windows())
def test_numba_matches_numpy(rx):
    row, x = rx
    scale = np.abs(row).max() * np.abs(x).sum() + 1e-300
    assert np.allclose(kernels.direct_convolve_nb(row, x), kernels.direct_convolve_np(row, x), atol=1e-12 * scale)
    assert np.allclose(
        kernels.compensated_convolve_nb(row, x), kernels.compensated_convolve_np(row, x), atol=1e-14 * scale
    )


@pytest.mark.parametrize("impl", ["nb", "np"])
def test_compensated_beats_cancellation(impl):
    if impl == "nb" and not kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    fn = getattr(kernels, f"compensated_convolve_{impl}")
    # one output entry is 1e16 + 1 - 1e16 in a bad order
    row = np.zeros(5)
    row[1:4] = [1.0, 1.0, 1.0]
    x = np.array([1e16, 1.0, -1e16])
    assert fn(row, x)[1] == 1.0


@pytest.mark.parametrize("impl", ["nb", "np"])
@given(arrays(np.float64, st.integers(1, 60), elements=st.floats(-1e6, 1e6)), st.floats(1.01, 12))
def test_duality_map_and_norm(impl, u, r):
    if impl == "nb" and not kernels.HAVE_NUMBA:
        return
    dm = getattr(kernels, f"duality_map_{impl}")
    norm = getattr(kernels, f"lp_norm_{impl}")
    want = np.sign(u) * np.abs(u) ** (r - 1)
    assert np.allclose(dm(u, r), want, rtol=1e-12, atol=0)
    m = np.abs(u).max()
    expect = 0.0 if m == 0 else m * math.fsum((np.abs(u) / m) ** r) ** (1 / r)
    assert norm(u, r) == pytest.approx(expect, rel=1e-12, abs=0)


@pytest.mark.parametrize("op", [R, K, H0, H, I], ids=str)
@pytest.mark.parametrize("N", [1, 5, 64, 257])
def test_fft_direct_dense_agree(op, N):
    w = WindowedOperator.from_kind(op, N)
    x = np.random.default_rng(N).standard_normal(w.size)
    want = w.matrix() @ x
    tol = 1e-13 * np.abs(x).sum()
    assert np.allclose(w.apply(x, "fft"), want, atol=tol)
    assert np.allclose(w.apply(x, "direct"), want, atol=tol)
    assert np.allclose(w.apply(x, "compensated"), want, atol=tol)


def test_adjoint_is_transpose():
    w = WindowedOperator.from_kind(R, 9)
    assert np.array_equal(w.adjoint().matrix(), w.matrix().T)


def test_bad_shapes():
    w = WindowedOperator.from_kind(K, 3)
    with pytest.raises(ValueError):
        w.apply(np.zeros(6))
    with pytest.raises(ValueError):
        w.apply(np.zeros(7), "nope")
    with pytest.raises(ValueError):
        WindowedOperator(np.zeros(12), 3)


@pytest.mark.parametrize("flag,expect", [("0", "False"), ("1", str(kernels.HAVE_NUMBA))])
def test_environment_selects_backend(flag, expect):
    code = "from dhtlab.estimate import kernels; print(kernels.USE_NUMBA)"
    env = dict(os.environ, DHTLAB_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expect


def test_fallback_path_runs_estimate():
    code = (
        "from dhtlab.estimate import WindowedOperator, power_iterate\n"
        "from dhtlab.operators import K\n"
        "r = power_iterate(WindowedOperator.from_kind(K, 64), 2.0, 20, method='direct', kind=K)\n"
        "print(r.backend, repr(r.best_ratio))\n"
    )
    env = dict(os.environ, DHTLAB_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, ratio = out.stdout.split()
    assert backend == "numpy" and 0.9 < float(ratio) <= 1 + 1e-9
