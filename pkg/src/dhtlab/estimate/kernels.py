"""Hot loops, each in a numba version and a numpy version.

The public names (``direct_convolve`` etc.) dispatch on ``USE_NUMBA``; the
``*_nb`` / ``*_np`` variants are exported for tests and benchmarks.

Convention: ``row`` holds the kernel at offsets ``-2N..2N`` (length 4N+1)
and ``x`` a window of length 2N+1, so ``y[n] = sum_j row[n - j + 2N] x[j]``.
"""

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

__all__ = [
    "direct_convolve",
    "compensated_convolve",
    "duality_map",
    "lp_norm",
    "direct_convolve_nb",
    "direct_convolve_np",
    "compensated_convolve_nb",
    "compensated_convolve_np",
    "duality_map_nb",
    "duality_map_np",
    "lp_norm_nb",
    "lp_norm_np",
    "HAVE_NUMBA",
    "USE_NUMBA",
]


# -- direct O(N^2) convolution ---------------------------------------------


@njit
def direct_convolve_nb(row, x):
    L = x.shape[0]
    c = (row.shape[0] - 1) // 2  # = 2N, index of offset 0
    y = np.zeros(L)
    for n in range(L):
        s = 0.0
        base = n + c
        for j in range(L):
            s += row[base - j] * x[j]
        y[n] = s
    return y


def direct_convolve_np(row, x):
    L = x.shape[0]
    # Toeplitz rows as strided views; row n needs row[n + 2N - j] for j = 0..L-1
    win = np.lib.stride_tricks.sliding_window_view(row[::-1], L)
    # reversed row: rev[i] = row[4N - i]; row[n + 2N - j] = rev[2N - n + j]
    c = (row.shape[0] - 1) // 2
    return win[c - np.arange(L)] @ x


# -- compensated convolution (Neumaier summation) --------------------------


@njit
def compensated_convolve_nb(row, x):
    L = x.shape[0]
    c = (row.shape[0] - 1) // 2
    y = np.zeros(L)
    for n in range(L):
        s = 0.0
        comp = 0.0
        base = n + c
        for j in range(L):
            t = row[base - j] * x[j]
            u = s + t
            if abs(s) >= abs(t):
                comp += (s - u) + t
            else:
                comp += (t - u) + s
            s = u
        y[n] = s + comp
    return y


def compensated_convolve_np(row, x, chunk=512):
    """Extended-precision (long double) accumulation, one block of rows at a time."""
    L = x.shape[0]
    c = (row.shape[0] - 1) // 2
    rev = row[::-1].astype(np.longdouble)
    xl = x.astype(np.longdouble)
    win = np.lib.stride_tricks.sliding_window_view(rev, L)
    y = np.empty(L)
    for lo in range(0, L, chunk):
        hi = min(L, lo + chunk)
        block = win[c - np.arange(lo, hi)]
        y[lo:hi] = (block * xl).sum(axis=1)
    return y


# -- duality map J_r(u) = sign(u) |u|^(r-1) ---------------------------------


@njit
def duality_map_nb(u, r):
    out = np.empty_like(u)
    e = r - 1.0
    for i in range(u.shape[0]):
        v = u[i]
        if v > 0.0:
            out[i] = v**e
        elif v < 0.0:
            out[i] = -((-v) ** e)
        else:
            out[i] = 0.0
    return out


def duality_map_np(u, r):
    return np.sign(u) * np.abs(u) ** (r - 1.0)


# -- l^p norm with scaling against overflow --------------------------------


@njit
def lp_norm_nb(x, p):
    m = 0.0
    for i in range(x.shape[0]):
        a = abs(x[i])
        if a > m:
            m = a
    if m == 0.0:
        return 0.0
    s = 0.0
    for i in range(x.shape[0]):
        s += (abs(x[i]) / m) ** p
    return m * s ** (1.0 / p)


def lp_norm_np(x, p):
    m = np.max(np.abs(x)) if x.size else 0.0
    if m == 0.0:
        return 0.0
    return float(m * np.sum((np.abs(x) / m) ** p) ** (1.0 / p))


if USE_NUMBA:
    direct_convolve = direct_convolve_nb
    compensated_convolve = compensated_convolve_nb
    duality_map = duality_map_nb
    lp_norm = lp_norm_nb
else:
    direct_convolve = direct_convolve_np
    compensated_convolve = compensated_convolve_np
    duality_map = duality_map_np
    lp_norm = lp_norm_np
