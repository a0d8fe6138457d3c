"""Compressions P_N op P_N of the convolution operators to |n| <= N."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from ..core import FloatWindow
from ..operators import OperatorKind
from . import kernels

__all__ = ["WindowedOperator", "apply_windowed"]


@dataclass(frozen=True, eq=False)
class WindowedOperator:
    """Toeplitz compression of a convolution operator.

    ``row[i]`` is the kernel at offset ``i - 2N``; the adjoint is the
    compression with the reflected row.
    """

    row: np.ndarray
    N: int
    name: str = "?"
    _spectrum: tuple = field(default=None, repr=False)

    @classmethod
    def from_kind(cls, kind: OperatorKind, N: int) -> "WindowedOperator":
        if N < 1:
            raise ValueError("N must be positive")
        offsets = np.arange(-2 * N, 2 * N + 1)
        row = np.ascontiguousarray(kind.kernel_float(offsets), dtype=np.float64)
        return cls(row=row, N=N, name=str(kind))

    def __post_init__(self):
        if self.row.shape != (4 * self.N + 1,):
            raise ValueError(f"kernel row must have length 4N+1 = {4 * self.N + 1}")
        size = scipy.fft.next_fast_len(4 * self.N + 1, real=True)
        object.__setattr__(self, "_spectrum", (size, scipy.fft.rfft(self.row, size)))

    @property
    def size(self) -> int:
        return 2 * self.N + 1

    def adjoint(self) -> "WindowedOperator":
        return WindowedOperator(row=np.ascontiguousarray(self.row[::-1]), N=self.N, name=f"{self.name}^T")

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.size,):
            raise ValueError(f"expected a window of length {self.size}, got {x.shape}")
        return x

    def apply_fft(self, x) -> np.ndarray:
        # circular convolution of length >= 4N+1: wrapped terms land outside
        # the output slice [2N, 4N], so no correction pass is needed
        x = self._check(x)
        size, spec = self._spectrum
        full = scipy.fft.irfft(spec * scipy.fft.rfft(x, size), size)
        return full[2 * self.N : 4 * self.N + 1]

    def apply_direct(self, x) -> np.ndarray:
        return kernels.direct_convolve(self.row, np.ascontiguousarray(self._check(x)))

    def apply_compensated(self, x) -> np.ndarray:
        return kernels.compensated_convolve(self.row, np.ascontiguousarray(self._check(x)))

    def apply(self, x, method: str = "fft") -> np.ndarray:
        if method == "fft":
            return self.apply_fft(x)
        if method == "direct":
            return self.apply_direct(x)
        if method == "compensated":
            return self.apply_compensated(x)
        raise ValueError(f"unknown method {method!r}")

    def matrix(self) -> np.ndarray:
        """Dense matrix; for small N only."""
        n = np.arange(self.size)
        return self.row[n[:, None] - n[None, :] + 2 * self.N]


def apply_windowed(w: WindowedOperator, x: FloatWindow, method: str = "fft") -> FloatWindow:
    if x.N != w.N:
        raise ValueError(f"window radius {x.N} does not match operator radius {w.N}")
    return FloatWindow(w.apply(x.values, method))
