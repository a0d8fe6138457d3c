"""Exact and numerical tools for discrete Hilbert-type convolution operators."""

from .core import FiniteSeq, FloatWindow, PiGraded, seq_lp_norm
from .operators import H, H0, I, K, R, T, OperatorKind, parse_operator

__version__ = "0.1.0"
