"""Discrete Hilbert-type convolution operators.

All operators act by ``(op a)_n = sum_m k(m) a_{n-m}``.  The kernels are

========  =========================================  ==================
tag       kernel ``k(m)``                            support
========  =========================================  ==================
``R``     ``1 / (pi (m + 1/2))``                     all ``m``
``K``     ``2 / (pi m)``                             odd ``m``
``H0``    ``1 / (pi m)``                             ``m != 0``
``H``     ``2 / (pi m)``                             even ``m != 0``
``I``     ``4 / (pi^2 m^2)``                         odd ``m``
``T(t)``  ``sin(pi t) / (pi (m + t))``, or           all ``m``
          ``(-1)^t`` at ``m = -t`` for integer t
========  =========================================  ==================

Exact application returns values in Q[1/pi]; certified application handles
inputs of infinite support through explicit tail bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np

from .core import FiniteSeq, PiGraded

__all__ = [
    "OperatorKind",
    "R",
    "K",
    "H0",
    "H",
    "I",
    "T",
    "parse_operator",
    "CertifiedValue",
    "DecayingSequence",
    "apply_exact",
    "apply_window",
    "apply_certified",
    "multiplier_symbol",
    "check_fourier_coefficient",
    "check_product_rule",
    "check_sign_identity",
    "check_factorization",
    "factorization_holds",
    "check_partial_fraction",
    "check_interleaving",
    "check_interleaving_h0",
    "check_probability_kernel",
]

_U = 2.0**-53  # unit roundoff of binary64

_TAGS = ("R", "K", "H0", "H", "I", "T")


@dataclass(frozen=True)
class OperatorKind:
    tag: str
    t: Fraction | None = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown operator {self.tag!r}")
        if (self.tag == "T") != (self.t is not None):
            raise ValueError("only T carries a parameter")
        if self.t is not None and not isinstance(self.t, Fraction):
            object.__setattr__(self, "t", Fraction(self.t))

    def __str__(self) -> str:
        return f"T({self.t})" if self.tag == "T" else self.tag

    @property
    def is_exact(self) -> bool:
        """Whether the kernel lies in Q[1/pi] (integer or half-integer t for T)."""
        return self.tag != "T" or (2 * self.t).denominator == 1

    def kernel(self, m: int) -> tuple[Fraction, int] | None:
        """Exact kernel value as ``(coefficient, grade)``; ``None`` when zero."""
        return _kernel_exact(self.tag, self.t, m)

    def kernel_float(self, m: np.ndarray) -> np.ndarray:
        return _kernel_float(self, np.asarray(m, dtype=np.int64))

    def decay_constant(self) -> float:
        """An upper bound ``kappa`` with ``|k(m)| <= kappa / max(1, |m|)``."""
        if self.tag == "I":
            return 4 / math.pi**2
        if self.tag in ("K", "H", "R"):
            return 2 / math.pi
        if self.tag == "H0":
            return 1 / math.pi
        t = float(self.t)
        if self.t.denominator == 1:
            return float(max(1, abs(self.t)))
        reach = int(abs(t)) + 2
        m = np.arange(-2 * reach, 2 * reach + 1)
        ratio = np.maximum(1, np.abs(m)) / np.abs(m + t)
        return abs(math.sin(math.pi * t)) / math.pi * max(2.0, float(ratio.max()))

    @property
    def kernel_order(self) -> int:
        """Power of ``1/|m|`` in the kernel's decay (1 or 2)."""
        return 2 if self.tag == "I" else 1


R = OperatorKind("R")
K = OperatorKind("K")
H0 = OperatorKind("H0")
H = OperatorKind("H")
I = OperatorKind("I")  # noqa: E741


def T(t) -> OperatorKind:
    return OperatorKind("T", Fraction(t))


def parse_operator(name: str) -> OperatorKind:
    """``"K"``, ``"H0"``, ``"T:1/3"``, ..."""
    name = name.strip()
    if name.upper().startswith("T"):
        _, _, arg = name.partition(":")
        if not arg:
            raise ValueError("T needs a parameter, e.g. T:1/2")
        return T(Fraction(arg))
    if name.upper() not in _TAGS:
        raise ValueError(f"unknown operator {name!r}")
    return OperatorKind(name.upper())


@lru_cache(maxsize=1 << 16)
def _kernel_exact(tag: str, t: Fraction | None, m: int) -> tuple[Fraction, int] | None:
    if tag == "K":
        return (Fraction(2, m), 1) if m % 2 else None
    if tag == "H":
        return (Fraction(2, m), 1) if m and m % 2 == 0 else None
    if tag == "H0":
        return (Fraction(1, m), 1) if m else None
    if tag == "I":
        return (Fraction(4, m * m), 2) if m % 2 else None
    if tag == "R":
        return (Fraction(2, 2 * m + 1), 1)
    # T(t)
    if t.denominator == 1:
        return (Fraction((-1) ** (int(t) % 2)), 0) if m == -t else None
    if t.denominator == 2:
        sign = 1 if ((t - Fraction(1, 2)) % 2) == 0 else -1
        return (Fraction(sign) / (m + t), 1)
    raise ValueError(f"T({t}) is not exact in Q[1/pi]; use apply_certified")


def _kernel_float(op: OperatorKind, m: np.ndarray) -> np.ndarray:
    out = np.zeros(m.shape)
    mf = m.astype(np.float64)
    if op.tag == "K":
        sel = m % 2 != 0
        out[sel] = 2 / np.pi / mf[sel]
    elif op.tag == "H":
        sel = (m % 2 == 0) & (m != 0)
        out[sel] = 2 / np.pi / mf[sel]
    elif op.tag == "H0":
        sel = m != 0
        out[sel] = 1 / np.pi / mf[sel]
    elif op.tag == "I":
        sel = m % 2 != 0
        out[sel] = 4 / np.pi**2 / (mf[sel] * mf[sel])
    elif op.tag == "R":
        out = 1 / np.pi / (mf + 0.5)
    else:
        t = op.t
        if t.denominator == 1:
            out[m == -int(t)] = (-1.0) ** (int(t) % 2)
        else:
            tf = float(t)
            out = math.sin(math.pi * tf) / math.pi / (mf + tf)
    return out


# -- exact application -----------------------------------------------------


def apply_exact(op: OperatorKind, a: FiniteSeq, n: int) -> PiGraded:
    """``(op a)_n`` as an exact element of Q[1/pi]."""
    if not op.is_exact:
        raise ValueError(f"{op} has a transcendental kernel; use apply_certified")
    acc: dict[int, Fraction] = {}
    for j, v in a._entries.items():
        kv = _kernel_exact(op.tag, op.t, n - j)
        if kv is None:
            continue
        q, g = kv
        for gv, c in v._terms.items():
            acc[gv + g] = acc.get(gv + g, 0) + q * c
    return PiGraded._wrap(acc)


def apply_window(op: OperatorKind, a: FiniteSeq, window: tuple[int, int]) -> FiniteSeq:
    """Exact values of ``op a`` on ``window``; nothing outside it is reported."""
    lo, hi = window
    if lo > hi:
        raise ValueError("empty window")
    return FiniteSeq._wrap({n: apply_exact(op, a, n) for n in range(lo, hi + 1)})


def apply_at(op: OperatorKind, a: FiniteSeq, points) -> FiniteSeq:
    """Exact values of ``op a`` at arbitrary indices."""
    return FiniteSeq._wrap({n: apply_exact(op, a, n) for n in points})


# -- certified application -------------------------------------------------


@dataclass(frozen=True)
class CertifiedValue:
    """A real number known to lie in ``[value - bound, value + bound]``."""

    value: float
    bound: float

    def contains(self, x) -> bool:
        return abs(float(x) - self.value) <= self.bound

    def __str__(self) -> str:
        return f"{self.value:.15g} +/- {self.bound:.3g}"


@dataclass(frozen=True)
class DecayingSequence:
    """A sequence known through a vectorised evaluator and a decay envelope.

    The envelope is ``c`` (``decay="flat"``) or ``c / max(1, |j|)``
    (``decay="inverse"``).  ``|a_j| <= envelope(j)`` must hold, and the
    evaluator's absolute error at ``j`` is at most ``abs_err * envelope(j)``.
    """

    values: Callable[[np.ndarray], np.ndarray]
    c: float
    decay: str = "inverse"
    abs_err: float = 0.0

    def __post_init__(self):
        if self.decay not in ("flat", "inverse"):
            raise ValueError(f"unknown decay {self.decay!r}")
        if self.c < 0:
            raise ValueError("envelope constant must be non-negative")

    def envelope(self, j: np.ndarray) -> np.ndarray:
        if self.decay == "flat":
            return np.full(np.shape(j), self.c)
        return self.c / np.maximum(1, np.abs(j))

    @classmethod
    def zero(cls) -> "DecayingSequence":
        return cls(lambda j: np.zeros(np.shape(j)), 0.0, "inverse")

    @classmethod
    def from_finite(cls, a: FiniteSeq) -> "DecayingSequence":
        idx = np.array(a.support, dtype=np.int64)
        vals = np.array([float(v) for _, v in a.items()])
        c = float(max((abs(v) * max(1, abs(n)) for n, v in zip(idx, vals)), default=0.0))

        def values(j, idx=idx, vals=vals):
            j = np.asarray(j)
            out = np.zeros(j.shape)
            pos = np.searchsorted(idx, j)
            pos = np.clip(pos, 0, max(len(idx) - 1, 0))
            if len(idx):
                hit = idx[pos] == j
                out[hit] = vals[pos[hit]]
            return out

        return cls(values, c * (1 + 4 * _U), "inverse", abs_err=2 * _U)

    @classmethod
    def image(cls, op: OperatorKind, a: FiniteSeq) -> "DecayingSequence":
        """``op a`` for finitely supported ``a`` with a certified envelope.

        With ``|k(m)| <= kappa / max(1,|m|)`` and ``r`` the support radius,
        ``|(op a)_j| <= kappa ||a||_1 max(2, 2r) / max(1, |j|)``: for
        ``|j| >= 2r`` every distance ``|j - i|`` is at least ``|j|/2``, and
        below that the trivial bound ``kappa ||a||_1`` suffices.
        """
        if op.tag == "T":
            raise ValueError("image() supports R, K, H0, H, I")
        idx = np.array(a.support, dtype=np.int64)
        vals = np.array([float(v) for _, v in a.items()])
        l1 = float(np.abs(vals).sum())
        r = a.radius
        c = op.decay_constant() * l1 * max(2, 2 * r) * (1 + 8 * _U)

        def values(j, idx=idx, vals=vals, op=op):
            j = np.asarray(j, dtype=np.int64)
            out = np.zeros(j.shape)
            for i, v in zip(idx, vals):
                out += v * op.kernel_float(j - i)
            return out

        return cls(values, c, "inverse", abs_err=(len(idx) + 4) * _U)


def _tail_bound(op: OperatorKind, a: DecayingSequence, n: int, M: int) -> float:
    """Upper bound for ``sum_{|m|>M} |k(m)| |a_{n-m}|``."""
    if a.c == 0:
        return 0.0
    kappa = op.decay_constant()
    if op.kernel_order == 2:
        # sum_{|m|>M} 1/m^2 <= 2/M, with |a| <= c
        return kappa * a.c * 2.0 / M
    if a.decay == "flat":
        raise ValueError(f"tail of {op} diverges on an input with flat decay")
    an = abs(n)
    if M <= an:
        raise ValueError(f"truncation M={M} must exceed |n|={an}")
    # |k(m) a_{n-m}| <= kappa c / (|m| (|m| - |n|)); compare with the integral
    if an == 0:
        s = 1.0 / M
    else:
        s = math.log(M / (M - an)) / an
    return 2.0 * kappa * a.c * s * (1 + 8 * _U)


def apply_certified(op: OperatorKind, a: DecayingSequence, n: int, M: int) -> CertifiedValue:
    """``(op a)_n`` from the truncated sum over ``|m| <= M`` plus a tail bound."""
    if M < 1:
        raise ValueError("M must be >= 1")
    tail = _tail_bound(op, a, n, M)
    if a.c == 0:
        return CertifiedValue(0.0, 0.0)
    m = np.arange(-M, M + 1, dtype=np.int64)
    k = op.kernel_float(m)
    nz = k != 0
    m, k = m[nz], k[nz]
    terms = k * a.values(n - m)
    value = math.fsum(terms)
    abs_terms = math.fsum(np.abs(terms))
    eval_err = a.abs_err * math.fsum(np.abs(k) * a.envelope(n - m)) if a.abs_err else 0.0
    rounding = 6 * _U * abs_terms + eval_err + _U * abs(value)
    return CertifiedValue(value, tail + rounding)


# -- Fourier symbols -------------------------------------------------------


def multiplier_symbol(op: OperatorKind, t: float) -> complex:
    """Fourier multiplier of K, H or I at ``t`` in ``(-pi, pi)``; sign(0) = 0."""
    if op.tag not in ("K", "H", "I"):
        raise ValueError("symbols are provided for K, H and I")
    if not abs(t) < math.pi:
        raise ValueError("t must lie in (-pi, pi)")
    tri = 1 - 2 / math.pi * abs(t)
    sgn = (t > 0) - (t < 0)
    if op.tag == "K":
        return complex(0, -sgn)
    if op.tag == "H":
        return complex(0, -tri * sgn)
    return complex(tri, 0)


def _symbol_vec(op: OperatorKind, t: np.ndarray) -> np.ndarray:
    tri = 1 - 2 / np.pi * np.abs(t)
    sgn = np.sign(t)
    if op.tag == "K":
        return -1j * sgn
    if op.tag == "H":
        return -1j * tri * sgn
    return tri.astype(complex)


def check_fourier_coefficient(
    op: OperatorKind, m: int, quad_points: int = 64, tol: float = 1e-10
) -> tuple[CertifiedValue, CertifiedValue]:
    """Integrate the symbol against ``e^{imt}/(2 pi)`` and compare with ``k(m)``.

    Composite Gauss-Legendre on ``(-pi, 0)`` and ``(0, pi)`` separately; the
    panel count doubles until successive results agree to ``tol``.  The
    bound on the computed value is the last change plus the imaginary
    residue, which must vanish for these real kernels.
    """
    if op.tag not in ("K", "H", "I"):
        raise ValueError("symbols are provided for K, H and I")
    if quad_points < 64:
        raise ValueError("quad_points must be >= 64")
    x, w = np.polynomial.legendre.leggauss(quad_points)

    def integrate(panels: int) -> complex:
        total = 0j
        for a0, b0 in ((-math.pi, 0.0), (0.0, math.pi)):
            edges = np.linspace(a0, b0, panels + 1)
            half = (edges[1:] - edges[:-1])[:, None] / 2
            mid = (edges[1:] + edges[:-1])[:, None] / 2
            t = mid + half * x[None, :]
            vals = _symbol_vec(op, t) * np.exp(1j * m * t)
            total += np.sum(half * w[None, :] * vals)
        return total / (2 * math.pi)

    panels = 1
    prev = integrate(panels)
    while True:
        panels *= 2
        cur = integrate(panels)
        if abs(cur - prev) <= tol or panels >= 1 << 12:
            break
        prev = cur
    computed = CertifiedValue(float(cur.real), float(abs(cur - prev) + abs(cur.imag)))
    kv = op.kernel(m)
    expected = 0.0 if kv is None else float(PiGraded.rational(*kv))
    return computed, CertifiedValue(expected, 0.0)


# -- identity checks -------------------------------------------------------


def check_product_rule(a: FiniteSeq, b: FiniteSeq, window: tuple[int, int]) -> FiniteSeq:
    """Residual of ``Ka*Kb - (K[a*Hb] + K[Ha*b] + I[ab])`` on ``window``.

    ``a*Hb`` and ``Ha*b`` are finitely supported, so every term is exact.
    """
    lo, hi = window
    a_hb = a * apply_at(H, b, a.support)
    ha_b = apply_at(H, a, b.support) * b
    ab = a * b
    out = {}
    for n in range(lo, hi + 1):
        lhs = apply_exact(K, a, n) * apply_exact(K, b, n)
        rhs = apply_exact(K, a_hb, n) + apply_exact(K, ha_b, n) + apply_exact(I, ab, n)
        out[n] = lhs - rhs
    return FiniteSeq._wrap(out)


def _periodic_sign_tri(u: Fraction) -> tuple[int, Fraction]:
    """``S(u pi)`` and ``I(u pi)`` for a rational ``u`` not in Z."""
    r = u - 2 * math.floor((u + 1) / 2)  # representative in [-1, 1)
    if r.denominator == 1:
        raise ValueError(f"{u}*pi is a jump point of S")
    return (1 if r > 0 else -1), 1 - 2 * abs(r)


def check_sign_identity(t: Fraction, s: Fraction) -> Fraction:
    """``S(t)S(s) - [S(t+s)I(s)S(s) + S(t+s)I(t)S(t) - I(t+s)]``.

    ``t`` and ``s`` are given as multiples of pi; ``S`` and ``I`` are the
    2pi-periodic sign and tent functions.  Exact rational arithmetic.
    """
    t, s = Fraction(t), Fraction(s)
    St, It = _periodic_sign_tri(t)
    Ss, Is = _periodic_sign_tri(s)
    Sts, Its = _periodic_sign_tri(t + s)
    return St * Ss - (Sts * Is * Ss + Sts * It * St - Its)


def check_factorization(
    a: FiniteSeq, n: int, M: int
) -> tuple[PiGraded, CertifiedValue, CertifiedValue]:
    """``Ha_n`` exactly, and ``IKa_n``, ``KIa_n`` certified with truncation ``M``."""
    if M < abs(n) + a.radius:
        raise ValueError("M must be at least |n| + support radius")
    lhs = apply_exact(H, a, n)
    ik = apply_certified(I, DecayingSequence.image(K, a), n, M)
    ki = apply_certified(K, DecayingSequence.image(I, a), n, M)
    return lhs, ik, ki


def factorization_holds(result: tuple[PiGraded, CertifiedValue, CertifiedValue]) -> bool:
    lhs, ik, ki = result
    x = float(lhs)
    return ik.contains(x) and ki.contains(x)


def check_partial_fraction(j: int, M: int) -> tuple[CertifiedValue, CertifiedValue]:
    """``sum_{m odd} 1/(m^2 (j - m))`` truncated at ``|m| <= M`` versus ``pi^2/(4j)``.

    For ``|m| > M >= 2|j|`` the summand is at most ``2/|m|^3``, so the
    tail is at most ``2/M^2``.
    """
    if j == 0 or j % 2:
        raise ValueError("j must be a non-zero even integer")
    if M < 2 * abs(j):
        raise ValueError("M must be at least 2|j|")
    m = np.arange(-M, M + 1, dtype=np.float64)
    m = m[np.abs(m) % 2 == 1]
    terms = 1.0 / (m * m * (j - m))
    value = math.fsum(terms)
    bound = 2.0 / M**2 + 6 * _U * math.fsum(np.abs(terms)) + _U * abs(value)
    with mpmath.workprec(113):
        closed = mpmath.pi**2 / (4 * j)
    closed_f = float(closed)
    return CertifiedValue(value, bound), CertifiedValue(closed_f, _U * abs(closed_f))


def check_interleaving(a: FiniteSeq, window: tuple[int, int]) -> tuple[FiniteSeq, FiniteSeq]:
    """Residuals ``R b_n - K a_{2n+1}`` and ``R c_n - K a_{2n}``,
    where ``b_n = a_{2n}`` and ``c_n = a_{2n-1}``."""
    lo, hi = window
    b = a.select(2, 0)
    c = a.select(2, -1)
    r1, r2 = {}, {}
    for n in range(lo, hi + 1):
        r1[n] = apply_exact(R, b, n) - apply_exact(K, a, 2 * n + 1)
        r2[n] = apply_exact(R, c, n) - apply_exact(K, a, 2 * n)
    return FiniteSeq._wrap(r1), FiniteSeq._wrap(r2)


def check_interleaving_h0(a: FiniteSeq, window: tuple[int, int]) -> tuple[FiniteSeq, FiniteSeq]:
    """Residuals ``H0 b_n - H a_{2n}`` and ``H0 c_n - H a_{2n-1}``."""
    lo, hi = window
    b = a.select(2, 0)
    c = a.select(2, -1)
    r1, r2 = {}, {}
    for n in range(lo, hi + 1):
        r1[n] = apply_exact(H0, b, n) - apply_exact(H, a, 2 * n)
        r2[n] = apply_exact(H0, c, n) - apply_exact(H, a, 2 * n - 1)
    return FiniteSeq._wrap(r1), FiniteSeq._wrap(r2)


def check_probability_kernel(M: int) -> CertifiedValue:
    """``sum_{m odd, |m| <= M} 1/m^2`` with tail bound ``2/M``; should contain pi^2/4."""
    if M < 1:
        raise ValueError("M must be >= 1")
    m = np.arange(1, M + 1, 2, dtype=np.float64)
    terms = 1.0 / (m * m)
    value = 2 * math.fsum(terms)
    return CertifiedValue(value, 2.0 / M + 4 * _U * value)
