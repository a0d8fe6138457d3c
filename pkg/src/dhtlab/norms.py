"""Sharp constants, building norms and the cotangent recursion.

All constants are mpmath floats computed at a configurable binary precision
(256 bits unless ``DHTLAB_PRECISION`` says otherwise).
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
from scipy.optimize import bisect

from .core import FiniteSeq, seq_lp_norm
from .skeletal.frames import Bone, Frame, FrameSet, build, shape_census

__all__ = [
    "default_precision",
    "NormConstant",
    "BoundChain",
    "NormRecord",
    "sharp_constant",
    "cot_constant",
    "building_norm",
    "skeleton_sum",
    "f_k",
    "check_fixed_point",
    "solve_bound",
    "check_cot_sum_identity",
    "check_k2_identity",
    "theorem_chain",
    "historical_chain",
    "check_building_norm_bound",
    "is_covered",
]

ENUMERATION_LIMIT = 12


def default_precision() -> int:
    raw = os.environ.get("DHTLAB_PRECISION")
    if not raw:
        return 256
    prec = int(raw)
    if prec < 53:
        raise ValueError("DHTLAB_PRECISION must be at least 53")
    return prec


def _prec(precision: int | None) -> int:
    return default_precision() if precision is None else precision


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


@dataclass(frozen=True)
class NormConstant:
    p: float
    value: mpmath.mpf
    p_star: mpmath.mpf

    def __float__(self):
        return float(self.value)


@dataclass
class BoundChain:
    method: str
    steps: list[tuple[float, mpmath.mpf]] = field(default_factory=list)

    @property
    def value(self):
        return self.steps[-1][1]

    @property
    def target(self):
        return self.steps[-1][0]


@dataclass
class NormRecord:
    method: str
    p: float
    k: int | None
    bound: float | None
    sharp: float
    residual: float | None
    status: str = "PROVED"

    def to_dict(self) -> dict:
        return asdict(self)


def is_covered(p) -> bool:
    """True when p or its conjugate exponent is an even integer (or p = 2)."""
    q = Fraction(p).limit_denominator(10**9) if not isinstance(p, Fraction) else p
    if q <= 1:
        return False
    conj = q / (q - 1)
    return any(r.denominator == 1 and r.numerator % 2 == 0 for r in (q, conj))


@lru_cache(maxsize=4096)
def _sharp(p: Fraction | float, prec: int):
    with mpmath.workprec(prec + 16):
        pp = _mpf(p)
        if pp <= 1:
            raise ValueError(f"p must exceed 1, got {p}")
        if pp <= 2:
            v = mpmath.tan(mpmath.pi / (2 * pp))
            ps = pp / (pp - 1)
        else:
            v = mpmath.cot(mpmath.pi / (2 * pp))
            ps = pp
    with mpmath.workprec(prec):
        return +v, +ps


def sharp_constant(p, precision: int | None = None) -> NormConstant:
    """C_p = cot(pi / 2p*), using the tangent form for 1 < p <= 2."""
    if isinstance(p, int):
        p = Fraction(p)
    v, ps = _sharp(p, _prec(precision))
    return NormConstant(p=float(p), value=v, p_star=ps)


def _C(p, prec: int):
    return _sharp(p, prec)[0]


def cot_constant(p, i: int, precision: int | None = None):
    """cot(i*pi / 2p); agrees with C_{p/i} only when p/i >= 2."""
    prec = _prec(precision)
    with mpmath.workprec(prec):
        return mpmath.cot(i * mpmath.pi / (2 * _mpf(p)))


def _ratio(p, n: int):
    # p/n kept exact for rational p so that p/n == 2 hits the C_2 = 1 branch exactly
    if isinstance(p, (int, Fraction)):
        return Fraction(p) / n
    return p / n


def _braced_norm(p, f: Frame, prec: int):
    if isinstance(f, Bone):
        return mpmath.mpf(1)
    q = _ratio(p, f.size)
    if q <= 1:
        raise ValueError(f"p/|F| = {float(q):g} <= 1 for sub-frame {f}")
    out = _C(q, prec)
    for g in f.elements:
        out *= _braced_norm(p, g, prec)
    return out


def building_norm(p, f: Frame, precision: int | None = None):
    """Product-form building norm: prod over elements of their braced norms."""
    prec = _prec(precision)
    with mpmath.workprec(prec):
        if isinstance(f, Bone):
            return mpmath.mpf(1)
        out = mpmath.mpf(1)
        for g in f.elements:
            out *= _braced_norm(p, g, prec)
        return out


def _check_domain(p, k: int) -> None:
    if k < 1:
        raise ValueError("k must be positive")
    if p < k:
        raise ValueError(f"need p >= k, got p={p}, k={k}")


def skeleton_sum(p, k: int, precision: int | None = None, method: str = "auto"):
    """Sum of building norms over all skeletons of size k.

    ``method="enumerate"`` sums the 2**(k-1) building norms directly.
    ``method="recursion"`` uses the splitting of S_{k+1} into {S, k+1} and
    S u {{k+1}}, which multiplies the sum by C_{p/k} + C_p at each step.
    ``auto`` enumerates up to k = 12.
    """
    _check_domain(p, k)
    return _skeleton_sum(p, k, _prec(precision), method)


@lru_cache(maxsize=8192)
def _skeleton_sum(p, k: int, prec: int, method: str):
    if method == "auto":
        method = "enumerate" if k <= ENUMERATION_LIMIT else "recursion"
    with mpmath.workprec(prec):
        if method == "enumerate":
            # equal shapes have equal norms; the census still walks all of S_k once
            return mpmath.fsum(n * building_norm(p, s, prec) for s, n in shape_census(k))
        if method == "recursion":
            out = mpmath.mpf(1)
            cp = _C(_ratio(p, 1), prec)
            for i in range(1, k):
                out *= _C(_ratio(p, i), prec) + cp
            return out
    raise ValueError(f"unknown method {method!r}")


def _sums(p, k: int, prec: int, method: str = "auto"):
    return [skeleton_sum(p, j, prec, method) for j in range(1, k + 1)]


def f_k(p, k: int, x, precision: int | None = None, *, k_norm=None, method: str = "auto"):
    """Right-hand side of the cotangent inequality at ``x``.

    ``k_norm`` replaces C_{p/k} (the assumed bound on the K-norm at p/k).
    """
    _check_domain(p, k)
    prec = _prec(precision)
    with mpmath.workprec(prec):
        sums = _sums(p, k, prec, method)
        lead = _C(_ratio(p, k), prec) if k_norm is None else _mpf(k_norm)
        x = _mpf(x)
        return sums[k - 1] * lead + mpmath.fsum(sums[j - 1] * x ** (k - j - 1) for j in range(1, k))


def _f_k_cot(p, k: int, x, prec: int):
    # same polynomial with every C_{p/i} replaced by cot(i pi / 2p)
    with mpmath.workprec(prec):
        cot = [None] + [mpmath.cot(i * mpmath.pi / (2 * _mpf(p))) for i in range(1, k + 1)]
        sums = [mpmath.mpf(1)]
        for i in range(1, k):
            sums.append(sums[-1] * (cot[i] + cot[1]))
        x = _mpf(x)
        return sums[k - 1] * cot[k] + mpmath.fsum(sums[j - 1] * x ** (k - j - 1) for j in range(1, k))


def check_fixed_point(p, k: int, tol: float = 1e-15, precision: int | None = None, *, branch: str = "sharp"):
    """|f_k(C_p) - C_p^k| and whether it is within ``tol``.

    ``branch="sharp"`` uses C_q = cot(pi/2q*) throughout.  ``branch="cot"``
    uses cot(i pi/2p) in place of C_{p/i}, which is the purely trigonometric
    identity; the two coincide when p >= 2k.
    """
    _check_domain(p, k)
    prec = _prec(precision)
    with mpmath.workprec(prec):
        cp = _C(_ratio(p, 1), prec)
        if branch == "sharp":
            rhs = f_k(p, k, cp, prec)
        elif branch == "cot":
            rhs = _f_k_cot(p, k, cp, prec)
        else:
            raise ValueError(f"unknown branch {branch!r}")
        residual = abs(rhs - cp**k)
    return residual, residual <= tol


def solve_bound(p, k: int, precision: int | None = None, *, k_norm=None, rtol: float = 1e-15) -> float:
    """The unique x > 0 with x^k = f_k(x), by bisection on [1, 10 C_p]."""
    _check_domain(p, k)
    prec = _prec(precision)
    cp = float(_C(_ratio(p, 1), prec))
    sums = [float(s) for s in _sums(p, k, prec)]
    lead = float(_C(_ratio(p, k), prec)) if k_norm is None else float(k_norm)

    def g(x):
        fx = sums[k - 1] * lead + math.fsum(sums[j - 1] * x ** (k - j - 1) for j in range(1, k))
        return fx / x**k - 1.0

    lo, hi = 1.0, 10.0 * cp
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if glo < 0 or ghi > 0:
        raise ArithmeticError(f"bracket [1, {hi:g}] does not contain a root (g={glo:g}, {ghi:g})")
    return bisect(g, lo, hi, xtol=1e-300, rtol=rtol, maxiter=400)


def check_cot_sum_identity(alpha, beta, tol: float = 1e-18, precision: int | None = None):
    """|cot a cot b - cot(a+b)(cot a + cot b) - 1| for a, b > 0 with a + b < pi."""
    prec = _prec(precision)
    with mpmath.workprec(prec):
        a, b = _mpf(alpha), _mpf(beta)
        if a <= 0 or b <= 0 or a + b >= mpmath.pi:
            raise ValueError("need alpha, beta > 0 and alpha + beta < pi")
        s = mpmath.cot(a + b)
        residual = abs(mpmath.cot(a) * mpmath.cot(b) - s * mpmath.cot(b) - s * mpmath.cot(a) - 1)
    return residual, residual <= tol


def check_k2_identity(p, tol: float = 1e-18, precision: int | None = None):
    """|2 cot(pi/p) cot(pi/2p) + 1 - cot(pi/2p)^2|."""
    prec = _prec(precision)
    with mpmath.workprec(prec):
        pp = _mpf(p)
        c1, c2 = mpmath.cot(mpmath.pi / pp), mpmath.cot(mpmath.pi / (2 * pp))
        residual = abs(2 * c1 * c2 + 1 - c2**2)
    return residual, residual <= tol


def _power_of_two(p: int) -> bool:
    return p >= 2 and p & (p - 1) == 0


def theorem_chain(p: int, route: str = "single", precision: int | None = None) -> BoundChain:
    """Upper bounds on the K-norm reached from ||K||_2 = 1.

    ``single`` goes 2 -> p in one step with k = p/2.  ``doubling`` goes
    2 -> 4 -> 8 -> ... with k = 2, feeding each bound into the next step, and
    needs p to be a power of two.
    """
    if p < 2 or p % 2:
        raise ValueError(f"p must be an even integer >= 2, got {p}")
    chain = BoundChain("skeletal", [(2, mpmath.mpf(1))])
    if p == 2:
        return chain
    if route == "single":
        chain.steps.append((p, mpmath.mpf(solve_bound(p, p // 2, precision, k_norm=1))))
    elif route == "doubling":
        if not _power_of_two(p):
            raise ValueError("the doubling route needs p to be a power of two")
        q = 4
        while q <= p:
            prev = chain.value
            chain.steps.append((q, mpmath.mpf(solve_bound(q, 2, precision, k_norm=prev))))
            q *= 2
    else:
        raise ValueError(f"unknown route {route!r}")
    return chain


def historical_chain(method: str, p: int, precision: int | None = None) -> BoundChain:
    """Older, non-sharp (except Gohberg-Krupnik) bound chains starting from the p = 2 value 1."""
    prec = _prec(precision)
    chain = BoundChain(method, [(2, mpmath.mpf(1))])
    with mpmath.workprec(prec):
        if method in ("titchmarsh", "gohberg_krupnik"):
            if not _power_of_two(p):
                raise ValueError(f"{method} chain needs p a power of two, got {p}")
            q, x = 2, mpmath.mpf(1)
            while q < p:
                if method == "titchmarsh":
                    x = x + mpmath.sqrt(2 / mpmath.pi * (5 * q + 3) * x + 2 * x**2)
                else:
                    x = x + mpmath.sqrt(1 + x**2)
                q *= 2
                chain.steps.append((q, x))
        elif method == "riesz":
            if p < 2 or p % 2:
                raise ValueError(f"riesz bound needs an even p, got {p}")
            if p > 2:
                chain.steps.append((p, mpmath.mpf(p) / mpmath.log(2)))
        else:
            raise ValueError(f"unknown method {method!r}")
    return chain


def check_building_norm_bound(p, s: FrameSet, a: FiniteSeq) -> tuple[float, float]:
    """(||H^S a||_{p/|S|}, C_p^S ||a||_p^|S|) for a skeleton S."""
    k = s.size
    q = p / k
    if q <= 1:
        raise ValueError(f"need p/|S| > 1, got {q}")
    lhs = seq_lp_norm(build(s, a), q)
    rhs = float(building_norm(p, s)) * seq_lp_norm(a, p) ** k
    return lhs, rhs
