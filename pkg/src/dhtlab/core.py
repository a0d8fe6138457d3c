"""Exact values in Q[1/pi] and finitely supported sequences over them.

Every exact computation in the package happens in the ring of finite sums
``sum_g q_g * pi**(-g)`` with rational ``q_g``.  Because pi is
transcendental, two such sums are equal as reals iff their coefficient
maps coincide, which is what makes zero-residual checks decidable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import mpmath
import numpy as np

__all__ = [
    "PiGraded",
    "FiniteSeq",
    "FloatWindow",
    "pg_add",
    "pg_mul",
    "pg_to_float",
    "seq_pointwise_mul",
    "seq_lp_norm",
    "load_sequence",
    "dump_sequence",
    "parse_sequence",
    "random_sequence",
]

Scalar = int | Fraction


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class PiGraded:
    """An exact real number ``sum_g coeff[g] * pi**(-g)``.

    Grades are non-negative integers and coefficients are
    :class:`fractions.Fraction`.  Zero coefficients are never stored, so the
    zero value has an empty map.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, Scalar] | None = None):
        clean: dict[int, Fraction] = {}
        for g, c in (terms or {}).items():
            g = int(g)
            if g < 0:
                raise ValueError(f"grades must be non-negative, got {g}")
            c = _as_fraction(c)
            if c:
                clean[g] = clean.get(g, Fraction(0)) + c
        self._terms = {g: c for g, c in clean.items() if c}

    @classmethod
    def _wrap(cls, terms: dict[int, Fraction]) -> "PiGraded":
        obj = object.__new__(cls)
        obj._terms = {g: c for g, c in terms.items() if c}
        return obj

    @classmethod
    def rational(cls, q: Scalar, grade: int = 0) -> "PiGraded":
        """``q * pi**(-grade)``."""
        return cls({grade: q})

    @classmethod
    def coerce(cls, x) -> "PiGraded":
        if isinstance(x, PiGraded):
            return x
        return cls({0: _as_fraction(x)})

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    @property
    def grades(self) -> frozenset[int]:
        return frozenset(self._terms)

    def coeff(self, grade: int) -> Fraction:
        return self._terms.get(grade, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_homogeneous(self, grade: int) -> bool:
        """True when every stored term has exactly this grade (zero counts)."""
        return all(g == grade for g in self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    # arithmetic -----------------------------------------------------------

    def __add__(self, other) -> "PiGraded":
        try:
            other = PiGraded.coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for g, c in other._terms.items():
            out[g] = out.get(g, 0) + c
        return PiGraded._wrap(out)

    __radd__ = __add__

    def __neg__(self) -> "PiGraded":
        return PiGraded._wrap({g: -c for g, c in self._terms.items()})

    def __sub__(self, other) -> "PiGraded":
        try:
            other = PiGraded.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "PiGraded":
        return (-self) + other

    def __mul__(self, other) -> "PiGraded":
        if isinstance(other, PiGraded):
            out: dict[int, Fraction] = {}
            for g1, c1 in self._terms.items():
                for g2, c2 in other._terms.items():
                    g = g1 + g2
                    out[g] = out.get(g, 0) + c1 * c2
            return PiGraded._wrap(out)
        try:
            q = _as_fraction(other)
        except TypeError:
            return NotImplemented
        return self.scaled(q)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PiGraded":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = PiGraded({0: 1})
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def scaled(self, q: Scalar, shift: int = 0) -> "PiGraded":
        """Multiply by ``q * pi**(-shift)``."""
        if not q:
            return PiGraded._wrap({})
        return PiGraded._wrap({g + shift: c * q for g, c in self._terms.items()})

    # comparison -----------------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, PiGraded):
            return self._terms == other._terms
        try:
            return self._terms == PiGraded.coerce(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    # evaluation -----------------------------------------------------------

    def to_float(self, precision: int = 53) -> mpmath.mpf:
        """Evaluate with a binary mantissa of ``precision`` bits.

        Guard bits are added until two successive evaluations round to the
        same value, so the result is within 1 ulp even under cancellation.
        """
        if precision < 53:
            raise ValueError("precision must be at least 53 bits")
        if not self._terms:
            return mpmath.mpf(0)
        extra = 32
        prev = None
        while True:
            with mpmath.workprec(precision + extra):
                inv_pi = 1 / mpmath.pi
                s = mpmath.fsum(
                    mpmath.mpf(c.numerator) / c.denominator * inv_pi**g
                    for g, c in self._terms.items()
                )
            with mpmath.workprec(precision):
                cur = +s
            if prev is not None and cur == prev:
                return cur
            prev = cur
            extra *= 2

    def __float__(self) -> float:
        return float(self.to_float(53))

    def __repr__(self) -> str:
        return f"PiGraded({self._terms!r})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for g in sorted(self._terms):
            c = self._terms[g]
            if g == 0:
                parts.append(str(c))
            elif g == 1:
                parts.append(f"{c}/pi")
            else:
                parts.append(f"{c}/pi^{g}")
        return " + ".join(parts).replace("+ -", "- ")


ZERO = PiGraded()


def pg_add(x: PiGraded, y: PiGraded) -> PiGraded:
    return x + y


def pg_mul(x: PiGraded, y: PiGraded) -> PiGraded:
    return x * y


def pg_to_float(x: PiGraded, precision: int = 53) -> mpmath.mpf:
    return x.to_float(precision)


class FiniteSeq:
    """A finitely supported sequence indexed by all of Z.

    Indices outside the support read as exact zero.  Instances are
    immutable; all operations return new sequences.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[int, object] | None = None):
        clean: dict[int, PiGraded] = {}
        for n, v in (entries or {}).items():
            v = PiGraded.coerce(v)
            if v:
                clean[int(n)] = v
        self._entries = clean

    @classmethod
    def _wrap(cls, entries: dict[int, PiGraded]) -> "FiniteSeq":
        obj = object.__new__(cls)
        obj._entries = {n: v for n, v in entries.items() if v}
        return obj

    @classmethod
    def delta(cls, j: int = 0, value: Scalar = 1) -> "FiniteSeq":
        return cls({j: value})

    @classmethod
    def zero(cls) -> "FiniteSeq":
        return cls._wrap({})

    @classmethod
    def from_values(cls, values: Iterable[Scalar], start: int = 0) -> "FiniteSeq":
        return cls({start + i: v for i, v in enumerate(values)})

    def __getitem__(self, n: int) -> PiGraded:
        return self._entries.get(n, ZERO)

    def __contains__(self, n: int) -> bool:
        return n in self._entries

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self._entries))

    def __len__(self) -> int:
        return len(self._entries)

    def items(self) -> list[tuple[int, PiGraded]]:
        return sorted(self._entries.items())

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self._entries))

    @property
    def radius(self) -> int:
        """Largest ``|n|`` in the support (0 for the zero sequence)."""
        return max((abs(n) for n in self._entries), default=0)

    def is_zero(self) -> bool:
        return not self._entries

    def restrict(self, lo: int, hi: int) -> "FiniteSeq":
        return FiniteSeq._wrap({n: v for n, v in self._entries.items() if lo <= n <= hi})

    def select(self, stride: int, offset: int = 0) -> "FiniteSeq":
        """The sequence ``n -> self[stride * n + offset]``."""
        out = {}
        for m, v in self._entries.items():
            n, r = divmod(m - offset, stride)
            if r == 0:
                out[n] = v
        return FiniteSeq._wrap(out)

    def shift(self, k: int) -> "FiniteSeq":
        """The sequence ``n -> self[n - k]``."""
        return FiniteSeq._wrap({n + k: v for n, v in self._entries.items()})

    def __add__(self, other: "FiniteSeq") -> "FiniteSeq":
        if not isinstance(other, FiniteSeq):
            return NotImplemented
        out = dict(self._entries)
        for n, v in other._entries.items():
            out[n] = out[n] + v if n in out else v
        return FiniteSeq._wrap(out)

    def __neg__(self) -> "FiniteSeq":
        return FiniteSeq._wrap({n: -v for n, v in self._entries.items()})

    def __sub__(self, other: "FiniteSeq") -> "FiniteSeq":
        if not isinstance(other, FiniteSeq):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other) -> "FiniteSeq":
        if isinstance(other, FiniteSeq):
            return seq_pointwise_mul(self, other)
        c = PiGraded.coerce(other)
        return FiniteSeq._wrap({n: v * c for n, v in self._entries.items()})

    def __rmul__(self, other) -> "FiniteSeq":
        return self * other

    def __pow__(self, k: int) -> "FiniteSeq":
        return FiniteSeq._wrap({n: v**k for n, v in self._entries.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteSeq):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> int:
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{n}: {v}" for n, v in self.items())
        return f"FiniteSeq({{{body}}})"

    def is_rational(self) -> bool:
        return all(v.grades <= {0} for v in self._entries.values())

    def to_window(self, N: int) -> "FloatWindow":
        vals = np.zeros(2 * N + 1)
        for n, v in self._entries.items():
            if -N <= n <= N:
                vals[n + N] = float(v)
        return FloatWindow(vals)

    def to_triples(self) -> list[list[int]]:
        if not self.is_rational():
            raise ValueError("only grade-0 (rational) sequences have a triple form")
        out = []
        for n, v in self.items():
            q = v.coeff(0)
            out.append([n, q.numerator, q.denominator])
        return out


def seq_pointwise_mul(a: FiniteSeq, b: FiniteSeq) -> FiniteSeq:
    if len(a) > len(b):
        a, b = b, a
    return FiniteSeq._wrap({n: v * b._entries[n] for n, v in a._entries.items() if n in b._entries})


@dataclass(frozen=True)
class FloatWindow:
    """Double-precision samples of a sequence on ``-N..N``; zero outside."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size % 2 == 0:
            raise ValueError("a window holds 2N+1 samples")
        object.__setattr__(self, "values", vals)

    @property
    def N(self) -> int:
        return (self.values.size - 1) // 2

    @classmethod
    def zeros(cls, N: int) -> "FloatWindow":
        return cls(np.zeros(2 * N + 1))

    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def __getitem__(self, n: int) -> float:
        if abs(n) > self.N:
            return 0.0
        return float(self.values[n + self.N])


def seq_lp_norm(a: FiniteSeq | FloatWindow, p: float, precision: int = 53):
    """``(sum |a_n|**p)**(1/p)``.

    Returns a float at 53 bits and an :class:`mpmath.mpf` above that.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if isinstance(a, FloatWindow):
        v = np.abs(a.values)
        scale = v.max(initial=0.0)
        if scale == 0.0:
            return 0.0
        if math.isinf(p):
            return float(scale)
        return float(scale * math.fsum((v / scale) ** p) ** (1.0 / p))
    if a.is_zero():
        return 0.0 if precision == 53 else mpmath.mpf(0)
    with mpmath.workprec(precision + 16):
        pp = mpmath.mpf(p) if not isinstance(p, Fraction) else mpmath.mpf(p.numerator) / p.denominator
        vals = [abs(v.to_float(precision + 16)) for _, v in a.items()]
        if mpmath.isinf(pp):
            s = max(vals)
        else:
            s = mpmath.fsum(x**pp for x in vals) ** (1 / pp)
    with mpmath.workprec(precision):
        s = +s
    return float(s) if precision == 53 else s


def parse_sequence(triples) -> FiniteSeq:
    """Build a sequence from ``[[index, numerator, denominator], ...]``."""
    entries: dict[int, Fraction] = {}
    for item in triples:
        if not isinstance(item, (list, tuple)) or len(item) != 3:
            raise ValueError(f"expected [index, numerator, denominator], got {item!r}")
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in item):
            raise ValueError(f"sequence triples must be integers, got {item!r}")
        n, num, den = item
        if den == 0:
            raise ValueError(f"zero denominator at index {n}")
        if n in entries:
            raise ValueError(f"duplicate index {n}")
        entries[n] = Fraction(num, den)
    return FiniteSeq(entries)


def load_sequence(path: str | Path) -> FiniteSeq:
    with open(path) as fh:
        return parse_sequence(json.load(fh))


def dump_sequence(a: FiniteSeq, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(a.to_triples(), fh)


def random_sequence(
    rng, max_support: int = 8, reach: int = 8, bound: int = 10, max_den: int = 9
) -> FiniteSeq:
    """Random rational sequence: at most ``max_support`` entries in [-reach, reach],
    values in [-bound, bound] with denominators up to ``max_den``.

    ``rng`` is a :class:`random.Random`; exact values need Python integers.
    """
    size = rng.randint(0, max_support)
    idx = rng.sample(range(-reach, reach + 1), min(size, 2 * reach + 1))
    out = {}
    for n in idx:
        d = rng.randint(1, max_den)
        out[n] = Fraction(rng.randint(-bound * d, bound * d), d)
    return FiniteSeq(out)
