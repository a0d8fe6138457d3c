"""Symbolic expressions over a, K[.], H[.], I[.] and pointwise products.

Terms are immutable trees with a canonical factor order, so structurally
equal products compare equal regardless of how they were written.  An
``Expansion`` is a formal integer combination of terms.

Printed syntax (also accepted by :func:`parse_expr`)::

    2*K[a*H[a*H[a]]] + 2*K[a*H[a]^2] + 2*I[a^2*H[a]] + K[a]*I[a^2]
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Union

from ..core import FiniteSeq, PiGraded
from ..operators import H, I, K, apply_at
from .frames import Bone, FrameSet, enumerate_skeletons

__all__ = [
    "Atom",
    "OpK",
    "OpH",
    "OpI",
    "Product",
    "PowerOfKA",
    "Node",
    "Expansion",
    "A",
    "KA",
    "product",
    "parse_expr",
    "expand_power",
    "skeleton_normal_form",
    "building_expr",
    "exprs_equal",
    "is_normal_form",
    "evaluate",
]

MAX_EXPANSION = 12

# factor order inside products: a < H[..] < K[..] < I[..]
_RANK = {"a": 0, "H": 1, "K": 2, "I": 3}


@dataclass(frozen=True)
class Atom:
    def __str__(self):
        return "a"

    @property
    def sort_key(self):
        return (0, "a")


@dataclass(frozen=True)
class _Op:
    arg: "Node"
    tag = "?"
    _text: str = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_text", f"{self.tag}[{self.arg}]")

    def __str__(self):
        return self._text

    @property
    def sort_key(self):
        return (_RANK[self.tag], self._text)


@dataclass(frozen=True)
class OpK(_Op):
    tag = "K"


@dataclass(frozen=True)
class OpH(_Op):
    tag = "H"


@dataclass(frozen=True)
class OpI(_Op):
    tag = "I"


@dataclass(frozen=True)
class PowerOfKA:
    """``K[a]**j`` kept as one unexpanded factor (j >= 2)."""

    j: int

    def __str__(self):
        return f"K[a]^{self.j}"

    @property
    def sort_key(self):
        return (_RANK["K"], f"K[a]^{self.j:04d}")


@dataclass(frozen=True)
class Product:
    """Flattened product of at least two factors, stored in canonical order."""

    factors: tuple
    _text: str = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        parts = []
        for f, n in _runs(self.factors):
            parts.append(str(f) if n == 1 else f"{f}^{n}")
        object.__setattr__(self, "_text", "*".join(parts))

    def __str__(self):
        return self._text

    @property
    def sort_key(self):
        return self.factors[0].sort_key[:1] + (self._text,)


Node = Union[Atom, OpK, OpH, OpI, PowerOfKA, Product]

A = Atom()
KA = OpK(A)


def _runs(factors):
    out = []
    for f in factors:
        if out and out[-1][0] == f:
            out[-1][1] += 1
        else:
            out.append([f, 1])
    return out


def product(*factors: Node) -> Node:
    """Canonical product: flattens, merges powers of K[a], sorts factors."""
    flat: list[Node] = []
    ka = 0
    for f in factors:
        parts = f.factors if isinstance(f, Product) else (f,)
        for g in parts:
            if g == KA:
                ka += 1
            elif isinstance(g, PowerOfKA):
                ka += g.j
            else:
                flat.append(g)
    if ka == 1:
        flat.append(KA)
    elif ka > 1:
        flat.append(PowerOfKA(ka))
    if not flat:
        raise ValueError("empty product")
    if len(flat) == 1:
        return flat[0]
    flat.sort(key=lambda g: g.sort_key)
    return Product(tuple(flat))


def _factors(x: Node) -> tuple:
    return x.factors if isinstance(x, Product) else (x,)


def _ka_power(x: Node) -> int:
    n = 0
    for f in _factors(x):
        if f == KA:
            n += 1
        elif isinstance(f, PowerOfKA):
            n += f.j
    return n


def _contains_op(x: Node, tags: str) -> bool:
    if isinstance(x, Atom):
        return False
    if isinstance(x, PowerOfKA):
        return "K" in tags
    if isinstance(x, Product):
        return any(_contains_op(f, tags) for f in x.factors)
    return x.tag in tags or _contains_op(x.arg, tags)


class Expansion:
    """Finite integer combination of terms; zero coefficients are dropped."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable[tuple[int, Node]] | dict = ()):
        acc: Counter = Counter()
        items = terms.items() if isinstance(terms, dict) else ((t, c) for c, t in terms)
        for t, c in items:
            acc[t] += c
        self._terms = {t: c for t, c in acc.items() if c}

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __add__(self, other: "Expansion") -> "Expansion":
        acc = Counter(self._terms)
        acc.update(other._terms)
        return Expansion(dict(acc))

    def __eq__(self, other):
        return isinstance(other, Expansion) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def total(self) -> int:
        """Sum of coefficients, i.e. the number of terms before grouping."""
        return sum(self._terms.values())

    def ordered(self) -> list[tuple[int, Node]]:
        def key(item):
            t, _ = item
            return (0 if isinstance(t, OpK) and t != KA else 1, _ka_power(t), str(t))

        return [(c, t) for t, c in sorted(self._terms.items(), key=key)]

    def k_terms(self) -> "Expansion":
        return Expansion({t: c for t, c in self._terms.items() if isinstance(t, OpK)})

    def i_terms(self) -> "Expansion":
        return Expansion({t: c for t, c in self._terms.items() if not isinstance(t, OpK)})

    def __str__(self):
        if not self._terms:
            return "0"
        out = []
        for i, (c, t) in enumerate(self.ordered()):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = str(t) if mag == 1 else f"{mag}*{t}"
            if i == 0:
                out.append(body if c > 0 else f"-{body}")
            else:
                out.append(f"{sign} {body}")
        return " ".join(out)

    def __repr__(self):
        return f"Expansion({self})"


# -- parser ----------------------------------------------------------------

_TOKENS = re.compile(r"\s*(\d+|[aKHI\[\]*^+\-()])")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKENS.match(text, pos)
        if not m:
            raise ValueError(f"unexpected character {text[pos]!r} at {pos}")
        out.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise ValueError(f"expected {expected or 'token'}, got {tok!r}")
        self.i += 1
        return tok

    def expansion(self) -> Expansion:
        terms = []
        sign = 1
        if self.peek() == "-":
            self.take()
            sign = -1
        while True:
            coef = 1
            if self.peek() is not None and self.peek().isdigit():
                coef = int(self.take())
                if self.peek() == "*":
                    self.take()
            terms.append((sign * coef, self.product()))
            tok = self.peek()
            if tok is None:
                return Expansion(terms)
            if tok not in "+-":
                raise ValueError(f"unexpected {tok!r}")
            sign = 1 if self.take() == "+" else -1

    def product(self) -> Node:
        factors = [self.power()]
        while self.peek() == "*":
            self.take()
            factors.append(self.power())
        return product(*factors)

    def power(self) -> Node:
        base = self.factor()
        if self.peek() == "^":
            self.take()
            n = int(self.take())
            if n < 1:
                raise ValueError("exponents must be positive")
            return product(*([base] * n))
        return base

    def factor(self) -> Node:
        tok = self.take()
        if tok == "a":
            return A
        if tok == "(":
            inner = self.product()
            self.take(")")
            return inner
        if tok in ("K", "H", "I"):
            self.take("[")
            inner = self.product()
            self.take("]")
            return {"K": OpK, "H": OpH, "I": OpI}[tok](inner)
        raise ValueError(f"unexpected {tok!r}")


def parse_expr(text: str) -> Expansion:
    p = _Parser(text)
    out = p.expansion()
    if p.peek() is not None:
        raise ValueError(f"trailing input at {p.peek()!r}")
    return out


# -- rewriting -------------------------------------------------------------


def _product_rule(x: Node, y: Node) -> list[Node]:
    """K[x]*K[y] -> K[x*H[y]] + K[H[x]*y] + I[x*y], in that order."""
    return [
        OpK(product(x, OpH(y))),
        OpK(product(OpH(x), y)),
        OpI(product(x, y)),
    ]


def expand_power(k: int, *, trace: list | None = None) -> Expansion:
    """Expand ``K[a]^k`` by repeated use of the product rule.

    The first step pairs two K[a] factors.  Afterwards every summand with a
    single non-trivial K[y] factor and at least one K[a] left gets
    ``K[a]*K[y]`` rewritten; summands with no such factor, or consisting of
    K[...] alone, are final.  I[...] factors are never expanded further.
    If ``trace`` is a list, each intermediate expansion is appended to it.
    """
    if not 1 <= k <= MAX_EXPANSION:
        raise ValueError(f"k must be in 1..{MAX_EXPANSION}, got {k}")
    if k == 1:
        return Expansion([(1, KA)])
    rest = [KA] * (k - 2)
    pending = Counter()
    for t in _product_rule(A, A):
        pending[product(t, *rest)] += 1
    done: Counter = Counter()
    while pending:
        if trace is not None:
            trace.append(Expansion(dict(done + pending)))
        nxt: Counter = Counter()
        for term, c in pending.items():
            factors = _factors(term)
            big = [f for f in factors if isinstance(f, OpK) and f != KA]
            ka = _ka_power(term)
            if not big or (len(factors) == 1 and isinstance(term, OpK)):
                done[term] += c
                continue
            if len(big) != 1 or ka == 0:
                raise AssertionError(f"unexpected summand shape {term}")
            (ky,) = big
            others = [f for f in factors if f is not ky and f != KA and not isinstance(f, PowerOfKA)]
            remaining = [KA] * (ka - 1)
            for t in _product_rule(A, ky.arg):
                nxt[product(t, *others, *remaining)] += c
        pending = nxt
    return Expansion(dict(done))


def building_expr(f) -> Node:
    """Product-form building of a frame as an expression."""
    if isinstance(f, Bone):
        return A
    return product(*(A if isinstance(g, Bone) else OpH(building_expr(g)) for g in f.elements))


def skeleton_normal_form(k: int) -> Expansion:
    """Closed-form sum over skeletons: K-terms plus I-terms times K[a] powers."""
    if not 1 <= k <= MAX_EXPANSION:
        raise ValueError(f"k must be in 1..{MAX_EXPANSION}, got {k}")
    acc: Counter = Counter()
    for s in enumerate_skeletons(k):
        acc[OpK(building_expr(s))] += 1
    for j in range(1, k):
        tail = [KA] * (k - j - 1)
        for s in enumerate_skeletons(j):
            acc[product(OpI(product(A, building_expr(s))), *tail)] += 1
    return Expansion(dict(acc))


def exprs_equal(x: Expansion, y: Expansion) -> bool:
    return x == y


def is_normal_form(e: Expansion) -> bool:
    """Every term is K[b] or I[a*b]*K[a]^j with b free of K and I."""
    for t in e.terms:
        if isinstance(t, OpK):
            if _contains_op(t.arg, "KI"):
                return False
            continue
        fs = _factors(t)
        ins = [f for f in fs if isinstance(f, OpI)]
        rest = [f for f in fs if not isinstance(f, OpI) and f != KA and not isinstance(f, PowerOfKA)]
        if len(ins) != 1 or rest:
            return False
        arg = ins[0].arg
        if A not in _factors(arg) or _contains_op(arg, "KI"):
            return False
    return True


# -- exact evaluation ------------------------------------------------------

_OPS = {"K": K, "H": H, "I": I}


def _support(x: Node, a: FiniteSeq):
    """Finite support superset, or None when it may be infinite."""
    if isinstance(x, Atom):
        return frozenset(a.support)
    if isinstance(x, Product):
        sups = [s for s in (_support(f, a) for f in x.factors) if s is not None]
        return frozenset.intersection(*sups) if sups else None
    return None


def _eval(x: Node, a: FiniteSeq, points: tuple, memo: dict) -> FiniteSeq:
    key = (x, points)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if isinstance(x, Atom):
        out = FiniteSeq._wrap({n: a[n] for n in points})
    elif isinstance(x, PowerOfKA):
        out = _eval(KA, a, points, memo) ** x.j
    elif isinstance(x, Product):
        sup = _support(x, a)
        pts = points if sup is None else tuple(n for n in points if n in sup)
        out = None
        for f in x.factors:
            v = _eval(f, a, pts, memo)
            out = v if out is None else out * v
            if out.is_zero():
                break
    else:
        sup = _support(x.arg, a)
        if sup is None:
            raise ValueError(f"argument of {x} is not finitely supported")
        inner = _eval(x.arg, a, tuple(sorted(sup)), memo)
        out = apply_at(_OPS[x.tag], inner, points)
    memo[key] = out
    return out


def evaluate(e: Expansion | Node, a: FiniteSeq, window: tuple[int, int]) -> FiniteSeq:
    """Exact values of an expression on ``window``."""
    lo, hi = window
    points = tuple(range(lo, hi + 1))
    memo: dict = {}
    if not isinstance(e, Expansion):
        return _eval(e, a, points, memo)
    total = FiniteSeq.zero()
    for t, c in e.terms.items():
        total = total + _eval(t, a, points, memo) * PiGraded.rational(c)
    return total
