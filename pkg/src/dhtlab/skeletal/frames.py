"""Frames, skeletons and buildings.

A frame is an integer ("bone") or a finite set of frames.  Skeletons of
size k are the frames generated by

    S_1     = {{1}}
    S_{k+1} = {{S, k+1} : S in S_k}  u  {S u {{k+1}} : S in S_k}

so |S_k| = 2**(k-1).  A building replaces every bone with the sequence a,
every inner pair of braces with H[...] and every comma with a pointwise
product.
"""

from __future__ import annotations

import re
from functools import cached_property, lru_cache
from typing import Iterator

from ..core import FiniteSeq
from ..operators import H, apply_at

__all__ = [
    "Bone",
    "FrameSet",
    "Frame",
    "parse_frame",
    "frame_size",
    "frame_depth",
    "enumerate_skeletons",
    "iter_skeletons",
    "shape_census",
    "is_skeleton",
    "has_bone_at_every_level",
    "count_h_applications",
    "build",
]

MAX_SKELETON_SIZE = 24


class Bone:
    __slots__ = ("label",)

    def __init__(self, label: int):
        if label < 1:
            raise ValueError("bone labels are positive integers")
        self.label = label

    size = 1
    depth = 0

    @property
    def canonical(self) -> str:
        return str(self.label)

    def __eq__(self, other):
        return isinstance(other, Bone) and other.label == self.label

    def __hash__(self):
        return hash(("bone", self.label))

    def __str__(self):
        return str(self.label)

    def __repr__(self):
        return f"Bone({self.label})"


class FrameSet:
    """A set of frames.

    Elements keep their construction order for display; equality and
    hashing use the canonical order (by size, depth, canonical string), so
    ``{1,{2}} == {{2},1}``.
    """

    __slots__ = ("elements", "__dict__")

    def __init__(self, elements):
        self.elements = tuple(elements)
        if not self.elements:
            raise ValueError("empty frames are not used")

    @cached_property
    def size(self) -> int:
        return sum(f.size for f in self.elements)

    @cached_property
    def depth(self) -> int:
        return 1 + max(f.depth for f in self.elements)

    @cached_property
    def canonical(self) -> str:
        parts = sorted(self.elements, key=lambda f: (f.size, f.depth, f.canonical))
        return "{" + ",".join(f.canonical for f in parts) + "}"

    @cached_property
    def shape(self) -> str:
        """Canonical string with labels erased; isomorphic frames share it."""
        return _shape(self)

    def __eq__(self, other):
        return isinstance(other, FrameSet) and other.canonical == self.canonical

    def __hash__(self):
        return hash(self.canonical)

    def __iter__(self):
        return iter(self.elements)

    def __str__(self):
        return "{" + ",".join(str(f) for f in self.elements) + "}"

    def __repr__(self):
        return f"FrameSet({self})"


Frame = Bone | FrameSet


def _shape(f: Frame) -> str:
    if isinstance(f, Bone):
        return "*"
    return "{" + ",".join(sorted(_shape(g) for g in f.elements)) + "}"


def frame_size(f: Frame) -> int:
    return f.size


def frame_depth(f: Frame) -> int:
    return f.depth


_TOKEN = re.compile(r"\s*(?:(\d+)|(.))")


def parse_frame(text: str) -> Frame:
    """Parse ``"{ {1}, 2, {3} }"``; whitespace is ignored."""
    tokens = [(m.group(1), m.group(2)) for m in _TOKEN.finditer(text) if m.group(0).strip()]
    pos = 0

    def parse() -> Frame:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of frame")
        num, sym = tokens[pos]
        pos += 1
        if num is not None:
            return Bone(int(num))
        if sym != "{":
            raise ValueError(f"unexpected {sym!r} in frame")
        elems = [parse()]
        while True:
            if pos >= len(tokens):
                raise ValueError("unterminated frame")
            _, sym = tokens[pos]
            pos += 1
            if sym == "}":
                return FrameSet(elems)
            if sym != ",":
                raise ValueError(f"expected ',' or '}}', got {sym!r}")
            elems.append(parse())

    out = parse()
    if pos != len(tokens):
        raise ValueError("trailing characters after frame")
    return out


def iter_skeletons(k: int) -> Iterator[FrameSet]:
    if k == 1:
        yield FrameSet((Bone(1),))
        return
    for s in iter_skeletons(k - 1):
        yield FrameSet((s, Bone(k)))
    for s in iter_skeletons(k - 1):
        yield FrameSet(s.elements + (FrameSet((Bone(k),)),))


def enumerate_skeletons(k: int) -> list[FrameSet]:
    """All skeletons of size ``k`` in recursion order ({S, k+1} branch first)."""
    if not 1 <= k <= MAX_SKELETON_SIZE:
        raise ValueError(f"k must be in 1..{MAX_SKELETON_SIZE}, got {k}")
    return list(_skeletons(k))


@lru_cache(maxsize=None)
def _skeletons(k: int) -> tuple[FrameSet, ...]:
    if k == 1:
        return (FrameSet((Bone(1),)),)
    prev = _skeletons(k - 1)
    top, wrapped = Bone(k), FrameSet((Bone(k),))
    return tuple(FrameSet((s, top)) for s in prev) + tuple(FrameSet(s.elements + (wrapped,)) for s in prev)


@lru_cache(maxsize=None)
def shape_census(k: int) -> tuple[tuple[FrameSet, int], ...]:
    """One representative per label-free shape in S_k, with its multiplicity."""
    counts: dict[str, list] = {}
    for s in enumerate_skeletons(k):
        counts.setdefault(s.shape, [s, 0])[1] += 1
    return tuple((s, n) for s, n in counts.values())


def is_skeleton(f: Frame) -> bool:
    """Membership in S_k for k = |f|, decided by undoing the last recursion step."""
    if not isinstance(f, FrameSet):
        return False
    k = f.size
    if k == 1:
        return f == FrameSet((Bone(1),))
    top = Bone(k)
    wrapped = FrameSet((top,))
    if top in f.elements and len(f.elements) == 2:
        (rest,) = [g for g in f.elements if g != top]
        return isinstance(rest, FrameSet) and is_skeleton(rest)
    if wrapped in f.elements and len(f.elements) > 1:
        rest = FrameSet(g for g in f.elements if g != wrapped)
        return is_skeleton(rest)
    return False


def has_bone_at_every_level(f: Frame) -> bool:
    """Every set inside ``f`` (including ``f``) has a bone among its elements."""
    if isinstance(f, Bone):
        return True
    return any(isinstance(g, Bone) for g in f.elements) and all(
        has_bone_at_every_level(g) for g in f.elements
    )


def count_h_applications(f: Frame) -> int:
    """Number of H[...] layers in the product-form building of ``f``."""
    if isinstance(f, Bone):
        return 0
    return sum(1 + count_h_applications(g) for g in f.elements if isinstance(g, FrameSet))


def _finite_product(f: FrameSet, a: FiniteSeq, counter: list[int]) -> FiniteSeq:
    # product over f's elements; f has a top-level bone, so the support is within supp(a)
    if not any(isinstance(g, Bone) for g in f.elements):
        raise ValueError(f"frame {f} has no bone at its top level; its building is not finitely supported")
    return _product_at(f, a, a.support, counter)


def _product_at(f: FrameSet, a: FiniteSeq, points, counter: list[int]) -> FiniteSeq:
    out = None
    for g in f.elements:
        if isinstance(g, Bone):
            factor = FiniteSeq._wrap({n: a[n] for n in points})
        else:
            inner = _finite_product(g, a, counter)
            counter[0] += 1
            factor = apply_at(H, inner, points)
        out = factor if out is None else out * factor
        if out.is_zero():
            return out
    return out


def build(
    f: Frame,
    a: FiniteSeq,
    window: tuple[int, int] | None = None,
    *,
    braced: bool = False,
    return_count: bool = False,
):
    """The building of ``f`` applied to ``a``.

    By default the product form ``prod_{g in f} H^{g} a`` is returned.  When
    ``f`` has a bone at its top level that product is supported inside
    ``supp(a)`` and is computed exactly in full.  Otherwise (or with
    ``braced=True``, which wraps everything in one more ``H``) the result has
    infinite support and only the values on ``window`` are returned.

    Every set strictly inside ``f`` must have a top-level bone, or the inner
    ``H`` arguments would themselves have infinite support.
    """
    counter = [0]
    if isinstance(f, Bone):
        seq = a
        if braced:
            raise ValueError("the braced building of a bone is the bone itself; use braced=False")
    else:
        top_bone = any(isinstance(g, Bone) for g in f.elements)
        if top_bone and not braced:
            seq = _finite_product(f, a, counter)
        else:
            if window is None:
                raise ValueError(
                    f"building of {f} has infinite support; pass a window to evaluate it"
                )
            lo, hi = window
            points = range(lo, hi + 1)
            if braced:
                inner = _finite_product(f, a, counter)
                counter[0] += 1
                seq = apply_at(H, inner, points)
            else:
                seq = _product_at(f, a, points, counter)
    if return_count:
        return seq, counter[0]
    return seq
