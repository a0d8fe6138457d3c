"""Exact check of the skeletal decomposition of ``(K a)^k``."""

from __future__ import annotations

from ..core import FiniteSeq, PiGraded
from ..operators import I, K, apply_at
from .frames import build, shape_census

__all__ = ["decomposition_rhs", "check_decomposition"]

MAX_EXACT_K = 8


def decomposition_rhs(a: FiniteSeq, k: int, window: tuple[int, int]) -> FiniteSeq:
    """Right-hand side of the decomposition on ``window``, built from skeletons.

    Skeletons of equal shape have equal buildings, so each shape is built
    once and its terms are weighted by the shape's multiplicity.
    """
    lo, hi = window
    points = range(lo, hi + 1)
    buildings: dict[str, FiniteSeq] = {}

    def building(s):
        hit = buildings.get(s.shape)
        if hit is None:
            hit = buildings[s.shape] = build(s, a)
        return hit

    total = FiniteSeq.zero()
    for s, mult in shape_census(k):
        total = total + apply_at(K, building(s), points) * PiGraded.rational(mult)
    ka = apply_at(K, a, points)
    for j in range(1, k):
        tail = ka ** (k - j - 1) if k - j - 1 else None
        for s, mult in shape_census(j):
            term = apply_at(I, a * building(s), points)
            if tail is not None:
                term = term * tail
            total = total + term * PiGraded.rational(mult)
    return total


def check_decomposition(a: FiniteSeq, k: int, window: tuple[int, int] = (-64, 64)) -> FiniteSeq:
    """``(K a)^k`` minus the skeleton sum on ``window``; exactly zero when the identity holds."""
    if not 1 <= k <= MAX_EXACT_K:
        raise ValueError(f"k must be in 1..{MAX_EXACT_K}, got {k}")
    lo, hi = window
    lhs = apply_at(K, a, range(lo, hi + 1)) ** k
    return lhs - decomposition_rhs(a, k, window)
