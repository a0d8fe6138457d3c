import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dhtlab.core import FiniteSeq
from dhtlab.operators import (
    CertifiedValue,
    DecayingSequence,
    H,
    I,
    K,
    R,
    apply_certified,
    apply_exact,
    check_factorization,
    check_partial_fraction,
    check_probability_kernel,
    factorization_holds,
)

D0 = FiniteSeq.delta(0)


def test_certified_value_contains():
    c = CertifiedValue(1.0, 0.5)
    assert c.contains(1.5) and c.contains(0.5) and not c.contains(1.6)


class TestApplyCertified:
    def test_ik_delta_at_zero(self):
        v = apply_certified(I, DecayingSequence.image(K, D0), 0, 10**5)
        assert v.bound < 1e-4 and v.contains(0.0)

    def test_ik_delta_at_two(self):
        v = apply_certified(I, DecayingSequence.image(K, D0), 2, 10**5)
        assert v.bound < 1e-4
        assert v.contains(1 / math.pi)
        assert v.value == pytest.approx(0.3183, abs=1e-4)

    @pytest.mark.parametrize("op", [K, H, I, R], ids=str)
    def test_zero_generator(self, op):
        assert apply_certified(op, DecayingSequence.zero(), 3, 100) == CertifiedValue(0.0, 0.0)

    @pytest.mark.parametrize("op,inner", [(I, K), (K, I), (H, I), (I, H)], ids=lambda o: str(o))
    def test_bound_shrinks_with_m(self, op, inner):
        a = DecayingSequence.image(inner, FiniteSeq({0: 1, 1: Fraction(-1, 2)}))
        bounds = [apply_certified(op, a, 4, M).bound for M in (100, 1000, 10**4, 10**5)]
        assert all(b >= 0 for b in bounds)
        assert bounds == sorted(bounds, reverse=True)

    @pytest.mark.parametrize("n", [-5, 0, 3])
    def test_truncation_interval_contains_longer_sum(self, n):
        # the M = 10^6 value is accurate to ~1e-6; the M = 10^3 interval must hold it
        a = DecayingSequence.image(K, FiniteSeq({0: 1, 3: 2}))
        coarse = apply_certified(I, a, n, 1000)
        fine = apply_certified(I, a, n, 10**6)
        assert abs(fine.value - coarse.value) <= coarse.bound + fine.bound

    def test_flat_input_to_first_order_kernel_refused(self):
        flat = DecayingSequence(lambda j: np.ones(np.shape(j)), 1.0, "flat")
        with pytest.raises(ValueError):
            apply_certified(K, flat, 0, 100)

    def test_envelope_really_bounds_image(self):
        a = FiniteSeq({-2: 3, 0: 1, 5: Fraction(-7, 3)})
        img = DecayingSequence.image(K, a)
        j = np.arange(-3000, 3001)
        assert np.all(np.abs(img.values(j)) <= img.envelope(j))


class TestFactorization:
    @pytest.mark.parametrize("n", range(-6, 7))
    def test_delta(self, n):
        lhs, ik, ki = check_factorization(D0, n, 10**5)
        assert lhs == apply_exact(H, D0, n)
        assert ik.bound <= 1e-3 and ki.bound <= 1e-3
        assert factorization_holds((lhs, ik, ki))

    def test_delta_n2_value(self):
        lhs, ik, ki = check_factorization(D0, 2, 10**5)
        assert lhs.terms == {1: 1}
        assert ik.bound < 1e-4 and ki.bound < 1e-4

    def test_two_point_sequence_at_zero(self):
        lhs, ik, ki = check_factorization(FiniteSeq({0: 1, 1: 1}), 0, 10**5)
        assert lhs.is_zero() and ik.contains(0.0) and ki.contains(0.0)

    @settings(max_examples=15)
    @given(
        st.dictionaries(st.integers(-4, 4), st.integers(-5, 5).filter(bool), min_size=1, max_size=4),
        st.integers(-8, 8),
    )
    def test_random_sequences(self, entries, n):
        assert factorization_holds(check_factorization(FiniteSeq(entries), n, 20_000))

    def test_m_too_small(self):
        with pytest.raises(ValueError):
            check_factorization(FiniteSeq({10: 1}), 5, 12)


class TestPartialFraction:
    @pytest.mark.parametrize("j", [-8, -4, -2, 2, 4, 8])
    def test_within_bounds(self, j):
        s, closed = check_partial_fraction(j, 10**6)
        assert abs(s.value - closed.value) <= s.bound + closed.bound
        assert closed.value == pytest.approx(math.pi**2 / (4 * j), rel=1e-15)

    def test_values(self):
        s, closed = check_partial_fraction(2, 10**6)
        assert s.value == pytest.approx(1.2337005, abs=1e-6)
        assert closed.value == pytest.approx(math.pi**2 / 8, rel=1e-15)
        assert check_partial_fraction(4, 10**6)[1].value == pytest.approx(0.61685, abs=1e-5)

    def test_antisymmetric(self):
        plus, minus = check_partial_fraction(2, 10**5), check_partial_fraction(-2, 10**5)
        assert plus[1].value == -minus[1].value
        assert plus[0].value == pytest.approx(-minus[0].value, abs=plus[0].bound + minus[0].bound)

    @given(st.integers(-30, 30).map(lambda i: 2 * i).filter(bool))
    def test_any_even_j(self, j):
        s, closed = check_partial_fraction(j, 4000)
        assert abs(s.value - closed.value) <= s.bound + closed.bound

    @pytest.mark.parametrize("j,M", [(3, 100), (0, 100), (4, 7)])
    def test_bad_input(self, j, M):
        with pytest.raises(ValueError):
            check_partial_fraction(j, M)


class TestProbabilityKernel:
    def test_large_m(self):
        v = check_probability_kernel(10**6)
        assert v.contains(math.pi**2 / 4)
        assert abs(v.value - math.pi**2 / 4) <= 2e-6
        assert v.value == pytest.approx(2.4674011, abs=3e-6)

    def test_single_pair(self):
        v = check_probability_kernel(1)
        assert v.value == 2 and v.bound >= 2 and v.contains(math.pi**2 / 4)

    def test_normalized_mass_is_one(self):
        v = check_probability_kernel(10**5)
        scale = 4 / math.pi**2
        assert abs(scale * v.value - 1) <= scale * v.bound
