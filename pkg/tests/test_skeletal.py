import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dhtlab.core import FiniteSeq, random_sequence
from dhtlab.operators import H, I, K, apply_at, apply_exact
from dhtlab.skeletal import (
    Bone,
    FrameSet,
    build,
    check_decomposition,
    count_h_applications,
    decomposition_rhs,
    enumerate_skeletons,
    frame_depth,
    frame_size,
    has_bone_at_every_level,
    is_skeleton,
    iter_skeletons,
    parse_frame,
    shape_census,
)

from conftest import finite_seqs

S3_PRINTED = ["{{{1},2},3}", "{{1,{2}},3}", "{{1},2,{3}}", "{1,{2},{3}}"]
S4_PRINTED = [
    "{{{{1},2},3},4}", "{{{1,{2}},3},4}", "{{{1},2,{3}},4}", "{{1,{2},{3}},4}",
    "{{{1},2},3,{4}}", "{{1,{2}},3,{4}}", "{{1},2,{3},{4}}", "{1,{2},{3},{4}}",
]


class TestFrames:
    def test_parse_and_print(self):
        f = parse_frame(" { {1}, 2 ,{3} } ")
        assert str(f) == "{{1},2,{3}}"
        assert parse_frame("7") == Bone(7)

    @pytest.mark.parametrize("bad", ["{1,2", "{}", "{1,,2}", "{a}", "1}"])
    def test_parse_errors(self, bad):
        with pytest.raises(ValueError):
            parse_frame(bad)

    def test_size_and_depth(self):
        assert frame_size(parse_frame("{1,{2},{3}}")) == 3
        f = parse_frame("{{{1},2},3}")
        assert frame_size(f) == 3 and frame_depth(f) == 3
        assert frame_size(Bone(7)) == 1 and frame_depth(Bone(7)) == 0
        assert frame_depth(parse_frame("{1}")) == 1

    def test_equality_ignores_order(self):
        assert parse_frame("{2,{1}}") == parse_frame("{{1},2}")
        assert hash(parse_frame("{2,{1}}")) == hash(parse_frame("{{1},2}"))
        assert parse_frame("{{1},2}") != parse_frame("{1,{2}}")

    def test_shape_erases_labels(self):
        assert parse_frame("{{1},2}").shape == parse_frame("{{2},1}").shape
        assert parse_frame("{{1},2}").shape != parse_frame("{{1,2}}").shape


class TestEnumeration:
    def test_small_listings_match_printed(self):
        assert [str(s) for s in enumerate_skeletons(1)] == ["{1}"]
        assert [str(s) for s in enumerate_skeletons(2)] == ["{{1},2}", "{1,{2}}"]
        assert [str(s) for s in enumerate_skeletons(3)] == S3_PRINTED
        assert [str(s) for s in enumerate_skeletons(4)] == S4_PRINTED

    @pytest.mark.parametrize("k", range(1, 17))
    def test_count(self, k):
        assert len(enumerate_skeletons(k)) == 2 ** (k - 1)

    @pytest.mark.parametrize("k", range(1, 11))
    def test_members_are_distinct_skeletons_of_size_k(self, k):
        skels = enumerate_skeletons(k)
        assert len(set(skels)) == len(skels)
        for s in skels:
            assert frame_size(s) == k
            assert is_skeleton(s)
            assert has_bone_at_every_level(s)
            assert count_h_applications(s) == k - 1

    def test_iterator_agrees(self):
        assert list(iter_skeletons(7)) == enumerate_skeletons(7)

    @pytest.mark.parametrize("k", range(1, 13))
    def test_census_multiplicities_sum(self, k):
        assert sum(n for _, n in shape_census(k)) == 2 ** (k - 1)

    @pytest.mark.parametrize("text", ["{{1},{2}}", "{1,2}", "{{{1}},2}", "{{1},3}", "{1,{2},{3},4}"])
    def test_non_skeletons(self, text):
        assert not is_skeleton(parse_frame(text))

    def test_no_bone_frame_detected(self):
        assert not has_bone_at_every_level(parse_frame("{{1},{2}}"))

    @pytest.mark.parametrize("k", [0, 25])
    def test_range(self, k):
        with pytest.raises(ValueError):
            enumerate_skeletons(k)


def hilbert(a: FiniteSeq, at) -> FiniteSeq:
    return apply_at(H, a, at)


class TestBuild:
    a = FiniteSeq({-1: 2, 0: 1, 3: -3})

    def test_single_bone(self):
        assert build(parse_frame("{1}"), FiniteSeq.delta(0)) == FiniteSeq.delta(0)

    def test_h_times_a(self):
        a = self.a
        assert build(parse_frame("{{1},2}"), a) == hilbert(a, a.support) * a

    def test_a_times_h_squared(self):
        a = self.a
        ha = hilbert(a, a.support)
        assert build(parse_frame("{{1},2,{3}}"), a) == a * ha * ha

    def test_nested(self):
        a = self.a
        inner = a * hilbert(a, a.support)
        assert build(parse_frame("{{{1},2},3}"), a) == hilbert(inner, a.support) * a

    def test_braced_needs_window(self):
        with pytest.raises(ValueError):
            build(parse_frame("{{1},2}"), self.a, braced=True)

    def test_braced_is_h_of_product(self):
        a = self.a
        f = parse_frame("{{1},2}")
        got = build(f, a, (-10, 10), braced=True)
        assert got == apply_at(H, build(f, a), range(-10, 11))

    @pytest.mark.parametrize("k", range(1, 6))
    def test_h_count(self, k):
        for s in enumerate_skeletons(k):
            _, count = build(s, self.a, return_count=True)
            assert count == k - 1

    @given(finite_seqs(max_support=5, reach=6), st.integers(1, 5))
    def test_grade_homogeneous(self, a, k):
        for s in enumerate_skeletons(k)[:4]:
            assert all(v.is_homogeneous(k - 1) for _, v in build(s, a).items())


class TestDecomposition:
    def test_delta_k2(self):
        d0 = FiniteSeq.delta(0)
        assert check_decomposition(d0, 2, (-9, 9)).is_zero()
        rhs = decomposition_rhs(d0, 2, (-9, 9))
        for n in range(-9, 10, 2):
            assert rhs[n] == apply_exact(I, d0, n)

    def test_k1(self):
        a = FiniteSeq({0: 1, 2: -5})
        assert check_decomposition(a, 1, (-20, 20)).is_zero()

    @settings(max_examples=25)
    @given(finite_seqs(max_support=5, reach=6), st.integers(1, 4))
    def test_random(self, a, k):
        assert check_decomposition(a, k, (-20, 20)).is_zero()

    def test_power_oracle(self):
        # lhs recomputed by hand: (Ka)^k pointwise
        a = random_sequence(random.Random(11), max_support=5, reach=6)
        for k in (2, 3, 5):
            rhs = decomposition_rhs(a, k, (-15, 15))
            for n in range(-15, 16):
                assert rhs[n] == apply_exact(K, a, n) ** k

    @pytest.mark.parametrize("k", range(1, 7))
    def test_each_term_has_grade_k(self, k):
        a = random_sequence(random.Random(k), max_support=4, reach=5)
        rhs = decomposition_rhs(a, k, (-12, 12))
        assert all(v.is_homogeneous(k) for _, v in rhs.items())
