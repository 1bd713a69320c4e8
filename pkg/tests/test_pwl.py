import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwlsched.oracle import random_pwl
from pwlsched.pwl import (
    INF,
    DeviationCost,
    PwlFunction,
    add_constant,
    as_rational,
    fmt_rational,
    lower_envelope,
    min_of,
    parse_extended,
    pwl_sum,
    ramp,
    shift,
)

from _support import EPS, pwl_closure_campaign, sample_points, segment_walk

F = Fraction

small = st.fractions(min_value=-20, max_value=40, max_denominator=8)
slope = st.fractions(min_value=0, max_value=5, max_denominator=4)


@st.composite
def pwl(draw, max_bp=6):
    n = draw(st.integers(0, max_bp))
    bps = sorted(set(draw(st.lists(small, min_size=n, max_size=n))))
    mus = draw(st.lists(slope, min_size=len(bps), max_size=len(bps)))
    return PwlFunction.from_pieces(draw(small), bps, mus)


class TestRationals:
    def test_as_rational_forms(self):
        assert as_rational("40/3") == F(40, 3)
        assert as_rational("2.75") == F(11, 4)
        assert as_rational(0.1) == F(1, 10)
        assert as_rational(7) == F(7)

    def test_as_rational_rejects(self):
        with pytest.raises(ValueError):
            as_rational("abc")
        with pytest.raises(ValueError):
            as_rational(math.inf)
        with pytest.raises(TypeError):
            as_rational(True)

    def test_format_and_extended(self):
        assert fmt_rational(F(40, 3)) == "40/3"
        assert fmt_rational(F(-6)) == "-6"
        assert fmt_rational(INF) == "inf" and fmt_rational(-INF) == "-inf"
        assert parse_extended("inf") == INF and parse_extended("-inf") == -INF
        assert parse_extended("77/3") == F(77, 3)


class TestConstruction:
    def test_canonical_validation(self):
        with pytest.raises(ValueError):
            PwlFunction(0, (2, 1), (1, 2))
        with pytest.raises(ValueError):
            PwlFunction(0, (1, 2), (1, 1))
        with pytest.raises(ValueError):
            PwlFunction(0, (1,), (0,))
        with pytest.raises(ValueError):
            PwlFunction(0, (1,), (-1,))

    def test_from_pieces_merges(self):
        f = PwlFunction.from_pieces(1, [0, 2, 2, 5, 7], [0, 1, 2, 2, 3])
        assert f == PwlFunction(1, (2, 7), (2, 3))

    def test_from_knots_interpolates(self):
        f = PwlFunction.from_knots([(0, 1), (2, 3), (4, 3)], 1)
        assert f == PwlFunction(1, (0, 2, 4), (1, 0, 1))

    def test_segments_cover_line(self):
        f = PwlFunction(2, (1, 3), (1, 2))
        segs = f.segments()
        assert segs[0][:2] == (-INF, 1) and segs[-1][:2] == (3, INF)
        assert segs[-1][3] == 4


class TestEval:
    def test_cost_to_go_example(self):
        f = PwlFunction(0, (18,), (F(3, 4),))
        assert f(20) == F(3, 2)

    def test_initial_segment(self):
        f = PwlFunction(F(5, 2), (3, 4), (1, 2))
        assert f(-100) == F(5, 2) and f(3) == F(5, 2)

    def test_infinite_arguments(self):
        f = PwlFunction(1, (0,), (2,))
        assert f(-INF) == 1 and f(INF) == INF
        assert PwlFunction.constant(3)(INF) == 3

    def test_random_against_segment_walk(self):
        rng = random.Random(0)
        for _ in range(20):
            f = random_pwl(rng)
            for x in sample_points(rng, (f,), 100):
                assert f(x) == segment_walk(f, x)


class TestShiftAndConstant:
    def test_shift_zero_identity(self):
        f = PwlFunction(1, (16, 18), (1, 2))
        assert shift(f, 0) == f

    def test_shift_breakpoints(self):
        f = PwlFunction(1, (16, 18), (1, 2))
        assert shift(f, 10).breakpoints == (6, 8)

    def test_shift_eval(self):
        rng = random.Random(1)
        for _ in range(50):
            f = random_pwl(rng)
            t = F(rng.randint(-40, 40), 3)
            for x in sample_points(rng, (f,), 10):
                assert shift(f, t)(x) == f(x + t)

    def test_add_constant(self):
        f = PwlFunction(1, (2,), (1,))
        assert add_constant(f, 0) == f
        rng = random.Random(2)
        for x in sample_points(rng, (f,), 20):
            assert add_constant(f, F(7, 3))(x) == f(x) + F(7, 3)

    def test_ramp_plus_constant(self):
        assert add_constant(ramp(F(81, 2), F(1, 2)), 1) == PwlFunction.parse("init 1; bp 81/2 1/2")


class TestRamp:
    def test_values(self):
        assert ramp(20, F(3, 4))(24) == 3
        assert ramp(7, 2)(7) == 0
        assert ramp(41, F(1, 2))(33) == 0

    def test_rejects_nonpositive_slope(self):
        with pytest.raises(ValueError):
            ramp(1, 0)


class TestSum:
    def test_two_ramps(self):
        s = pwl_sum(ramp(12, F(1, 4)), ramp(18, F(3, 4)))
        assert s == PwlFunction(0, (12, 18), (F(1, 4), 1))

    def test_identity(self):
        f = PwlFunction(1, (2, 5), (1, 3))
        assert f + PwlFunction.constant(0) == f

    def test_pointwise(self):
        rng = random.Random(3)
        f1, f2 = random_pwl(rng), random_pwl(rng)
        for x in sample_points(rng, (f1, f2), 1000):
            assert pwl_sum(f1, f2)(x) == f1(x) + f2(x)

    @settings(max_examples=200, deadline=None)
    @given(pwl(), pwl(), pwl())
    def test_commutative_associative(self, a, b, c):
        assert pwl_sum(a, b) == pwl_sum(b, a)
        assert pwl_sum(pwl_sum(a, b), c) == pwl_sum(a, pwl_sum(b, c))


class TestMin:
    def test_crossover(self):
        # a: 0 then slope 1 from 10; b: 2 then slope 1/2 from 16 -> crossing at 12
        a = PwlFunction(0, (10,), (1,))
        b = PwlFunction(2, (16,), (F(1, 2),))
        m, ivs = min_of(a, b)
        assert [(iv.lo, iv.hi, iv.winners) for iv in ivs] == [(-INF, 12, (0,)), (12, INF, (1,))]
        assert m == PwlFunction(0, (10, 12, 16), (1, 0, F(1, 2)))

    def test_idempotent_single_tie(self):
        f = PwlFunction(1, (2, 5), (1, 3))
        m, ivs = min_of(f, f)
        assert m == f
        assert len(ivs) == 1 and ivs[0].winners == (0, 1) and ivs[0].is_tie

    def test_pointwise(self):
        rng = random.Random(4)
        f1, f2 = random_pwl(rng), random_pwl(rng)
        m, _ = min_of(f1, f2)
        for x in sample_points(rng, (f1, f2), 1000):
            assert m(x) == min(f1(x), f2(x))

    def test_envelope_of_three(self):
        fs = [PwlFunction(0, (0,), (1,)), PwlFunction(1, (4,), (F(1, 2),)), PwlFunction(3)]
        m, ivs = lower_envelope(fs)
        assert [iv.winners for iv in ivs] == [(0,), (1,), (2,)]
        assert [iv.lo for iv in ivs] == [-INF, 1, 8]

    def test_crossing_point_belongs_right(self):
        a = PwlFunction(0, (0,), (2,))
        b = PwlFunction(2)
        _, ivs = min_of(a, b)
        assert ivs[1].contains(1) and not ivs[0].contains(1)

    @settings(max_examples=200, deadline=None)
    @given(pwl(), pwl(), pwl())
    def test_commutative_associative(self, a, b, c):
        assert min_of(a, b)[0] == min_of(b, a)[0]
        assert min_of(min_of(a, b)[0], c)[0] == min_of(a, min_of(b, c)[0])[0]
        assert min_of(a, a)[0] == a


class TestSerialization:
    def test_format(self):
        assert PwlFunction(F(1, 2), (-21, F(-41, 2)), (1, 0.5)).serialize() == "init 1/2; bp -21 1; bp -41/2 1/2"

    @settings(max_examples=300, deadline=None)
    @given(pwl())
    def test_round_trip(self, f):
        assert PwlFunction.parse(f.serialize()) == f

    def test_parse_errors(self):
        with pytest.raises(ValueError):
            PwlFunction.parse("bp 1 2")
        with pytest.raises(ValueError):
            PwlFunction.parse("init 0; bp 1")


class TestDeviationCost:
    def test_values(self):
        g = DeviationCost(4, 8, 1)
        assert g(4) == 4 and g(6) == 2 and g(8) == 0 and g(3) == 0

    def test_validation(self):
        with pytest.raises(ValueError):
            DeviationCost(8, 4, 1)
        with pytest.raises(ValueError):
            DeviationCost(4, 8, 0)


class TestClosureProperties:
    def test_campaign(self):
        tally = pwl_closure_campaign()
        assert tally.checks >= 1000
        assert tally.ok, tally.failures

    def test_continuity_eps(self):
        rng = random.Random(5)
        for _ in range(100):
            f = random_pwl(rng)
            for b in f.breakpoints:
                assert abs(f(b) - f(b - EPS)) <= EPS * max(f.slopes)
