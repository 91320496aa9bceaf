import itertools
from fractions import Fraction

import pytest

from bohrsets.circle import UAngle
from bohrsets.errors import SizeLimit
from bohrsets.klapprox import (
    IntVec,
    calibrate_c,
    check_condition,
    e_set,
    l1_ball_count,
    simultaneous_hit,
)


def brute_ball(r, k):
    out = []
    for v in itertools.product(range(-k, k + 1), repeat=r):
        if any(v) and sum(abs(a) for a in v) <= k:
            out.append(v)
    return sorted(out)


class TestESet:
    def test_count_r2(self):
        vecs = e_set(Fraction(1), 2, Fraction(5, 2))  # radius 5/2 -> l1 <= 2
        assert len(vecs) == 12

    def test_empty_when_radius_at_most_1(self):
        assert e_set(Fraction(1), 3, Fraction(1)) == []
        assert e_set(Fraction(2), 2, Fraction(2)) == []

    def test_r1(self):
        vecs = e_set(Fraction(1), 1, Fraction(7, 2))
        assert [v.coords for v in vecs] == [(-3,), (-2,), (-1,), (1,), (2,), (3,)]

    def test_lexicographic_and_matches_brute_force(self):
        for r in (1, 2, 3):
            for k in (1, 2, 4):
                vecs = e_set(Fraction(1), r, Fraction(k) + Fraction(1, 2))
                assert [v.coords for v in vecs] == brute_ball(r, k)

    def test_count_formula_matches_enumeration(self):
        for r in (1, 2, 3):
            for k in range(1, 11):
                assert l1_ball_count(r, k) == len(brute_ball(r, k))

    def test_integer_radius_is_strict(self):
        vecs = e_set(Fraction(1), 1, Fraction(3))  # l1 < 3
        assert [v.coords for v in vecs] == [(-2,), (-1,), (1,), (2,)]

    def test_homogeneity(self):
        a = e_set(Fraction(1, 3), 2, Fraction(5, 6))
        b = e_set(Fraction(2, 3), 2, Fraction(5, 3))
        assert a == b

    def test_size_limit(self):
        with pytest.raises(SizeLimit):
            e_set(Fraction(1, 1000), 3, Fraction(1000), cap=100)


class TestCheckCondition:
    def test_zero_angles_fail_when_c_exceeds_eps(self):
        rep = check_condition([UAngle(0, 1)], Fraction(1, 2), 4, Fraction(1))
        assert not rep.passed
        assert rep.worst_vec.coords in ((-1,), (1,))
        assert rep.worst_margin == Fraction(1, 2) - 1

    def test_half_turn_passes(self):
        rep = check_condition([UAngle(1, 2)], Fraction(1, 2), 1, Fraction(1))
        assert rep.passed  # Q*2 + eps >= 1 via the exact chord 2

    def test_vacuous_when_e_set_empty(self):
        rep = check_condition([UAngle(1, 7), UAngle(1, 5)], Fraction(2), 1, Fraction(2))
        assert rep.passed and rep.checked == 0


class TestSimultaneousHit:
    def test_crt_example(self):
        lams = [UAngle(1, 4), UAngle(1, 3)]
        mus = [l.conj() for l in lams]
        q = simultaneous_hit(lams, mus, Fraction(1, 10), 12)
        assert q == 11  # q = 3 mod 4 and 2 mod 3: CRT gives 11

    def test_zero_tuple(self):
        assert simultaneous_hit([UAngle(0, 1)], [UAngle(0, 1)], Fraction(1, 2), 5) == 1

    def test_not_found_for_constant_one(self):
        assert simultaneous_hit([UAngle(0, 1)], [UAngle(1, 2)], Fraction(1, 2), 10**6) is None

    def test_minimality_by_rescan(self):
        lams = [UAngle(2, 7), UAngle(1, 5)]
        mus = [UAngle(3, 7), UAngle(2, 5)]
        q = simultaneous_hit(lams, mus, Fraction(1, 3), 60)
        if q is not None:
            from bohrsets.circle import cut_for, dist_frac

            cut = cut_for(Fraction(1, 3))
            for q2 in range(1, q):
                ok = all(
                    cut.chord_below(dist_frac(q2 * l.frac - m.frac))
                    for l, m in zip(lams, mus)
                )
                assert not ok


class TestCalibrate:
    def test_deterministic_and_positive(self):
        c1 = calibrate_c(1, trials=8, denom_max=12, seed=3)
        c2 = calibrate_c(1, trials=8, denom_max=12, seed=3)
        assert c1 == c2 > 0

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            calibrate_c(1, trials=0, denom_max=5)

    def test_r2_small(self):
        c = calibrate_c(2, trials=6, denom_max=10, seed=1)
        assert c > 0
