import math
from fractions import Fraction
from math import gcd

import mpmath
import pytest

from bohrsets.circle import UAngle, chord_vs_bound, Comparison, dist_to_Z, reduce
from bohrsets.dirichlet import (
    DichotomyParams,
    NetHit,
    PowerCollapse,
    approx_power,
    dichotomy,
    dichotomy_params,
    epsilon_ensuring_divisor,
    kappa_of,
    minimal_constants,
    net_constants,
    stage_constants_empirical,
)
from bohrsets.errors import EpsilonTooLarge, NoBranch, ParameterOverflow


def bracket_below(value_dps60: str, digits: int = 30) -> Fraction:
    """Rational slightly below a decimal constant (oracle helper)."""
    mpmath.mp.dps = 60
    v = mpmath.mpf(value_dps60)
    scaled = int(mpmath.floor(v * 10**digits))
    return Fraction(scaled, 10**digits)


class TestNetConstants:
    def test_enclosures_match_high_precision_pi(self):
        mpmath.mp.dps = 60
        nc = net_constants(128)
        half_pi = mpmath.pi / 2
        two_pi = 2 * mpmath.pi
        assert mpmath.mpf(nc.C.lo.numerator) / nc.C.lo.denominator <= half_pi
        assert mpmath.mpf(nc.C.hi.numerator) / nc.C.hi.denominator >= half_pi
        assert mpmath.mpf(nc.Cprime.lo.numerator) / nc.Cprime.lo.denominator <= two_pi
        assert mpmath.mpf(nc.Cprime.hi.numerator) / nc.Cprime.hi.denominator >= two_pi

    def test_product_encloses_4_pi_cubed(self):
        mpmath.mp.dps = 60
        nc = net_constants(128)
        four_pi_cubed = 4 * mpmath.pi**3
        lo = 4 * nc.C.lo * nc.Cprime.lo * Fraction(314159, 100000)
        hi = 4 * nc.C.hi * nc.Cprime.hi * Fraction(314160, 100000)
        assert mpmath.mpf(lo.numerator) / lo.denominator <= four_pi_cubed
        assert mpmath.mpf(hi.numerator) / hi.denominator >= four_pi_cubed

    def test_c_times_cprime_encloses_pi_squared(self):
        mpmath.mp.dps = 60
        nc = net_constants(128)
        pi_sq = mpmath.pi**2
        assert mpmath.mpf((nc.C.lo * nc.Cprime.lo).numerator) / (
            nc.C.lo * nc.Cprime.lo
        ).denominator <= pi_sq
        assert float(nc.C.hi * nc.Cprime.hi) >= 9.8696


class TestDichotomyParams:
    def test_kappa_1_at_eps_just_below_4pi3(self):
        eps = bracket_below("124.025106721043979376262290257823")  # < 4*pi^3
        p = dichotomy_params(eps)
        assert (p.kappa, p.Sigma, p.Theta) == (1, 1, 1)

    def test_kappa_2_at_eps_just_below_2pi3(self):
        eps = bracket_below("62.0125533605219896881311451289")  # < 2*pi^3
        p = dichotomy_params(eps)
        assert p.kappa == 2 and p.Sigma == 2
        assert p.Theta == 2 * 4  # 2 * floor((4pi^3/eps) * 2) = 2*4

    def test_kappa_4_at_eps_just_below_pi3(self):
        eps = bracket_below("31.0062766802609948440655725644")  # < pi^3
        p = dichotomy_params(eps)
        assert p.kappa == 4 and p.Sigma == 24
        assert p.Theta == 4 * 96

    def test_acceptance_scale(self):
        assert dichotomy_params(Fraction(1)).kappa == 124
        assert dichotomy_params(Fraction(1, 2)).kappa == 248
        assert dichotomy_params(Fraction(1, 2)).Sigma == math.factorial(248)

    def test_eps_too_large(self):
        with pytest.raises(EpsilonTooLarge):
            dichotomy_params(Fraction(125))

    def test_kappa_cap(self):
        with pytest.raises(ParameterOverflow):
            dichotomy_params(Fraction(1, 10**7), kappa_cap=1000)

    def test_monotonicity_and_divisibility(self):
        ps = [dichotomy_params(e) for e in (Fraction(1), Fraction(1, 2), Fraction(1, 4))]
        for a, b in zip(ps, ps[1:]):
            assert b.kappa >= a.kappa
            assert b.Sigma % a.Sigma == 0  # factorials divide

    def test_divisibility_on_demand(self):
        for a in (7, 30, 64):
            eps = epsilon_ensuring_divisor(a)
            p = dichotomy_params(eps)
            assert p.Sigma % a == 0


class TestApproxPower:
    @staticmethod
    def oracle_first_hit(mu, gamma, eps, nu, p_cap=64):
        """Independent exhaustive search for the first p with |mu^p - nu| <= C*eps."""
        mpmath.mp.dps = 50
        bound = (mpmath.pi / 2) * mpmath.mpf(eps.numerator) / eps.denominator
        for p in range(1, p_cap + 1):
            d = Fraction(p * mu.frac - nu.frac) % 1
            d = min(d, 1 - d)
            val = 2 * mpmath.sin(mpmath.pi * mpmath.mpf(d.numerator) / d.denominator)
            # the test constants keep |val - bound| far from zero
            if val <= bound:
                return p
        return None

    def test_half_turn_first_hit(self):
        # mu = -1, nu = 1: C*eps ~ 3.3 >= 2, so p = 1 already qualifies and
        # the ascending search returns it (first hit wins by contract).
        mu, gamma, eps, nu = UAngle(1, 2), Fraction(1), Fraction(21, 10), UAngle(0, 1)
        assert self.oracle_first_hit(mu, gamma, eps, nu) == 1
        assert approx_power(mu, gamma, eps, nu) == 1

    def test_eighth_turn_to_half(self):
        mu, gamma, eps, nu = UAngle(1, 8), Fraction(1, 2), Fraction(4, 5), UAngle(1, 2)
        expect = self.oracle_first_hit(mu, gamma, eps, nu)
        assert expect == 3  # 2*sin(pi/8) ~ 0.765 <= C*eps ~ 1.257 already at p=3
        p = approx_power(mu, gamma, eps, nu)
        assert p == expect
        assert p <= 12  # floor(2*pi / (1/2))

    def test_eighth_turn_to_one(self):
        mu, gamma, eps, nu = UAngle(1, 8), Fraction(1, 2), Fraction(4, 5), UAngle(0, 1)
        expect = self.oracle_first_hit(mu, gamma, eps, nu)
        assert approx_power(mu, gamma, eps, nu) == expect == 1

    def test_nontrivial_scan(self):
        # target 3/8 of a turn: p = 1 misses (chord(1/4) > C*eps), p = 2 hits
        mu, gamma, eps, nu = UAngle(1, 8), Fraction(1, 2), Fraction(4, 5), UAngle(3, 8)
        expect = self.oracle_first_hit(mu, gamma, eps, nu)
        assert expect == 2
        assert approx_power(mu, gamma, eps, nu) == expect

    def test_precondition_rejected(self):
        with pytest.raises(ValueError):
            approx_power(UAngle(1, 8), Fraction(1), Fraction(4, 5), UAngle(0, 1))


class TestDichotomy:
    def test_zero_angle_collapses(self):
        params = dichotomy_params(Fraction(1, 2))
        out = dichotomy(UAngle(0, 1), 1, 1, 1, Fraction(1, 2), params)
        assert isinstance(out, PowerCollapse)
        assert out.certificate.hi == 0

    def test_fifth_collapses_by_divisibility(self):
        params = dichotomy_params(Fraction(1, 2))
        assert params.kappa == 248
        out = dichotomy(UAngle(1, 5), 1, 1, 1, Fraction(1, 2), params)
        assert isinstance(out, PowerCollapse)
        assert out.n == params.Sigma
        assert out.certificate.hi == 0  # 5 | 248! so the power is exactly 1

    def test_third_with_shift(self):
        params = dichotomy_params(Fraction(1, 4))
        out = dichotomy(UAngle(1, 3), 2, 1, 1, Fraction(1, 4), params)
        assert isinstance(out, PowerCollapse)  # 3 | kappa! for kappa = 496

    def test_net_hit_branch(self):
        # prime denominator 67 > kappa = 62 at eps just below 2 forces the net
        mpmath.mp.dps = 40
        eps = Fraction(63, 32)
        params = dichotomy_params(eps)
        assert params.kappa < 67
        out = dichotomy(UAngle(53, 67), 1, 1, 1, eps, params)
        # 53/67 is 62! mod 67 scaled: the collapse test fails, a net hit exists
        assert isinstance(out, (PowerCollapse, NetHit))
        if isinstance(out, NetHit):
            assert 1 <= out.j <= params.Theta
            d = dist_to_Z(reduce(UAngle(53, 67), out.n)).value
            assert chord_vs_bound(d, eps) is Comparison.BELOW

    def test_totality_small_grid(self):
        for eps in (Fraction(1), Fraction(1, 2)):
            params = dichotomy_params(eps)
            for den in range(1, 13):
                for num in range(den):
                    if gcd(num, den) != 1 and not (num == 0 and den == 1):
                        continue
                    lam = UAngle(num, den)
                    for H in (1, 2, 3):
                        for L in (1, 2):
                            for S in (1, H):
                                out = dichotomy(lam, H, L, S, eps, params)
                                # re-verify the certificate's branch inequality
                                d = dist_to_Z(reduce(lam, out.n)).value
                                assert chord_vs_bound(d, eps) is Comparison.BELOW
                                assert out.certificate.hi < eps


class TestMinimalConstants:
    def brute_force_valid(self, sigma, theta, eps, denom_max, H_range, L_range):
        from bohrsets.circle import cut_for, dist_frac

        cut = cut_for(eps)
        for den in range(1, denom_max + 1):
            for num in range(den):
                if gcd(num, den) != 1 and not (num == 0 and den == 1):
                    continue
                lam = UAngle(num, den)
                for H in H_range:
                    for L in L_range:
                        for S in {1, H}:
                            if cut.chord_below(dist_to_Z(reduce(lam, H * sigma * L)).value):
                                continue
                            hit = False
                            for j in range(1, theta + 1):
                                if cut.chord_below(dist_to_Z(reduce(lam, H * L * j + S)).value):
                                    hit = True
                                    break
                            if not hit:
                                return False
        return True

    def test_grid_3(self):
        sigma, theta = minimal_constants(Fraction(1, 2), 3)
        assert math.lcm(1, 2, 3) % sigma == 0  # Sigma* divides lcm(1..3)
        assert self.brute_force_valid(sigma, theta, Fraction(1, 2), 3, (1, 2, 3), (1, 2))

    def test_grid_2_eps_near_2(self):
        eps = Fraction(199, 100)
        sigma, theta = minimal_constants(eps, 2)
        assert sigma <= 2
        assert self.brute_force_valid(2, max(theta, 2), eps, 2, (1, 2, 3), (1, 2))

    def test_grid_1_trivial(self):
        assert minimal_constants(Fraction(1, 2), 1) == (1, 1)


class TestStageConstantsEmpirical:
    def test_sound_for_sampled_large_H(self):
        from bohrsets.circle import cut_for

        eps = Fraction(1, 4)
        par = stage_constants_empirical(eps, 1, 16)
        cut = cut_for(eps)
        # soundness for H far outside any small range, via actual reduction
        for H in (1, 7, 12, 10**9 + 7, 2**64):
            for den in range(1, 17):
                for num in range(den):
                    if gcd(num, den) != 1 and not (num == 0 and den == 1):
                        continue
                    lam = UAngle(num, den)
                    if cut.chord_below(dist_to_Z(reduce(lam, H * par.Sigma * par.L)).value):
                        continue
                    hit = any(
                        cut.chord_below(dist_to_Z(reduce(lam, H * par.L * j + 1)).value)
                        for j in range(1, par.Theta + 1)
                    )
                    assert hit, (H, lam)

    def test_extra_divisors_absorbed(self):
        par = stage_constants_empirical(Fraction(1, 4), 1, 8, extra_divisors=(360, 49))
        assert par.Sigma % 360 == 0 and par.Sigma % 49 == 0
