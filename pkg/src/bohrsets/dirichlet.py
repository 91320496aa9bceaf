"""One-dimensional engine: the power net and the collapse-or-hit dichotomy.

For every eps > 0 there are integers Sigma = kappa! and
Theta = kappa * floor((4*pi^3/eps) * kappa!), kappa = floor(4*pi^3/eps), such
that every unimodular lambda either satisfies |lambda^(H*Sigma*L) - 1| < eps
(the power collapses) or hits the eps-target along the progression
{H*L*j + S : 1 <= j <= Theta}.  Those are the "paper track" constants; they
are astronomically large but exact Python integers.

The "empirical track" replaces them by the smallest constants that survive a
brute-force sweep over a rational grid, which keeps every block of the final
set families enumerable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence, Union

from . import circle
from .circle import (
    ChordEnclosure,
    Comparison,
    DistZ,
    RatInterval,
    UAngle,
    chord,
    chord_vs_bound,
    cut_for,
    dist_frac,
    dist_to_Z,
    floor_times_pi_power,
    pi_interval,
    reduce,
)
from .errors import EpsilonTooLarge, InconclusiveComparison, NoBranch, NotFound, ParameterOverflow

DEFAULT_KAPPA_CAP = 200_000


@dataclass(frozen=True)
class NetConstants:
    """Enclosures of the net constants C = pi/2 and C' = 2*pi."""

    C: RatInterval
    Cprime: RatInterval
    precision_bits: int


def net_constants(precision_bits: int = 128) -> NetConstants:
    piv = pi_interval(precision_bits)
    return NetConstants(
        C=RatInterval(piv.lo / 2, piv.hi / 2),
        Cprime=RatInterval(2 * piv.lo, 2 * piv.hi),
        precision_bits=precision_bits,
    )


@dataclass(frozen=True)
class DichotomyParams:
    """Paper-track constants for one epsilon: kappa, Sigma = kappa!, Theta."""

    epsilon: Fraction
    kappa: int
    Sigma: int
    Theta: int


@dataclass(frozen=True)
class EmpiricalParams:
    """Grid-verified stand-ins for (Sigma, Theta), valid on the recorded grid."""

    epsilon: Fraction
    Sigma: int
    Theta: int
    grid_denom_max: int
    L: int
    all_H: bool


ParamsLike = Union[DichotomyParams, EmpiricalParams]


def kappa_of(epsilon: Fraction) -> int:
    """kappa = floor(4*pi^3 / eps), certified."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return floor_times_pi_power(Fraction(4) / epsilon, 3)


def dichotomy_params(epsilon: Fraction, kappa_cap: Optional[int] = DEFAULT_KAPPA_CAP) -> DichotomyParams:
    """Paper-track (kappa, Sigma, Theta) for eps; exact unbounded integers.

    Raises EpsilonTooLarge when kappa would be 0 (eps > 4*pi^3) and
    ParameterOverflow when kappa exceeds the desk-scale cap.
    """
    epsilon = Fraction(epsilon)
    kappa = kappa_of(epsilon)
    if kappa == 0:
        raise EpsilonTooLarge(f"epsilon={epsilon} exceeds 4*pi^3")
    if kappa_cap is not None and kappa > kappa_cap:
        raise ParameterOverflow(
            f"kappa={kappa} exceeds cap {kappa_cap}; Sigma = kappa! is not desk-representable"
        )
    sigma = math.factorial(kappa)
    theta = kappa * floor_times_pi_power(Fraction(4) * sigma / epsilon, 3, start_bits=256)
    return DichotomyParams(epsilon=epsilon, kappa=kappa, Sigma=sigma, Theta=theta)


def epsilon_ensuring_divisor(a: int) -> Fraction:
    """A rational eps with a | Sigma(eps): any eps with kappa(eps) >= a works."""
    if a < 1:
        raise ValueError("divisor must be >= 1")
    piv = circle.pi_power_interval(3, 64)
    eps = 4 * piv.lo / a  # eps <= 4*pi^3/a, so kappa >= a
    assert kappa_of(eps) >= a
    return eps


# ---------------------------------------------------------------------------
# the power eps-net (Lemma-style approximation by powers)


def _cert_enclosure_below(d: Fraction, bound: Fraction) -> ChordEnclosure:
    """Enclosure of the chord at distance d with hi < bound (bound exceeds the chord)."""
    bits = circle.DEFAULT_PRECISION
    while True:
        e = chord(DistZ(d), bits)
        if e.hi < bound:
            return e
        if bits > circle.PRECISION_CAP:
            raise InconclusiveComparison(f"cannot certify chord({d}) < {bound}")
        bits *= 2


def _chord_le_interval(d: Fraction, bound: RatInterval, tighten) -> bool:
    """Certified chord(d) <= bound for an interval-valued bound, strict-free.

    tighten() must shrink `bound` and return the new interval; used for the
    irrational bound C*eps.  Equality of the chord with the bound value is
    impossible here (chord algebraic vs pi-multiple transcendental), so the
    loop terminates.
    """
    bits = circle.DEFAULT_PRECISION
    while True:
        e = chord(DistZ(d), bits)
        if e.hi <= bound.lo:
            return True
        if e.lo > bound.hi:
            return False
        bits *= 2
        bound = tighten(bits)


def approx_power(mu: UAngle, gamma: Fraction, epsilon: Fraction, nu: UAngle) -> int:
    """Smallest p in [1, floor(C'/gamma)] with certified |mu^p - nu| <= C*eps.

    Preconditions gamma < |mu - 1| < eps are checked with certified strict
    comparisons.  Raises NotFound if no p in range qualifies.
    """
    gamma = Fraction(gamma)
    epsilon = Fraction(epsilon)
    d_mu = dist_to_Z(mu).value
    if chord_vs_bound(d_mu, gamma) is not Comparison.ABOVE:
        raise ValueError("precondition gamma < |mu - 1| not certified")
    if chord_vs_bound(d_mu, epsilon) is not Comparison.BELOW:
        raise ValueError("precondition |mu - 1| < eps not certified")
    p_max = floor_times_pi_power(Fraction(2) / gamma, 1)  # floor(C'/gamma), C' = 2*pi

    def bound_at(bits: int) -> RatInterval:
        piv = pi_interval(bits)
        return RatInterval(piv.lo * epsilon / 2, piv.hi * epsilon / 2)  # C*eps, C = pi/2

    bound = bound_at(128)
    for p in range(1, p_max + 1):
        d = dist_frac(p * mu.frac - nu.frac)
        if _chord_le_interval(d, bound, bound_at):
            return p
    raise NotFound(f"no power p <= {p_max} approximates nu within C*eps")


# ---------------------------------------------------------------------------
# the dichotomy


@dataclass(frozen=True)
class PowerCollapse:
    n: int
    certificate: ChordEnclosure


@dataclass(frozen=True)
class NetHit:
    j: int
    n: int
    certificate: ChordEnclosure


DichotomyOutcome = Union[PowerCollapse, NetHit]


def dichotomy(
    lam: UAngle,
    H: int,
    L: int,
    S: int,
    epsilon: Fraction,
    params: ParamsLike,
) -> DichotomyOutcome:
    """Certified branch of the dichotomy for a rational angle.

    Tests the power collapse first, then scans j ascending through the net
    progression.  Only j mod (denom/gcd(H*L, denom)) matters for a rational
    angle, so the scan is cut off at that period; this is exact, not a
    heuristic.  NoBranch signals an internal inconsistency.
    """
    epsilon = Fraction(epsilon)
    cut = cut_for(epsilon)
    n0 = H * params.Sigma * L
    d0 = dist_to_Z(reduce(lam, n0)).value
    if cut.chord_below(d0):
        return PowerCollapse(n=n0, certificate=_cert_enclosure_below(d0, epsilon))
    den = lam.denom
    period = den // gcd(H * L, den)
    j_max = min(params.Theta, period)
    step = ((H * L) % den) * lam.numer % den
    res = (S % den) * lam.numer % den
    for j in range(1, j_max + 1):
        res = (res + step) % den
        d = dist_frac(Fraction(res, den))
        if cut.chord_below(d):
            return NetHit(j=j, n=H * L * j + S, certificate=_cert_enclosure_below(d, epsilon))
    raise NoBranch(
        f"no branch for lambda={lam}, H={H}, L={L}, S={S}, eps={epsilon}"
    )


# ---------------------------------------------------------------------------
# empirical track


def _reduced_angles(denom_max: int) -> list[UAngle]:
    out = [UAngle(0, 1)]
    for den in range(2, denom_max + 1):
        for num in range(1, den):
            if gcd(num, den) == 1:
                out.append(UAngle(num, den))
    return out


def _minimal_net_hit(d: int, h: int, L: int, p: int, good: Sequence[int]) -> Optional[int]:
    """Minimal j >= 1 with (h*L*j + 1)*p mod d in good, or None.

    Solves h*L*j = m*p^{-1} - 1 (mod d) for each good residue m; j is
    periodic mod d/gcd(h*L, d).
    """
    if d == 1:
        return 1
    g = gcd(h * L, d)
    dg = d // g
    pinv = pow(p, -1, d)
    step = (h * L // g) % dg
    best: Optional[int] = None
    for m in good:
        c = (m * pinv - 1) % d
        if c % g:
            continue
        if dg == 1:
            j = 1
        else:
            j = (c // g) * pow(step, -1, dg) % dg
            if j == 0:
                j = dg
        if best is None or j < best:
            best = j
    return best


def _instance_ok(lam: UAngle, H: int, L: int, S: int, sigma: int, theta: int, cut) -> Optional[int]:
    """None if the instance collapses, the minimal hit j if it net-hits, -1 if neither."""
    d0 = dist_to_Z(reduce(lam, H * sigma * L)).value
    if cut.chord_below(d0):
        return None
    den = lam.denom
    period = den // gcd(H * L, den)
    step = ((H * L) % den) * lam.numer % den
    res = (S % den) * lam.numer % den
    for j in range(1, min(theta, period) + 1):
        res = (res + step) % den
        if cut.chord_below(dist_frac(Fraction(res, den))):
            return j
    return -1


def _expand_s_range(s_range, H: int) -> list[int]:
    if s_range == "1,H":
        return [1] if H == 1 else [1, H]
    return list(s_range)


def minimal_constants(
    epsilon: Fraction,
    grid_denom_max: int,
    H_range: Iterable[int] = (1, 2, 3),
    L_range: Iterable[int] = (1, 2),
    S_range="1,H",
) -> tuple[int, int]:
    """Smallest (Sigma*, Theta*) valid on the whole grid, by ascending search.

    Sigma* is minimized first, then Theta* is the largest minimal hit index
    over the non-collapsing instances.  Sigma* = lcm(1..grid_denom_max)
    always terminates the search (every angle then collapses exactly).
    """
    if grid_denom_max < 1:
        raise ValueError("grid_denom_max must be >= 1")
    epsilon = Fraction(epsilon)
    cut = cut_for(epsilon)
    angles = _reduced_angles(grid_denom_max)
    H_range = list(H_range)
    L_range = list(L_range)
    sigma_limit = math.lcm(*range(1, grid_denom_max + 1))
    sigma = 1
    while True:
        theta_needed = 1
        ok = True
        for lam in angles:
            for H in H_range:
                for L in L_range:
                    for S in _expand_s_range(S_range, H):
                        j = _instance_ok(lam, H, L, S, sigma, 10**9, cut)
                        if j == -1:
                            ok = False
                            break
                        if j is not None:
                            theta_needed = max(theta_needed, j)
                    if not ok:
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            return sigma, theta_needed
        sigma += 1
        if sigma > sigma_limit:
            raise AssertionError("ascending search passed the lcm bound")  # unreachable


def stage_constants_empirical(
    epsilon: Fraction,
    L: int,
    grid_denom_max: int,
    extra_divisors: Iterable[int] = (),
) -> EmpiricalParams:
    """(Sigma*, Theta*) sound for every H >= 1 and every angle on the grid, S = 1.

    Quantifying over all H is exact: for denominator d only H mod d matters.
    Sigma* is assembled from forced divisors (instances with no net hit must
    collapse exactly), so multiplying it by the requested extra divisors
    preserves soundness; the final sweep re-verifies everything.
    """
    epsilon = Fraction(epsilon)
    cut = cut_for(epsilon)
    forced = 1
    theta = 1
    goods: dict[int, list[int]] = {}
    for d in range(1, grid_denom_max + 1):
        goods[d] = [m for m in range(d) if cut.chord_below(dist_frac(Fraction(m, d)))]
    for d in range(1, grid_denom_max + 1):
        good = goods[d]
        for h in range(d):
            g = gcd(h * L, d) if d > 1 else 1
            for p in range(1, d + 1 if d == 1 else d):
                if d > 1 and gcd(p, d) != 1:
                    continue
                j = _minimal_net_hit(d, h, L, p, good)
                if j is None:
                    forced = math.lcm(forced, d // g)
                else:
                    theta = max(theta, j)
    sigma = math.lcm(forced, *extra_divisors) if extra_divisors else forced
    _verify_stage_constants(epsilon, L, grid_denom_max, sigma, theta, goods)
    return EmpiricalParams(
        epsilon=epsilon, Sigma=sigma, Theta=theta,
        grid_denom_max=grid_denom_max, L=L, all_H=True,
    )


def _verify_stage_constants(epsilon, L, grid_denom_max, sigma, theta, goods) -> None:
    for d in range(1, grid_denom_max + 1):
        good = set(goods[d])
        for h in range(d):
            for p in range(1, d + 1 if d == 1 else d):
                if d > 1 and gcd(p, d) != 1:
                    continue
                if (h * sigma * L * p) % d in good:
                    continue
                j = _minimal_net_hit(d, h, L, p, goods[d])
                if j is None or j > theta:
                    raise AssertionError(
                        f"stage constants unsound at d={d}, h={h}, p={p}"
                    )
