"""Exact circle arithmetic.

Angles are exact rationals in turns: the angle t represents the unimodular
number e^{2*i*pi*t}.  Every comparison made here is either an exact rational
comparison or a certified interval comparison: the chord length

    |e^{2*i*pi*x} - 1| = 2*sin(pi*{x})

is only ever evaluated as a two-sided enclosure with dyadic endpoints
(computed with MPFR directed rounding), never as a rounded scalar.  {x}
denotes the distance of x to the nearest integer.

For bulk scans there is a faster, still exact route: 2*sin(pi*d) is strictly
increasing for d in [0, 1/2], so "chord < eps" is equivalent to "d < t" for
the cut t = asin(eps/2)/pi.  A ChordCut computes the cut once as a shrinking
enclosure (exact when eps is 0, 1 or 2) and then answers every query with
rational comparisons.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Optional, Sequence

import gmpy2

from .errors import InconclusiveComparison

DEFAULT_PRECISION = 128
PRECISION_CAP = 4096
_GUARD = 16

#: M_1 = inf of chord/{x}, attained at {x} = 1/2.
M1 = Fraction(4)
#: Rational over-approximations used where exact integer bounds are needed.
TWO_PI_UPPER = Fraction(44, 7)      # > 2*pi = M_2
FOUR_PI_UPPER = Fraction(88, 7)     # > 4*pi = 2*M_2 (the Cantor constant M)
SIX_PI_UPPER = Fraction(132, 7)     # > 6*pi


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class UAngle:
    """Canonical rational angle in turns: numer/denom in [0, 1), gcd = 1."""

    numer: int
    denom: int

    def __post_init__(self):
        if self.denom <= 0:
            raise ValueError("denominator must be positive")
        n = self.numer % self.denom
        g = gcd(n, self.denom)
        object.__setattr__(self, "numer", n // g)
        object.__setattr__(self, "denom", self.denom // g)

    @classmethod
    def from_fraction(cls, f: Fraction | int) -> "UAngle":
        f = Fraction(f)
        return cls(f.numerator, f.denominator)

    @property
    def frac(self) -> Fraction:
        return Fraction(self.numer, self.denom)

    def conj(self) -> "UAngle":
        """Angle of the complex conjugate."""
        return UAngle(self.denom - self.numer, self.denom)

    def is_zero(self) -> bool:
        return self.numer == 0

    def __str__(self) -> str:
        return f"{self.numer}/{self.denom}"


@dataclass(frozen=True)
class DistZ:
    """Exact distance of a real (here: rational) number to the integers."""

    value: Fraction

    def __post_init__(self):
        if not (0 <= self.value <= Fraction(1, 2)):
            raise ValueError("distance to Z must lie in [0, 1/2]")


@dataclass(frozen=True)
class ChordEnclosure:
    """Certified bounds lo <= 2*sin(pi*d) <= hi with dyadic endpoints."""

    lo: Fraction
    hi: Fraction
    precision_bits: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty enclosure")
        if self.lo < 0 or self.hi > 2:
            raise ValueError("chord values lie in [0, 2]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo


@dataclass(frozen=True)
class RatInterval:
    """A rational interval certifying lo <= value <= hi."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty interval")

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi


class Comparison(enum.Enum):
    BELOW = "below"
    ABOVE = "above"
    INCONCLUSIVE = "inconclusive"


# ---------------------------------------------------------------------------
# angle operations


def reduce(theta: UAngle, n: int) -> UAngle:
    """Canonical angle of n*theta mod 1 ((n * numer mod denom) / denom).

    n may be astronomically large; only n mod denom matters.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    return UAngle((n % theta.denom) * theta.numer, theta.denom)


def dist_to_Z(theta: UAngle) -> DistZ:
    f = theta.frac
    return DistZ(min(f, 1 - f))


def dist_frac(f: Fraction) -> Fraction:
    """Distance of an arbitrary rational to the nearest integer."""
    r = f - f.__floor__()
    return min(r, 1 - r)


def combine(angles: Sequence[UAngle], coeffs: Sequence[int]) -> UAngle:
    """Canonical angle of sum(a_i * theta_i) mod 1."""
    total = Fraction(0)
    for a, th in zip(coeffs, angles, strict=True):
        total += a * th.frac
    return UAngle.from_fraction(total)


def angle_sub(a: UAngle, b: UAngle) -> UAngle:
    return UAngle.from_fraction(a.frac - b.frac)


# ---------------------------------------------------------------------------
# pi and friends as shrinking rational intervals


@lru_cache(maxsize=None)
def pi_interval(precision_bits: int) -> RatInterval:
    with gmpy2.context(precision=precision_bits, round=gmpy2.RoundDown):
        lo = gmpy2.const_pi()
    with gmpy2.context(precision=precision_bits, round=gmpy2.RoundUp):
        hi = gmpy2.const_pi()
    return RatInterval(Fraction(*lo.as_integer_ratio()), Fraction(*hi.as_integer_ratio()))


def pi_power_interval(power: int, precision_bits: int) -> RatInterval:
    p = pi_interval(precision_bits)
    return RatInterval(p.lo**power, p.hi**power)


def floor_times_pi_power(mult: Fraction, power: int, start_bits: int = 64) -> int:
    """floor(mult * pi^power) for a positive rational mult, certified.

    Doubles the pi precision until the enclosure pins down the floor; mult
    rational and pi^power irrational guarantee termination.
    """
    if mult <= 0:
        raise ValueError("mult must be positive")
    bits = start_bits
    while True:
        iv = pi_power_interval(power, bits)
        lo = (mult * iv.lo).__floor__()
        hi = (mult * iv.hi).__floor__()
        if lo == hi:
            return lo
        bits *= 2


# ---------------------------------------------------------------------------
# chord enclosures

# Niven: 2*sin(pi*d) is rational for rational d in [0, 1/2] only at these points.
_EXACT_CHORDS = {
    Fraction(0): Fraction(0),
    Fraction(1, 6): Fraction(1),
    Fraction(1, 2): Fraction(2),
}


def chord_exact_value(d: Fraction) -> Optional[Fraction]:
    """The exact rational chord value when one exists (d in {0, 1/6, 1/2})."""
    return _EXACT_CHORDS.get(d)


@lru_cache(maxsize=200_000)
def _chord_cached(num: int, den: int, precision_bits: int):
    d = Fraction(num, den)
    work = precision_bits + _GUARD
    q = gmpy2.mpq(num, den)
    while True:
        piv = pi_interval(work)
        # certify that the rounded-up argument stays below pi/2, where sin
        # is increasing; needs work ~ log2(den), so this terminates
        if d * piv.hi < piv.lo / 2:
            break
        work *= 2
    with gmpy2.context(precision=work, round=gmpy2.RoundDown):
        t_lo = gmpy2.mpfr(q) * gmpy2.const_pi()
        lo = 2 * gmpy2.sin(t_lo)
    with gmpy2.context(precision=work, round=gmpy2.RoundUp):
        t_hi = gmpy2.mpfr(q) * gmpy2.const_pi()
        hi = 2 * gmpy2.sin(t_hi)
    flo = max(Fraction(0), Fraction(*lo.as_integer_ratio()))
    fhi = min(Fraction(2), Fraction(*hi.as_integer_ratio()))
    return flo, fhi


def chord(d: DistZ, precision_bits: int = DEFAULT_PRECISION) -> ChordEnclosure:
    """Certified enclosure of 2*sin(pi*d); exact at d in {0, 1/6, 1/2}."""
    if precision_bits < 8:
        raise ValueError("precision_bits must be at least 8")
    exact = chord_exact_value(d.value)
    if exact is not None:
        return ChordEnclosure(exact, exact, precision_bits)
    flo, fhi = _chord_cached(d.value.numerator, d.value.denominator, precision_bits)
    target = Fraction(2) ** (1 - precision_bits)
    bits = precision_bits
    while fhi - flo > target:  # unreachable with the guard bits, kept as a safety net
        bits *= 2
        flo, fhi = _chord_cached(d.value.numerator, d.value.denominator, bits)
    return ChordEnclosure(flo, fhi, precision_bits)


def pow_chord(theta: UAngle, n: int, precision_bits: int = DEFAULT_PRECISION) -> ChordEnclosure:
    """Enclosure of |lambda^n - 1| for lambda = e^{2*i*pi*theta}."""
    return chord(dist_to_Z(reduce(theta, n)), precision_bits)


def compare_chord(e: ChordEnclosure, bound: Fraction) -> Comparison:
    """Below iff hi < bound, Above iff lo > bound, else Inconclusive."""
    if e.hi < bound:
        return Comparison.BELOW
    if e.lo > bound:
        return Comparison.ABOVE
    return Comparison.INCONCLUSIVE


def chord_vs_bound(
    d: Fraction,
    bound: Fraction,
    precision_bits: int = DEFAULT_PRECISION,
    cap: int = PRECISION_CAP,
) -> Comparison:
    """Certified strict comparison of the chord at distance d against a rational.

    Resolves exactly when the chord value is rational; otherwise doubles the
    enclosure precision until conclusive.  Raises InconclusiveComparison only
    if the cap is hit (which cannot happen for rational d != bound cases,
    since an irrational chord never equals a rational bound).
    """
    exact = chord_exact_value(d)
    if exact is not None:
        if exact < bound:
            return Comparison.BELOW
        if exact > bound:
            return Comparison.ABOVE
        return Comparison.INCONCLUSIVE  # genuine equality
    bits = precision_bits
    while bits <= cap:
        res = compare_chord(chord(DistZ(d), bits), bound)
        if res is not Comparison.INCONCLUSIVE:
            return res
        bits *= 2
    raise InconclusiveComparison(
        f"chord({d}) vs {bound} unresolved at {cap} bits"
    )


# ---------------------------------------------------------------------------
# monotonicity cuts: bulk-certified "chord(d) < eps" tests


class ChordCut:
    """Decides chord(d) <eps / >eps through the angle cut t = asin(eps/2)/pi.

    The cut is exact for eps in {0, 1, 2} and an irrational number otherwise,
    so every query about a rational distance d resolves after finitely many
    precision doublings.  Queries are O(1) rational comparisons once the
    enclosure is tight enough.
    """

    _EXACT_CUTS = {Fraction(0): Fraction(0), Fraction(1): Fraction(1, 6), Fraction(2): Fraction(1, 2)}

    def __init__(self, eps: Fraction, precision_bits: int = 64, cap: int = PRECISION_CAP):
        self.eps = Fraction(eps)
        self.cap = cap
        self._bits = precision_bits
        self.exact: Optional[Fraction] = None
        self._lo = Fraction(0)
        self._hi = Fraction(1, 2)
        if self.eps <= 0:
            self.exact = Fraction(0)
        elif self.eps >= 2:
            self.exact = Fraction(1, 2)
        else:
            self.exact = self._EXACT_CUTS.get(self.eps)
            if self.exact is None:
                self._tighten()

    def _tighten(self) -> None:
        bits = self._bits
        half = gmpy2.mpq(self.eps.numerator, 2 * self.eps.denominator)
        with gmpy2.context(precision=bits, round=gmpy2.RoundDown):
            a_lo = gmpy2.asin(gmpy2.mpfr(half))
        with gmpy2.context(precision=bits, round=gmpy2.RoundUp):
            a_hi = gmpy2.asin(gmpy2.mpfr(half))
        piv = pi_interval(bits)
        self._lo = max(Fraction(0), Fraction(*a_lo.as_integer_ratio()) / piv.hi)
        self._hi = min(Fraction(1, 2), Fraction(*a_hi.as_integer_ratio()) / piv.lo)
        self._bits = bits * 2

    def chord_below(self, d: Fraction) -> bool:
        """Certified chord(d) < eps (strict), for d = a distance in [0, 1/2]."""
        if self.eps <= 0:
            return False
        if self.eps > 2:
            return True
        if self.exact is not None:
            return d < self.exact
        while True:
            if d <= self._lo:
                return True
            if d >= self._hi:
                return False
            if self._bits > self.cap:
                raise InconclusiveComparison(f"cut for eps={self.eps} unresolved")
            self._tighten()

    def chord_above(self, d: Fraction) -> bool:
        """Certified chord(d) > eps (strict)."""
        if self.eps < 0:
            return True
        if self.eps >= 2:
            return False
        if self.exact is not None:
            return d > self.exact
        while True:
            if d >= self._hi:
                return True
            if d <= self._lo:
                return False
            if self._bits > self.cap:
                raise InconclusiveComparison(f"cut for eps={self.eps} unresolved")
            self._tighten()


@lru_cache(maxsize=256)
def cut_for(eps: Fraction) -> ChordCut:
    """Shared ChordCut per epsilon (cuts only ever shrink, so sharing is safe)."""
    return ChordCut(eps)
