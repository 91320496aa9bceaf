"""Simultaneous inhomogeneous approximation on the torus.

A tuple of unimodular numbers is "quantifiably independent" when
Q*|lambda_1^{a_1}...lambda_r^{a_r} - 1| + eps*sum|a_i| >= c holds for every
nonzero integer vector; only vectors with l1 norm below c/eps need checking.
When the condition holds, a simultaneous eps-hit on any target tuple exists
within q <= Q.  The constant c is existential in the source material, so it
is surfaced as configuration and calibrated empirically.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

from .circle import (
    Comparison,
    UAngle,
    chord,
    DistZ,
    chord_exact_value,
    chord_vs_bound,
    combine,
    cut_for,
    dist_frac,
    dist_to_Z,
    reduce,
)
from .errors import SizeLimit

E_SET_CAP = 10**7


@dataclass(frozen=True)
class IntVec:
    coords: tuple[int, ...]

    @property
    def l1(self) -> int:
        return sum(abs(a) for a in self.coords)


@dataclass(frozen=True)
class IndepReport:
    passed: bool
    worst_vec: Optional[IntVec]
    worst_margin: Optional[Fraction]  # certified lower bound on the margin
    epsilon: Fraction
    Q: int
    c: Fraction
    H: int
    checked: int


def l1_ball_count(r: int, k: int) -> int:
    """Number of nonzero integer vectors in Z^r with l1 norm <= k."""
    return sum(
        2**i * math.comb(r, i) * math.comb(k, i) for i in range(1, min(r, k) + 1)
    )


def _vectors_lex(r: int, k: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], budget: int, depth: int):
        if depth == r:
            if any(prefix):
                out.append(prefix)
            return
        for a in range(-budget, budget + 1):
            rec(prefix + (a,), budget - abs(a), depth + 1)

    rec((), k, 0)
    return out


def e_set(epsilon: Fraction, r: int, c: Fraction, cap: int = E_SET_CAP) -> list[IntVec]:
    """All nonzero integer vectors with l1 norm < c/eps, lexicographic order."""
    epsilon = Fraction(epsilon)
    c = Fraction(c)
    if epsilon <= 0 or c <= 0:
        raise ValueError("epsilon and c must be positive")
    rho = c / epsilon
    k = math.ceil(rho) - 1  # largest integer norm strictly below rho
    if k < 1:
        return []
    if l1_ball_count(r, k) > cap:
        raise SizeLimit(f"E-set with radius {rho} in Z^{r} exceeds cap {cap}")
    return [IntVec(v) for v in _vectors_lex(r, k)]


def check_condition(
    lambdas: Sequence[UAngle],
    epsilon: Fraction,
    Q: int,
    c: Fraction,
    H: int = 1,
) -> IndepReport:
    """Certified check of Q*|prod lambda_i^{H a_i} - 1| + eps*sum|a_i| >= c.

    Vectors outside the E-set satisfy the bound through eps*sum|a_i| >= c
    alone, so only the E-set is scanned.
    """
    epsilon = Fraction(epsilon)
    c = Fraction(c)
    if Q < 1:
        raise ValueError("Q must be >= 1")
    vecs = e_set(epsilon, len(lambdas), c)
    passed = True
    worst_vec: Optional[IntVec] = None
    worst_margin: Optional[Fraction] = None
    for v in vecs:
        ang = combine(lambdas, [H * a for a in v.coords])
        d = dist_to_Z(ang).value
        base = epsilon * v.l1 - c
        exact = chord_exact_value(d)
        if base >= 0:
            ok = True
            margin = base + (Q * exact if exact is not None else Q * chord(DistZ(d)).lo)
        elif exact is not None:
            margin = base + Q * exact
            ok = margin >= 0
        else:
            bound = -base / Q
            res = chord_vs_bound(d, bound)
            ok = res is Comparison.ABOVE
            margin = Q * chord(DistZ(d)).lo + base
        if worst_margin is None or margin < worst_margin:
            worst_margin = margin
            worst_vec = v
        if not ok:
            passed = False
    return IndepReport(
        passed=passed,
        worst_vec=worst_vec,
        worst_margin=worst_margin,
        epsilon=epsilon,
        Q=Q,
        c=c,
        H=H,
        checked=len(vecs),
    )


def simultaneous_hit(
    lambdas: Sequence[UAngle],
    mus: Sequence[UAngle],
    epsilon: Fraction,
    Q: int,
    H: int = 1,
) -> Optional[int]:
    """Smallest q in [1, Q] with certified max_i |lambda_i^{H q} - mu_i| < eps.

    For rational angles the whole q-orbit is periodic with period
    lcm_i(denom(H*theta_i)), so the scan is cut off there; None means no q in
    [1, Q] exists at all.
    """
    if len(lambdas) != len(mus) or not lambdas:
        raise ValueError("lambdas and mus must have equal positive length")
    epsilon = Fraction(epsilon)
    cut = cut_for(epsilon)
    steps = [reduce(lam, H) for lam in lambdas]
    period = math.lcm(*(s.denom for s in steps))
    offsets = [s.frac - mu.frac for s, mu in zip(steps, mus)]
    cur = list(offsets)
    for q in range(1, min(Q, period) + 1):
        if all(cut.chord_below(dist_frac(x)) for x in cur):
            return q
        for i, s in enumerate(steps):
            cur[i] += s.frac
    return None


def _random_angle(rng: random.Random, denom_max: int) -> UAngle:
    den = rng.randint(2, denom_max)
    num = rng.randint(0, den - 1)
    return UAngle(num, den)


DEFAULT_C_CANDIDATES = (
    Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(3, 2),
    Fraction(2), Fraction(3), Fraction(4), Fraction(6), Fraction(8),
)
DEFAULT_LADDER = ((Fraction(1, 2), 16), (Fraction(1, 4), 64), (Fraction(1, 8), 256))


def calibrate_c(
    r: int,
    trials: int,
    denom_max: int,
    seed: int = 0,
    candidates: Sequence[Fraction] = DEFAULT_C_CANDIDATES,
    ladder: Sequence[tuple[Fraction, int]] = DEFAULT_LADDER,
) -> Fraction:
    """Largest tested c for which condition-pass always implied a hit.

    Every trial draws a random rational tuple; targets are the conjugate
    tuple plus two random tuples.  Deterministic given the seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    tuples = []
    for _ in range(trials):
        lams = tuple(_random_angle(rng, denom_max) for _ in range(r))
        targets = [tuple(l.conj() for l in lams)]
        targets += [tuple(_random_angle(rng, denom_max) for _ in range(r)) for _ in range(2)]
        tuples.append((lams, targets))
    best: Optional[Fraction] = None
    for c in sorted(candidates):
        sound = True
        for lams, targets in tuples:
            for eps, Q in ladder:
                rep = check_condition(lams, eps, Q, c)
                if not rep.passed:
                    continue
                for mus in targets:
                    if simultaneous_hit(lams, mus, eps, Q) is None:
                        sound = False
                        break
                if not sound:
                    break
            if not sound:
                break
        if sound:
            best = c
    if best is None:
        raise AssertionError("no tested c was sound; widen the candidate list")
    return best
