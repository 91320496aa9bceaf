"""Stage parameters and the block families.

A family at level r is a union of stages; stage N contributes the blocks

    zero    {H_N*q + 1       : 1 <= q <= Q_N}
    empty   {H_N*Delta_empty}
    A       {H_N*Delta_A*(L_N*j + 1) : j_min <= j <= Theta_N},  A nonempty

where A runs over the subsets of {1..r-1}.  Stage constants come in two
flavours:

* paper track: Gamma^(2) = ((floor(c2/eps)+1)!)^2 and the factorial
  dichotomy constants.  Exact but astronomically large; representable at
  desk scale only for r = 1 (all stages) and single r = 2 stages with
  moderate c2/eps.  Beyond that the constants are factorial towers and the
  constructors refuse with ParameterOverflow.
* empirical track: the smallest grid-verified constants.  Gamma^(2) becomes
  lcm(1..D)^2 (it absorbs every coefficient of an exact lattice relation on
  the denominator-D grid) and the 1-D constants come from the forced-divisor
  construction, quantified over every H through residue classes.

Growth bounds use the rational over-approximation 44/7 > 2*pi so that every
schedule check is exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Mapping, Optional, Sequence, Union

from . import jsonio
from .circle import TWO_PI_UPPER, UAngle, cut_for, dist_frac
from .dirichlet import (
    DEFAULT_KAPPA_CAP,
    DichotomyParams,
    EmpiricalParams,
    dichotomy_params,
    kappa_of,
    stage_constants_empirical,
)
from .errors import OverlapError, ParameterOverflow, ScheduleError, UsageError

PAPER = "paper"
EMPIRICAL = "empirical"
GAMMA_FLOOR_CAP = 10**6  # refuse factorials beyond this floor on the paper track

H1_MIN = 20  # >= 6*pi


# ---------------------------------------------------------------------------
# configuration


def default_c(r: int) -> Fraction:
    """Per-level default for the independence constant c_r.

    Calibration (see klapprox.calibrate_c and the trichotomy audit) shows the
    desk grids need c_2 > 11/2: e.g. the pair (1/11, 1/12) at H = 2 only
    reaches its target through a coefficient-11 lattice relation, which must
    lie inside the E-set.  6 gives that a margin and keeps E-sets small.
    """
    return Fraction(6)


@dataclass(frozen=True)
class FamilyConfig:
    c: Mapping[int, Fraction] = field(default_factory=dict)
    seed: int = 0
    precision_bits: int = 128
    grid_denom_max: int = 24
    kappa_cap: int = DEFAULT_KAPPA_CAP
    enumeration_cap: int = 100_000

    def c_for(self, r: int) -> Fraction:
        return Fraction(self.c.get(r, default_c(r)))

    def to_dict(self) -> dict:
        return {
            "c": {str(k): jsonio.frac_str(v) for k, v in sorted(self.c.items())},
            "seed": self.seed,
            "precision_bits": self.precision_bits,
            "grid_denom_max": self.grid_denom_max,
            "kappa_cap": self.kappa_cap,
            "enumeration_cap": self.enumeration_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FamilyConfig":
        return cls(
            c={int(k): jsonio.parse_frac(v) for k, v in d.get("c", {}).items()},
            seed=d.get("seed", 0),
            precision_bits=d.get("precision_bits", 128),
            grid_denom_max=d.get("grid_denom_max", 24),
            kappa_cap=d.get("kappa_cap", DEFAULT_KAPPA_CAP),
            enumeration_cap=d.get("enumeration_cap", 100_000),
        )


# ---------------------------------------------------------------------------
# stage parameters


@dataclass(frozen=True)
class StageParams1:
    """1-D stage constants: Q = L*Theta (net block) and Delta_empty = Sigma*L."""

    epsilon: Fraction
    L: int
    Sigma: int
    Theta: int
    track: str
    kappa: Optional[int] = None
    grid_denom_max: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "kind": "r1",
            "epsilon": jsonio.frac_str(self.epsilon),
            "L": jsonio.int_str(self.L),
            "Sigma": jsonio.int_str(self.Sigma),
            "Theta": jsonio.int_str(self.Theta),
            "track": self.track,
            "kappa": None if self.kappa is None else jsonio.int_str(self.kappa),
            "grid_denom_max": self.grid_denom_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StageParams1":
        return cls(
            epsilon=jsonio.parse_frac(d["epsilon"]),
            L=jsonio.parse_int(d["L"]),
            Sigma=jsonio.parse_int(d["Sigma"]),
            Theta=jsonio.parse_int(d["Theta"]),
            track=d["track"],
            kappa=None if d.get("kappa") is None else jsonio.parse_int(d["kappa"]),
            grid_denom_max=d.get("grid_denom_max"),
        )


@dataclass(frozen=True)
class StageParams2:
    """Rank-2 constants: Gamma2, Sigma2 = Gamma2*Sigma1, Theta2 = Theta1, Q2, delta2."""

    epsilon2: Fraction
    L: int
    c2: Fraction
    track: str
    Gamma2: int
    epsilon1: Fraction
    Sigma1: int
    Theta1: int
    Sigma2: int
    Theta2: int
    delta2: Fraction
    Q2: int
    kappa1: Optional[int] = None
    grid_denom_max: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "kind": "rank2",
            "epsilon2": jsonio.frac_str(self.epsilon2),
            "L": jsonio.int_str(self.L),
            "c2": jsonio.frac_str(self.c2),
            "track": self.track,
            "Gamma2": jsonio.int_str(self.Gamma2),
            "epsilon1": jsonio.frac_str(self.epsilon1),
            "Sigma1": jsonio.int_str(self.Sigma1),
            "Theta1": jsonio.int_str(self.Theta1),
            "Sigma2": jsonio.int_str(self.Sigma2),
            "Theta2": jsonio.int_str(self.Theta2),
            "delta2": jsonio.frac_str(self.delta2),
            "Q2": jsonio.int_str(self.Q2),
            "kappa1": None if self.kappa1 is None else jsonio.int_str(self.kappa1),
            "grid_denom_max": self.grid_denom_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StageParams2":
        return cls(
            epsilon2=jsonio.parse_frac(d["epsilon2"]),
            L=jsonio.parse_int(d["L"]),
            c2=jsonio.parse_frac(d["c2"]),
            track=d["track"],
            Gamma2=jsonio.parse_int(d["Gamma2"]),
            epsilon1=jsonio.parse_frac(d["epsilon1"]),
            Sigma1=jsonio.parse_int(d["Sigma1"]),
            Theta1=jsonio.parse_int(d["Theta1"]),
            Sigma2=jsonio.parse_int(d["Sigma2"]),
            Theta2=jsonio.parse_int(d["Theta2"]),
            delta2=jsonio.parse_frac(d["delta2"]),
            Q2=jsonio.parse_int(d["Q2"]),
            kappa1=None if d.get("kappa1") is None else jsonio.parse_int(d["kappa1"]),
            grid_denom_max=d.get("grid_denom_max"),
        )


@dataclass(frozen=True)
class StageParamsR:
    """Level-r constants: the Delta map over subsets of {1..r-1} plus Theta, Q, delta."""

    r: int
    epsilonR: Fraction
    L: int
    track: str
    Delta: Mapping[frozenset, int]
    ThetaR: int
    QR: int
    deltaR: Fraction
    cR: Fraction
    rank2: StageParams2
    inner: Optional["StageParamsR"] = None  # None exactly when r == 2
    epsilon_prev: Optional[Fraction] = None  # recorded chain picks, r >= 3
    epsilon2_chain: Optional[Fraction] = None

    def to_dict(self) -> dict:
        return {
            "kind": "rankR",
            "r": self.r,
            "epsilonR": jsonio.frac_str(self.epsilonR),
            "L": jsonio.int_str(self.L),
            "track": self.track,
            "Delta": {subset_key(a): jsonio.int_str(v) for a, v in sorted_delta(self.Delta)},
            "ThetaR": jsonio.int_str(self.ThetaR),
            "QR": jsonio.int_str(self.QR),
            "deltaR": jsonio.frac_str(self.deltaR),
            "cR": jsonio.frac_str(self.cR),
            "rank2": self.rank2.to_dict(),
            "inner": None if self.inner is None else self.inner.to_dict(),
            "epsilon_prev": None if self.epsilon_prev is None else jsonio.frac_str(self.epsilon_prev),
            "epsilon2_chain": None if self.epsilon2_chain is None else jsonio.frac_str(self.epsilon2_chain),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StageParamsR":
        return cls(
            r=d["r"],
            epsilonR=jsonio.parse_frac(d["epsilonR"]),
            L=jsonio.parse_int(d["L"]),
            track=d["track"],
            Delta={parse_subset_key(k): jsonio.parse_int(v) for k, v in d["Delta"].items()},
            ThetaR=jsonio.parse_int(d["ThetaR"]),
            QR=jsonio.parse_int(d["QR"]),
            deltaR=jsonio.parse_frac(d["deltaR"]),
            cR=jsonio.parse_frac(d["cR"]),
            rank2=StageParams2.from_dict(d["rank2"]),
            inner=None if d.get("inner") is None else cls.from_dict(d["inner"]),
            epsilon_prev=None if d.get("epsilon_prev") is None else jsonio.parse_frac(d["epsilon_prev"]),
            epsilon2_chain=None if d.get("epsilon2_chain") is None else jsonio.parse_frac(d["epsilon2_chain"]),
        )


StageParams = Union[StageParams1, StageParamsR]


def subset_key(a: frozenset) -> str:
    return "{" + ",".join(str(x) for x in sorted(a)) + "}"


def parse_subset_key(s: str) -> frozenset:
    body = s.strip()[1:-1]
    return frozenset(int(x) for x in body.split(",") if x.strip())


def sorted_delta(delta: Mapping[frozenset, int]):
    return sorted(delta.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))


def _lcm_upto(n: int) -> int:
    return math.lcm(*range(1, n + 1)) if n >= 1 else 1


def stage_params_1(
    epsilon: Fraction,
    L: int,
    *,
    track: str = PAPER,
    grid_denom_max: Optional[int] = None,
    kappa_cap: int = DEFAULT_KAPPA_CAP,
    extra_divisors: Iterable[int] = (),
) -> StageParams1:
    """1-D stage constants on either track."""
    epsilon = Fraction(epsilon)
    if track == PAPER:
        p = dichotomy_params(epsilon, kappa_cap)
        sigma = p.Sigma
        if extra_divisors:
            sigma = math.lcm(sigma, *extra_divisors)
        return StageParams1(epsilon, L, sigma, p.Theta, PAPER, kappa=p.kappa)
    if grid_denom_max is None:
        raise UsageError("empirical track needs grid_denom_max")
    e = stage_constants_empirical(epsilon, L, grid_denom_max, extra_divisors)
    return StageParams1(epsilon, L, e.Sigma, e.Theta, EMPIRICAL, grid_denom_max=grid_denom_max)


def stage_params_2(
    epsilon2: Fraction,
    L: int,
    c2: Fraction,
    *,
    track: str = PAPER,
    grid_denom_max: Optional[int] = None,
    kappa_cap: int = DEFAULT_KAPPA_CAP,
    extra_divisors: Iterable[int] = (),
) -> StageParams2:
    """Rank-2 stage constants.

    delta2 is the closed form eps2 / (2*Gamma2^2*(L*(Sigma1+Theta1)+1)): it
    simultaneously clears the four case inequalities validated by
    params_check and exercised behaviourally by the trichotomy audit.
    """
    epsilon2 = Fraction(epsilon2)
    c2 = Fraction(c2)
    if not (0 < epsilon2 < 2):
        raise ValueError("epsilon2 must lie in (0, 2)")
    if L < 1 or c2 <= 0:
        raise ValueError("need L >= 1 and c2 > 0")
    if track == PAPER:
        k = (c2 / epsilon2).__floor__()
        if k > GAMMA_FLOOR_CAP:
            raise ParameterOverflow(
                f"Gamma2 would be (({k}+1)!)^2; not desk-representable"
            )
        gamma2 = math.factorial(k + 1) ** 2
        epsilon1 = epsilon2 / (2 * gamma2)
        one = stage_params_1(epsilon1, L, track=PAPER, kappa_cap=kappa_cap, extra_divisors=extra_divisors)
    else:
        if grid_denom_max is None:
            raise UsageError("empirical track needs grid_denom_max")
        gamma2 = _lcm_upto(grid_denom_max) ** 2
        epsilon1 = epsilon2 / (2 * gamma2)
        one = stage_params_1(
            epsilon1, L, track=EMPIRICAL, grid_denom_max=grid_denom_max,
            extra_divisors=extra_divisors,
        )
    sigma2 = gamma2 * one.Sigma
    theta2 = one.Theta
    delta2 = epsilon2 / (2 * gamma2**2 * (L * (one.Sigma + one.Theta) + 1))
    q2 = (c2 / delta2).__floor__() + 1
    return StageParams2(
        epsilon2=epsilon2, L=L, c2=c2, track=track,
        Gamma2=gamma2, epsilon1=epsilon1, Sigma1=one.Sigma, Theta1=one.Theta,
        Sigma2=sigma2, Theta2=theta2, delta2=delta2, Q2=q2,
        kappa1=one.kappa, grid_denom_max=grid_denom_max if track == EMPIRICAL else None,
    )


def stage_params_general(
    r: int,
    epsilonR: Fraction,
    L: int,
    c: Mapping[int, Fraction],
    *,
    track: str = PAPER,
    grid_denom_max: Optional[int] = None,
    kappa_cap: int = DEFAULT_KAPPA_CAP,
) -> StageParamsR:
    """Level-r constants by the recursion on the Delta map.

    Base r = 2: Delta[{}] = Sigma2*L, Delta[{1}] = Gamma2.  For r >= 3 the
    epsilon chain is fixed in proof order: eps^(r-1) = eps^(r)/2 first, then
    eps^(2) = min(eps^(r-1)/(2P), delta^(r-1)/2, c2*eps^(r)/(4*cR)) with
    P = max Delta'_{A'}*(L*Theta^(r-1)+1), then delta^(r) = delta^(2)/2.
    Divisibility enforcement makes Sigma2*L a multiple of every
    Gamma2*Delta'_{A'}, which forces the sorted Delta values into a chain.
    """
    epsilonR = Fraction(epsilonR)
    if r < 2:
        raise ValueError("stage_params_general needs r >= 2")
    c2 = Fraction(c.get(2, default_c(2)))
    if r == 2:
        two = stage_params_2(
            epsilonR, L, c2, track=track, grid_denom_max=grid_denom_max, kappa_cap=kappa_cap
        )
        delta = {frozenset(): two.Sigma2 * L, frozenset({1}): two.Gamma2}
        return StageParamsR(
            r=2, epsilonR=epsilonR, L=L, track=track, Delta=delta,
            ThetaR=two.Theta2, QR=two.Q2, deltaR=two.delta2, cR=c2, rank2=two,
        )
    cR = Fraction(c.get(r, default_c(r)))
    eps_prev = epsilonR / 2
    inner = stage_params_general(
        r - 1, eps_prev, L, c, track=track, grid_denom_max=grid_denom_max, kappa_cap=kappa_cap
    )
    p_max = max(v * (L * inner.ThetaR + 1) for v in inner.Delta.values())
    eps2 = min(eps_prev / (2 * p_max), inner.deltaR / 2, c2 * epsilonR / (4 * cR))
    if track == PAPER:
        # divisibility enforcement: shrink eps2 until Sigma1 = kappa! absorbs
        # every Gamma2*Delta' target (the floor cap cuts this off at desk scale)
        while True:
            k = (c2 / eps2).__floor__()
            if k > GAMMA_FLOOR_CAP:
                raise ParameterOverflow(
                    f"level-{r} paper constants are a factorial tower (floor {k})"
                )
            gamma2 = math.factorial(k + 1) ** 2
            eps1 = eps2 / (2 * gamma2)
            target = max(gamma2 * v for v in inner.Delta.values())
            if kappa_of(eps1) >= target:
                break
            eps2 = eps2 / 2
        two = stage_params_2(eps2, L, c2, track=PAPER, kappa_cap=kappa_cap)
    else:
        gamma2 = _lcm_upto(grid_denom_max) ** 2
        extra = [gamma2 * v for v in inner.Delta.values()]
        two = stage_params_2(
            eps2, L, c2, track=EMPIRICAL, grid_denom_max=grid_denom_max,
            kappa_cap=kappa_cap, extra_divisors=extra,
        )
    delta: dict[frozenset, int] = {}
    for a_prev, v in inner.Delta.items():
        delta[a_prev] = two.Sigma2 * L * v
        delta[a_prev | {r - 1}] = two.Gamma2 * v
    theta_r = max(two.Theta2, inner.ThetaR)
    delta_r = two.delta2 / 2
    q_r = (cR / delta_r).__floor__() + 1
    params = StageParamsR(
        r=r, epsilonR=epsilonR, L=L, track=track, Delta=delta,
        ThetaR=theta_r, QR=q_r, deltaR=delta_r, cR=cR, rank2=two, inner=inner,
        epsilon_prev=eps_prev, epsilon2_chain=eps2,
    )
    chain = divisibility_chain(list(delta.values()))
    if chain is not None:
        raise AssertionError(f"Delta values do not form a divisibility chain: {chain}")
    return params


def divisibility_chain(values: Sequence[int]) -> Optional[tuple[int, int]]:
    """None if the sorted values form a divisibility chain, else a bad pair."""
    vs = sorted(values)
    for a, b in zip(vs, vs[1:]):
        if b % a:
            return (a, b)
    return None


# ---------------------------------------------------------------------------
# blocks and families

ZERO = "zero"
EMPTY = "empty"
SUBSET = "subset"


@dataclass(frozen=True)
class BlockSpec:
    stage: int
    kind: str
    H: int
    L: int
    epsilon: Fraction
    A: Optional[frozenset] = None
    Q: Optional[int] = None
    Delta: Optional[int] = None
    Theta: Optional[int] = None
    j_min: int = 1

    def __post_init__(self):
        if self.kind == ZERO and (self.Q is None or self.Q < 1):
            raise ValueError("zero block needs Q >= 1")
        if self.kind == EMPTY and (self.Delta is None or self.Delta < 1):
            raise ValueError("empty block needs Delta >= 1")
        if self.kind == SUBSET:
            if not self.A:
                raise ValueError("subset block needs a nonempty A")
            if self.Delta is None or self.Theta is None:
                raise ValueError("subset block needs Delta and Theta")
            if not (1 <= self.j_min <= self.Theta):
                raise ValueError("need 1 <= j_min <= Theta")

    @property
    def size(self) -> int:
        if self.kind == ZERO:
            return self.Q
        if self.kind == EMPTY:
            return 1
        return self.Theta - self.j_min + 1

    @property
    def min_element(self) -> int:
        if self.kind == ZERO:
            return self.H + 1
        if self.kind == EMPTY:
            return self.H * self.Delta
        return self.H * self.Delta * (self.L * self.j_min + 1)

    @property
    def max_element(self) -> int:
        if self.kind == ZERO:
            return self.H * self.Q + 1
        if self.kind == EMPTY:
            return self.H * self.Delta
        return self.H * self.Delta * (self.L * self.Theta + 1)

    def element_at(self, idx: int) -> int:
        """Element for index q (zero block) / j (subset block); idx 1 for empty."""
        if self.kind == ZERO:
            if not 1 <= idx <= self.Q:
                raise IndexError(idx)
            return self.H * idx + 1
        if self.kind == EMPTY:
            if idx != 1:
                raise IndexError(idx)
            return self.H * self.Delta
        if not self.j_min <= idx <= self.Theta:
            raise IndexError(idx)
        return self.H * self.Delta * (self.L * idx + 1)

    def index_of(self, n: int) -> Optional[int]:
        """Index of n in this block, decided by arithmetic (no enumeration)."""
        if n <= 0:
            return None
        if self.kind == ZERO:
            q, rem = divmod(n - 1, self.H)
            return q if rem == 0 and 1 <= q <= self.Q else None
        if self.kind == EMPTY:
            return 1 if n == self.H * self.Delta else None
        t, rem = divmod(n, self.H * self.Delta)
        if rem:
            return None
        j, rem = divmod(t - 1, self.L)
        return j if rem == 0 and self.j_min <= j <= self.Theta else None

    def indices(self) -> range:
        if self.kind == ZERO:
            return range(1, self.Q + 1)
        if self.kind == EMPTY:
            return range(1, 2)
        return range(self.j_min, self.Theta + 1)

    def label(self) -> str:
        if self.kind == SUBSET:
            return f"subset{subset_key(self.A)}"
        return self.kind

    def to_dict(self) -> dict:
        d = {
            "stage": self.stage,
            "kind": self.kind,
            "H": jsonio.int_str(self.H),
            "L": jsonio.int_str(self.L),
            "epsilon": jsonio.frac_str(self.epsilon),
            "j_min": jsonio.int_str(self.j_min),
        }
        if self.A is not None:
            d["A"] = sorted(self.A)
        for name in ("Q", "Delta", "Theta"):
            v = getattr(self, name)
            if v is not None:
                d[name] = jsonio.int_str(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BlockSpec":
        return cls(
            stage=d["stage"],
            kind=d["kind"],
            H=jsonio.parse_int(d["H"]),
            L=jsonio.parse_int(d["L"]),
            epsilon=jsonio.parse_frac(d["epsilon"]),
            A=frozenset(d["A"]) if "A" in d else None,
            Q=jsonio.parse_int(d["Q"]) if "Q" in d else None,
            Delta=jsonio.parse_int(d["Delta"]) if "Delta" in d else None,
            Theta=jsonio.parse_int(d["Theta"]) if "Theta" in d else None,
            j_min=jsonio.parse_int(d.get("j_min", "1")),
        )


@dataclass(frozen=True)
class Stage:
    N: int
    epsilon: Fraction
    L: int
    H: int
    Q: int
    Theta: int
    Delta: Mapping[frozenset, int]
    delta: Optional[Fraction]
    params: StageParams
    blocks: tuple[BlockSpec, ...]

    @property
    def max_element(self) -> int:
        return max(b.max_element for b in self.blocks)

    @property
    def min_element(self) -> int:
        return min(b.min_element for b in self.blocks)

    def growth_weight(self) -> int:
        """max(Q, max_A Delta_A*(L*Theta+1)): what H_{N+1} must dominate."""
        return max(self.Q, max(v * (self.L * self.Theta + 1) for v in self.Delta.values()))

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "epsilon": jsonio.frac_str(self.epsilon),
            "L": jsonio.int_str(self.L),
            "H": jsonio.int_str(self.H),
            "Q": jsonio.int_str(self.Q),
            "Theta": jsonio.int_str(self.Theta),
            "Delta": {subset_key(a): jsonio.int_str(v) for a, v in sorted_delta(self.Delta)},
            "delta": None if self.delta is None else jsonio.frac_str(self.delta),
            "params": self.params.to_dict(),
            "blocks": [b.to_dict() for b in self.blocks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Stage":
        pd = d["params"]
        params = StageParams1.from_dict(pd) if pd["kind"] == "r1" else StageParamsR.from_dict(pd)
        return cls(
            N=d["N"],
            epsilon=jsonio.parse_frac(d["epsilon"]),
            L=jsonio.parse_int(d["L"]),
            H=jsonio.parse_int(d["H"]),
            Q=jsonio.parse_int(d["Q"]),
            Theta=jsonio.parse_int(d["Theta"]),
            Delta={parse_subset_key(k): jsonio.parse_int(v) for k, v in d["Delta"].items()},
            delta=None if d.get("delta") is None else jsonio.parse_frac(d["delta"]),
            params=params,
            blocks=tuple(BlockSpec.from_dict(b) for b in d["blocks"]),
        )


@dataclass(frozen=True)
class Membership:
    stage: int
    kind: str
    A: Optional[frozenset]
    index: int


@dataclass(frozen=True)
class SetFamily:
    r: int
    track: str
    config: FamilyConfig
    stages: tuple[Stage, ...]

    def stage_by_N(self, N: int) -> Stage:
        return self.stages[N - 1]

    def contains(self, n: int) -> Optional[Membership]:
        """Membership by per-block arithmetic, never by enumeration."""
        for st in self.stages:
            for b in st.blocks:
                idx = b.index_of(n)
                if idx is not None:
                    return Membership(stage=st.N, kind=b.kind, A=b.A, index=idx)
        return None

    def to_manifest(self) -> dict:
        return {
            "format": "bohrsets-family-v1",
            "r": self.r,
            "track": self.track,
            "config": self.config.to_dict(),
            "stages": [st.to_dict() for st in self.stages],
        }

    @classmethod
    def from_manifest(cls, d: dict) -> "SetFamily":
        if d.get("format") != "bohrsets-family-v1":
            raise UsageError("not a family manifest")
        return cls(
            r=d["r"],
            track=d["track"],
            config=FamilyConfig.from_dict(d["config"]),
            stages=tuple(Stage.from_dict(s) for s in d["stages"]),
        )

    def digest(self) -> str:
        return jsonio.digest(self.to_manifest())


# ---------------------------------------------------------------------------
# schedule bounds (exact integer arithmetic; 44/7 > 2*pi)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def l_lower_bound(N: int, r: int) -> int:
    if r == 1:
        return 1  # no subset blocks at r = 1, hence no witness bound on L
    return _ceil_div(44 * 2 ** (N + 2), 7)


def h_lower_bound(prev: Optional[Stage], N: int, r: int) -> int:
    if prev is None:
        return H1_MIN
    return _ceil_div(44 * 2 ** (prev.N + 2) * prev.H * prev.growth_weight(), 7)


def _stage_blocks(N: int, r: int, eps: Fraction, L: int, H: int, Q: int, theta: int, delta_map) -> tuple[BlockSpec, ...]:
    blocks = [BlockSpec(stage=N, kind=ZERO, H=H, L=L, epsilon=eps, Q=Q)]
    blocks.append(BlockSpec(stage=N, kind=EMPTY, H=H, L=L, epsilon=eps, Delta=delta_map[frozenset()]))
    for a, v in sorted_delta(delta_map):
        if a:
            blocks.append(
                BlockSpec(stage=N, kind=SUBSET, A=a, H=H, L=L, epsilon=eps, Delta=v, Theta=theta)
            )
    return tuple(blocks)


def build_family(
    r: int,
    num_stages: int,
    *,
    track: str = PAPER,
    config: Optional[FamilyConfig] = None,
    schedule_hints: Optional[Mapping] = None,
) -> SetFamily:
    """Build a family stage by stage; every schedule choice is recorded.

    Hints may pin per-stage `epsilons`, `L`, and `H_min`; actual values never
    drop below the exact lower bounds, so a built family always passes
    schedule_check.
    """
    if r < 1 or num_stages < 1:
        raise ValueError("need r >= 1 and num_stages >= 1")
    if track not in (PAPER, EMPIRICAL):
        raise UsageError(f"unknown track {track!r}")
    config = config or FamilyConfig()
    hints = schedule_hints or {}
    eps_list = hints.get("epsilons")
    l_list = hints.get("L")
    h_min_list = hints.get("H_min")
    stages: list[Stage] = []
    prev: Optional[Stage] = None
    for N in range(1, num_stages + 1):
        eps = Fraction(eps_list[N - 1]) if eps_list else min(Fraction(1), Fraction(2) ** (1 - N))
        if prev is not None and eps >= prev.epsilon:
            raise UsageError("stage epsilons must decrease strictly")
        L = max(int(l_list[N - 1]) if l_list else 1, l_lower_bound(N, r))
        if r == 1:
            p1 = stage_params_1(
                eps, L, track=track, grid_denom_max=config.grid_denom_max,
                kappa_cap=config.kappa_cap,
            )
            q = L * p1.Theta
            delta_map = {frozenset(): p1.Sigma * L}
            theta = p1.Theta
            delta_r = None
            params: StageParams = p1
        else:
            pr = stage_params_general(
                r, eps, L, config.c, track=track,
                grid_denom_max=config.grid_denom_max, kappa_cap=config.kappa_cap,
            )
            q = pr.QR
            delta_map = dict(pr.Delta)
            theta = pr.ThetaR
            delta_r = pr.deltaR
            params = pr
        h = h_lower_bound(prev, N, r)
        if h_min_list and h_min_list[N - 1]:
            h = max(h, int(h_min_list[N - 1]))
        if r == 1 and h % 2:
            h += 1  # parity device: zero-block elements odd, empty-block even
        stage = Stage(
            N=N, epsilon=eps, L=L, H=h, Q=q, Theta=theta, Delta=delta_map,
            delta=delta_r, params=params,
            blocks=_stage_blocks(N, r, eps, L, h, q, theta, delta_map),
        )
        stages.append(stage)
        prev = stage
    fam = SetFamily(r=r, track=track, config=config, stages=tuple(stages))
    rep = schedule_check(fam)
    if not rep.passed:
        raise ScheduleError(f"built family violates its own schedule: {rep.violations}")
    return fam


# ---------------------------------------------------------------------------
# schedule and parameter validation


@dataclass(frozen=True)
class ScheduleReport:
    passed: bool
    violations: tuple[dict, ...]
    overlaps: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": list(self.violations),
            "overlaps": list(self.overlaps),
        }


def _block_overlaps(st: Stage) -> list[dict]:
    """Arithmetic detection of within-stage block intersections (report only)."""
    out = []
    blocks = st.blocks
    for i, a in enumerate(blocks):
        for b in blocks[i + 1 :]:
            hit = None
            if a.kind == ZERO and b.kind in (EMPTY, SUBSET):
                # zero-block elements are 1 mod H, the others 0 mod H:
                # intersections require H = 1 (foreign families only)
                if b.kind == EMPTY:
                    if a.index_of(b.min_element) is not None:
                        hit = b.min_element
                elif a.H == 1:
                    hd = b.H * b.Delta
                    for j in range(b.j_min, min(b.Theta, b.j_min + 10**5) + 1):
                        n = hd * (b.L * j + 1)
                        if n > a.max_element:
                            break
                        if a.index_of(n) is not None:
                            hit = n
                            break
            elif a.kind == EMPTY and b.kind == SUBSET:
                t, rem = divmod(st.Delta[frozenset()], b.Delta)
                if rem == 0:
                    j, rem2 = divmod(t - 1, b.L)
                    if rem2 == 0 and b.j_min <= j <= b.Theta:
                        hit = a.max_element
            elif a.kind == SUBSET and b.kind == SUBSET:
                big, small = (a, b) if a.Delta >= b.Delta else (b, a)
                ratio, rem = divmod(big.Delta, small.Delta)
                if rem == 0 and ratio % small.L == 1 % small.L:
                    for j in range(big.j_min, min(big.Theta, big.j_min + small.L) + 1):
                        t = ratio * (big.L * j + 1)
                        jj, rem2 = divmod(t - 1, small.L)
                        if rem2 == 0 and small.j_min <= jj <= small.Theta:
                            hit = big.H * big.Delta * (big.L * j + 1)
                            break
            if hit is not None:
                out.append({"stage": st.N, "blocks": [a.label(), b.label()], "element": jsonio.int_str(hit)})
    return out


def schedule_check(family: SetFamily) -> ScheduleReport:
    """Exact verification of the growth schedule; violations are named."""
    v: list[dict] = []
    stages = family.stages
    for st in stages:
        if st.epsilon <= 0 or st.epsilon >= 2:
            v.append({"name": "epsilon-range", "stage": st.N, "detail": jsonio.frac_str(st.epsilon)})
        lb = l_lower_bound(st.N, family.r)
        if st.L < lb:
            v.append({"name": "L-witness-bound", "stage": st.N,
                      "detail": f"L={st.L} < {lb} (7*L >= 44*2^(N+2) fails)"})
        if family.r == 1 and st.H % 2:
            v.append({"name": "H-parity", "stage": st.N, "detail": "H must be even at r=1"})
    if stages[0].H < H1_MIN:
        v.append({"name": "H1-minimum", "stage": 1, "detail": f"H1={stages[0].H} < {H1_MIN}"})
    for a, b in zip(stages, stages[1:]):
        if b.epsilon >= a.epsilon:
            v.append({"name": "epsilon-decrease", "stage": b.N, "detail": "epsilons must decrease"})
        hb = h_lower_bound(a, b.N, family.r)
        if b.H < hb:
            v.append({"name": "H-growth-bound", "stage": b.N,
                      "detail": "7*H_{N+1} >= 44*2^(N+2)*H_N*max(Q_N, max Delta*(L*Theta+1)) fails"})
        if a.max_element >= b.H:
            v.append({"name": "stage-separation", "stage": b.N,
                      "detail": "max element of previous stage reaches H_N"})
    overlaps = []
    for st in stages:
        overlaps.extend(_block_overlaps(st))
    return ScheduleReport(passed=not v, violations=tuple(v), overlaps=tuple(overlaps))


def _check_rank2(p: StageParams2, where: str, v: list[dict]) -> None:
    def bad(name, detail=""):
        v.append({"name": name, "where": where, "detail": detail})

    if p.track == PAPER:
        k = (p.c2 / p.epsilon2).__floor__()
        if p.Gamma2 != math.factorial(k + 1) ** 2:
            bad("gamma2-formula")
        if p.kappa1 is not None and p.Sigma1 != math.factorial(p.kappa1):
            bad("sigma1-factorial")
    else:
        if p.grid_denom_max is None or p.Gamma2 != _lcm_upto(p.grid_denom_max) ** 2:
            bad("gamma2-empirical")
    if p.epsilon1 != p.epsilon2 / (2 * p.Gamma2):
        bad("epsilon1-chain")
    if p.Sigma2 != p.Gamma2 * p.Sigma1:
        bad("sigma2-product")
    if p.Theta2 != p.Theta1:
        bad("theta2-equals-theta1")
    expected_delta2 = p.epsilon2 / (2 * p.Gamma2**2 * (p.L * (p.Sigma1 + p.Theta1) + 1))
    if p.delta2 != expected_delta2:
        bad("delta2-closed-form", f"recorded {p.delta2} != {expected_delta2}")
    if not (p.Q2 > p.c2 / p.delta2):
        bad("q2-bound")
    g, e1, d2, L = p.Gamma2, p.epsilon1, p.delta2, p.L
    cases = {
        "case-1a": (e1 + d2 * g * p.Sigma1 * L) * g,
        "case-1b": (e1 + d2 * g * (L * p.Theta1 + 1)) * g,
        "case-2a": max(e1 * g, d2 * g * p.Sigma1 * L),
        "case-2b": max(e1 * g, d2 * g * (L * p.Theta1 + 1)),
    }
    for name, val in cases.items():
        if not (val < p.epsilon2):
            bad(f"delta2-{name}", f"{val} >= {p.epsilon2}")


def _check_rankR(p: StageParamsR, where: str, v: list[dict]) -> None:
    def bad(name, detail=""):
        v.append({"name": name, "where": where, "detail": detail})

    if len(p.Delta) != 2 ** (p.r - 1):
        bad("delta-key-count", f"{len(p.Delta)} != 2^{p.r - 1}")
    if any(val < 1 for val in p.Delta.values()):
        bad("delta-positive")
    bad_pair = divisibility_chain(list(p.Delta.values()))
    if bad_pair is not None:
        bad("delta-divisibility-chain", str(bad_pair))
    if not (p.QR > p.cR / p.deltaR):
        bad("qr-bound")
    _check_rank2(p.rank2, f"{where}/rank2", v)
    if p.r == 2:
        if p.Delta.get(frozenset()) != p.rank2.Sigma2 * p.L:
            bad("delta-empty-base")
        if p.Delta.get(frozenset({1})) != p.rank2.Gamma2:
            bad("delta-one-base")
        if p.ThetaR != p.rank2.Theta2 or p.deltaR != p.rank2.delta2 or p.QR != p.rank2.Q2:
            bad("rank2-projection")
        return
    inner = p.inner
    if inner is None:
        bad("missing-inner")
        return
    if p.epsilon_prev != p.epsilonR / 2:
        bad("epsilon-prev-chain")
    if p.epsilon2_chain is not None and p.rank2.epsilon2 != p.epsilon2_chain:
        bad("epsilon2-chain-record")
    for a_prev, val in inner.Delta.items():
        if p.Delta.get(a_prev) != p.rank2.Sigma2 * p.L * val:
            bad("delta-recursion-sigma", subset_key(a_prev))
        if p.Delta.get(a_prev | {p.r - 1}) != p.rank2.Gamma2 * val:
            bad("delta-recursion-gamma", subset_key(a_prev))
    if p.ThetaR != max(p.rank2.Theta2, inner.ThetaR):
        bad("theta-max-rule")
    if p.deltaR != p.rank2.delta2 / 2:
        bad("delta-r-halving")
    _check_rankR(inner, f"{where}/inner", v)


def params_check(family: SetFamily) -> ScheduleReport:
    """Exact re-verification of every recorded stage-parameter equation."""
    v: list[dict] = []
    for st in family.stages:
        where = f"stage{st.N}"
        p = st.params
        if isinstance(p, StageParams1):
            if family.r != 1:
                v.append({"name": "params-kind", "where": where, "detail": "r1 params on r>=2 family"})
                continue
            if st.Q != p.L * p.Theta:
                v.append({"name": "q-equals-L-theta", "where": where, "detail": ""})
            if st.Delta.get(frozenset()) != p.Sigma * p.L:
                v.append({"name": "delta-empty-sigma-L", "where": where, "detail": ""})
            if p.track == PAPER:
                if p.kappa is None or p.kappa != kappa_of(p.epsilon):
                    v.append({"name": "kappa-floor", "where": where, "detail": ""})
                elif p.Sigma % math.factorial(p.kappa):
                    v.append({"name": "sigma-factorial-divides", "where": where, "detail": ""})
        else:
            if st.Q != p.QR or st.Theta != p.ThetaR or dict(st.Delta) != dict(p.Delta):
                v.append({"name": "stage-params-mismatch", "where": where, "detail": ""})
            if st.delta != p.deltaR:
                v.append({"name": "stage-delta-mismatch", "where": where, "detail": ""})
            _check_rankR(p, where, v)
    return ScheduleReport(passed=not v, violations=tuple(v), overlaps=())


# ---------------------------------------------------------------------------
# unions over r (the final construction)


@dataclass(frozen=True)
class UnionComponent:
    r: int
    N: int
    epsilon: Fraction
    blocks: tuple[BlockSpec, ...]
    source_digest: str

    @property
    def min_element(self) -> int:
        return min(b.min_element for b in self.blocks)

    @property
    def max_element(self) -> int:
        return max(b.max_element for b in self.blocks)


@dataclass(frozen=True)
class UnionMembership:
    r: int
    stage: int
    kind: str
    A: Optional[frozenset]
    index: int


@dataclass(frozen=True)
class FamilyUnion:
    components: tuple[UnionComponent, ...]

    def contains(self, n: int) -> Optional[UnionMembership]:
        for comp in self.components:
            for b in comp.blocks:
                idx = b.index_of(n)
                if idx is not None:
                    return UnionMembership(r=comp.r, stage=comp.N, kind=b.kind, A=b.A, index=idx)
        return None

    def component_for_r(self, r: int) -> UnionComponent:
        for comp in self.components:
            if comp.r == r:
                return comp
        raise KeyError(r)

    def to_manifest(self) -> dict:
        return {
            "format": "bohrsets-union-v1",
            "components": [
                {
                    "r": c.r,
                    "N": c.N,
                    "epsilon": jsonio.frac_str(c.epsilon),
                    "source_digest": c.source_digest,
                    "blocks": [b.to_dict() for b in c.blocks],
                }
                for c in self.components
            ],
        }

    @classmethod
    def from_manifest(cls, d: dict) -> "FamilyUnion":
        if d.get("format") != "bohrsets-union-v1":
            raise UsageError("not a union manifest")
        comps = tuple(
            UnionComponent(
                r=c["r"],
                N=c["N"],
                epsilon=jsonio.parse_frac(c["epsilon"]),
                blocks=tuple(BlockSpec.from_dict(b) for b in c["blocks"]),
                source_digest=c["source_digest"],
            )
            for c in d["components"]
        )
        return cls(components=comps)


def bohr_union(
    picks: Sequence[tuple[SetFamily, int]],
    j_min: Optional[Sequence[int]] = None,
) -> FamilyUnion:
    """Union of one stage per family, with optional j_min truncation.

    The picked stage ranges must be pairwise separated (the whole range of
    one lies below the next); interleaving raises OverlapError.
    """
    comps = []
    for i, (fam, n_pick) in enumerate(picks):
        st = fam.stage_by_N(n_pick)
        jm = j_min[i] if j_min else 1
        blocks = []
        for b in st.blocks:
            if b.kind == SUBSET and jm > 1:
                if jm > b.Theta:
                    raise UsageError(f"j_min {jm} exceeds Theta for {b.label()}")
                b = BlockSpec(
                    stage=b.stage, kind=b.kind, H=b.H, L=b.L, epsilon=b.epsilon,
                    A=b.A, Q=b.Q, Delta=b.Delta, Theta=b.Theta, j_min=jm,
                )
            blocks.append(b)
        comps.append(
            UnionComponent(
                r=fam.r, N=st.N, epsilon=st.epsilon, blocks=tuple(blocks),
                source_digest=fam.digest(),
            )
        )
    comps.sort(key=lambda c: c.min_element)
    for a, b in zip(comps, comps[1:]):
        if a.max_element >= b.min_element:
            raise OverlapError(
                f"stage ranges interleave: r={a.r} reaches {a.max_element}, "
                f"r={b.r} starts at {b.min_element}"
            )
    return FamilyUnion(components=tuple(comps))


# ---------------------------------------------------------------------------
# the positive-density baseline


@dataclass(frozen=True)
class KatznelsonSet:
    thetas: tuple[UAngle, ...]
    delta: Fraction
    n_max: int
    ns: tuple[int, ...]
    caveat: str = "Q-independence not certified: angles are rational stand-ins"

    def to_dict(self) -> dict:
        return {
            "format": "bohrsets-katznelson-v1",
            "thetas": [str(t) for t in self.thetas],
            "delta": jsonio.frac_str(self.delta),
            "n_max": jsonio.int_str(self.n_max),
            "ns": [jsonio.int_str(n) for n in self.ns],
            "caveat": self.caveat,
        }


def katznelson_set(thetas: Sequence[UAngle], delta: Fraction, n_max: int) -> KatznelsonSet:
    """All n <= n_max with certified min_j |lambda_j^n + 1| < delta.

    |lambda^n + 1| is the chord at the distance of n*theta - 1/2 to Z.
    """
    delta = Fraction(delta)
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    if not thetas:
        raise ValueError("need at least one angle")
    cut = cut_for(delta)
    half = Fraction(1, 2)
    ns = []
    offsets = [-half for _ in thetas]
    for n in range(0, n_max + 1):
        if n > 0:
            for i, th in enumerate(thetas):
                offsets[i] += th.frac
        if any(cut.chord_below(dist_frac(x)) for x in offsets):
            ns.append(n)
    return KatznelsonSet(thetas=tuple(thetas), delta=delta, n_max=n_max, ns=tuple(ns))
