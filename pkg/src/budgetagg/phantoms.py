"""Moving-phantom mechanisms with piecewise-linear phantom curves."""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

from .core import (
    BudgetAggError,
    InternalInvariantError,
    Profile,
    Vector,
    social_welfare,
)

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


class Mechanism(Enum):
    CONSTANT = "Constant"
    GREEDY_MAX = "GreedyMax"
    FAN = "Fan"
    INDEPENDENT_MARKETS = "IndependentMarkets"
    LADDER = "Ladder"
    PIECEWISE_UNIFORM = "PiecewiseUniform"
    UTIL = "Util"
    UTIL_PROP = "UtilProp"

    @classmethod
    def parse(cls, name: str) -> "Mechanism":
        key = name.strip().lower().replace("-", "").replace("_", "")
        key = _ALIASES.get(key, key)
        for mech in cls:
            if mech.value.lower() == key:
                return mech
        raise UnknownMechanism(name)

    @property
    def cli_name(self) -> str:
        return self.value.lower()


_ALIASES = {"pwu": "piecewiseuniform", "im": "independentmarkets"}


class UnknownMechanism(BudgetAggError):
    def __init__(self, name):
        names = ", ".join(m.cli_name for m in Mechanism)
        super().__init__(f"unknown mechanism {name!r}; expected one of {names}")


class TimeOutOfRange(BudgetAggError):
    pass


class NoNormalization(InternalInvariantError):
    pass


class Curve:
    """Continuous piecewise-linear function on [0, 1] given by its breakpoints."""

    __slots__ = ("points", "_segments")

    def __init__(self, points):
        pts = []
        for t, v in points:
            t, v = Fraction(t), Fraction(v)
            if pts and pts[-1][0] == t:
                continue
            pts.append((t, v))
        if pts[0][0] != 0 or pts[-1][0] != 1:
            raise ValueError("breakpoints must span [0, 1]")
        self.points = tuple(pts)
        segs = []
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            slope = (v1 - v0) / (t1 - t0)
            segs.append((t1, slope, v0 - slope * t0))
        self._segments = tuple(segs)

    def __call__(self, t: Fraction) -> Fraction:
        for end, slope, icpt in self._segments:
            if t <= end:
                return icpt + slope * t if slope else icpt
        raise TimeOutOfRange(f"t = {t} outside [0, 1]")

    def __eq__(self, other):
        return isinstance(other, Curve) and self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def __repr__(self):
        return "Curve(" + ", ".join(f"({t}, {v})" for t, v in self.points) + ")"

    def crossings(self, values) -> set:
        """Kinks plus every time at which the curve passes strictly through one of values."""
        ts = {t for t, _ in self.points}
        for (t0, v0), (t1, v1) in zip(self.points, self.points[1:]):
            if v1 == v0:
                continue
            lo, hi = min(v0, v1), max(v0, v1)
            for v in values:
                if lo < v < hi:
                    ts.add(t0 + (v - v0) * (t1 - t0) / (v1 - v0))
        return ts


@lru_cache(maxsize=4096)
def phantom_curve(mech: Mechanism, n: int, k: int) -> Curve:
    """Phantom k (0..n) of the named system for n voters."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"phantom index {k} invalid for n={n}")
    share = Fraction(n - k, n)
    if mech is Mechanism.CONSTANT:
        pts = [(0, 0), (1, 1)]
    elif mech is Mechanism.GREEDY_MAX:
        pts = [(0, 0), (1, min(1, n - k))]
    elif mech is Mechanism.FAN:
        pts = [(0, 0), (share, share), (1, share)]
    elif mech is Mechanism.INDEPENDENT_MARKETS:
        pts = [(0, 0), (1, share)]
    elif mech is Mechanism.LADDER:
        start = Fraction(k, n)
        pts = [(0, 0), (start, 0), (1, 1 - start)]
    elif mech is Mechanism.PIECEWISE_UNIFORM:
        # first half: sweep from 0 to 1 - 2k/n (lower half of phantoms stays put),
        # second half: every phantom ends at (n-k)/n
        if 2 * k <= n:
            pts = [(0, 0), (HALF, 1 - Fraction(2 * k, n)), (1, share)]
        else:
            pts = [(0, 0), (HALF, 0), (1, share)]
    elif mech is Mechanism.UTIL:
        pts = [(0, 0), (Fraction(k, n + 1), 0), (Fraction(k + 1, n + 1), 1), (1, 1)]
    elif mech is Mechanism.UTIL_PROP:
        start = Fraction(k, n + 1)
        pts = [(0, 0), (start, 0), (start + share / (n + 1), share), (1, share)]
    else:
        raise UnknownMechanism(mech)
    return Curve(pts)


def eval_curve(curve: Curve, t) -> Fraction:
    t = Fraction(t)
    if t < 0 or t > 1:
        raise TimeOutOfRange(f"t = {t} outside [0, 1]")
    return curve(t)


@dataclass(frozen=True)
class PhantomSystem:
    mechanism: Mechanism
    n: int
    curves: tuple[Curve, ...]


@lru_cache(maxsize=256)
def build_system(mech: Mechanism, n: int) -> PhantomSystem:
    if n < 1:
        raise ValueError("n must be at least 1")
    return PhantomSystem(mech, n, tuple(phantom_curve(mech, n, k) for k in range(n + 1)))


def phantom_at(sys: PhantomSystem, k: int, t) -> Fraction:
    if not 0 <= k <= sys.n:
        raise ValueError(f"phantom index {k} outside 0..{sys.n}")
    return eval_curve(sys.curves[k], t)


def median_of(values: list) -> Fraction:
    values.sort()
    return values[len(values) // 2]


def median_at(p: Profile, sys: PhantomSystem, t, j: int) -> Fraction:
    vals = [eval_curve(c, t) for c in sys.curves]
    vals.extend(p.column(j))
    return median_of(vals)


@dataclass(frozen=True)
class NormalizationResult:
    t_star: Fraction
    allocation: Vector
    phantom_positions: Vector

    @property
    def medians_trace(self) -> Vector:
        return self.allocation


class MedianSum:
    """t -> Σ_j median of column j's votes and phantoms, on a sorted grid of candidate times.

    columns[j] holds the votes on alternative j and curves[j] the phantom
    curves used there. Between consecutive candidates no phantom crosses a
    vote, so every median and hence their sum is linear there.
    """

    def __init__(self, columns: Sequence[Sequence[Fraction]], curves: Sequence[Sequence[Curve]]):
        self.columns = [list(c) for c in columns]
        self.curves = curves
        cand = {ZERO, ONE}
        by_curve: dict = {}
        for col, cs in zip(columns, curves):
            for c in cs:
                by_curve.setdefault(id(c), (c, set()))[1].update(col)
        for c, vals in by_curve.values():
            cand |= c.crossings(vals)
        self.cand = sorted(cand)
        self._cache: dict = {}

    def __call__(self, t: Fraction) -> Fraction:
        pos: dict = {}
        s = ZERO
        for col, cs in zip(self.columns, self.curves):
            vals = []
            for c in cs:
                key = id(c)
                if key not in pos:
                    pos[key] = c(t)
                vals.append(pos[key])
            vals.extend(col)
            s += median_of(vals)
        return s

    def _at(self, i):
        t = self.cand[i]
        if t not in self._cache:
            self._cache[t] = self(t)
        return self._cache[t]

    def _first_index(self, pred):
        lo, hi = 0, len(self.cand) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if pred(self._at(mid)):
                hi = mid
            else:
                lo = mid + 1
        return lo

    def _interpolate(self, i):
        t0, t1 = self.cand[i - 1], self.cand[i]
        s0, s1 = self._at(i - 1), self._at(i)
        return t0 + (1 - s0) * (t1 - t0) / (s1 - s0)

    def first_time(self) -> Fraction:
        if self._at(len(self.cand) - 1) < 1:
            raise NoNormalization("medians never sum to 1")
        i = self._first_index(lambda s: s >= 1)
        return self.cand[i] if self._at(i) == 1 else self._interpolate(i)

    def last_time(self) -> Fraction:
        if self._at(len(self.cand) - 1) == 1:
            return ONE
        return self._interpolate(self._first_index(lambda s: s > 1))


def normalization_interval(p: Profile, sys: PhantomSystem) -> tuple[Fraction, Fraction]:
    """First and last time at which the medians sum to 1."""
    ms = MedianSum([p.column(j) for j in range(p.m)], [sys.curves] * p.m)
    return ms.first_time(), ms.last_time()


def normalization_time(p: Profile, sys: PhantomSystem) -> NormalizationResult:
    if sys.n != p.n:
        raise ValueError(f"system built for n={sys.n}, profile has n={p.n}")
    t_star = MedianSum([p.column(j) for j in range(p.m)], [sys.curves] * p.m).first_time()
    positions = tuple(c(t_star) for c in sys.curves)
    alloc = tuple(median_of(list(positions) + list(p.column(j))) for j in range(p.m))
    if sum(alloc) != 1:
        raise InternalInvariantError(f"medians sum to {sum(alloc)} at t*={t_star}")
    return NormalizationResult(t_star, alloc, positions)


@dataclass
class MechanismReport:
    mechanism: str
    allocation: Vector
    welfare: Fraction
    t_star: Fraction | None = None
    phantom_positions: Vector | None = None
    contributions: tuple[Vector, ...] | None = None
    extra: dict = field(default_factory=dict)


def run_phantom(p: Profile, mech: Mechanism) -> MechanismReport:
    res = normalization_time(p, build_system(mech, p.n))
    return MechanismReport(
        mechanism=mech.value,
        allocation=res.allocation,
        welfare=social_welfare(p, res.allocation),
        t_star=res.t_star,
        phantom_positions=res.phantom_positions,
    )


def phantom_rule(mech: Mechanism) -> Callable[[Profile], Vector]:
    """The mechanism as a plain profile -> allocation function."""

    def rule(p: Profile) -> Vector:
        return normalization_time(p, build_system(mech, p.n)).allocation

    rule.__name__ = mech.value
    return rule
