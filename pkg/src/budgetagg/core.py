"""Profiles, allocations, order statistics, utilities and welfare.

Every number here is a ``fractions.Fraction``; nothing is ever rounded.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

Rational = Fraction
Vector = tuple[Fraction, ...]


class BudgetAggError(Exception):
    """Base class for input errors raised by this package."""


class ProfileShapeError(BudgetAggError):
    pass


class RowNotNormalized(BudgetAggError):
    def __init__(self, row: int, total: Fraction):
        self.row = row
        self.total = total
        super().__init__(f"row {row + 1} sums to {total}, expected 1")


class EntryOutOfRange(BudgetAggError):
    def __init__(self, row: int, col: int, value: Fraction):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"entry ({row + 1}, {col + 1}) = {value} is outside [0, 1]")


class LevelOutOfRange(BudgetAggError):
    pass


class LengthMismatch(BudgetAggError):
    pass


class VoterOutOfRange(BudgetAggError):
    pass


class DimensionMismatch(BudgetAggError):
    pass


class InternalInvariantError(RuntimeError):
    """Raised when a result fails a check that should hold by construction."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # floats are only accepted when they are exactly representable decimals
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Profile:
    votes: tuple[Vector, ...]

    def __post_init__(self):
        if len(self.votes) < 1:
            raise ProfileShapeError("a profile needs at least one voter")
        m = len(self.votes[0])
        if m < 2:
            raise ProfileShapeError("a profile needs at least two alternatives")
        for i, row in enumerate(self.votes):
            if len(row) != m:
                raise ProfileShapeError(f"row {i + 1} has {len(row)} entries, expected {m}")
            for j, v in enumerate(row):
                if not isinstance(v, Fraction):
                    raise TypeError("profile entries must be Fractions; use validate_profile")
                if v < 0 or v > 1:
                    raise EntryOutOfRange(i, j, v)
            total = sum(row, Fraction(0))
            if total != 1:
                raise RowNotNormalized(i, total)

    @property
    def n(self) -> int:
        return len(self.votes)

    @property
    def m(self) -> int:
        return len(self.votes[0])

    def column(self, j: int) -> Vector:
        return tuple(row[j] for row in self.votes)

    @cached_property
    def sorted_columns(self) -> tuple[Vector, ...]:
        return tuple(tuple(sorted(self.column(j))) for j in range(self.m))

    @cached_property
    def levels(self) -> tuple[Vector, ...]:
        # levels[k - 1] is the vector of k-th smallest entries per column
        cols = self.sorted_columns
        return tuple(tuple(col[k] for col in cols) for k in range(self.n))

    def replace_row(self, i: int, row: Sequence) -> "Profile":
        votes = list(self.votes)
        votes[i] = tuple(as_fraction(v) for v in row)
        return Profile(tuple(votes))

    def __str__(self):
        return "\n".join(" ".join(str(v) for v in row) for row in self.votes)


def validate_profile(raw: Sequence[Sequence]) -> Profile:
    """Build a Profile from any nested sequence of exact numbers."""
    return Profile(tuple(tuple(as_fraction(v) for v in row) for row in raw))


def validate_allocation(a: Sequence, m: int | None = None) -> Vector:
    a = tuple(as_fraction(v) for v in a)
    if m is not None and len(a) != m:
        raise DimensionMismatch(f"allocation has {len(a)} entries, expected {m}")
    for j, v in enumerate(a):
        if v < 0 or v > 1:
            raise EntryOutOfRange(0, j, v)
    total = sum(a, Fraction(0))
    if total != 1:
        raise RowNotNormalized(0, total)
    return a


def level_vector(p: Profile, k: int) -> Vector:
    """Per-alternative k-th smallest vote, with k counted from 1."""
    if not 1 <= k <= p.n:
        raise LevelOutOfRange(f"level {k} outside 1..{p.n}")
    return p.levels[k - 1]


def overlap(v: Sequence[Fraction], w: Sequence[Fraction]) -> Fraction:
    if len(v) != len(w):
        raise LengthMismatch(f"lengths {len(v)} and {len(w)} differ")
    return sum((min(x, y) for x, y in zip(v, w)), Fraction(0))


def utility(p: Profile, i: int, a: Sequence[Fraction]) -> Fraction:
    if not 0 <= i < p.n:
        raise VoterOutOfRange(f"voter {i} outside 0..{p.n - 1}")
    if len(a) != p.m:
        raise DimensionMismatch(f"allocation has {len(a)} entries, profile has {p.m}")
    return overlap(p.votes[i], a)


def social_welfare(p: Profile, a: Sequence[Fraction]) -> Fraction:
    if len(a) != p.m:
        raise DimensionMismatch(f"allocation has {len(a)} entries, profile has {p.m}")
    return sum((overlap(row, a) for row in p.votes), Fraction(0))


def welfare_by_levels(p: Profile, a: Sequence[Fraction]) -> Fraction:
    """Welfare summed over level vectors instead of voters; must agree with social_welfare."""
    if len(a) != p.m:
        raise DimensionMismatch(f"allocation has {len(a)} entries, profile has {p.m}")
    return sum((overlap(a, mu) for mu in p.levels), Fraction(0))


def welfare_optimal(p: Profile) -> tuple[Vector, Fraction]:
    """Welfare-maximizing allocation.

    The slice of alternative j between the (k-1)-th and k-th smallest vote is
    approved by n-k+1 voters, so filling slices in decreasing approval order
    is optimal.
    """
    n, m = p.n, p.m
    segments = []
    for j, col in enumerate(p.sorted_columns):
        lo = Fraction(0)
        for k, hi in enumerate(col, start=1):
            if hi > lo:
                segments.append((-(n - k + 1), j, lo, hi))
            lo = hi
    segments.sort(key=lambda s: (s[0], s[1], s[2]))
    a = [Fraction(0)] * m
    left = Fraction(1)
    for _, j, lo, hi in segments:
        if left == 0:
            break
        take = min(hi - lo, left)
        a[j] += take
        left -= take
    if left != 0:
        raise InternalInvariantError("column maxima sum to less than 1")
    a = tuple(a)
    return a, social_welfare(p, a)
