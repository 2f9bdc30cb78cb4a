"""Axiom checks, welfare bounds, instance families and randomized experiments."""
import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, isqrt
from typing import Callable, Iterable, Sequence

from .core import (
    BudgetAggError,
    Profile,
    Vector,
    level_vector,
    overlap,
    social_welfare,
    utility,
    validate_profile,
    welfare_optimal,
)
from .decomp import greedy_rule
from .phantoms import Mechanism, phantom_rule

Rule = Callable[[Profile], Vector]


class EllOutOfRange(BudgetAggError):
    pass


class BadN(BudgetAggError):
    pass


class BadEps(BudgetAggError):
    pass


class BadDenominator(BudgetAggError):
    pass


class NotSingleMinded(BudgetAggError):
    pass


def as_rule(mech) -> Rule:
    """Accept a Mechanism, its name, "greedydecomp", or a plain function."""
    if isinstance(mech, str):
        if mech.strip().lower().replace("-", "") == "greedydecomp":
            return greedy_rule
        mech = Mechanism.parse(mech)
    if isinstance(mech, Mechanism):
        return phantom_rule(mech)
    return mech


def rule_name(mech) -> str:
    if isinstance(mech, Mechanism):
        return mech.value
    if isinstance(mech, str):
        return as_rule(mech).__name__
    return getattr(mech, "__name__", repr(mech))


# bounds

def alpha_star(n: int) -> Fraction:
    """max over 1 ≤ l ≤ n of n·l / (n + l(l-1)).

    The ratio grows while l² < n and shrinks after, so only the two integers
    around √n need checking.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    r = isqrt(n)
    return max(Fraction(n * l, n + l * (l - 1)) for l in {max(1, r), min(n, r + 1)})


def below_sqrt_bound(r: Fraction, n: int) -> bool:
    """r ≤ n / (2√n - 1), checked as 4r²n ≤ (n + r)² for r ≥ 0."""
    return r >= 0 and 4 * r * r * n <= (n + r) ** 2


def below_m_bound(r: Fraction, m: int) -> bool:
    """r ≤ m / (2√m - 2), checked as 4r²m ≤ (m + 2r)² for r ≥ 0, m ≥ 2."""
    if m < 2:
        raise ValueError("m must be at least 2")
    return r >= 0 and 4 * r * r * m <= (m + 2 * r) ** 2


@dataclass(frozen=True)
class BoundReport:
    n: int
    alpha_star: Fraction
    holds: bool
    tight: bool


def alpha_bound_report(n: int) -> BoundReport:
    a = alpha_star(n)
    return BoundReport(n, a, below_sqrt_bound(a, n), 4 * a * a * n == (n + a) ** 2)


def check_alpha_bound(n: int) -> bool:
    return alpha_bound_report(n).holds


# axioms

def check_range_respect(p: Profile, a: Sequence[Fraction]) -> bool:
    lo, hi = p.levels[0], p.levels[-1]
    return all(lo[j] <= a[j] <= hi[j] for j in range(p.m))


@dataclass(frozen=True)
class SpendingViolation:
    k: int
    overlap: Fraction
    required: Fraction


@dataclass(frozen=True)
class SpendingReport:
    violations: tuple

    def __bool__(self):
        return not self.violations


def check_proportional_spending(p: Profile, a: Sequence[Fraction]) -> SpendingReport:
    """overlap(a, μ^k) ≥ min((n-k+1)/n, Σ_j μ^k_j) for every level k."""
    bad = []
    for k in range(1, p.n + 1):
        mu = level_vector(p, k)
        need = min(Fraction(p.n - k + 1, p.n), sum(mu))
        got = overlap(a, mu)
        if got < need:
            bad.append(SpendingViolation(k, got, need))
    return SpendingReport(tuple(bad))


def is_single_minded(p: Profile) -> bool:
    return all(1 in row for row in p.votes)


def mean_vote(p: Profile) -> Vector:
    return tuple(sum(p.column(j)) / p.n for j in range(p.m))


def check_single_minded_proportionality(mech, p: Profile) -> bool:
    if not is_single_minded(p):
        raise NotSingleMinded("every voter must put the whole budget on one alternative")
    return tuple(as_rule(mech)(p)) == mean_vote(p)


def pareto_dominates(p: Profile, a: Sequence[Fraction], b: Sequence[Fraction]) -> bool:
    ua = [utility(p, i, a) for i in range(p.n)]
    ub = [utility(p, i, b) for i in range(p.n)]
    return all(x >= y for x, y in zip(ua, ub)) and any(x > y for x, y in zip(ua, ub))


# instance families

def _unit(m, j):
    return [1 if k == j else 0 for k in range(m)]


def worst_case_family(n: int, ell: int) -> Profile:
    """n-ℓ voters alone on their own alternative, ℓ voters together on the last."""
    if not 1 <= ell <= n:
        raise EllOutOfRange(f"ell={ell} outside 1..{n}")
    m = n - ell + 1
    if m < 2:
        raise EllOutOfRange(f"ell={ell} leaves a single alternative")
    return validate_profile([_unit(m, i) for i in range(n - ell)] + [_unit(m, m - 1)] * ell)


def pwu_lower_bound_family(n: int) -> Profile:
    """The first n/2 voters spread 1/n over n private alternatives each; the rest share one."""
    if n < 4 or n % 2:
        raise BadN(f"n={n} must be even and at least 4")
    m = n * n // 2 + 1
    rows = []
    for i in range(n // 2):
        rows.append([Fraction(1, n) if i * n <= j < (i + 1) * n else 0 for j in range(m)])
    rows += [_unit(m, m - 1)] * (n // 2)
    return validate_profile(rows)


def _check_gap_args(n, eps):
    if n < 4 or n % 2:
        raise BadN(f"n={n} must be even and at least 4")
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise BadEps(f"eps={eps} must lie strictly between 0 and 1")
    return eps


def gap_family(n: int, eps) -> Profile:
    eps = _check_gap_args(n, eps)
    h = n // 2
    rows = []
    for i in range(h):
        row = [Fraction(0)] * (n + 1)
        row[i] = Fraction(n - 1, n)
        row[i + h] = Fraction(1, n)
        rows.append(row)
    for _ in range(h):
        rows.append([0] * h + [(1 + eps) / n] * h + [(1 - eps) / 2])
    return validate_profile(rows)


def gap_family_witness(n: int, eps) -> tuple[Vector, tuple]:
    """A decomposable allocation of the gap family with its contributions."""
    eps = _check_gap_args(n, eps)
    h = n // 2
    c = []
    for i in range(h):
        row = [Fraction(0)] * (n + 1)
        row[i] = eps / n
        row[i + h] = (1 - eps) / n
        c.append(tuple(row))
    for i in range(h):
        row = [Fraction(0)] * (n + 1)
        row[h + i] = eps / n
        row[n] = (1 - eps) / n
        c.append(tuple(row))
    a = tuple(sum(r[j] for r in c) for j in range(n + 1))
    return a, tuple(c)


# random and exhaustive profiles

@dataclass(frozen=True)
class RandomProfileSpec:
    n: int
    m: int
    denominator: int
    seed: int = 0


def substream(seed: int, trial: int) -> random.Random:
    """Independent deterministic generator for one trial."""
    return random.Random(f"{seed}/{trial}")


def unrank_composition(index: int, m: int, total: int) -> list:
    """The index-th way (lexicographic over bar positions) to split total into m parts."""
    slots = total + m - 1
    bars = []
    start = 0
    for left in range(m - 1, 0, -1):
        for pos in range(start, slots):
            block = comb(slots - pos - 1, left - 1)
            if index < block:
                bars.append(pos)
                start = pos + 1
                break
            index -= block
    parts, prev = [], -1
    for b in bars + [slots]:
        parts.append(b - prev - 1)
        prev = b
    return parts


def lattice_row(rng: random.Random, m: int, D: int) -> Vector:
    idx = rng.randrange(comb(D + m - 1, m - 1))
    return tuple(Fraction(x, D) for x in unrank_composition(idx, m, D))


def random_profile(spec: RandomProfileSpec, rng: random.Random | None = None) -> Profile:
    """Rows drawn uniformly from the simplex points with denominator D."""
    if spec.denominator < 1:
        raise BadDenominator(f"denominator {spec.denominator} must be positive")
    if rng is None:
        rng = random.Random(spec.seed)
    return validate_profile([lattice_row(rng, spec.m, spec.denominator) for _ in range(spec.n)])


def lattice_rows(m: int, D: int) -> list:
    return [tuple(Fraction(x, D) for x in unrank_composition(k, m, D)) for k in range(comb(D + m - 1, m - 1))]


def enumerate_profiles(n: int, m: int, D: int) -> Iterable[Profile]:
    """Every profile whose entries are multiples of 1/D."""
    rows = lattice_rows(m, D)
    for combo in itertools.product(rows, repeat=n):
        yield Profile(combo)


# experiments

@dataclass(frozen=True)
class Manipulation:
    profile: Profile
    voter: int
    misreport: Vector
    truthful_utility: Fraction
    manipulated_utility: Fraction

    @property
    def gain(self) -> Fraction:
        return self.manipulated_utility - self.truthful_utility


@dataclass
class TruthReport:
    mechanism: str
    pairs_checked: int = 0
    violations: list = field(default_factory=list)

    def __bool__(self):
        return not self.violations


def manipulation_gain(mech, p: Profile, voter: int, misreport, honest_allocation=None) -> Manipulation:
    rule = as_rule(mech)
    if honest_allocation is None:
        honest_allocation = rule(p)
    lied = p.replace_row(voter, misreport)
    return Manipulation(
        p, voter, lied.votes[voter], utility(p, voter, honest_allocation), utility(p, voter, rule(lied))
    )


def truthfulness_probe(mech, spec: RandomProfileSpec, trials: int, seeded_cases=()) -> TruthReport:
    """Try one sampled misreport per voter per sampled profile.

    seeded_cases are extra (profile, voter, misreport) triples checked first.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rule = as_rule(mech)
    report = TruthReport(rule_name(mech))

    def check(p, i, lie, honest=None):
        report.pairs_checked += 1
        res = manipulation_gain(rule, p, i, lie, honest)
        if res.gain > 0:
            report.violations.append(res)

    for p, i, lie in seeded_cases:
        check(p, i, lie)
    for trial in range(trials):
        rng = substream(spec.seed, trial)
        p = random_profile(spec, rng)
        honest = rule(p)
        for i in range(p.n):
            check(p, i, lattice_row(rng, spec.m, spec.denominator), honest)
    return report


# the claimed welfare order: each pair (A, B) means A never has lower welfare than B
DOMINANCE_EDGES = (
    (Mechanism.UTIL, Mechanism.UTIL_PROP),
    (Mechanism.UTIL_PROP, Mechanism.PIECEWISE_UNIFORM),
    (Mechanism.UTIL_PROP, Mechanism.LADDER),
    (Mechanism.PIECEWISE_UNIFORM, Mechanism.INDEPENDENT_MARKETS),
    (Mechanism.LADDER, Mechanism.INDEPENDENT_MARKETS),
    (Mechanism.INDEPENDENT_MARKETS, Mechanism.FAN),
    (Mechanism.FAN, Mechanism.GREEDY_MAX),
    (Mechanism.GREEDY_MAX, Mechanism.CONSTANT),
)
INCOMPARABLE = ((Mechanism.PIECEWISE_UNIFORM, Mechanism.LADDER),)


@dataclass
class DominancePair:
    mech_a: object
    mech_b: object
    claimed: bool
    a_higher: int = 0
    equal: int = 0
    b_higher: int = 0
    counterexample: Profile | None = None
    witness_a: Profile | None = None
    witness_b: Profile | None = None

    @property
    def holds(self) -> bool:
        """A claimed edge must never lose; an incomparable pair needs wins both ways."""
        if self.claimed:
            return self.b_higher == 0
        return self.a_higher > 0 and self.b_higher > 0


def compare_on(pairs, profiles: Iterable[Profile], claimed=None) -> list:
    """Tally exact welfare comparisons of each pair over the given profiles."""
    pairs = list(pairs)
    if claimed is None:
        claimed = [tuple(pr) in DOMINANCE_EDGES for pr in pairs]
    out = [DominancePair(a, b, c) for (a, b), c in zip(pairs, claimed)]
    mechs = {m for pr in pairs for m in pr}
    rules = {m: as_rule(m) for m in mechs}
    for p in profiles:
        w = {m: social_welfare(p, rules[m](p)) for m in mechs}
        for rec in out:
            wa, wb = w[rec.mech_a], w[rec.mech_b]
            if wa > wb:
                rec.a_higher += 1
                rec.witness_a = rec.witness_a or p
            elif wa < wb:
                rec.b_higher += 1
                rec.witness_b = rec.witness_b or p
                if rec.claimed and rec.counterexample is None:
                    rec.counterexample = p
            else:
                rec.equal += 1
    return out


def dominance_experiment(pairs, spec: RandomProfileSpec, trials: int) -> list:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    profiles = (random_profile(spec, substream(spec.seed, t)) for t in range(trials))
    return compare_on(pairs, profiles)


def default_pairs() -> list:
    return list(DOMINANCE_EDGES) + list(INCOMPARABLE)


@dataclass(frozen=True)
class AuditReport:
    n: int
    m: int
    alpha_star: Fraction
    optimal_welfare: Fraction
    utilprop_welfare: Fraction
    greedy_welfare: Fraction
    r_utilprop: Fraction
    r_greedy: Fraction
    utilprop_within_alpha: bool
    utilprop_within_m_bound: bool
    greedy_within_alpha: bool
    greedy_within_m_bound: bool  # recorded only; not part of ok

    @property
    def alpha_tight(self) -> bool:
        return self.r_utilprop == self.alpha_star

    @property
    def ok(self) -> bool:
        return self.utilprop_within_alpha and self.utilprop_within_m_bound and self.greedy_within_alpha


def approximation_audit(p: Profile) -> AuditReport:
    _, w_opt = welfare_optimal(p)
    w_up = social_welfare(p, phantom_rule(Mechanism.UTIL_PROP)(p))
    w_gd = social_welfare(p, greedy_rule(p))
    r_u, r_g = w_opt / w_up, w_opt / w_gd
    a = alpha_star(p.n)
    return AuditReport(
        p.n, p.m, a, w_opt, w_up, w_gd, r_u, r_g,
        r_u <= a, below_m_bound(r_u, p.m), r_g <= a, below_m_bound(r_g, p.m),
    )
