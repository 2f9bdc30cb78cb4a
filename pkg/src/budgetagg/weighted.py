"""Integer-weighted voters.

A voter of weight ω counts like ω identical voters. Moving-phantom mechanisms
are evaluated directly: with b = Σω, the phantom sitting between the i
lowest voters on alternative j and the rest is curve number Ω_ij of the
system built for b voters, where Ω_ij is the total weight of those i voters.
Only n+1 of the b+1 curves are needed per alternative.
"""
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .analysis import RandomProfileSpec, TruthReport, alpha_star, lattice_row, random_profile, substream
from .core import BudgetAggError, InternalInvariantError, Profile, overlap, validate_profile, welfare_optimal
from .decomp import DecompositionCertificate, greedy_decomp, verify_certificate
from .phantoms import (
    Mechanism,
    MechanismReport,
    MedianSum,
    median_of,
    build_system,
    normalization_time,
    phantom_curve,
)

DEFAULT_WEIGHT_CAP = 64


class WeightCapExceeded(BudgetAggError):
    def __init__(self, total, cap):
        super().__init__(f"total weight {total} exceeds the expansion cap {cap}")


class BadWeights(BudgetAggError):
    pass


@dataclass(frozen=True)
class WeightedProfile:
    profile: Profile
    weights: tuple[int, ...]

    def __post_init__(self):
        if len(self.weights) != self.profile.n:
            raise BadWeights(f"{len(self.weights)} weights for {self.profile.n} voters")
        for w in self.weights:
            if not isinstance(w, int) or isinstance(w, bool) or w < 1:
                raise BadWeights(f"weight {w!r} is not a positive integer")

    @property
    def total(self) -> int:
        return sum(self.weights)


def validate_weighted(votes, weights: Sequence[int]) -> WeightedProfile:
    p = votes if isinstance(votes, Profile) else validate_profile(votes)
    return WeightedProfile(p, tuple(weights))


def expand_weighted(wp: WeightedProfile, cap: int = DEFAULT_WEIGHT_CAP) -> Profile:
    """Each voter repeated as many times as their weight."""
    if wp.total > cap:
        raise WeightCapExceeded(wp.total, cap)
    return Profile(tuple(row for row, w in zip(wp.profile.votes, wp.weights) for _ in range(w)))


@dataclass(frozen=True)
class OmegaIndex:
    # table[j][i] is the weight of the i lowest voters on alternative j, i = 0..n
    table: tuple[tuple[int, ...], ...]


def omega_index(wp: WeightedProfile) -> OmegaIndex:
    p = wp.profile
    table = []
    for j in range(p.m):
        order = sorted(range(p.n), key=lambda i: (p.votes[i][j], i))
        prefix = [0]
        for i in order:
            prefix.append(prefix[-1] + wp.weights[i])
        table.append(tuple(prefix))
    return OmegaIndex(tuple(table))


def weighted_welfare(wp: WeightedProfile, a: Sequence[Fraction]) -> Fraction:
    return sum((w * overlap(row, a) for row, w in zip(wp.profile.votes, wp.weights)), Fraction(0))


def run_weighted_phantom(wp: WeightedProfile, mech: Mechanism) -> MechanismReport:
    p, b = wp.profile, wp.total
    omega = omega_index(wp)
    columns = [p.column(j) for j in range(p.m)]
    curves = [[phantom_curve(mech, b, k) for k in omega.table[j]] for j in range(p.m)]
    t_star = MedianSum(columns, curves).first_time()
    alloc = tuple(
        median_of([c(t_star) for c in curves[j]] + list(columns[j])) for j in range(p.m)
    )
    if sum(alloc) != 1:
        raise InternalInvariantError(f"weighted medians sum to {sum(alloc)}")
    return MechanismReport(
        mechanism=mech.value,
        allocation=alloc,
        welfare=weighted_welfare(wp, alloc),
        t_star=t_star,
        extra={"total_weight": b},
    )


def weighted_greedy_decomp(wp: WeightedProfile, cap: int = DEFAULT_WEIGHT_CAP) -> DecompositionCertificate:
    """Greedy decomposition of the expanded profile, with duplicate rows merged back."""
    cert = greedy_decomp(expand_weighted(wp, cap))
    rows, start = [], 0
    for w in wp.weights:
        block = cert.contributions[start:start + w]
        rows.append(tuple(sum(col) for col in zip(*block)))
        start += w
    merged = DecompositionCertificate(cert.allocation, tuple(rows))
    if not verify_weighted_certificate(wp, merged):
        raise InternalInvariantError("merged weighted certificate failed verification")
    return merged


def verify_weighted_certificate(wp: WeightedProfile, cert: DecompositionCertificate) -> bool:
    totals = [Fraction(w, wp.total) for w in wp.weights]
    return verify_certificate(wp.profile, cert, row_totals=totals)


@dataclass(frozen=True)
class WeightedAudit:
    total_weight: int
    alpha_star: Fraction
    optimal_welfare: Fraction
    utilprop_welfare: Fraction
    ratio: Fraction

    @property
    def ok(self) -> bool:
        return self.ratio <= self.alpha_star


def weighted_audit(wp: WeightedProfile, cap: int = DEFAULT_WEIGHT_CAP) -> WeightedAudit:
    """UtilProp's welfare ratio, measured against α*(b) for the total weight b."""
    _, best = welfare_optimal(expand_weighted(wp, cap))
    w = run_weighted_phantom(wp, Mechanism.UTIL_PROP).welfare
    return WeightedAudit(wp.total, alpha_star(wp.total), best, w, best / w)


def random_weighted_profile(spec: RandomProfileSpec, rng: random.Random, max_weight: int) -> WeightedProfile:
    p = random_profile(spec, rng)
    return WeightedProfile(p, tuple(rng.randint(1, max_weight) for _ in range(p.n)))


def unanimous_group_probe(mech: Mechanism, spec: RandomProfileSpec, trials: int, max_weight: int = 3) -> TruthReport:
    """Split one weighted voter into unit voters who each lie independently; none may gain.

    Violations are recorded as (weighted profile, voter, lies, honest utility,
    manipulated utility) tuples.
    """
    report = TruthReport(mech.value)
    for trial in range(trials):
        rng = substream(spec.seed, trial)
        wp = random_weighted_profile(spec, rng, max_weight)
        honest = run_weighted_phantom(wp, mech).allocation
        i = rng.randrange(wp.profile.n)
        lies = [lattice_row(rng, spec.m, spec.denominator) for _ in range(wp.weights[i])]
        rows = []
        for k, (row, w) in enumerate(zip(wp.profile.votes, wp.weights)):
            rows.extend(lies if k == i else [row] * w)
        lied = normalization_time(Profile(tuple(rows)), build_system(mech, wp.total)).allocation
        vote = wp.profile.votes[i]
        report.pairs_checked += 1
        if overlap(vote, lied) > overlap(vote, honest):
            report.violations.append((wp, i, tuple(lies), overlap(vote, honest), overlap(vote, lied)))
    return report
