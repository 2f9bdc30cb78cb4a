"""Welfare-maximizing decomposable allocations via an integer program.

Variables per (voter i, alternative j): a binary x_ij saying whether i may
contribute to j, the contribution c_ij and the utility share u_ij. The rows
are

    Σ_j c_ij = 1/n
    c_ij ≤ x_ij
    Σ_i' c_i'j + (1 - p_ij) x_ij ≤ 1      (x_ij = 1 forces a_j ≤ p_ij)
    u_ij ≤ Σ_i' c_i'j
    u_ij ≤ p_ij

and the objective is Σ u_ij.

The search does not branch on single x_ij. If x_ij = 1 the allocation on j
is capped at p_ij, so only the smallest vote among the allowed contributors
matters. Every other voter voting at least that much can be allowed too at
no cost. It is therefore enough to pick, per alternative, a threshold among
its positive vote values and allow exactly the voters at or above it. The
branch-and-bound runs over those thresholds, one alternative per level, and
bounds each node with the LP relaxation where undecided x lie in [0, 1].
"""
import itertools
from dataclasses import dataclass
from fractions import Fraction

from .core import BudgetAggError, InternalInvariantError, Profile, Vector, social_welfare
from .decomp import DecompositionCertificate, greedy_decomp, verify_certificate
from .lp import EQ, GE, LE, LinearProgram, lp_solve

DEFAULT_NODE_LIMIT = 10**6


class NodeLimitExceeded(BudgetAggError):
    def __init__(self, limit):
        self.limit = limit
        super().__init__(f"branch-and-bound exceeded the node limit of {limit}")


@dataclass(frozen=True)
class IPModel:
    lp: LinearProgram
    n: int
    m: int

    def x(self, i, j):
        return i * self.m + j

    def c(self, i, j):
        return self.n * self.m + i * self.m + j

    def u(self, i, j):
        return 2 * self.n * self.m + i * self.m + j

    @property
    def binaries(self) -> list:
        return [self.x(i, j) for i in range(self.n) for j in range(self.m)]

    def with_pattern(self, x) -> LinearProgram:
        """The LP with every binary fixed to the given 0/1 matrix."""
        lp = self.lp.copy()
        for i in range(self.n):
            for j in range(self.m):
                v = Fraction(x[i][j])
                lp.lower[self.x(i, j)] = v
                lp.upper[self.x(i, j)] = v
        return lp


@dataclass(frozen=True)
class OptDecompResult:
    allocation: Vector
    contributions: tuple
    welfare: Fraction
    nodes_explored: int


def build_ip(p: Profile) -> IPModel:
    n, m = p.n, p.m
    lp = LinearProgram(3 * n * m, upper=[Fraction(1)] * (3 * n * m))
    model = IPModel(lp, n, m)
    rng_i, rng_j = range(n), range(m)
    for i in rng_i:
        lp.add({model.c(i, j): 1 for j in rng_j}, EQ, Fraction(1, n))
    for i in rng_i:
        for j in rng_j:
            lp.add({model.c(i, j): 1, model.x(i, j): -1}, LE, 0)
    for i in rng_i:
        for j in rng_j:
            row = {model.c(k, j): 1 for k in rng_i}
            row[model.x(i, j)] = 1 - p.votes[i][j]
            lp.add(row, LE, 1)
    for i in rng_i:
        for j in rng_j:
            row = {model.c(k, j): -1 for k in rng_i}
            row[model.u(i, j)] = 1
            lp.add(row, LE, 0)
    for i in rng_i:
        for j in rng_j:
            lp.add({model.u(i, j): 1}, LE, p.votes[i][j])
    lp.objective = {model.u(i, j): Fraction(1) for i in rng_i for j in rng_j}
    return model


def _thresholds(p: Profile) -> list:
    """Candidate caps per alternative, highest first; [None] for an unfunded column."""
    out = []
    for col in p.sorted_columns:
        vals = sorted({v for v in col if v > 0}, reverse=True)
        out.append(vals or [None])
    return out


def _node_lp(model: IPModel, p: Profile, chosen: list) -> LinearProgram:
    lp = model.lp.copy()
    for i in range(p.n):
        for j in range(p.m):
            v = p.votes[i][j]
            k = model.x(i, j)
            if v == 0:
                lp.upper[k] = Fraction(0)
            elif j < len(chosen):
                cap = chosen[j]
                bit = Fraction(1 if cap is not None and v >= cap else 0)
                lp.lower[k] = lp.upper[k] = bit
    return lp


def _search(p: Profile, node_limit: int, target: Fraction | None = None):
    """Depth-first search over per-alternative thresholds.

    Without a target: returns (best welfare, all optimal leaves, nodes).
    With a target: stops at the first leaf reaching it.
    """
    model = build_ip(p)
    options = _thresholds(p)
    best = social_welfare(p, greedy_decomp(p).allocation) if target is None else target
    leaves: list = []
    nodes = 0
    found = False

    def visit(chosen):
        nonlocal nodes, best, leaves, found
        nodes += 1
        if nodes > node_limit:
            raise NodeLimitExceeded(node_limit)
        sol = lp_solve(_node_lp(model, p, chosen))
        if sol is None or sol.value < best:
            return
        if len(chosen) == p.m:
            if target is not None:
                found = True
            elif sol.value > best:
                best, leaves = sol.value, [list(chosen)]
            else:
                leaves.append(list(chosen))
            return
        for cap in options[len(chosen)]:
            visit(chosen + [cap])
            if found:
                return

    visit([])
    return model, best, leaves, nodes, found


def _egalitarian_allocation(model: IPModel, p: Profile, chosen: list, welfare: Fraction) -> Vector:
    """Optimal allocation of one leaf whose entries, sorted descending, are lexicographically smallest.

    Standard progressive lowering: minimise the largest free entry, pin every
    entry that cannot go below that level, repeat. The result is unique on a
    convex set.
    """
    base = _node_lp(model, p, chosen)
    base.add(dict(base.objective), GE, welfare)
    t = base.num_vars
    base = LinearProgram(t + 1, {}, list(base.constraints), base.lower + [Fraction(0)], base.upper + [None])
    cols = [{model.c(i, j): Fraction(1) for i in range(p.n)} for j in range(p.m)]
    out: dict = {}
    while len(out) < p.m:
        free = [j for j in range(p.m) if j not in out]
        lp = base.copy()
        for j in free:
            lp.add({**cols[j], t: -1}, LE, 0)
        lp.objective = {t: Fraction(-1)}
        sol = lp_solve(lp)
        if sol is None:
            raise InternalInvariantError("optimal leaf became infeasible")
        level = -sol.value
        capped = base.copy()
        for j in free:
            capped.add(cols[j], LE, level)
        pinned = []
        for j in free:
            capped.objective = {k: -v for k, v in cols[j].items()}
            if -lp_solve(capped).value == level:
                pinned.append(j)
        if not pinned:
            raise InternalInvariantError("progressive lowering made no progress")
        for j in pinned:
            out[j] = level
            base.add(cols[j], EQ, level)
    return tuple(out[j] for j in range(p.m))


def _lexmin_contributions(p: Profile, a: Vector) -> tuple:
    n, m = p.n, p.m
    lp = LinearProgram(n * m, upper=[Fraction(0)] * (n * m))
    for i in range(n):
        for j in range(m):
            if a[j] > 0 and p.votes[i][j] >= a[j]:
                lp.upper[i * m + j] = a[j]
    for i in range(n):
        lp.add({i * m + j: 1 for j in range(m)}, EQ, Fraction(1, n))
    for j in range(m):
        lp.add({i * m + j: 1 for i in range(n)}, EQ, a[j])
    for k in range(n * m):
        if lp.upper[k] == lp.lower[k]:
            continue
        lp.objective = {k: Fraction(-1)}
        sol = lp_solve(lp)
        if sol is None:
            raise InternalInvariantError("allocation lost its decomposition")
        lp.lower[k] = lp.upper[k] = -sol.value
    sol = lp_solve(LinearProgram(lp.num_vars, {}, lp.constraints, lp.lower, lp.upper))
    if sol is None:
        raise InternalInvariantError("allocation lost its decomposition")
    return tuple(tuple(sol.x[i * m:(i + 1) * m]) for i in range(n))


def util_decomp(p: Profile, node_limit: int = DEFAULT_NODE_LIMIT) -> OptDecompResult:
    """Decomposable allocation of maximum welfare.

    Ties go to the allocation whose entries sorted in decreasing order are
    lexicographically smallest (the most even one), then to the
    lexicographically smallest allocation, then to the lexicographically
    smallest contribution matrix (row-major).
    """
    model, best, leaves, nodes, _ = _search(p, node_limit)
    if not leaves:
        raise InternalInvariantError("no leaf reached the greedy welfare")
    candidates = {_egalitarian_allocation(model, p, leaf, best) for leaf in leaves}
    a = min(candidates, key=lambda v: (sorted(v, reverse=True), v))
    c = _lexmin_contributions(p, a)
    if not verify_certificate(p, DecompositionCertificate(a, c)):
        raise InternalInvariantError("optimal certificate failed verification")
    w = social_welfare(p, a)
    if w != best:
        raise InternalInvariantError(f"welfare {w} differs from the LP optimum {best}")
    return OptDecompResult(a, c, w, nodes)


def dwt_decide(p: Profile, C, node_limit: int = DEFAULT_NODE_LIMIT) -> bool:
    """Is there a decomposable allocation with welfare at least C?"""
    C = Fraction(C)
    if C <= 0:
        return True
    *_, found = _search(p, node_limit, target=C)
    return found


def exhaustive_optimum(p: Profile) -> Fraction:
    """Best IP value over all 2^(n·m) binary patterns; exponential, for cross-checking."""
    model = build_ip(p)
    best = None
    for bits in itertools.product((0, 1), repeat=p.n * p.m):
        x = [bits[i * p.m:(i + 1) * p.m] for i in range(p.n)]
        sol = lp_solve(model.with_pattern(x))
        if sol is not None and (best is None or sol.value > best):
            best = sol.value
    return best
