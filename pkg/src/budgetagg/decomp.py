"""Decomposable allocations: the greedy level-by-level mechanism and certificates.

An allocation is decomposable when every voter can put a share of 1/n of it
only on alternatives that end up funded at or below that voter's own vote.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import networkx as nx

from .core import (
    DimensionMismatch,
    InternalInvariantError,
    Profile,
    Vector,
    social_welfare,
    validate_allocation,
)
from .phantoms import MechanismReport

Matrix = tuple[Vector, ...]


@dataclass(frozen=True)
class DecompositionCertificate:
    allocation: Vector
    contributions: Matrix


@dataclass
class GreedyState:
    a_tilde: list
    budgets: list
    outer_k: int


def _payers(state: GreedyState, p: Profile) -> list:
    """For each alternative, the positive-budget voters with the highest vote above ã_j."""
    out = []
    for j in range(p.m):
        best = None
        group = []
        for i in range(p.n):
            v = p.votes[i][j]
            if state.budgets[i] <= 0 or v <= state.a_tilde[j]:
                continue
            if best is None or v > best:
                best, group = v, [i]
            elif v == best:
                group.append(i)
        out.append(group)
    return out


def max_tau(state: GreedyState, p: Profile) -> tuple[Fraction, list]:
    """Largest τ ≤ 1 such that no voter pays more than their remaining budget.

    Raising every alternative j towards min(μ^k_j, τ) is charged equally to its
    payers. Each voter's bill is piecewise linear in τ with kinks at the ã_j and
    μ^k_j, so scanning those values and interpolating once is exact.
    """
    mu = p.levels[state.outer_k - 1]
    payers = _payers(state, p)

    def bill(i, tau):
        s = Fraction(0)
        for j in range(p.m):
            if i in payers[j]:
                s += max(Fraction(0), min(mu[j], tau) - state.a_tilde[j]) / len(payers[j])
        return s

    cand = sorted({Fraction(0), Fraction(1), *state.a_tilde, *mu})
    tau_star = Fraction(1)
    for i in range(p.n):
        if state.budgets[i] <= 0:
            continue
        b = state.budgets[i]
        prev_t, prev_s = cand[0], bill(i, cand[0])
        for t in cand[1:]:
            s = bill(i, t)
            if s > b:
                tau_star = min(tau_star, prev_t + (b - prev_s) * (t - prev_t) / (s - prev_s))
                break
            prev_t, prev_s = t, s
    payments = [[Fraction(0)] * p.m for _ in range(p.n)]
    for j in range(p.m):
        if not payers[j]:
            continue
        share = max(Fraction(0), min(mu[j], tau_star) - state.a_tilde[j]) / len(payers[j])
        for i in payers[j]:
            payments[i][j] = share
    return tau_star, payments


def greedy_decomp(p: Profile) -> DecompositionCertificate:
    n, m = p.n, p.m
    state = GreedyState([Fraction(0)] * m, [Fraction(1, n)] * n, 1)
    contrib = [[Fraction(0)] * m for _ in range(n)]
    rounds = 0
    for k in range(1, n + 1):
        state.outer_k = k
        tau = Fraction(0)
        while tau != 1:
            rounds += 1
            if rounds > 2 * n:
                raise InternalInvariantError(f"more than {2 * n} inner rounds")
            tau, payments = max_tau(state, p)
            for i in range(n):
                for j in range(m):
                    pay = payments[i][j]
                    if pay:
                        state.budgets[i] -= pay
                        state.a_tilde[j] += pay
                        contrib[i][j] += pay
            if any(b < 0 for b in state.budgets):
                raise InternalInvariantError("a voter budget went negative")
    if any(state.budgets):
        raise InternalInvariantError("budgets not exhausted after the last level")
    cert = DecompositionCertificate(tuple(state.a_tilde), tuple(tuple(r) for r in contrib))
    if not verify_certificate(p, cert):
        raise InternalInvariantError("greedy certificate failed verification")
    return cert


def run_greedy(p: Profile) -> MechanismReport:
    cert = greedy_decomp(p)
    return MechanismReport(
        mechanism="GreedyDecomp",
        allocation=cert.allocation,
        welfare=social_welfare(p, cert.allocation),
        contributions=cert.contributions,
    )


def greedy_rule(p: Profile) -> Vector:
    return greedy_decomp(p).allocation


greedy_rule.__name__ = "GreedyDecomp"


def verify_certificate(p: Profile, cert: DecompositionCertificate, row_totals=None) -> bool:
    """Check contributions against the allocation and the profile.

    row_totals defaults to 1/n for every voter; weighted callers pass ω_i/b.
    """
    a, c = cert.allocation, cert.contributions
    if len(a) != p.m or len(c) != p.n or any(len(r) != p.m for r in c):
        raise DimensionMismatch("certificate shape does not match the profile")
    if row_totals is None:
        row_totals = [Fraction(1, p.n)] * p.n
    for i, row in enumerate(c):
        if sum(row) != row_totals[i]:
            return False
        for j, x in enumerate(row):
            if x < 0 or x > row_totals[i]:
                return False
            if x > 0 and a[j] > p.votes[i][j]:
                return False
    for j in range(p.m):
        if sum(c[i][j] for i in range(p.n)) != a[j]:
            return False
    return True


def is_decomposable(p: Profile, a) -> Matrix | None:
    """Contributions witnessing decomposability of a, or None.

    Max flow from voters (capacity 1/n each) to alternatives they vote at
    least a_j on, then to the sink (capacity a_j). Capacities are scaled to
    integers so the flow is exact.
    """
    a = validate_allocation(a, p.m)
    n, m = p.n, p.m
    scale = lcm(n, *(x.denominator for x in a))
    g = nx.DiGraph()
    for i in range(n):
        g.add_edge("s", ("v", i), capacity=scale // n)
        for j in range(m):
            if a[j] > 0 and p.votes[i][j] >= a[j]:
                g.add_edge(("v", i), ("a", j), capacity=scale // n)
    for j in range(m):
        if a[j] > 0:
            g.add_edge(("a", j), "t", capacity=int(a[j] * scale))
    if "t" not in g:
        return None
    value, flow = nx.maximum_flow(g, "s", "t", flow_func=nx.algorithms.flow.edmonds_karp)
    if value != scale:
        return None
    c = tuple(
        tuple(Fraction(flow.get(("v", i), {}).get(("a", j), 0), scale) for j in range(m))
        for i in range(n)
    )
    return c
