"""Exact rational linear programming (two-phase tableau simplex, Bland's rule)."""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .core import BudgetAggError

LE, EQ, GE = "<=", "==", ">="


class Unbounded(BudgetAggError):
    pass


@dataclass
class LinearProgram:
    """maximize objective·x subject to constraints and lo ≤ x ≤ hi.

    Each constraint is (coefficients, relation, rhs) with coefficients given
    sparsely as {variable index: value}. hi=None means no upper bound.
    """
    num_vars: int
    objective: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)
    lower: list = None
    upper: list = None

    def __post_init__(self):
        if self.lower is None:
            self.lower = [Fraction(0)] * self.num_vars
        if self.upper is None:
            self.upper = [None] * self.num_vars

    def add(self, coeffs: Mapping[int, Fraction], rel: str, rhs) -> None:
        if rel not in (LE, EQ, GE):
            raise ValueError(f"bad relation {rel!r}")
        for v in coeffs:
            if not 0 <= v < self.num_vars:
                raise ValueError(f"variable {v} out of range")
        self.constraints.append(({v: Fraction(c) for v, c in coeffs.items() if c}, rel, Fraction(rhs)))

    def copy(self) -> "LinearProgram":
        return LinearProgram(
            self.num_vars, dict(self.objective), list(self.constraints),
            list(self.lower), list(self.upper),
        )


@dataclass(frozen=True)
class LPSolution:
    x: tuple
    value: Fraction


def _holds(lhs, rel, rhs):
    return lhs <= rhs if rel == LE else lhs >= rhs if rel == GE else lhs == rhs


def _presolve(lp: LinearProgram):
    """Fold fixed variables and single-variable rows into bounds.

    Returns (lower, upper, remaining rows) or None if infeasible.
    """
    lo, hi = list(lp.lower), list(lp.upper)
    rows = [(dict(c), rel, rhs) for c, rel, rhs in lp.constraints]
    changed = True
    while changed:
        changed = False
        kept = []
        for coeffs, rel, rhs in rows:
            for v in [v for v in coeffs if hi[v] is not None and lo[v] == hi[v]]:
                rhs -= coeffs.pop(v) * lo[v]
            if not coeffs:
                if not _holds(Fraction(0), rel, rhs):
                    return None
                changed = True
                continue
            if len(coeffs) == 1:
                (v, a), = coeffs.items()
                bound = rhs / a
                r = rel if a > 0 or rel == EQ else (GE if rel == LE else LE)
                if r in (LE, EQ) and (hi[v] is None or bound < hi[v]):
                    hi[v] = bound
                if r in (GE, EQ) and bound > lo[v]:
                    lo[v] = bound
                if hi[v] is not None and lo[v] > hi[v]:
                    return None
                changed = True
                continue
            kept.append((coeffs, rel, rhs))
        rows = kept
    return lo, hi, rows


def lp_solve(lp: LinearProgram) -> LPSolution | None:
    """Exact optimum, or None when infeasible. Raises Unbounded."""
    pre = _presolve(lp)
    if pre is None:
        return None
    lo, hi, rows = pre
    for v in range(lp.num_vars):
        if lo[v] is None:
            raise ValueError("free variables are not supported")
    free = [v for v in range(lp.num_vars) if hi[v] is None or lo[v] < hi[v]]
    col_of = {v: k for k, v in enumerate(free)}

    # shift x = lo + y with y >= 0; upper bounds become rows
    std = []
    for coeffs, rel, rhs in rows:
        shifted = rhs - sum(a * lo[v] for v, a in coeffs.items())
        std.append(({col_of[v]: a for v, a in coeffs.items() if v in col_of}, rel, shifted))
    for v in free:
        if hi[v] is not None:
            std.append(({col_of[v]: Fraction(1)}, LE, hi[v] - lo[v]))
    const = sum((lp.objective.get(v, 0) * lo[v] for v in range(lp.num_vars)), Fraction(0))
    cost = [Fraction(lp.objective.get(v, 0)) for v in free]

    y = _simplex(len(free), std, cost)
    if y is None:
        return None
    x = list(lo)
    for k, v in enumerate(free):
        x[v] = lo[v] + y[k]
    value = const + sum((c * yk for c, yk in zip(cost, y)), Fraction(0))
    return LPSolution(tuple(x), value)


def _simplex(nvars: int, rows: list, cost: list):
    """maximize cost·y, y >= 0, over rows; returns y or None if infeasible."""
    # normalise to nonnegative rhs
    norm = []
    for coeffs, rel, rhs in rows:
        if rhs < 0:
            coeffs = {v: -a for v, a in coeffs.items()}
            rhs = -rhs
            rel = GE if rel == LE else LE if rel == GE else EQ
        norm.append((coeffs, rel, rhs))

    nslack = sum(1 for _, rel, _ in norm if rel != EQ)
    nart = sum(1 for _, rel, _ in norm if rel != LE)
    width = nvars + nslack + nart
    art_start = nvars + nslack
    tab, rhs_col, basis = [], [], []
    s = nvars
    a = art_start
    for coeffs, rel, rhs in norm:
        row = [Fraction(0)] * width
        for v, c in coeffs.items():
            row[v] = c
        if rel == LE:
            row[s] = Fraction(1)
            basis.append(s)
            s += 1
        else:
            if rel == GE:
                row[s] = Fraction(-1)
                s += 1
            row[a] = Fraction(1)
            basis.append(a)
            a += 1
        tab.append(row)
        rhs_col.append(rhs)

    def pivot(r, c, red):
        prow = tab[r]
        pv = prow[c]
        if pv != 1:
            prow[:] = [x / pv for x in prow]
            rhs_col[r] /= pv
        nz = [k for k, x in enumerate(prow) if x]
        for rr, row in enumerate(tab):
            if rr != r and row[c]:
                f = row[c]
                for k in nz:
                    row[k] -= f * prow[k]
                rhs_col[rr] -= f * rhs_col[r]
        if red[c]:
            f = red[c]
            for k in nz:
                red[k] -= f * prow[k]
        basis[r] = c

    def run(red, allowed):
        while True:
            enter = next((c for c in range(width) if allowed[c] and red[c] > 0), None)
            if enter is None:
                return True
            best = None
            for r, row in enumerate(tab):
                if row[enter] > 0:
                    ratio = rhs_col[r] / row[enter]
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                        best = (ratio, r)
            if best is None:
                return False
            pivot(best[1], enter, red)

    allowed = [True] * width
    if nart:
        red = [Fraction(0)] * width
        for k in range(art_start, width):
            red[k] = Fraction(-1)
        for r, b in enumerate(basis):
            if b >= art_start:
                for k, x in enumerate(tab[r]):
                    if x:
                        red[k] += x
        run(red, allowed)
        if any(rhs_col[r] != 0 for r, b in enumerate(basis) if b >= art_start):
            return None
        # drive zero-level artificials out of the basis, dropping redundant rows
        r = 0
        while r < len(tab):
            if basis[r] >= art_start:
                c = next((k for k in range(art_start) if tab[r][k]), None)
                if c is None:
                    del tab[r], rhs_col[r], basis[r]
                    continue
                pivot(r, c, [Fraction(0)] * width)
            r += 1
        for k in range(art_start, width):
            allowed[k] = False

    red = [Fraction(0)] * width
    for k in range(nvars):
        red[k] = cost[k]
    for r, b in enumerate(basis):
        if b < nvars and cost[b]:
            f = cost[b]
            for k, x in enumerate(tab[r]):
                if x:
                    red[k] -= f * x
    if not run(red, allowed):
        raise Unbounded("objective is unbounded")
    y = [Fraction(0)] * nvars
    for r, b in enumerate(basis):
        if b < nvars:
            y[b] = rhs_col[r]
    return y
