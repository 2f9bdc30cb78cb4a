from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from budgetagg import core
from budgetagg.core import (
    EntryOutOfRange,
    LevelOutOfRange,
    ProfileShapeError,
    RowNotNormalized,
    VoterOutOfRange,
    level_vector,
    overlap,
    social_welfare,
    utility,
    validate_allocation,
    validate_profile,
    welfare_by_levels,
    welfare_optimal,
)
from instances import GREEDY_GAP_4x5, GREEDY_GAP_BEST, HALF_HALF_VS_UNIFORM
from strategies import allocations, profiles


def test_profile_shape():
    assert (HALF_HALF_VS_UNIFORM.n, HALF_HALF_VS_UNIFORM.m) == (2, 3)


def test_decimal_and_fraction_entries_are_exact():
    p = validate_profile([["0.1", "0.9"], ["1/3", "2/3"]])
    assert p.votes[0] == (F(1, 10), F(9, 10))


@pytest.mark.parametrize("raw, err", [
    ([[F(1, 2), F(1, 3)]], RowNotNormalized),
    ([[F(3, 2), F(-1, 2)]], EntryOutOfRange),
    ([[1]], ProfileShapeError),
    ([], ProfileShapeError),
    ([[1, 0], [1, 0, 0]], ProfileShapeError),
])
def test_profile_rejects(raw, err):
    with pytest.raises(err):
        validate_profile(raw)


def test_row_error_mentions_one_based_row():
    with pytest.raises(RowNotNormalized, match="row 2"):
        validate_profile([[1, 0], [F(1, 2), F(1, 4)]])


def test_floats_read_as_their_shortest_decimal():
    assert validate_profile([[0.1, 0.9]]).votes[0] == (F(1, 10), F(9, 10))


def test_allocation_checks():
    assert validate_allocation(["1/2", "1/2"]) == (F(1, 2), F(1, 2))
    with pytest.raises(core.DimensionMismatch):
        validate_allocation([1, 0], 3)
    with pytest.raises(core.BudgetAggError):
        validate_allocation([F(1, 2), F(1, 3)])


def test_level_vectors_of_two_voters():
    p = HALF_HALF_VS_UNIFORM
    assert level_vector(p, 1) == (F(1, 3), F(1, 3), 0)
    assert level_vector(p, 2) == (F(1, 2), F(1, 2), F(1, 3))
    with pytest.raises(LevelOutOfRange):
        level_vector(p, 3)


def test_utility_examples():
    p = validate_profile([[F(1, 2), F(1, 2), 0], [F(5, 12), F(7, 24), F(7, 24)]])
    a = (F(5, 12), F(7, 24), F(7, 24))
    assert utility(p, 1, a) == 1
    assert utility(p, 0, a) == F(17, 24)
    with pytest.raises(VoterOutOfRange):
        utility(p, 2, a)


def test_welfare_examples():
    assert social_welfare(GREEDY_GAP_4x5, (F(1, 4),) * 4 + (0,)) == 2
    assert social_welfare(GREEDY_GAP_4x5, GREEDY_GAP_BEST) == F(7, 3)


@given(st.data())
def test_welfare_identity(data):
    p = data.draw(profiles())
    a = data.draw(allocations(p.m))
    assert social_welfare(p, a) == welfare_by_levels(p, a)


@given(profiles())
def test_overlap_symmetric_and_bounded(p):
    for u in p.votes:
        for v in p.votes:
            assert overlap(u, v) == overlap(v, u)
            assert 0 <= overlap(u, v) <= 1
        assert overlap(u, u) == 1


@given(profiles(max_n=4, max_m=4))
def test_welfare_optimal_matches_lp(p):
    # oracle: maximise Σ_k Σ_j min(a_j, μ^k_j) as a float LP with one auxiliary per (k, j)
    n, m = p.n, p.m
    nv = m + n * m
    cost = [0.0] * m + [-1.0] * (n * m)
    a_ub, b_ub = [], []
    for k in range(1, n + 1):
        mu = level_vector(p, k)
        for j in range(m):
            z = m + (k - 1) * m + j
            row = [0.0] * nv
            row[z], row[j] = 1.0, -1.0
            a_ub.append(row)
            b_ub.append(0.0)
            row = [0.0] * nv
            row[z] = 1.0
            a_ub.append(row)
            b_ub.append(float(mu[j]))
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=[[1.0] * m + [0.0] * (n * m)], b_eq=[1.0],
                  bounds=[(0, 1)] * nv, method="highs")
    a, w = welfare_optimal(p)
    assert sum(a) == 1 and social_welfare(p, a) == w
    assert abs(float(w) + res.fun) < 1e-7
