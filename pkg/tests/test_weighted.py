import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from budgetagg.analysis import DOMINANCE_EDGES, RandomProfileSpec, substream
from budgetagg.core import Profile, social_welfare, validate_profile
from budgetagg.decomp import greedy_decomp
from budgetagg.phantoms import Mechanism, run_phantom
from budgetagg.weighted import (
    BadWeights,
    WeightCapExceeded,
    WeightedProfile,
    expand_weighted,
    omega_index,
    random_weighted_profile,
    run_weighted_phantom,
    unanimous_group_probe,
    verify_weighted_certificate,
    weighted_audit,
    weighted_greedy_decomp,
    weighted_welfare,
)
from instances import HALF_HALF_VS_UNIFORM
from strategies import profiles

CORNERS = validate_profile([[1, 0], [0, 1]])


@st.composite
def weighted_profiles(draw, max_n=4, max_m=4, max_weight=4):
    p = draw(profiles(max_n=max_n, max_m=max_m))
    return WeightedProfile(p, tuple(draw(st.integers(1, max_weight)) for _ in range(p.n)))


def test_expansion():
    assert expand_weighted(WeightedProfile(CORNERS, (1, 1))) == CORNERS
    assert expand_weighted(WeightedProfile(CORNERS, (2, 1))).votes == ((1, 0), (1, 0), (0, 1))
    one = validate_profile([[F(1, 3), F(2, 3)]])
    assert expand_weighted(WeightedProfile(one, (3,))).votes == one.votes * 3
    with pytest.raises(WeightCapExceeded):
        expand_weighted(WeightedProfile(CORNERS, (40, 30)))


def test_bad_weights():
    with pytest.raises(BadWeights):
        WeightedProfile(CORNERS, (1,))
    with pytest.raises(BadWeights):
        WeightedProfile(CORNERS, (0, 2))


def test_omega_table():
    t = omega_index(WeightedProfile(CORNERS, (2, 1))).table
    assert t == ((0, 1, 3), (0, 2, 3))
    for row in t:
        assert row[0] == 0 and row[-1] == 3 and list(row) == sorted(row)


def test_weighted_examples():
    assert run_weighted_phantom(WeightedProfile(CORNERS, (2, 1)), Mechanism.CONSTANT).allocation == (F(1, 2),) * 2
    assert run_weighted_phantom(WeightedProfile(CORNERS, (2, 2)), Mechanism.UTIL_PROP).allocation == (F(1, 2),) * 2
    wp = WeightedProfile(HALF_HALF_VS_UNIFORM, (3, 1))
    cert = weighted_greedy_decomp(wp)
    assert cert.allocation == greedy_decomp(expand_weighted(wp)).allocation
    assert verify_weighted_certificate(wp, cert)
    assert [sum(r) for r in cert.contributions] == [F(3, 4), F(1, 4)]


@given(weighted_profiles(), st.sampled_from(list(Mechanism)))
def test_unit_weights_change_nothing(wp, mech):
    unit = WeightedProfile(wp.profile, (1,) * wp.profile.n)
    assert run_weighted_phantom(unit, mech).allocation == run_phantom(wp.profile, mech).allocation
    assert weighted_greedy_decomp(unit).allocation == greedy_decomp(wp.profile).allocation


@given(weighted_profiles(), st.sampled_from(list(Mechanism)))
def test_omega_evaluation_equals_duplication(wp, mech):
    direct = run_weighted_phantom(wp, mech)
    dup = expand_weighted(wp)
    assert direct.allocation == run_phantom(dup, mech).allocation
    assert direct.welfare == weighted_welfare(wp, direct.allocation) == social_welfare(dup, direct.allocation)


@given(st.integers(1, 4), st.integers(2, 4), st.data())
def test_weighted_single_minded_gives_weighted_mean(n, m, data):
    picks = data.draw(st.lists(st.integers(0, m - 1), min_size=n, max_size=n))
    w = tuple(data.draw(st.lists(st.integers(1, 4), min_size=n, max_size=n)))
    p = Profile(tuple(tuple(F(int(j == c)) for j in range(m)) for c in picks))
    wp = WeightedProfile(p, w)
    mean = tuple(F(sum(wi for wi, c in zip(w, picks) if c == j), sum(w)) for j in range(m))
    assert weighted_greedy_decomp(wp).allocation == mean
    assert run_weighted_phantom(wp, Mechanism.UTIL_PROP).allocation == mean


def test_weighted_dominance_edges():
    spec = RandomProfileSpec(3, 3, 6, seed=3)
    for trial in range(60):
        wp = random_weighted_profile(spec, substream(3, trial), 4)
        w = {m: run_weighted_phantom(wp, m).welfare for m in Mechanism}
        for a, b in DOMINANCE_EDGES:
            assert w[a] >= w[b], (wp, a, b)


def test_unanimous_group_probe():
    spec = RandomProfileSpec(3, 3, 6, seed=9)
    for mech in Mechanism:
        rep = unanimous_group_probe(mech, spec, 25)
        assert rep.pairs_checked == 25 and not rep.violations


def test_random_weighted_is_reproducible():
    spec = RandomProfileSpec(3, 2, 4)
    a = random_weighted_profile(spec, random.Random(1), 5)
    b = random_weighted_profile(spec, random.Random(1), 5)
    assert a == b and all(1 <= w <= 5 for w in a.weights)


@given(weighted_profiles())
def test_weighted_audit_within_total_weight_bound(wp):
    rep = weighted_audit(wp)
    assert rep.ok and rep.ratio >= 1
    assert rep.total_weight == sum(wp.weights)


def test_weighted_audit_tight_on_grouped_voters():
    # two lone voters and one voter of weight 2: the worst case for b = 4
    p = validate_profile([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    rep = weighted_audit(WeightedProfile(p, (1, 1, 2)))
    assert rep.ratio == rep.alpha_star == F(4, 3)
