from fractions import Fraction

from hypothesis import strategies as st

from budgetagg import Profile


@st.composite
def rows(draw, m, max_unit=6):
    raw = draw(st.lists(st.integers(0, max_unit), min_size=m, max_size=m))
    if not sum(raw):
        raw[draw(st.integers(0, m - 1))] = 1
    total = sum(raw)
    return tuple(Fraction(x, total) for x in raw)


@st.composite
def profiles(draw, max_n=5, max_m=4, min_m=2):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(min_m, max_m))
    return Profile(tuple(draw(rows(m)) for _ in range(n)))


@st.composite
def allocations(draw, m):
    return draw(rows(m))
