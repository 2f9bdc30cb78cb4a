"""Small hand-checked profiles shared by several test modules."""
from fractions import Fraction as F

from budgetagg import validate_profile

# two voters; any neutral decomposable rule gives the uniform split
HALF_HALF_VS_UNIFORM = validate_profile([[F(1, 2), F(1, 2), 0], [F(1, 3)] * 3])
# same with voter 1 reporting the aggregate it would rather see
MISREPORT_VS_UNIFORM = validate_profile([[F(5, 12), F(7, 24), F(7, 24)], [F(1, 3)] * 3])

# greedy stalls at welfare 2 while the best decomposable allocation reaches 7/3
GREEDY_GAP_4x5 = validate_profile([
    [F(3, 4), 0, F(1, 4), 0, 0],
    [0, F(3, 4), 0, F(1, 4), 0],
    [0, 0, F(1, 3), F(1, 3), F(1, 3)],
    [0, 0, F(1, 3), F(1, 3), F(1, 3)],
])
GREEDY_GAP_BEST = (F(1, 12), F(1, 12), F(1, 4), F(1, 4), F(1, 3))
GREEDY_GAP_CONTRIBUTIONS = (
    (F(1, 12), 0, F(1, 6), 0, 0),
    (0, F(1, 12), 0, F(1, 6), 0),
    (0, 0, F(1, 12), 0, F(1, 6)),
    (0, 0, 0, F(1, 12), F(1, 6)),
)

# ladder beats piecewise-uniform here...
LADDER_WINS = validate_profile([[1, 0, 0], [0, 1, 0], [0, 0, 1], [F(1, 2), F(1, 2), 0]])
# ...and loses here
PWU_WINS = validate_profile([[F(1, 2), F(1, 2), 0]] * 2 + [[F(1, 2), 0, F(1, 2)], [0, F(1, 2), F(1, 2)]])

# ladder overspends on the shared favourite
LADDER_UNDERSPENDS = validate_profile([[F(5, 6), F(1, 6), 0], [F(5, 6), 0, F(1, 6)]])

# decomposable optimum that is Pareto-dominated by a non-decomposable allocation
SEVEN_VOTERS = validate_profile(
    [[F(3, 7), 0, F(4, 7), 0], [0, F(3, 7), F(4, 7), 0], [0, 0, 1, 0]]
    + [[F(2, 7), 0, 0, F(5, 7)]] * 2
    + [[0, F(2, 7), 0, F(5, 7)]] * 2
)
SEVEN_VOTERS_GREEDY = (F(1, 7), F(1, 7), F(1, 7), F(4, 7))
SEVEN_VOTERS_DOMINATOR = (0, 0, F(2, 7), F(5, 7))
