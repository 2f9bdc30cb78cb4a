"""Exact budget aggregation: moving-phantom mechanisms, decomposable allocations and audits."""
from .core import (
    BudgetAggError,
    InternalInvariantError,
    Profile,
    level_vector,
    overlap,
    social_welfare,
    utility,
    validate_allocation,
    validate_profile,
    welfare_by_levels,
    welfare_optimal,
)
from .decomp import DecompositionCertificate, greedy_decomp, is_decomposable, verify_certificate
from .optdecomp import NodeLimitExceeded, dwt_decide, util_decomp
from .phantoms import Mechanism, build_system, normalization_time, phantom_curve, run_phantom
from .weighted import WeightedProfile, run_weighted_phantom, weighted_greedy_decomp

__version__ = "0.1.0"
