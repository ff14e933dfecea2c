"""Privacy-utility tradeoffs for finite alphabets under worst-case Hamming distortion.

The package computes the smallest achievable differential-privacy level and
the smallest worst-case mutual-information leakage over a convex set of
source distributions, constructs mechanisms that attain them, and ships a
command-line front end that emits tradeoff curves and verification reports.
"""

from .core import (
    Distribution,
    Mechanism,
    Permutation,
    SourceSet,
    apply_permutation,
    distribution,
    expected_distortion,
    identity_mechanism,
    make_source_set,
    mechanism,
    relabel_mechanism,
    sort_permutation,
    uniform_distribution,
)
from .classify import Classification, SourceClass, cap_cup_oracles, classify, find_folding_permutations
from .mechanisms import (
    ValidityReport,
    construct_optimal_mechanism,
    eps_dp,
    is_staircase,
    is_valid,
    symmetric_mechanism,
)
from .dp_solver import (
    BoundKind,
    DpSolution,
    Thresholds,
    solve_class1,
    solve_class2,
    solve_class3_bounds,
    solve_lfp_k,
    thresholds,
)
from .it_leakage import ItSolution, it_class1, it_minmax, mutual_information
from .oracle import bisection_cross_check, brute_force_dp, sublinearity_counterexample

__all__ = [
    "Distribution",
    "Mechanism",
    "Permutation",
    "SourceSet",
    "apply_permutation",
    "distribution",
    "expected_distortion",
    "identity_mechanism",
    "make_source_set",
    "mechanism",
    "relabel_mechanism",
    "sort_permutation",
    "uniform_distribution",
    "Classification",
    "SourceClass",
    "cap_cup_oracles",
    "classify",
    "find_folding_permutations",
    "ValidityReport",
    "construct_optimal_mechanism",
    "eps_dp",
    "is_staircase",
    "is_valid",
    "symmetric_mechanism",
    "BoundKind",
    "DpSolution",
    "Thresholds",
    "solve_class1",
    "solve_class2",
    "solve_class3_bounds",
    "solve_lfp_k",
    "thresholds",
    "ItSolution",
    "it_class1",
    "it_minmax",
    "mutual_information",
    "bisection_cross_check",
    "brute_force_dp",
    "sublinearity_counterexample",
]

__version__ = "0.1.0"
