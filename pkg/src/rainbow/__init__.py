"""Rainbow matchings in families of k-graphs: exact oracles, constructive routes and campaigns."""

from rainbow.core import (InputError, KGraph, Matching, PartiteHypergraph, degree, induced,
                          is_independent, is_stable, neighborhood, validate_matching)
from rainbow.generators import (ClosenessReport, KFamily, build_F, build_H, closeness_to_extremal,
                                make_extremal_family, make_F_t, make_H_t, make_Hk, random_family,
                                threshold)
from rainbow.exact import (FractionalSolution, Indeterminate, RainbowMatching, closure_graph,
                           check_dense, fractional_optimum, has_rainbow_matching, matching_number,
                           max_matching)
from rainbow.extremal import ExtremalFailure, classify_goodness, close_case_solve, extremal_match
from rainbow.absorption import AbsorptionFailure, absorb, build_library, is_absorbing
from rainbow.rounding import PipelineConfig, run_pipeline
from rainbow.harness import RunReport, SolveConfig, solve_rainbow, verify_conjecture

__version__ = "0.1.0"

__all__ = [
    "InputError", "KGraph", "Matching", "PartiteHypergraph", "degree", "induced", "is_independent",
    "is_stable", "neighborhood", "validate_matching",
    "ClosenessReport", "KFamily", "build_F", "build_H", "closeness_to_extremal", "make_extremal_family",
    "make_F_t", "make_H_t", "make_Hk", "random_family", "threshold",
    "FractionalSolution", "Indeterminate", "RainbowMatching", "closure_graph", "check_dense",
    "fractional_optimum", "has_rainbow_matching", "matching_number", "max_matching",
    "ExtremalFailure", "classify_goodness", "close_case_solve", "extremal_match",
    "AbsorptionFailure", "absorb", "build_library", "is_absorbing",
    "PipelineConfig", "run_pipeline",
    "RunReport", "SolveConfig", "solve_rainbow", "verify_conjecture",
]
