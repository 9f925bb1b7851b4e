"""Learning on random skill-text bipartite graphs: peeling simulation,
density evolution, percolation, hierarchical fine-tuning and semantic
compression."""

from .compression import Catalog, CodecConfig, decode_text, encode_text, expected_bits, measure_corpus
from .density_evolution import DEResult, de_solve_multi, de_solve_single, find_threshold, find_transition
from .graph_model import (BipartiteGraph, ExplicitPrereqs, HierarchyConfig, MultiClassConfig, PoissonPrereqs,
                          SingleClassConfig, sample_graph)
from .hierarchy import HierarchyResult, fine_tune_solve, simulate_hierarchy
from .learners import (PsiFunction, SuccessProfile, d_skill_profile, induce_poisson_from_psi, near_far_profile,
                       one_skill_profile, psi_d_skill, psi_near_far, psi_one_skill)
from .peeling import ScnsOutcome, empirical_learned_fraction, empirical_testing_error, run_scns
from .percolation import PercolationResult, giant_component_sim, p_giant_theory, region_scan

__all__ = [
    "BipartiteGraph", "Catalog", "CodecConfig", "DEResult", "ExplicitPrereqs", "HierarchyConfig", "HierarchyResult",
    "MultiClassConfig", "PercolationResult", "PoissonPrereqs", "PsiFunction", "ScnsOutcome", "SingleClassConfig",
    "SuccessProfile", "d_skill_profile", "de_solve_multi", "de_solve_single", "decode_text", "empirical_learned_fraction",
    "empirical_testing_error", "encode_text", "expected_bits", "find_threshold", "find_transition", "fine_tune_solve",
    "giant_component_sim", "induce_poisson_from_psi", "measure_corpus", "near_far_profile", "one_skill_profile",
    "p_giant_theory", "psi_d_skill", "psi_near_far", "psi_one_skill", "region_scan", "run_scns", "sample_graph",
    "simulate_hierarchy",
]
