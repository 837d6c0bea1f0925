"""Spectral ranking of users by ability from multiple-choice responses."""

from .c1p import brute_force_c1p_order, c1p_order_is_unique, is_p_matrix, is_r_matrix
from .errors import HndError
from .evaluation import bench_run, eigvec_variance, rank_displacement, spearman
from .irt import GenConfig, generate_c1p, prob_binary, prob_polytomous, sample_dataset
from .matrix import ResponseMatrix, load_responses, read_responses_csv
from .rankers import (
    METHODS,
    ScoreVector,
    orient_by_decile_entropy,
    rank_abh_fiedler_dense,
    rank_abh_power,
    rank_hits,
    rank_hnd_deflation,
    rank_hnd_power,
    rank_investment,
    rank_pooled_investment,
    rank_true_answer,
    rank_truthfinder,
    run_method,
)
from .spectral import PowerConfig

__all__ = [
    "HndError", "ResponseMatrix", "load_responses", "read_responses_csv",
    "PowerConfig", "ScoreVector", "METHODS", "run_method", "orient_by_decile_entropy",
    "rank_hnd_power", "rank_hnd_deflation", "rank_abh_power", "rank_abh_fiedler_dense",
    "rank_hits", "rank_truthfinder", "rank_investment", "rank_pooled_investment",
    "rank_true_answer", "is_p_matrix", "is_r_matrix", "brute_force_c1p_order",
    "c1p_order_is_unique", "GenConfig", "sample_dataset", "generate_c1p",
    "prob_binary", "prob_polytomous", "spearman", "rank_displacement",
    "eigvec_variance", "bench_run",
]
