from .metrics import ConfusionCounts, MetricSet, confusion, evaluate, metrics
from .ranking import (
    NEMENYI_Q,
    RankTable,
    average_ranks,
    friedman_chi2,
    friedman_statistic,
    nemenyi_cd,
    pairwise_significance,
    q_alpha_for,
    rank_report,
)
from .search import CVRow, HyperGrid, c_path, c_path_scores, grid_search

__all__ = [
    "CVRow",
    "ConfusionCounts",
    "HyperGrid",
    "MetricSet",
    "NEMENYI_Q",
    "RankTable",
    "average_ranks",
    "c_path",
    "c_path_scores",
    "confusion",
    "evaluate",
    "friedman_chi2",
    "friedman_statistic",
    "grid_search",
    "metrics",
    "nemenyi_cd",
    "pairwise_significance",
    "q_alpha_for",
    "rank_report",
]
