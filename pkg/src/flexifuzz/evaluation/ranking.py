"""Average ranks, Friedman / Iman-Davenport statistics and the Nemenyi CD."""

import math
from dataclasses import dataclass

import numpy as np

from ..exceptions import DegenerateStatisticError

#: Two-tailed Nemenyi critical values at alpha = 0.05, indexed by model count
#: (studentized range quantile with infinite degrees of freedom, over sqrt 2).
NEMENYI_Q = {
    0.05: {
        2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850, 7: 2.949, 8: 3.031,
        9: 3.102, 10: 3.164, 11: 3.219, 12: 3.268, 13: 3.313, 14: 3.354,
        15: 3.391, 16: 3.426, 17: 3.458, 18: 3.489, 19: 3.517, 20: 3.544,
    },
}


@dataclass(frozen=True)
class RankTable:
    models: tuple
    datasets: tuple
    accuracy: np.ndarray
    ranks: np.ndarray
    avg_ranks: np.ndarray


def _rank_row(values):
    """Rank 1 for the largest value; tied values share their mean rank."""
    order = np.argsort(-values, kind="stable")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def average_ranks(accuracy, models=None, datasets=None):
    """Rank models (columns) within each dataset (row), best = 1."""
    A = np.asarray(accuracy, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("accuracy matrix must be 2-D (datasets x models)")
    if not np.all(np.isfinite(A)):
        raise ValueError("accuracy matrix has missing entries")
    D, p = A.shape
    models = tuple(models) if models is not None else tuple(f"model{j}" for j in range(p))
    datasets = tuple(datasets) if datasets is not None else tuple(f"dataset{i}" for i in range(D))
    if len(models) != p or len(datasets) != D:
        raise ValueError("name lists do not match the matrix shape")
    R = np.vstack([_rank_row(row) for row in A])
    return RankTable(models, datasets, A, R, R.mean(axis=0))


def friedman_chi2(avg_ranks, p=None, D=None):
    """Friedman chi-square from average ranks (``p - 1`` degrees of freedom)."""
    R = np.asarray(avg_ranks, dtype=float)
    p = R.size if p is None else int(p)
    if D is None:
        raise ValueError("number of datasets D is required")
    if p < 2 or D < 2:
        raise ValueError(f"need p >= 2 models and D >= 2 datasets, got p={p}, D={D}")
    if R.size != p:
        raise ValueError(f"{R.size} average ranks for p = {p} models")
    return float(12.0 * D / (p * (p + 1)) * (np.sum(R**2) - p * (p + 1) ** 2 / 4.0))


def friedman_statistic(avg_ranks, p=None, D=None):
    """Friedman chi-square and the Iman-Davenport F statistic.

    Raises :class:`DegenerateStatisticError` when ``chi2 >= D (p - 1)``
    (complete agreement between datasets), where F is undefined.
    """
    chi2 = friedman_chi2(avg_ranks, p, D)
    p = np.asarray(avg_ranks).size if p is None else int(p)
    denom = D * (p - 1) - chi2
    if denom <= 0:
        raise DegenerateStatisticError(
            f"Iman-Davenport denominator D(p-1) - chi2 = {denom:.6g} is not positive"
        )
    return chi2, float((D - 1) * chi2 / denom)


def q_alpha_for(p, alpha=0.05):
    try:
        return NEMENYI_Q[alpha][p]
    except KeyError:
        raise ValueError(
            f"no bundled Nemenyi critical value for alpha={alpha}, p={p}; pass q_alpha explicitly"
        ) from None


def nemenyi_cd(p, D, q_alpha):
    if q_alpha <= 0:
        raise ValueError("q_alpha must be positive")
    return q_alpha * math.sqrt(p * (p + 1) / (6.0 * D))


def pairwise_significance(avg_ranks, cd):
    """Boolean matrix: True where two models' average ranks differ by more than ``cd``."""
    R = np.asarray(avg_ranks, dtype=float)
    return np.abs(R[:, None] - R[None, :]) > cd


def rank_report(table, q_alpha=None, alpha=0.05):
    """Everything the statistics command emits, as plain JSON-ready data."""
    D, p = table.accuracy.shape
    q = q_alpha if q_alpha is not None else q_alpha_for(p, alpha)
    chi2 = friedman_chi2(table.avg_ranks, p, D)
    try:
        _, f_stat = friedman_statistic(table.avg_ranks, p, D)
        f_note = None
    except DegenerateStatisticError as exc:
        # unanimous rankings: chi2 is still meaningful, F is not
        f_stat, f_note = None, str(exc)
    cd = nemenyi_cd(p, D, q)
    flags = pairwise_significance(table.avg_ranks, cd)
    pairs = [
        {"a": table.models[i], "b": table.models[j],
         "rank_difference": float(abs(table.avg_ranks[i] - table.avg_ranks[j])),
         "significant": bool(flags[i, j])}
        for i in range(p) for j in range(i + 1, p)
    ]
    return {
        "models": list(table.models),
        "datasets": list(table.datasets),
        "p": p,
        "D": D,
        "alpha": alpha,
        "q_alpha": q,
        "avg_ranks": {m: float(r) for m, r in zip(table.models, table.avg_ranks)},
        "chi2": chi2,
        "chi2_df": p - 1,
        "f_stat": f_stat,
        "f_df": [p - 1, (p - 1) * (D - 1)],
        "f_stat_note": f_note,
        "cd": cd,
        "pairwise_flags": pairs,
    }
