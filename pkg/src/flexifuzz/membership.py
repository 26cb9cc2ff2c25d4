"""Per-sample fuzzy memberships.

Four schemes are provided:

* ``UNIFORM``: every sample weighs 1 (plain LSSVM).
* ``CENTER_LIN`` / ``CENTER_EXP``: weight decays linearly / exponentially
  with the distance to the class center.
* ``FLEXI_FUZZ``: a flexible center-distance weight, multiplied by the
  kNN class probability and scaled by the imbalance ratio (up for the
  minority class, down for the majority class).

All distances are Euclidean in the (standardized) input space.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

#: Lower bound applied to every Flexi-Fuzz membership; keeps ``1 / (C M_i)`` finite.
MEMBERSHIP_FLOOR = 1e-6


class CenterEstimator(enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"


class Scheme(enum.Enum):
    UNIFORM = "uniform"
    CENTER_LIN = "center-lin"
    CENTER_EXP = "center-exp"
    FLEXI_FUZZ = "flexi-fuzz"


@dataclass(frozen=True)
class MembershipConfig:
    scheme: Scheme = Scheme.FLEXI_FUZZ
    center: CenterEstimator = CenterEstimator.MEAN
    lam: float = 1.0
    k: int = 5
    delta: float = 1e-6
    gamma: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "center", CenterEstimator(self.center))
        if not self.lam >= 1:
            raise ValueError(f"flexible parameter lambda must be >= 1, got {self.lam!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"neighborhood size k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")


@dataclass(frozen=True)
class ClassGeometry:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class MembershipVector:
    values: np.ndarray
    imbalance_ratio: float = 1.0
    minority_label: int = 1

    def __len__(self):
        return len(self.values)


def _samples(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D sample matrix")
    return X


def _labels(y, n):
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {y.shape}")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    return y.astype(int)


def class_geometry(X_class, estimator=CenterEstimator.MEAN):
    """Center (mean or coordinate-wise median) and radius of one class."""
    X_class = _samples(X_class)
    if X_class.shape[0] == 0:
        raise ValueError("cannot compute the geometry of an empty class")
    estimator = CenterEstimator(estimator)
    if estimator is CenterEstimator.MEAN:
        center = X_class.mean(axis=0)
    else:
        center = np.median(X_class, axis=0)
    radius = float(np.linalg.norm(X_class - center, axis=1).max())
    return ClassGeometry(center=center, radius=radius)


def flexible_weights(distances, radius, lam):
    """Vectorized flexible weight: 1 inside ``radius / lam``, ``radius / (lam d)`` beyond."""
    if not lam >= 1:
        raise ValueError(f"flexible parameter lambda must be >= 1, got {lam!r}")
    d = np.asarray(distances, dtype=float)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    if radius == 0:
        return np.ones_like(d)
    threshold = radius / lam
    out = np.ones_like(d)
    outside = d >= threshold
    out[outside] = threshold / d[outside]
    return out


def flexible_weight(distance, geometry, lam):
    return float(flexible_weights(np.array([distance]), geometry.radius, lam)[0])


def nearest_neighbors(X, k):
    """Indices of the ``k`` nearest neighbors of every sample, self excluded.

    Neighbors are ordered by distance; equal distances are broken by the
    smaller sample index.  Returns an ``(n, k)`` integer array.
    """
    X = _samples(X)
    n = X.shape[0]
    if k < 1 or k >= n:
        raise ValueError(f"k must satisfy 1 <= k <= n - 1 = {n - 1}, got {k}")
    D = cdist(X, X, metric="sqeuclidean")
    np.fill_diagonal(D, np.inf)

    cand = np.argpartition(D, k - 1, axis=1)[:, :k]
    cand_d = np.take_along_axis(D, cand, axis=1)
    kth = cand_d.max(axis=1)
    # rows with ties straddling the k-th distance need an index-ordered resolution
    n_leq = (D <= kth[:, None]).sum(axis=1)
    order = np.lexsort((cand, cand_d), axis=1)
    neighbors = np.take_along_axis(cand, order, axis=1)
    for i in np.flatnonzero(n_leq > k):
        idx = np.flatnonzero(D[i] <= kth[i])
        idx = idx[np.lexsort((idx, D[i, idx]))]
        neighbors[i] = idx[:k]
    return neighbors


def _same_class_counts(neighbors, y):
    """Cumulative same-class neighbor counts; column ``j`` covers the first ``j + 1``."""
    same = y[neighbors] == y[:, None]
    return np.cumsum(same, axis=1)


def class_probability(X, y, i, k):
    """Fraction of the ``k`` nearest neighbors of sample ``i`` sharing its label."""
    X = _samples(X)
    y = _labels(y, X.shape[0])
    n = X.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"sample index {i} out of range for {n} samples")
    if k < 1 or k >= n:
        raise ValueError(f"k must satisfy 1 <= k <= n - 1 = {n - 1}, got {k}")
    d = ((X - X[i]) ** 2).sum(axis=1)
    d[i] = np.inf
    idx = np.lexsort((np.arange(n), d))[:k]
    return float(np.count_nonzero(y[idx] == y[i]) / k)


def imbalance_ratio(y):
    """Majority / minority count and the minority label (ties favor +1)."""
    y = np.asarray(y)
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = int(np.count_nonzero(y == -1))
    if n_pos + n_neg != y.size:
        raise ValueError("labels must be -1 or +1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("imbalance ratio requires both classes")
    if n_pos <= n_neg:
        return n_neg / n_pos, 1
    return n_pos / n_neg, -1


def _center_distances(X, y, estimator):
    """Distance of every sample to its own class center, plus per-class radii."""
    dist = np.empty(X.shape[0])
    radius = np.empty(X.shape[0])
    for label in (-1, 1):
        mask = y == label
        if not mask.any():
            raise ValueError(f"class {label:+d} is empty")
        geom = class_geometry(X[mask], estimator)
        dist[mask] = np.linalg.norm(X[mask] - geom.center, axis=1)
        radius[mask] = geom.radius
    return dist, radius


def _imbalance_scale(y):
    ratio, minority = imbalance_ratio(y)
    return np.where(y == minority, ratio, 1.0 / ratio), ratio, minority


def flexi_fuzz_grid(X, y, lambdas, ks, center=CenterEstimator.MEAN):
    """Flexi-Fuzz memberships for every ``(lam, k)`` pair.

    Geometry, neighbor lists and the imbalance ratio are computed once and
    shared, so sweeping the grid costs one kNN search.  Returns a dict keyed
    by ``(lam, k)``.
    """
    X = _samples(X)
    y = _labels(y, X.shape[0])
    ks = [int(k) for k in ks]
    scale, ratio, minority = _imbalance_scale(y)
    dist, radius = _center_distances(X, y, center)
    counts = _same_class_counts(nearest_neighbors(X, max(ks)), y)

    masks = [y == label for label in (-1, 1)]
    mu = {}
    for lam in lambdas:
        weights = np.empty(X.shape[0])
        for mask in masks:
            weights[mask] = flexible_weights(dist[mask], radius[mask][0], lam)
        mu[lam] = weights
    out = {}
    for k in ks:
        p = counts[:, k - 1] / k
        for lam in lambdas:
            values = np.maximum(mu[lam] * p * scale, MEMBERSHIP_FLOOR)
            out[(lam, k)] = MembershipVector(values, ratio, minority)
    return out


def flexi_fuzz_membership(X, y, config):
    X = _samples(X)
    if config.k >= X.shape[0]:
        raise ValueError(f"k = {config.k} requires more than {config.k} samples, got {X.shape[0]}")
    return flexi_fuzz_grid(X, y, [config.lam], [config.k], config.center)[(config.lam, config.k)]


def center_lin_membership(X, y, delta=1e-6, center=CenterEstimator.MEAN):
    """Linear decay ``1 - d / (r + delta)`` with ``r`` the own-class radius."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    X = _samples(X)
    y = _labels(y, X.shape[0])
    dist, radius = _center_distances(X, y, center)
    ratio, minority = imbalance_ratio(y)
    return MembershipVector(1.0 - dist / (radius + delta), ratio, minority)


def center_exp_membership(X, y, gamma, center=CenterEstimator.MEAN):
    """Exponential decay ``2 / (1 + exp(gamma d))``, floored like Flexi-Fuzz values."""
    if not 0 <= gamma <= 1:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma!r}")
    X = _samples(X)
    y = _labels(y, X.shape[0])
    dist, _ = _center_distances(X, y, center)
    ratio, minority = imbalance_ratio(y)
    # 2 / (1 + e^x) = 2 expit(-x), which cannot overflow
    values = np.maximum(2.0 * expit(-gamma * dist), MEMBERSHIP_FLOOR)
    return MembershipVector(values, ratio, minority)


def compute_membership(X, y, config):
    """Dispatch on ``config.scheme``."""
    config = config if config is not None else MembershipConfig(scheme=Scheme.UNIFORM)
    X = _samples(X)
    if config.scheme is Scheme.UNIFORM:
        y = _labels(y, X.shape[0])
        ratio, minority = imbalance_ratio(y)
        return MembershipVector(np.ones(X.shape[0]), ratio, minority)
    if config.scheme is Scheme.CENTER_LIN:
        return center_lin_membership(X, y, config.delta, config.center)
    if config.scheme is Scheme.CENTER_EXP:
        return center_exp_membership(X, y, config.gamma, config.center)
    return flexi_fuzz_membership(X, y, config)
