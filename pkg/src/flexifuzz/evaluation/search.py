"""Stratified k-fold grid search.

A naive sweep factors one ``(n + 1) x (n + 1)`` system per grid point.
Here the regularization axis is solved as a family of shifted systems
instead: with ``s = sqrt(M)`` the KKT block is

    Omega + diag(1 / (C M)) = S^-1 (S Omega S + I / C) S^-1,

so one tridiagonal reduction ``S Omega S = Q T Q^T`` per (fold, sigma,
membership) serves every ``C``; each extra ``C`` costs a tridiagonal
solve and a matrix-vector product.  The bias follows from eliminating the
border row (``y^T alpha = 0``).  Results agree with
:func:`flexifuzz.classifier.train` to rounding.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from ..dataio import stratified_kfold
from ..families import CENTER_LIN_DELTA, GridPoint, get_family
from ..kernel_linalg import squared_distances
from ..membership import (
    Scheme,
    center_exp_membership,
    center_lin_membership,
    flexi_fuzz_grid,
)

FAILED = float("-inf")
FLUSH_BELOW = 1e-100


@dataclass(frozen=True)
class HyperGrid:
    C_values: tuple = tuple(10.0**i for i in range(-5, 6))
    sigma_values: tuple = tuple(2.0**i for i in range(-5, 6))
    lambda_values: tuple = tuple(float(v) for v in range(1, 11))
    k_values: tuple = tuple(range(1, 11))
    gamma_values: tuple = tuple(round(0.1 * i, 1) for i in range(1, 11))

    def override(self, **axes):
        values = {name: tuple(v) for name, v in axes.items() if v is not None}
        return HyperGrid(**{**self.__dict__, **values})

    def points(self, family):
        family = get_family(family) if isinstance(family, str) else family
        extra = _membership_params(family, self)
        pts = [
            GridPoint(C, sigma, **params)
            for params in extra
            for sigma in self.sigma_values
            for C in self.C_values
        ]
        return sorted(pts, key=GridPoint.sort_key)


@dataclass
class CVRow:
    point: GridPoint
    fold_accuracy: list = field(default_factory=list)
    error: str = None

    @property
    def failed(self):
        return self.error is not None

    @property
    def mean_accuracy(self):
        if self.failed:
            return FAILED
        return float(np.mean(self.fold_accuracy))

    def to_dict(self):
        return {
            **self.point.to_dict(),
            "mean_accuracy": None if self.failed else self.mean_accuracy,
            "fold_accuracy": list(self.fold_accuracy),
            "status": "failed" if self.failed else "ok",
            "error": self.error,
        }


def _membership_params(family, grid):
    if family.scheme is Scheme.FLEXI_FUZZ:
        return [{"lam": lam, "k": k} for lam in grid.lambda_values for k in grid.k_values]
    if family.scheme is Scheme.CENTER_EXP:
        return [{"gamma": g} for g in grid.gamma_values]
    return [{}]


def _fold_memberships(family, grid, X, y):
    """``{params-tuple: values or exception}`` for one training fold."""
    if family.scheme is Scheme.UNIFORM:
        return {(): np.ones(len(y))}
    if family.scheme is Scheme.CENTER_LIN:
        return {(): center_lin_membership(X, y, CENTER_LIN_DELTA, family.center).values}
    if family.scheme is Scheme.CENTER_EXP:
        return {
            (("gamma", g),): center_exp_membership(X, y, g, family.center).values
            for g in grid.gamma_values
        }
    out = {}
    valid_k = [k for k in grid.k_values if k < len(y)]
    for k in grid.k_values:
        if k not in valid_k:
            for lam in grid.lambda_values:
                out[(("lam", lam), ("k", k))] = ValueError(
                    f"k = {k} needs more than {k} training samples in every fold"
                )
    if valid_k:
        table = flexi_fuzz_grid(X, y, grid.lambda_values, valid_k, family.center)
        for (lam, k), mv in table.items():
            out[(("lam", lam), ("k", k))] = mv.values
    return out


def _flush(K):
    # Entries this small are zero for every practical purpose, but left in
    # place they breed subnormal intermediates that slow LAPACK ~10x.
    K[K < FLUSH_BELOW] = 0.0
    return K


def _reduce(omega, membership):
    """Tridiagonal reduction of ``S Omega S``; returns ``(s, d, e, reflectors, tau)``."""
    s = np.sqrt(np.asarray(membership, dtype=float))
    n = s.size
    G = omega * np.outer(s, s)
    lwork = max(1, int(lapack.dsytrd_lwork(n, lower=1)[0]))
    c, d, e, tau, info = lapack.dsytrd(G, lower=1, lwork=lwork)
    if info != 0:
        raise ArithmeticError(f"tridiagonal reduction failed (info={info})")
    return s, d, e, c[1:, : n - 1], tau


def _apply_qt(refl, tau, B):
    """``Q^T B`` for ``Q = diag(1, H_1 ... H_{n-1})`` without forming ``Q``."""
    out = np.array(B, dtype=float, order="F")
    if out.shape[0] > 1:
        res, _, info = lapack.dormqr("L", "T", refl, tau, out[1:], lwork=max(1, 64 * out.shape[1]))
        if info != 0:
            raise ArithmeticError(f"applying the orthogonal factor failed (info={info})")
        out[1:] = res
    return out


def _shifted_solves(d, e, Z, C_values):
    """Yield ``(b, coef)`` per ``C``, with ``coef = W0 - b W1`` in the reduced basis."""
    for C in C_values:
        _, _, W, info = lapack.dptsv(d + 1.0 / C, e, Z)
        if info != 0:
            raise ArithmeticError(f"shifted tridiagonal system not positive definite at C={C}")
        b = (Z[:, 1] @ W[:, 0]) / (Z[:, 1] @ W[:, 1])
        yield b, W[:, 0] - b * W[:, 1]


def c_path(omega, y, membership, C_values):
    """Bias and dual coefficients of the KKT system for every ``C``.

    Returns ``(bias, alpha)`` with shapes ``(m,)`` and ``(n, m)`` for
    ``m = len(C_values)``.
    """
    y = np.asarray(y, dtype=float)
    s, d, e, refl, tau = _reduce(omega, membership)
    n = y.size
    Z = _apply_qt(refl, tau, np.column_stack([s, s * y]))
    bias = np.empty(len(C_values))
    coef = np.empty((n, len(C_values)))
    for j, (b, w) in enumerate(_shifted_solves(d, e, Z, C_values)):
        bias[j], coef[:, j] = b, w
    Q = np.eye(n)
    if n > 1:
        q, _, info = lapack.dorgqr(refl, tau, lwork=max(1, 64 * n))
        if info != 0:
            raise ArithmeticError(f"orthogonal factor construction failed (info={info})")
        Q[1:, 1:] = q
    return bias, s[:, None] * (Q @ coef)


def c_path_scores(omega, y, membership, C_values, K_eval):
    """Decision values on held-out rows for every ``C``, shape ``(n_eval, m)``.

    ``K_eval`` is the labelled cross kernel ``K(x_eval, x_i) y_i``.  Only
    ``Q^T`` is ever applied, so the orthogonal factor is never formed.
    """
    y = np.asarray(y, dtype=float)
    s, d, e, refl, tau = _reduce(omega, membership)
    B = np.column_stack([s, s * y, (np.asarray(K_eval) * s).T])
    R = _apply_qt(refl, tau, B)
    Z, P = np.ascontiguousarray(R[:, :2]), R[:, 2:]
    scores = np.empty((P.shape[1], len(C_values)))
    for j, (b, w) in enumerate(_shifted_solves(d, e, Z, C_values)):
        scores[:, j] = w @ P + b
    return scores


def grid_search(train, grid=None, family="flexi1", folds=5, seed=0, fold_indices=None):
    """Mean validation accuracy of every grid point over stratified folds.

    Returns ``(best_point, cv_table)``.  ``cv_table`` lists every point in
    tie-break order (ascending C, sigma, lambda, k, gamma); the best point is
    the first one attaining the maximum mean accuracy.  Points that fail
    numerically are kept in the table with an error message.
    """
    grid = grid or HyperGrid()
    family = get_family(family) if isinstance(family, str) else family
    if fold_indices is None:
        fold_indices = stratified_kfold(train, folds, seed)
    points = grid.points(family)
    rows = {pt: CVRow(pt) for pt in points}
    C_values = list(grid.C_values)

    for tr_idx, va_idx in fold_indices:
        Xtr, ytr = train.X[tr_idx], train.y[tr_idx]
        Xva, yva = train.X[va_idx], train.y[va_idx]
        D_tr = squared_distances(Xtr)
        D_va = squared_distances(Xva, Xtr)
        try:
            memberships = _fold_memberships(family, grid, Xtr, ytr)
        except ValueError as exc:
            memberships = {key: exc for key in _all_keys(family, grid)}
        yy = np.outer(ytr, ytr)
        for sigma in grid.sigma_values:
            K = _flush(np.exp(-D_tr / sigma**2))
            omega = K * yy
            K_va = _flush(np.exp(-D_va / sigma**2)) * ytr
            for key, M in memberships.items():
                params = dict(key)
                targets = [GridPoint(C, sigma, **params) for C in C_values]
                if isinstance(M, Exception):
                    for pt in targets:
                        rows[pt].error = rows[pt].error or str(M)
                    continue
                try:
                    scores = c_path_scores(omega, ytr, M, C_values, K_va)
                    if not np.all(np.isfinite(scores)):
                        raise ArithmeticError("non-finite decision values")
                except ArithmeticError as exc:
                    for pt in targets:
                        rows[pt].error = rows[pt].error or str(exc)
                    continue
                pred = np.where(scores >= 0, 1, -1)
                acc = (pred == yva[:, None]).mean(axis=0)
                for pt, a in zip(targets, acc):
                    rows[pt].fold_accuracy.append(float(a))

    table = [rows[pt] for pt in points]
    best = _select(table)
    return best, table


def _all_keys(family, grid):
    return [tuple(p.items()) for p in _membership_params(family, grid)]


def _select(table):
    best, best_score = None, FAILED
    for row in table:
        # rounding guards against summation-order noise in equal means
        score = round(row.mean_accuracy, 12) if not row.failed else FAILED
        if score > best_score:
            best, best_score = row.point, score
    if best is None:
        raise ArithmeticError("every grid point failed")
    return best
