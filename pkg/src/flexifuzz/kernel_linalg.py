"""Gaussian kernel evaluation and the dense solver used for the KKT system.

The kernel is ``K(x, y) = exp(-||x - y||^2 / sigma^2)``; note the
denominator is ``sigma**2`` rather than the ``2 * sigma**2`` found in many
libraries, so grid values of ``sigma`` are not interchangeable with
scikit-learn's ``gamma``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .exceptions import SingularSystemError

#: Pivots smaller than this fraction of ``||A||_inf`` are treated as zero.
PIVOT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise ValueError(f"kernel width sigma must be positive, got {self.sigma!r}")


def _as_vector(x, name):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-D feature vector")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def _as_samples(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D sample matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def gaussian_kernel(x, y, spec):
    """Kernel value between two feature vectors."""
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / spec.sigma**2))


def squared_distances(A, B=None):
    """Pairwise squared Euclidean distances, exactly zero for identical rows."""
    A = _as_samples(A, "A")
    B = A if B is None else _as_samples(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return cdist(A, B, metric="sqeuclidean")


def kernel_from_distances(sq_dist, spec):
    return np.exp(-sq_dist / spec.sigma**2)


def kernel_matrix(X, spec):
    """Symmetric Gram matrix with unit diagonal."""
    K = kernel_from_distances(squared_distances(X), spec)
    # cdist is symmetric up to rounding; enforce exact symmetry and diagonal
    K = np.triu(K, 1)
    K = K + K.T
    np.fill_diagonal(K, 1.0)
    return K


def cross_kernel(A, B, spec):
    """Rectangular kernel block ``K[i, j] = K(A[i], B[j])``."""
    return kernel_from_distances(squared_distances(A, B), spec)


def labelled_kernel_matrix(K, y):
    """``Omega[i, j] = y_i * y_j * K[i, j]``."""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("K must be square")
    if y.shape != (K.shape[0],):
        raise ValueError(f"label vector of length {K.shape[0]} expected, got shape {y.shape}")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    return K * np.outer(y, y)


def solve_dense(A, rhs):
    """Solve ``A z = rhs`` by LU factorization with partial pivoting.

    Raises :class:`SingularSystemError` when a pivot of the factorization is
    below ``PIVOT_TOLERANCE * ||A||_inf``.  One step of iterative refinement
    is applied when the first residual exceeds
    ``1e-8 * (1 + ||rhs||_inf)``.
    """
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if rhs.shape[0] != A.shape[0]:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, A has {A.shape[0]}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs))):
        raise ValueError("A and rhs must be finite")

    norm = np.abs(A).sum(axis=1).max()
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularSystemError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    small = np.flatnonzero(pivots <= PIVOT_TOLERANCE * norm)
    if norm == 0 or small.size:
        step = int(small[0]) if small.size else 0
        raise SingularSystemError(
            f"matrix is numerically singular at pivot {step} "
            f"(|u| = {pivots[step]:.3e}, ||A||_inf = {norm:.3e})",
            pivot=step,
        )

    z = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    bound = 1e-8 * (1.0 + np.abs(rhs).max())
    residual = rhs - A @ z
    if np.abs(residual).max() > bound:
        z = z + scipy.linalg.lu_solve((lu, piv), residual, check_finite=False)
    return z
