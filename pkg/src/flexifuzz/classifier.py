"""Weighted least-squares SVM trained through its KKT linear system.

Training solves

    [ 0   -y^T                  ] [ b     ]   [ 0   ]
    [ y   Omega + diag(1/(C M)) ] [ alpha ] = [ 1_n ]

with ``Omega[i, j] = y_i y_j K(x_i, x_j)`` and ``M`` the per-sample
memberships.  Prediction is ``sign(sum_i y_i alpha_i K(x_i, x) + b)`` with
``sign(0) = +1``.

The model consumes inputs that are already standardized; the optional
:class:`~flexifuzz.dataio.Standardizer` carried by a model is only stored
so a serialized model can be applied to raw data later.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import Standardizer
from .exceptions import DataError, SingularSystemError, TrainingError
from .kernel_linalg import (
    KernelSpec,
    cross_kernel,
    kernel_matrix,
    labelled_kernel_matrix,
    solve_dense,
)
from .membership import MembershipConfig, Scheme, compute_membership

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    C: float
    kernel: KernelSpec
    membership: MembershipConfig = field(default_factory=lambda: MembershipConfig(Scheme.UNIFORM))

    def __post_init__(self):
        if not np.isfinite(self.C) or self.C <= 0:
            raise ValueError(f"regularization parameter C must be positive, got {self.C!r}")


@dataclass(frozen=True)
class TrainedModel:
    train_X: np.ndarray
    train_y: np.ndarray
    alpha: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float = 1.0
    membership: np.ndarray = None
    config: MembershipConfig = None
    standardizer: Standardizer = None

    def kkt_system(self):
        """Rebuild the ``(n + 1) x (n + 1)`` system and its right-hand side."""
        return kkt_system(
            kernel_matrix(self.train_X, self.kernel), self.train_y, self.membership, self.C
        )

    def kkt_residual(self):
        A, rhs = self.kkt_system()
        z = np.concatenate([[self.bias], self.alpha])
        return float(np.abs(A @ z - rhs).max())


def _check_training_inputs(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X and y must describe the same number of samples")
    if X.shape[0] < 2:
        raise ValueError("training requires at least 2 samples")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise DataError("training requires both classes")
    return X, y.astype(int)


def kkt_system(K, y, membership, C):
    """Assemble the bordered system for kernel matrix ``K``."""
    y = np.asarray(y, dtype=float)
    n = y.size
    M = np.ones(n) if membership is None else np.asarray(membership, dtype=float)
    A = np.empty((n + 1, n + 1))
    A[0, 0] = 0.0
    A[0, 1:] = -y
    A[1:, 0] = y
    A[1:, 1:] = labelled_kernel_matrix(K, y)
    A[np.arange(1, n + 1), np.arange(1, n + 1)] += 1.0 / (C * M)
    rhs = np.concatenate([[0.0], np.ones(n)])
    return A, rhs


def train_weighted(X, y, membership, C, kernel, config=None, K=None):
    """Solve the KKT system for explicit membership values."""
    X, y = _check_training_inputs(X, y)
    M = np.asarray(membership, dtype=float)
    if M.shape != y.shape or not np.all(M > 0) or not np.all(np.isfinite(M)):
        raise ValueError("memberships must be positive and finite, one per sample")
    if K is None:
        K = kernel_matrix(X, kernel)
    A, rhs = kkt_system(K, y, M, C)
    try:
        z = solve_dense(A, rhs)
    except SingularSystemError as exc:
        raise TrainingError(f"KKT system is singular: {exc}") from exc
    return TrainedModel(
        train_X=X,
        train_y=y,
        alpha=z[1:],
        bias=float(z[0]),
        kernel=kernel,
        C=float(C),
        membership=M,
        config=config,
    )


def train(X, y, config):
    X, y = _check_training_inputs(X, y)
    M = compute_membership(X, y, config.membership)
    return train_weighted(X, y, M.values, config.C, config.kernel, config=config.membership)


def decision_function(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if model.train_X.shape[1] == 1 else X.reshape(1, -1)
    if X.shape[1] != model.train_X.shape[1]:
        raise ValueError(
            f"dimension mismatch: model expects {model.train_X.shape[1]} features, got {X.shape[1]}"
        )
    K = cross_kernel(X, model.train_X, model.kernel)
    return K @ (model.train_y * model.alpha) + model.bias


def decision_value(model, x):
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(decision_function(model, x)[0])


def sign_labels(scores):
    return np.where(np.asarray(scores) >= 0, 1, -1)


def predict(model, X):
    return sign_labels(decision_function(model, X))


def model_to_dict(model, provenance=None):
    cfg = model.config or MembershipConfig(Scheme.UNIFORM)
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "sigma": float(model.kernel.sigma),
        "C": float(model.C),
        "scheme": cfg.scheme.value,
        "center": cfg.center.value,
        "lambda": float(cfg.lam),
        "k": int(cfg.k),
        "delta": float(cfg.delta),
        "gamma": float(cfg.gamma),
        "alpha": [float(a) for a in model.alpha],
        "bias": float(model.bias),
        "membership": None if model.membership is None else [float(m) for m in model.membership],
        "train_X": [[float(v) for v in row] for row in model.train_X],
        "train_y": [int(v) for v in model.train_y],
        "standardization": model.standardizer.to_dict() if model.standardizer else None,
    }
    if provenance is not None:
        doc["provenance"] = provenance
    return doc


def model_from_dict(doc):
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format version {doc.get('version')!r}")
    try:
        cfg = MembershipConfig(
            scheme=Scheme(doc["scheme"]),
            center=doc.get("center", "mean"),
            lam=doc["lambda"],
            k=doc["k"],
            delta=doc.get("delta", 1e-6),
            gamma=doc.get("gamma", 0.5),
        )
        std = doc.get("standardization")
        train_X = np.asarray(doc["train_X"], dtype=float)
        return TrainedModel(
            train_X=train_X.reshape(len(doc["train_y"]), -1),
            train_y=np.asarray(doc["train_y"], dtype=int),
            alpha=np.asarray(doc["alpha"], dtype=float),
            bias=float(doc["bias"]),
            kernel=KernelSpec(float(doc["sigma"])),
            C=float(doc["C"]),
            membership=np.asarray(doc.get("membership") or np.ones(len(doc["train_y"])), dtype=float),
            config=cfg,
            standardizer=Standardizer.from_dict(std) if std else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model document: {exc}") from None


def save_model(model, path, provenance=None):
    # json emits repr() of floats, which round-trips every double exactly
    Path(path).write_text(json.dumps(model_to_dict(model, provenance), indent=1) + "\n",
                          encoding="utf-8")


def load_model(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)
