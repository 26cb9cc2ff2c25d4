"""Experiment protocol shared by the benchmark, noise and sensitivity commands.

One run on a dataset is: split (seed) -> flip training labels (seed + 2)
-> standardize on the training part -> stratified grid search (folds from
seed + 1) -> retrain on the whole training part -> score the test part.
"""

from dataclasses import dataclass, field

import numpy as np

from .classifier import predict, train
from .dataio import inject_label_noise, split, standardize_fit_apply, stratified_kfold
from .evaluation.metrics import confusion, metrics
from .evaluation.search import HyperGrid, grid_search
from .exceptions import FlexiFuzzError
from .families import GridPoint, get_family

#: Axis pairs accepted by :func:`sensitivity_grid`, keyed by CLI spelling.
SENSITIVITY_AXES = {
    ("C", "sigma"): ("C_values", "sigma_values", "C", "sigma"),
    ("lambda", "k"): ("lambda_values", "k_values", "lam", "k"),
}


@dataclass(frozen=True)
class Protocol:
    seed: int = 0
    folds: int = 5
    train_fraction: float = 0.7

    @property
    def split_seed(self):
        return self.seed

    @property
    def fold_seed(self):
        return self.seed + 1

    @property
    def noise_seed(self):
        return self.seed + 2


@dataclass
class PreparedSplit:
    train: object
    test: object
    standardizer: object
    flipped: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


def prepare(ds, protocol, noise_rate=0.0):
    tr, te = split(ds, protocol.train_fraction, protocol.split_seed)
    flipped = np.zeros(0, dtype=int)
    if noise_rate > 0:
        noisy = inject_label_noise(tr.y, noise_rate, protocol.noise_seed)
        flipped = np.flatnonzero(noisy != tr.y)
        tr = tr.with_labels(noisy)
    tr, (te,), std = standardize_fit_apply(tr, [te])
    return PreparedSplit(tr, te, std, flipped)


@dataclass
class ModelResult:
    model: str
    label: str
    point: GridPoint = None
    cv_accuracy: float = None
    counts: object = None
    scores: object = None
    cv_table: list = field(default_factory=list)
    error: str = None

    def summary(self):
        out = {"model": self.model, "label": self.label, "status": "failed" if self.error else "ok"}
        if self.error:
            out["error"] = self.error
            return out
        out["hyperparameters"] = self.point.to_dict()
        out["cv_accuracy"] = self.cv_accuracy
        out.update(self.scores.to_dict())
        out["confusion"] = {"tp": self.counts.tp, "tn": self.counts.tn,
                            "fp": self.counts.fp, "fn": self.counts.fn}
        return out


def fit_and_score(prepared, family, point):
    """Train one configuration on the training part and score the test part."""
    family = get_family(family) if isinstance(family, str) else family
    model = train(prepared.train.X, prepared.train.y, family.train_config(point))
    counts = confusion(prepared.test.y, predict(model, prepared.test.X))
    return model, counts, metrics(counts)


def evaluate_family(prepared, family, grid=None, protocol=Protocol()):
    family = get_family(family) if isinstance(family, str) else family
    result = ModelResult(family.name, family.label)
    try:
        folds = stratified_kfold(prepared.train, protocol.folds, protocol.fold_seed)
        best, table = grid_search(prepared.train, grid or HyperGrid(), family, fold_indices=folds)
        result.point, result.cv_table = best, table
        result.cv_accuracy = next(r.mean_accuracy for r in table if r.point == best)
        _, result.counts, result.scores = fit_and_score(prepared, family, best)
    except (FlexiFuzzError, ArithmeticError, ValueError) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def sensitivity_grid(prepared, family, grid, axes, optimum):
    """Test accuracy over the two chosen axes, other hyperparameters at ``optimum``.

    Returns ``[(v1, v2, accuracy), ...]`` in axis order (first axis outer);
    accuracy is ``None`` where training failed.
    """
    family = get_family(family) if isinstance(family, str) else family
    try:
        grid_a, grid_b, attr_a, attr_b = SENSITIVITY_AXES[tuple(axes)]
    except KeyError:
        raise ValueError(f"unsupported axis pair {','.join(axes)}; use C,sigma or lambda,k") from None
    if attr_a == "lam" and "lambda" not in family.axes:
        raise ValueError(f"model {family.name} has no lambda/k hyperparameters")
    base = optimum.to_dict()
    base["lam"] = base.pop("lambda", None)
    rows = []
    for a in getattr(grid, grid_a):
        for b in getattr(grid, grid_b):
            point = GridPoint(**{**base, attr_a: a, attr_b: b})
            try:
                _, _, scores = fit_and_score(prepared, family, point)
                acc = scores.accuracy
            except (FlexiFuzzError, ArithmeticError, ValueError):
                acc = None
            rows.append((a, b, acc))
    return rows
