"""Dataset loading, standardization, splitting, CV folds and label noise.

Every randomized routine takes an integer ``seed`` and draws from
``numpy.random.Generator(PCG64(SeedSequence(seed)))`` (what
``numpy.random.default_rng(seed)`` constructs), so results are a pure
function of the inputs and the seed on every platform.
"""

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import DataError, SplitError


def rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def round_half_up(x):
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple = ()
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y).astype(int)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if not np.all(np.isin(y, (-1, 1))):
            raise DataError("labels must be -1 or +1")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError(f"{len(names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    def __len__(self):
        return self.X.shape[0]

    def subset(self, indices, name=None):
        indices = np.asarray(indices, dtype=int)
        return replace(self, X=self.X[indices], y=self.y[indices], name=name or self.name)

    def with_labels(self, y):
        return replace(self, y=np.asarray(y))

    def class_counts(self):
        return {-1: int(np.count_nonzero(self.y == -1)), 1: int(np.count_nonzero(self.y == 1))}


def parse_label_mapping(spec):
    """Parse ``"0:-1,1:1"`` (or a dict) into ``{str: int}``."""
    if isinstance(spec, dict):
        items = spec.items()
    else:
        items = []
        for part in str(spec).split(","):
            if ":" not in part:
                raise DataError(f"label mapping entry {part!r} is not of the form value:label")
            key, _, value = part.rpartition(":")
            items.append((key, value))
    mapping = {}
    for key, value in items:
        try:
            label = int(value)
        except (TypeError, ValueError):
            raise DataError(f"label mapping target {value!r} is not an integer") from None
        if label not in (-1, 1):
            raise DataError(f"label mapping target must be -1 or +1, got {label}")
        mapping[str(key).strip()] = label
    if not mapping:
        raise DataError("empty label mapping")
    return mapping


def _canonical(value):
    """Map '1', '1.0' and ' 1 ' to the same key; leave non-numeric text as is."""
    value = value.strip()
    try:
        number = float(value)
    except ValueError:
        return value
    if number.is_integer():
        return str(int(number))
    return repr(number)


def load_csv(path, label_column=-1, label_mapping=None, name=None, require_both=True):
    """Read a comma-separated file with a header row.

    ``label_column`` is a header name or a (possibly negative) column index.
    ``label_mapping`` maps raw label text to -1/+1 and is required.
    Row and column numbers in error messages are 1-based and count the
    header as row 1.  ``require_both=False`` admits single-class files
    (scoring data).
    """
    path = Path(path)
    if label_mapping is None:
        raise DataError("an explicit label mapping is required")
    mapping = {_canonical(k): v for k, v in parse_label_mapping(label_mapping).items()}
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")

    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    # (1-based row number, cells); blank lines are skipped but still counted
    body = [(n + 2, row) for n, row in enumerate(rows[1:]) if any(c.strip() for c in row)]
    if not body:
        raise DataError(f"{path}: no data rows")

    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
    else:
        label_idx = int(label_column)
        if not -len(header) <= label_idx < len(header):
            raise DataError(f"{path}: label column index {label_idx} out of range")
        label_idx %= len(header)

    feature_idx = [j for j in range(len(header)) if j != label_idx]
    X = np.empty((len(body), len(feature_idx)))
    y = np.empty(len(body), dtype=int)
    for i, (row_no, row) in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {row_no} has {len(row)} fields, header has {len(header)}")
        for out_j, j in enumerate(feature_idx):
            cell = row[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell!r} at row {row_no}, column {j + 1}"
                ) from None
            if not math.isfinite(value):
                raise DataError(f"{path}: non-finite value {cell!r} at row {row_no}, column {j + 1}")
            X[i, out_j] = value
        raw = _canonical(row[label_idx])
        if raw not in mapping:
            raise DataError(f"{path}: unknown label {row[label_idx]!r} at row {row_no}")
        y[i] = mapping[raw]

    ds = Dataset(X, y, tuple(header[j] for j in feature_idx), name or path.stem)
    counts = ds.class_counts()
    if require_both and min(counts.values()) == 0:
        raise DataError(f"{path}: training requires both classes, found only label "
                        f"{max(counts, key=counts.get):+d}")
    return ds


def write_csv(ds, path, label_name="label"):
    """Write a dataset with exact float formatting (``repr``)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(ds.feature_names) + [label_name])
        for row, label in zip(ds.X, ds.y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    path: Path
    label_column: object = -1
    label_mapping: dict = field(default_factory=dict)

    def load(self):
        return load_csv(self.path, self.label_column, self.label_mapping, name=self.name)


def load_manifest_datasets(entries, base_dir="."):
    """Build :class:`DatasetEntry` objects from manifest ``datasets`` records."""
    base_dir = Path(base_dir)
    out = []
    for i, rec in enumerate(entries):
        try:
            name = rec["name"]
            path = Path(rec["path"])
            mapping = rec["label_mapping"]
        except (KeyError, TypeError):
            raise DataError(f"dataset entry {i} needs name, path and label_mapping") from None
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise DataError(f"dataset {name!r}: file not found: {path}")
        out.append(DatasetEntry(name, path, rec.get("label_column", -1), parse_label_mapping(mapping)))
    return out


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def split(ds, train_fraction=0.7, seed=0):
    """Random train/test partition; both parts must keep both classes."""
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction!r}")
    n = len(ds)
    n_train = round_half_up(n * train_fraction)
    perm = rng(seed).permutation(n)
    train, test = ds.subset(perm[:n_train]), ds.subset(perm[n_train:])
    for part, label in ((train, "training"), (test, "test")):
        counts = part.class_counts()
        if min(counts.values()) == 0:
            raise SplitError(
                f"seed {seed}: {label} partition of {len(part)} rows would contain a single class"
            )
    return train, test


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        stds = np.where(stds > 0, stds, 1.0)
        return cls(means, stds)

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.means) / self.stds

    def inverse_transform(self, Z):
        return np.asarray(Z, dtype=float) * self.stds + self.means

    def apply(self, ds):
        return replace(ds, X=self.transform(ds.X))

    def to_dict(self):
        return {"means": [float(v) for v in self.means], "stds": [float(v) for v in self.stds]}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["means"], dtype=float), np.asarray(d["stds"], dtype=float))


def standardize_fit_apply(train, others=()):
    """Z-score with population statistics of ``train``; zero spread maps to 1."""
    scaler = Standardizer.fit(train.X)
    return scaler.apply(train), [scaler.apply(ds) for ds in others], scaler


def inject_label_noise(y, rate, seed=0):
    """Flip exactly ``round(rate * n)`` labels chosen uniformly without replacement."""
    if not 0 <= rate < 1:
        raise ValueError(f"noise rate must lie in [0, 1), got {rate!r}")
    y = np.asarray(y).astype(int)
    n_flip = round_half_up(rate * y.size)
    out = y.copy()
    if n_flip:
        idx = rng(seed).choice(y.size, size=n_flip, replace=False)
        out[idx] = -out[idx]
    return out


def stratified_kfold(ds, folds=5, seed=0):
    """Stratified folds as ``[(train_idx, val_idx), ...]``.

    Each class is shuffled and dealt round-robin starting at fold 0, so
    per-class fold sizes differ by at most one.
    """
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    y = np.asarray(ds.y if isinstance(ds, Dataset) else ds)
    gen = rng(seed)
    assignment = np.empty(y.size, dtype=int)
    for label in (-1, 1):
        idx = np.flatnonzero(y == label)
        if idx.size < folds:
            raise ValueError(f"class {label:+d} has {idx.size} samples, fewer than {folds} folds")
        idx = gen.permutation(idx)
        assignment[idx] = np.arange(idx.size) % folds
    out = []
    all_idx = np.arange(y.size)
    for f in range(folds):
        mask = assignment == f
        out.append((all_idx[~mask], all_idx[mask]))
    return out
