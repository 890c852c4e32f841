"""Datasets: CSV ingestion, seeded splitting, standardization and synthetic generators."""

import csv
import math
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError, IngestionError
from .losses import one_hot
from .mathcore import Normal, Rng, Uniform

TASKS = ("regression", "binary", "multiclass")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list
    task: str
    target_name: str = "y"
    classes: list = field(default_factory=list)  # original label values, classification only

    def __post_init__(self):
        if self.task not in TASKS:
            raise ArgumentError(f"unknown task {self.task!r}")
        if self.X.shape[0] != self.y.shape[0]:
            raise ArgumentError(f"{self.X.shape[0]} feature rows but {self.y.shape[0]} target rows")

    def __len__(self):
        return self.X.shape[0]

    @property
    def labels(self):
        """Integer class indices (classification) or the target column (regression)."""
        if self.task == "multiclass":
            return np.argmax(self.y, axis=1)
        if self.task == "binary":
            return self.y[:, 0].astype(np.int64)
        return self.y[:, 0]

    def subset(self, idx):
        return replace(self, X=self.X[idx], y=self.y[idx])


def encode_target(values, task):
    """Turn a raw target column into (y matrix, class values)."""
    values = np.asarray(values, dtype=np.float64)
    if task == "regression":
        return values[:, None], []
    classes = np.unique(values)
    idx = np.searchsorted(classes, values)
    if task == "binary":
        if classes.size > 2:
            raise IngestionError(f"binary task but target has {classes.size} distinct values")
        if classes.size == 1 and classes[0] in (0.0, 1.0):
            classes = np.array([0.0, 1.0])
            idx = values.astype(np.int64)
        return idx.astype(np.float64)[:, None], classes.tolist()
    return one_hot(idx, classes.size), classes.tolist()


def load_csv(path, target_column, task):
    if task not in TASKS:
        raise ArgumentError(f"unknown task {task!r}")
    if not os.path.exists(path):
        raise IngestionError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError(f"{path}: empty file, expected a header row") from None
        if target_column not in header:
            raise IngestionError(f"{path}: target column {target_column!r} not in header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise IngestionError(f"{path}: line {lineno} has {len(row)} cells, header has {len(header)}")
            parsed = []
            for col, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise IngestionError(
                        f"{path}: line {lineno}, column {col!r}: non-numeric cell {cell!r}") from None
            rows.append(parsed)
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    t = header.index(target_column)
    features = [h for i, h in enumerate(header) if i != t]
    X = np.delete(data, t, axis=1)
    y, classes = encode_target(data[:, t], task)
    return Dataset(X, y, features, task, target_column, classes)


def _target_column(ds):
    if ds.task == "regression":
        return ds.y[:, 0]
    labels = ds.labels
    if ds.classes:
        return np.asarray(ds.classes, dtype=np.float64)[labels]
    return labels.astype(np.float64)


def write_csv(ds, path):
    """Write features plus target; floats use round-trip ``repr`` precision."""
    target = _target_column(ds)
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [ds.target_name])
        for row, t in zip(ds.X, target):
            w.writerow([repr(float(v)) for v in row] + [repr(float(t))])
    os.replace(tmp, path)


def split(ds, test_fraction=0.2, seed=42):
    """Seeded shuffle, then ceil(n * (1 - f)) rows for training and the rest for testing."""
    n = len(ds)
    if not 0 < test_fraction < 1:
        raise ArgumentError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if n < 2:
        raise ArgumentError(f"cannot split {n} rows")
    # tolerance keeps e.g. 100 * 0.8 from rounding up to 81
    n_train = math.ceil(n * (1.0 - test_fraction) - 1e-9)
    if n_train < 1 or n_train >= n:
        raise ArgumentError(f"split of {n} rows at test_fraction={test_fraction} leaves an empty side")
    order = Rng(seed).permutation(n)
    return ds.subset(order[:n_train]), ds.subset(order[n_train:])


@dataclass
class Scaler:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, X):
        return apply_scaler(self, X)

    def to_dict(self):
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["means"], dtype=np.float64), np.asarray(d["stds"], dtype=np.float64))


def fit_scaler(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ArgumentError("cannot fit a scaler on empty data")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = stds == 0
    if constant.any():
        warnings.warn(f"constant feature columns {np.flatnonzero(constant).tolist()} get std 1", stacklevel=2)
        stds = np.where(constant, 1.0, stds)
    return Scaler(means, stds)


def apply_scaler(scaler, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != scaler.means.size:
        raise ArgumentError(f"scaler fitted on {scaler.means.size} features, got shape {X.shape}")
    return (X - scaler.means) / scaler.stds


# ---------------------------------------------------------------- generators


def gen_shm(n=500, A=2.0, omega=1.5, phi=np.pi / 4, noise_sd=0.1, t_range=(0.0, 10.0), seed=0):
    """Noisy samples of A sin(omega t + phi) at uniformly drawn times."""
    if n < 2 or noise_sd < 0:
        raise ArgumentError("gen_shm needs n >= 2 and noise_sd >= 0")
    rng = Rng(seed)
    t = rng.sample(Uniform(*t_range), n)
    y = A * np.sin(omega * t + phi)
    if noise_sd > 0:
        y = y + rng.sample(Normal(0.0, noise_sd), n)
    return Dataset(t[:, None], y[:, None], ["t"], "regression", "x")


def spiral_angle(k, r, classes):
    return 2.0 * np.pi * k / classes + r * 1.5 * np.pi


def gen_spiral(n_per_class=300, classes=3, noise_sd=0.2, seed=0):
    """Interleaved spiral arms; radius grows evenly from 0 to 1 along each arm."""
    if n_per_class < 1 or classes < 2:
        raise ArgumentError("gen_spiral needs n_per_class >= 1 and classes >= 2")
    rng = Rng(seed)
    r = np.linspace(0.0, 1.0, n_per_class)
    pts, labels = [], []
    for k in range(classes):
        theta = spiral_angle(k, r, classes)
        if noise_sd > 0:
            theta = theta + rng.sample(Normal(0.0, noise_sd), n_per_class)
        pts.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        labels.append(np.full(n_per_class, k))
    labels = np.concatenate(labels)
    return Dataset(np.concatenate(pts), one_hot(labels, classes), ["x1", "x2"], "multiclass",
                   "label", list(range(classes)))


CONCENTRIC_BOUNDS = (0.8, 1.6, 2.4)
CONCENTRIC_BLEND = 0.1


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def concentric_target(x, y):
    """Piecewise regional function of radius/angle, blended smoothly at boundaries.

    Regions by radius: sin(3r) | 0.5 (r - 1.2)^2 | exp(-4 (r - 2)^2) | 0.2 sin(2 theta).
    Each boundary b is crossed by a smoothstep over [b - 0.05, b + 0.05].
    """
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    regions = [np.sin(3.0 * r), 0.5 * (r - 1.2) ** 2, np.exp(-4.0 * (r - 2.0) ** 2),
               0.2 * np.sin(2.0 * theta)]
    out = regions[0]
    for b, nxt in zip(CONCENTRIC_BOUNDS, regions[1:]):
        s = _smoothstep((r - b) / CONCENTRIC_BLEND + 0.5)
        out = (1.0 - s) * out + s * nxt
    return out


def gen_concentric(n=2000, seed=0):
    if n < 4:
        raise ArgumentError("gen_concentric needs n >= 4")
    rng = Rng(seed)
    xy = rng.sample(Uniform(-3.0, 3.0), (n, 2))
    t = concentric_target(xy[:, 0], xy[:, 1])
    return Dataset(xy, t[:, None], ["x1", "x2"], "regression", "z")
