"""Dataset ingestion, stratified train/test batching, and synthetic
planted-feature generators for desk-scale runs."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    metadata: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]


@dataclass
class Batch:
    """One train/test split, with the row indices kept for the manifest."""

    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    train_indices: np.ndarray
    test_indices: np.ndarray


def load_csv(path) -> Dataset:
    """Header row; numeric cells; last column is the binary label."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2:
        raise DataError(f"{path}: need at least one feature column and the label")
    names = header[:-1]
    features = []
    labels = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        parsed = []
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise DataError(f"{path}: row {i}, column {j + 1} ({header[j]!r}) is empty")
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DataError(
                    f"{path}: row {i}, column {j + 1} ({header[j]!r}) is not numeric: {cell!r}"
                ) from None
        label = parsed[-1]
        if label not in (0.0, 1.0):
            raise DataError(f"{path}: row {i}: label must be 0 or 1, got {label}")
        features.append(parsed[:-1])
        labels.append(int(label))
    if len(features) < 4:
        raise DataError(f"{path}: need at least 4 rows, got {len(features)}")
    return Dataset(np.array(features), np.array(labels, dtype=int), names)


def _undersample(x, y, indices, rng):
    counts = {c: int(np.sum(y == c)) for c in (0, 1)}
    minority = min(counts, key=counts.get)
    majority = 1 - minority
    keep_major = rng.choice(
        np.flatnonzero(y == majority), size=counts[minority], replace=False
    )
    keep = np.sort(np.concatenate([np.flatnonzero(y == minority), keep_major]))
    return x[keep], y[keep], indices[keep]


def stratified_batches(ds: Dataset, n_batches: int = 10, test_fraction: float = 0.33,
                       balance: bool = False, seed: int = 0) -> list[Batch]:
    """Independent stratified splits, one per (seed, batch index); with
    ``balance`` the majority class is under-sampled to the minority size in
    train and test separately."""
    if not 0 < test_fraction < 1:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    counts = [int(np.sum(ds.labels == c)) for c in (0, 1)]
    if min(counts) < 2:
        raise DataError("both classes need at least 2 samples to stratify")
    for c, n_c in enumerate(counts):
        n_test = int(round(test_fraction * n_c))
        if n_test < 1 or n_test >= n_c:
            raise DataError(
                f"class {c} with {n_c} samples cannot be split at fraction {test_fraction}"
            )
    batches = []
    for b in range(n_batches):
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        train_idx, test_idx = [], []
        for c in (0, 1):
            idx = np.flatnonzero(ds.labels == c)
            rng.shuffle(idx)
            n_test = int(round(test_fraction * len(idx)))
            test_idx.append(idx[:n_test])
            train_idx.append(idx[n_test:])
        train_idx = np.sort(np.concatenate(train_idx))
        test_idx = np.sort(np.concatenate(test_idx))
        tr_x, tr_y = ds.features[train_idx], ds.labels[train_idx]
        te_x, te_y = ds.features[test_idx], ds.labels[test_idx]
        if balance:
            tr_x, tr_y, train_idx = _undersample(tr_x, tr_y, train_idx, rng)
            te_x, te_y, test_idx = _undersample(te_x, te_y, test_idx, rng)
        batches.append(Batch(tr_x, tr_y, te_x, te_y, train_idx, test_idx))
    return batches


def batches_manifest(batches: list[Batch], path):
    """Row indices per split, for exact split reproducibility."""
    payload = [
        {"train": b.train_indices.tolist(), "test": b.test_indices.tolist()}
        for b in batches
    ]
    with open(path, "w") as fh:
        json.dump(payload, fh)


def synthetic_planted(d: int, p: int, k_informative: int, noise_sd: float = 0.5,
                      seed: int = 0) -> Dataset:
    """Logistic labels driven by k standard-normal features; the other
    p - k columns are pure noise. Informative indices land in metadata."""
    if not 1 <= k_informative <= p:
        raise ConfigError(f"k_informative must be in [1, {p}], got {k_informative}")
    if d < 4:
        raise ConfigError("need d >= 4 samples")
    if noise_sd < 0:
        raise ConfigError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(d, p))
    informative = np.sort(rng.choice(p, size=k_informative, replace=False))
    coef = rng.uniform(1.0, 2.0, size=k_informative) * rng.choice([-1.0, 1.0], size=k_informative)
    logits = features[:, informative] @ coef / np.sqrt(k_informative)
    logits = 2.0 * logits + noise_sd * rng.normal(size=d)
    probs = 1.0 / (1.0 + np.exp(-logits))
    labels = (rng.uniform(size=d) < probs).astype(int)
    # guarantee both classes for downstream stratification
    if labels.sum() < 2:
        labels[np.argsort(probs)[-2:]] = 1
    if (1 - labels).sum() < 2:
        labels[np.argsort(probs)[:2]] = 0
    names = [f"f{j}" for j in range(p)]
    meta = {"informative_indices": informative.tolist(), "coefficients": coef.tolist()}
    return Dataset(features, labels, names, meta)


def dataset_to_csv(ds: Dataset, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.feature_names + ["label"])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([format(v, ".17g") for v in row] + [int(label)])
