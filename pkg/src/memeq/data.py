"""Benchmark dataset loading and input-voltage normalization.

Both benchmark tables ship with the package as plain delimited text (one row
per sample: feature columns, then the integer class label) together with
sha256 checksums; nothing is fetched at runtime. Features are min-max
normalized per column to the drive range [-0.5 V, +0.5 V].
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

VOLTAGE_HALF_RANGE = 0.5


class DatasetKind(Enum):
    IRIS = "iris"
    BREAST_CANCER = "breast_cancer"


# samples, features, classes
_SCHEMAS = {
    DatasetKind.IRIS: (150, 4, 3),
    DatasetKind.BREAST_CANCER: (569, 30, 2),
}


class MalformedRow(ValueError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number


class UnknownLabel(ValueError):
    def __init__(self, line_number: int, label):
        super().__init__(f"line {line_number}: unknown class label {label!r}")
        self.line_number = line_number


@dataclass(frozen=True)
class Dataset:
    kind: DatasetKind
    features: np.ndarray        # (samples, d); volts once normalized
    labels: np.ndarray          # (samples,) int
    targets: np.ndarray         # (samples, classes) one-hot
    normalized: bool = False

    @property
    def sample_count(self) -> int:
        return self.features.shape[0]

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    @property
    def class_count(self) -> int:
        return self.targets.shape[1]


def packaged_path(kind: DatasetKind) -> Path:
    return Path(str(resources.files("memeq") / "datasets" / f"{kind.value}.csv"))


def _expected_checksums() -> dict[str, str]:
    text = (resources.files("memeq") / "datasets" / "checksums.txt").read_text()
    out = {}
    for line in text.strip().splitlines():
        digest, name = line.split()
        out[name] = digest
    return out


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_dataset(kind: DatasetKind, path=None) -> Dataset:
    """Parse a raw dataset file; defaults to the vendored copy (checksummed)."""
    samples, n_features, n_classes = _SCHEMAS[kind]
    if path is None:
        path = packaged_path(kind)
        digest = file_sha256(path)
        expected = _expected_checksums()[f"{kind.value}.csv"]
        if digest != expected:
            raise ValueError(f"{path.name}: checksum mismatch ({digest} != {expected})")

    features = np.empty((0, n_features))
    rows = []
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != n_features + 1:
                raise MalformedRow(line_number,
                                   f"expected {n_features + 1} columns, got {len(parts)}")
            try:
                row = [float(v) for v in parts[:-1]]
            except ValueError as exc:
                raise MalformedRow(line_number, str(exc)) from None
            try:
                label = int(parts[-1])
            except ValueError:
                raise UnknownLabel(line_number, parts[-1]) from None
            if not 0 <= label < n_classes:
                raise UnknownLabel(line_number, label)
            rows.append(row)
            labels.append(label)
    if len(rows) != samples:
        raise ValueError(f"{kind.value}: expected {samples} samples, got {len(rows)}")
    features = np.asarray(rows, dtype=float)
    labels = np.asarray(labels, dtype=int)
    targets = np.zeros((samples, n_classes))
    targets[np.arange(samples), labels] = 1.0
    return Dataset(kind=kind, features=features, labels=labels, targets=targets)


def normalize(dataset: Dataset) -> Dataset:
    """Min-max map each feature column onto [-0.5, 0.5]; constants map to 0."""
    f = dataset.features
    lo = f.min(axis=0)
    hi = f.max(axis=0)
    span = hi - lo
    safe = np.where(span == 0, 1.0, span)
    scaled = (f - lo) / safe - VOLTAGE_HALF_RANGE
    scaled = np.where(span == 0, 0.0, scaled)
    return replace(dataset, features=scaled, normalized=True)


def load_normalized(kind: DatasetKind, path=None) -> Dataset:
    return normalize(load_dataset(kind, path))
