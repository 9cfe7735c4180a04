"""Dataset generation, splitting, label inversion, and persistence.

The data model is a labeled (or not-yet-labeled) float64 feature matrix
plus a split identity tag. Everything here is a pure function of its
inputs and a seed.
"""

from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, FormatError, LabelError

SPLIT_TAGS = ("train", "test", "forget", "retain", "synthetic_forget", "synthetic_retain")
FORGET_MODES = ("random", "class_targeted")
INVERSION_MODES = ("complement", "random_different")

DATASET_VERSION = 1


@dataclass
class Dataset:
    """Feature matrix with class labels and split identity.

    ``labels`` may be None for synthetic samples that have not been run
    through a classifier yet; ``num_classes`` is None in that case too.
    """

    features: np.ndarray
    labels: np.ndarray | None
    num_classes: int | None
    split_tag: str
    origin_seed: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ConfigurationError(f"features must be 2-D, got shape {self.features.shape}")
        if not np.all(np.isfinite(self.features)):
            raise ConfigurationError("features contain non-finite values")
        if self.split_tag not in SPLIT_TAGS:
            raise ConfigurationError(f"unknown split tag {self.split_tag!r}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.features.shape[0],):
                raise ConfigurationError(
                    f"labels shape {self.labels.shape} does not match {self.features.shape[0]} rows"
                )
            if self.num_classes is None or self.num_classes < 2:
                raise ConfigurationError("labeled datasets need num_classes >= 2")
            if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
                raise LabelError(f"labels out of range [0, {self.num_classes})")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass
class SplitSpec:
    """How to carve a generated pool into train/test/forget/retain.

    ``forget_fraction`` applies to the train subset. In class_targeted
    mode the forget set is drawn only from ``forget_class``, capped at
    the fraction.
    """

    test_fraction: float
    forget_fraction: float
    forget_mode: str = "random"
    forget_class: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigurationError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if not 0.0 < self.forget_fraction < 1.0:
            raise ConfigurationError(f"forget_fraction must be in (0, 1), got {self.forget_fraction}")
        if self.forget_mode not in FORGET_MODES:
            raise ConfigurationError(f"unknown forget mode {self.forget_mode!r}")
        if self.forget_mode == "class_targeted" and self.forget_class is None:
            raise ConfigurationError("class_targeted mode requires forget_class")


def generate_mixture(
    num_classes: int, dim: int, n: int, class_separation: float, seed: int
) -> Dataset:
    """Sample a balanced Gaussian-mixture classification pool.

    Class k is an isotropic unit-variance Gaussian centered at a seeded
    random direction scaled to norm ``class_separation``; each class
    contributes exactly n / num_classes points.
    """
    if num_classes < 2:
        raise ConfigurationError(f"num_classes must be >= 2, got {num_classes}")
    if dim < 2:
        raise ConfigurationError(f"dim must be >= 2, got {dim}")
    if class_separation <= 0:
        raise ConfigurationError(f"class_separation must be > 0, got {class_separation}")
    if n <= 0 or n % num_classes != 0:
        raise ConfigurationError(f"n={n} must be a positive multiple of num_classes={num_classes}")

    rng = np.random.default_rng(seed)
    per_class = n // num_classes
    directions = rng.standard_normal((num_classes, dim))
    centers = directions / np.linalg.norm(directions, axis=1, keepdims=True) * class_separation
    blocks = [centers[k] + rng.standard_normal((per_class, dim)) for k in range(num_classes)]
    features = np.concatenate(blocks, axis=0)
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    return Dataset(features, labels, num_classes, "train", int(seed))


def mixture_centers(num_classes: int, dim: int, class_separation: float, seed: int) -> np.ndarray:
    """The class centers generate_mixture(seed) uses, for oracle checks."""
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((num_classes, dim))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True) * class_separation


def _take(ds: Dataset, idx: np.ndarray, tag: str, seed: int) -> Dataset:
    labels = None if ds.labels is None else ds.labels[idx].copy()
    return Dataset(ds.features[idx].copy(), labels, ds.num_classes, tag, seed)


def split_dataset(full: Dataset, spec: SplitSpec) -> dict[str, Dataset]:
    """Partition into {train, test, forget, retain}.

    test is disjoint from train; forget and retain partition train.
    Deterministic for a fixed (full, spec).
    """
    if full.labels is None:
        raise ConfigurationError("cannot split an unlabeled dataset")
    n = full.n
    n_test = int(round(n * spec.test_fraction))
    n_train = n - n_test
    if n_test < 1 or n_train < 2:
        raise ConfigurationError(f"test_fraction {spec.test_fraction} leaves empty subsets for n={n}")

    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    test_idx = perm[:n_test]
    train_idx = perm[n_test:]

    n_forget = int(round(n_train * spec.forget_fraction))
    if n_forget < 1 or n_train - n_forget < 1:
        raise ConfigurationError(
            f"forget_fraction {spec.forget_fraction} leaves empty subsets for train size {n_train}"
        )

    if spec.forget_mode == "random":
        fperm = rng.permutation(n_train)
        forget_pos = fperm[:n_forget]
    else:
        cls = int(spec.forget_class)
        if full.num_classes is None or not 0 <= cls < full.num_classes:
            raise ConfigurationError(f"forget_class {cls} out of range")
        member_pos = np.flatnonzero(full.labels[train_idx] == cls)
        if member_pos.size == 0:
            raise ConfigurationError(f"class_targeted: class {cls} has no members in the train split")
        member_pos = member_pos[rng.permutation(member_pos.size)]
        forget_pos = member_pos[: min(n_forget, member_pos.size)]

    mask = np.zeros(n_train, dtype=bool)
    mask[forget_pos] = True
    forget_idx = train_idx[forget_pos]
    retain_idx = train_idx[~mask]

    seed = int(spec.seed)
    return {
        "train": _take(full, train_idx, "train", seed),
        "test": _take(full, test_idx, "test", seed),
        "forget": _take(full, forget_idx, "forget", seed),
        "retain": _take(full, retain_idx, "retain", seed),
    }


def invert_labels(labels: np.ndarray, num_classes: int, mode: str, seed: int = 0) -> np.ndarray:
    """Replace every label with a different class.

    complement: l -> (C-1) - l. For odd C the middle class is its own
    complement; those elements fall back to a seeded random different
    class so the output always differs from the input.
    random_different: uniform over the other C-1 classes, seeded.
    """
    if num_classes < 2:
        raise ConfigurationError(f"num_classes must be >= 2, got {num_classes}")
    if mode not in INVERSION_MODES:
        raise ConfigurationError(f"unknown inversion mode {mode!r}")
    lab = np.asarray(labels, dtype=np.int64)
    if lab.size and (lab.min() < 0 or lab.max() >= num_classes):
        raise LabelError(f"labels out of range [0, {num_classes})")

    rng = np.random.default_rng(seed)
    if mode == "random_different":
        r = rng.integers(0, num_classes - 1, size=lab.shape)
        return np.where(r < lab, r, r + 1).astype(np.int64)

    out = (num_classes - 1) - lab
    fixed = out == lab
    if np.any(fixed):
        r = rng.integers(0, num_classes - 1, size=int(fixed.sum()))
        sub = lab[fixed]
        out[fixed] = np.where(r < sub, r, r + 1)
    return out


# --- persistence ----------------------------------------------------------

def _encode_features(features: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(features, dtype="<f8").tobytes()).decode("ascii")


def dataset_to_dict(ds: Dataset) -> dict:
    return {
        "format_version": DATASET_VERSION,
        "C": None if ds.num_classes is None else int(ds.num_classes),
        "d": int(ds.dim),
        "n": int(ds.n),
        "split_tag": ds.split_tag,
        "origin_seed": int(ds.origin_seed),
        "features": _encode_features(ds.features),
        "labels": None if ds.labels is None else [int(v) for v in ds.labels],
    }


def dataset_from_dict(doc: dict) -> Dataset:
    if not isinstance(doc, dict):
        raise FormatError("dataset file must be a JSON object")
    version = doc.get("format_version")
    if version != DATASET_VERSION:
        raise FormatError(f"unsupported dataset format_version {version!r}")
    try:
        n = int(doc["n"])
        d = int(doc["d"])
        c = doc["C"]
        tag = doc["split_tag"]
        origin_seed = int(doc["origin_seed"])
        payload = doc["features"]
        raw_labels = doc["labels"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"dataset file missing field: {exc}") from exc

    try:
        raw = base64.b64decode(payload.encode("ascii"), validate=True)
    except Exception as exc:
        raise FormatError(f"invalid base64 feature payload ({exc})") from exc
    if len(raw) != n * d * 8:
        raise FormatError(f"truncated feature payload at byte {len(raw)}, expected {n * d * 8} bytes")
    features = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(n, d)
    if not np.all(np.isfinite(features)):
        raise FormatError("non-finite values in feature payload")

    labels = None
    if raw_labels is not None:
        if len(raw_labels) != n:
            raise FormatError(f"label count {len(raw_labels)} does not match n={n}")
        labels = np.asarray(raw_labels, dtype=np.int64)
        if c is None:
            raise FormatError("labeled dataset file lacks C")
    try:
        return Dataset(features, labels, None if c is None else int(c), tag, origin_seed)
    except (ConfigurationError, LabelError) as exc:
        raise FormatError(f"dataset file violates invariants: {exc}") from exc


def store_dataset(ds: Dataset, path: str) -> None:
    """Write a bit-exact JSON snapshot (features as base64 LE float64)."""
    text = json.dumps(dataset_to_dict(ds), sort_keys=True, indent=1)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def load_dataset(path: str) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at byte {exc.pos}") from exc
    return dataset_from_dict(doc)
