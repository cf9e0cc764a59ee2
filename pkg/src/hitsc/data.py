"""Loading, normalizing and partitioning univariate time series datasets.

Files follow the UCR archive layout: one series per line, the class label
first, then the ``L`` values, separated by tabs (or commas when the first
line holds no tab).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

ZNORM_EPS = 1e-8


class DataFormatError(ValueError):
    """A dataset file is malformed (ragged rows, bad tokens)."""


class DomainError(ValueError):
    """Input is well formed but outside what an operation supports."""


@dataclass(frozen=True)
class TimeSeriesDataset:
    """``N`` fixed-length series with contiguous integer labels ``0..c-1``.

    ``class_names`` keeps the original label token of every class index so
    results can be reported (and files re-exported) with the archive labels.
    Arrays are made read-only on construction.
    """

    name: str
    values: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if values.ndim != 2 or values.shape[1] < 1:
            raise DomainError(f"values must be an N x L matrix, got shape {values.shape}")
        if labels.shape != (values.shape[0],):
            raise DomainError("labels must have one entry per series")
        if not np.all(np.isfinite(values)):
            raise DomainError("values must be finite")
        if len(labels) == 0:
            raise DomainError("dataset is empty")
        c = int(labels.max()) + 1
        if labels.min() < 0 or len(np.unique(labels)) != c:
            raise DomainError("labels must cover 0..c-1 with every class present")
        if c < 2:
            raise DomainError("at least two classes are required")
        names = tuple(self.class_names) or tuple(str(k) for k in range(c))
        if len(names) != c:
            raise DomainError(f"{len(names)} class names given for {c} classes")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, indices, name: str | None = None) -> "TimeSeriesDataset":
        """Rows ``indices``, with labels re-packed to the classes still present."""
        indices = np.asarray(indices, dtype=np.int64)
        labels = self.labels[indices]
        present = np.unique(labels)
        remap = np.full(self.num_classes, -1, dtype=np.int64)
        remap[present] = np.arange(len(present))
        return TimeSeriesDataset(
            name=name or self.name,
            values=self.values[indices],
            labels=remap[labels],
            class_names=tuple(self.class_names[k] for k in present),
        )


def znormalize(series) -> np.ndarray:
    """Shift to zero mean and scale to unit (population) standard deviation.

    Series whose standard deviation is below 1e-8 map to all zeros.
    Works on a single series or row-wise on a matrix.
    """
    x = np.asarray(series, dtype=np.float64)
    mu = x.mean(axis=-1, keepdims=True)
    sd = x.std(axis=-1, keepdims=True)
    flat = sd < ZNORM_EPS
    out = (x - mu) / np.where(flat, 1.0, sd)
    return np.where(flat, 0.0, out)


def _label_key(token: str):
    try:
        return (0, float(token), token)
    except ValueError:
        return (1, 0.0, token)


def _parse_lines(path: Path):
    text = Path(path).read_text(encoding="utf-8")
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise DataFormatError(f"{path}: no data lines")
    sep = "\t" if "\t" in lines[0][1] else ","
    tokens, rows = [], []
    width = None
    for lineno, ln in lines:
        parts = [p.strip() for p in ln.split(sep)]
        if len(parts) < 2:
            raise DataFormatError(f"{path}, line {lineno}: expected a label and at least one value")
        if width is None:
            width = len(parts) - 1
        elif len(parts) - 1 != width:
            raise DataFormatError(
                f"{path}, line {lineno}: ragged row with {len(parts) - 1} values, expected {width}"
            )
        try:
            row = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise DataFormatError(f"{path}, line {lineno}: non-numeric value ({exc})") from None
        try:
            float(parts[0])
        except ValueError:
            raise DataFormatError(f"{path}, line {lineno}: non-numeric label {parts[0]!r}") from None
        tokens.append(parts[0])
        rows.append(row)
    return tokens, np.array(rows, dtype=np.float64)


def _canonical_label(token: str) -> str:
    # "1" and "1.0" name the same class
    value = float(token)
    return str(int(value)) if value.is_integer() else repr(value)


def load_ucr_tsv(paths, name: str | None = None, normalize: bool = True,
                 min_classes: int = 3) -> TimeSeriesDataset:
    """Read one or more UCR-layout files into a single dataset.

    Several paths (e.g. the archive's TRAIN and TEST files) are concatenated
    in the given order. Labels are remapped to ``0..c-1`` by ascending
    original label; row order is preserved.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    paths = [Path(p) for p in paths]
    all_tokens, blocks = [], []
    for p in paths:
        tokens, values = _parse_lines(p)
        if blocks and values.shape[1] != blocks[0].shape[1]:
            raise DataFormatError(
                f"{p}: series length {values.shape[1]} differs from {blocks[0].shape[1]} in {paths[0]}"
            )
        all_tokens.extend(_canonical_label(t) for t in tokens)
        blocks.append(values)
    values = np.vstack(blocks)
    if not np.all(np.isfinite(values)):
        raise DataFormatError(f"{paths[0]}: missing or non-finite values are not supported")
    names = sorted(set(all_tokens), key=_label_key)
    if len(names) < min_classes:
        raise DomainError(
            f"multi-class required: found {len(names)} distinct labels, need at least {min_classes}"
        )
    index = {t: k for k, t in enumerate(names)}
    labels = np.array([index[t] for t in all_tokens], dtype=np.int64)
    if normalize:
        values = znormalize(values)
    if name is None:
        name = paths[0].stem.replace("_TRAIN", "").replace("_TEST", "")
    log.debug("loaded %s: N=%d L=%d c=%d", name, *values.shape, len(names))
    return TimeSeriesDataset(name=name, values=values, labels=labels, class_names=tuple(names))


def load_ucr_dataset(location, normalize: bool = True) -> TimeSeriesDataset:
    """Load a dataset from a file, or from a directory holding ``*_TRAIN``/``*_TEST`` files."""
    location = Path(location)
    if location.is_file():
        return load_ucr_tsv(location, normalize=normalize)
    if not location.is_dir():
        raise FileNotFoundError(f"no such dataset file or directory: {location}")
    files = []
    for part in ("TRAIN", "TEST"):
        found = sorted(location.glob(f"*_{part}.tsv")) or sorted(location.glob(f"*_{part}.txt"))
        files.extend(found[:1])
    if not files:
        raise FileNotFoundError(f"{location}: no *_TRAIN.tsv / *_TEST.tsv files")
    return load_ucr_tsv(files, name=location.name, normalize=normalize)


def to_ucr_text(dataset: TimeSeriesDataset) -> str:
    """Serialize to the tab-separated layout with shortest round-trip floats."""
    lines = []
    for label, row in zip(dataset.labels, dataset.values):
        vals = "\t".join(repr(float(v)) for v in row)
        lines.append(f"{dataset.class_names[label]}\t{vals}")
    return "\n".join(lines) + "\n"


def save_ucr_tsv(dataset: TimeSeriesDataset, path) -> None:
    Path(path).write_text(to_ucr_text(dataset), encoding="utf-8", newline="\n")


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray
    seed: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.assignment == fold)
        train = np.flatnonzero(self.assignment != fold)
        return train, test

    def __iter__(self):
        for fold in range(self.k):
            yield self.train_test(fold)


def stratified_kfold(dataset: TimeSeriesDataset, k: int, seed: int = 0) -> FoldPlan:
    """Assign every sample to one of ``k`` folds, stratified by class.

    Within a class the (shuffled) samples are dealt round-robin, starting at
    the fold after where the previous class stopped, so per-class and total
    fold sizes both differ by at most one.
    """
    return FoldPlan(k=k, assignment=_stratified_assignment(dataset.labels, k, seed), seed=seed)


def _stratified_assignment(labels, k: int, seed: int) -> np.ndarray:
    labels = np.asarray(labels)
    n = len(labels)
    if k < 2:
        raise DomainError("k must be at least 2")
    if k > n:
        raise DomainError(f"k={k} folds requested for only {n} samples")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    offset = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(len(members))]
        assignment[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return assignment


def class_partition(dataset: TimeSeriesDataset) -> dict[int, list[int]]:
    return {
        k: np.flatnonzero(dataset.labels == k).tolist() for k in range(dataset.num_classes)
    }
