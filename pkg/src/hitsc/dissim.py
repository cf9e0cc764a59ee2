"""Pairwise class dissimilarity: Jensen-Shannon, task similarity, classifier based.

All three builders return a :class:`DissimilarityMatrix`: symmetric, zero
diagonal, entries in [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .classifiers import ClassifierKind, ClassifierSpec, fit, predict
from .data import DomainError, TimeSeriesDataset, _stratified_assignment

DEFAULT_BINS = 64
SMOOTHING = 1e-9
SYMMETRY_TOL = 1e-12


class Measure(str, Enum):
    JSD = "JSD"
    TSD = "TSD"
    CBD = "CBD"


def _as_measure(value) -> Measure:
    if isinstance(value, Measure):
        return value
    return Measure(str(value).upper())


@dataclass(frozen=True)
class DissimilarityMatrix:
    measure: Measure
    values: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "measure", _as_measure(self.measure))
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "class_names", tuple(str(n) for n in self.class_names))

    @property
    def num_classes(self) -> int:
        return self.values.shape[0]

    def validate(self) -> None:
        v = self.values
        c = len(self.class_names)
        if v.shape != (c, c):
            raise DomainError(f"values must be {c} x {c}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("values must be finite")
        if np.max(np.abs(v - v.T), initial=0.0) > SYMMETRY_TOL:
            raise DomainError("matrix is not symmetric")
        if np.any(np.diag(v) != 0.0):
            raise DomainError("diagonal must be zero")
        if v.min() < 0.0 or v.max() > 1.0:
            raise DomainError("entries must lie in [0, 1]")

    def to_json(self) -> str:
        return json.dumps({
            "measure": self.measure.value,
            "class_names": list(self.class_names),
            "values": self.values.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "DissimilarityMatrix":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"$: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ValueError("$: expected an object")
        for key in ("measure", "class_names", "values"):
            if key not in doc:
                raise ValueError(f"$.{key}: missing")
        if doc["measure"] not in {m.value for m in Measure}:
            raise ValueError(f"$.measure: unknown measure {doc['measure']!r}")
        names = doc["class_names"]
        if not isinstance(names, list):
            raise ValueError("$.class_names: expected a list")
        rows = doc["values"]
        if not isinstance(rows, list) or len(rows) != len(names):
            raise ValueError(f"$.values: expected {len(names)} rows")
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != len(names):
                raise ValueError(f"$.values[{i}]: expected {len(names)} numbers")
            for j, v in enumerate(row):
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise ValueError(f"$.values[{i}][{j}]: expected a number")
        matrix = cls(measure=doc["measure"], values=np.array(rows, dtype=np.float64),
                     class_names=tuple(names))
        try:
            matrix.validate()
        except DomainError as exc:
            raise ValueError(f"$.values: {exc}") from None
        return matrix


# -- Jensen-Shannon ---------------------------------------------------------

@dataclass(frozen=True)
class ClassHistogram:
    bin_edges: np.ndarray
    mass: np.ndarray


def estimate_class_histograms(dataset: TimeSeriesDataset, bins: int = DEFAULT_BINS):
    """Pool every value of every series of a class into one smoothed histogram.

    All classes share ``bins`` equal-width bins over the global value range.
    """
    if bins < 2:
        raise DomainError("bins must be at least 2")
    lo, hi = float(dataset.values.min()), float(dataset.values.max())
    if not hi > lo:
        raise DomainError("all values are identical: JSD is undefined for constant data")
    edges = np.linspace(lo, hi, bins + 1)
    hists = []
    for k in range(dataset.num_classes):
        counts, _ = np.histogram(dataset.values[dataset.labels == k], bins=edges)
        mass = counts / counts.sum() + SMOOTHING
        hists.append(ClassHistogram(bin_edges=edges, mass=mass / mass.sum()))
    return hists


def _kl2(p, m):
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / m[nz])))


def jsd_pair(P, Q, root: bool = False) -> float:
    """Jensen-Shannon divergence in bits (in [0, 1]); ``root=True`` gives its square root."""
    if isinstance(P, ClassHistogram) or isinstance(Q, ClassHistogram):
        if not (isinstance(P, ClassHistogram) and isinstance(Q, ClassHistogram)) or not np.array_equal(
            P.bin_edges, Q.bin_edges
        ):
            raise DomainError("histograms must share bin edges")
        p, q = P.mass, Q.mass
    else:
        p, q = np.asarray(P, dtype=np.float64), np.asarray(Q, dtype=np.float64)
        if p.shape != q.shape:
            raise DomainError("distributions must have the same number of bins")
    m = 0.5 * (p + q)
    value = min(max(0.5 * (_kl2(p, m) + _kl2(q, m)), 0.0), 1.0)
    return float(np.sqrt(value)) if root else value


def jsd_matrix(dataset: TimeSeriesDataset, bins: int = DEFAULT_BINS,
               root: bool = False) -> DissimilarityMatrix:
    hists = estimate_class_histograms(dataset, bins)
    c = dataset.num_classes
    values = np.zeros((c, c))
    for i in range(c):
        for j in range(i + 1, c):
            values[i, j] = values[j, i] = jsd_pair(hists[i], hists[j], root=root)
    return DissimilarityMatrix(Measure.JSD, values, dataset.class_names)


# -- task similarity ----------------------------------------------------------

@dataclass(frozen=True)
class TsdConfig:
    num_references: int = 5
    base_classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    seed: int = 0


def _balanced_task(dataset, focal, reference, rng):
    """Focal class (label 1) vs reference class (label 0), larger side subsampled."""
    a = np.flatnonzero(dataset.labels == focal)
    b = np.flatnonzero(dataset.labels == reference)
    n = min(len(a), len(b))
    if len(a) > n:
        a = np.sort(rng.choice(a, n, replace=False))
    if len(b) > n:
        b = np.sort(rng.choice(b, n, replace=False))
    X = dataset.values[np.concatenate([a, b])]
    y = np.concatenate([np.ones(n, dtype=np.int64), np.zeros(n, dtype=np.int64)])
    return X, y


def pair_similarity(dataset, i, j, cfg: TsdConfig) -> float:
    """Raw similarity of classes ``i`` and ``j``, averaged over sampled reference classes."""
    c = dataset.num_classes
    lo, hi = min(i, j), max(i, j)
    # a stream per pair makes the result independent of evaluation order
    rng = np.random.default_rng([int(cfg.seed), lo, hi])
    others = np.array([k for k in range(c) if k != lo and k != hi])
    n_refs = max(1, min(cfg.num_references, c - 2))
    refs = rng.choice(others, n_refs, replace=False)
    scores = []
    for r in refs:
        Xi, yi = _balanced_task(dataset, lo, r, rng)
        Xj, yj = _balanced_task(dataset, hi, r, rng)
        model_i = fit(cfg.base_classifier, Xi, yi)
        model_j = fit(cfg.base_classifier, Xj, yj)
        acc_ij = np.mean(predict(model_i, Xj) == yj)
        acc_ji = np.mean(predict(model_j, Xi) == yi)
        scores.append(0.5 * (acc_ij + acc_ji))
    return float(np.mean(scores))


def tsd_matrix(dataset: TimeSeriesDataset, cfg: TsdConfig | None = None) -> DissimilarityMatrix:
    """Task-similarity dissimilarity.

    For a pair (i, j) and a reference class r, a classifier trained on
    "i vs r" is scored on "j vs r" and the other way round. Similarities are
    averaged over references, symmetrized, min-max scaled over the
    off-diagonal, and turned into dissimilarities as ``1 - s``.
    """
    cfg = cfg or TsdConfig()
    c = dataset.num_classes
    if c < 3:
        raise DomainError("TSD needs at least three classes (one reference per pair)")
    if dataset.class_counts().min() < 2:
        raise DomainError("TSD needs at least two samples per class")
    S = np.zeros((c, c))
    for i in range(c):
        for j in range(i + 1, c):
            S[i, j] = S[j, i] = pair_similarity(dataset, i, j, cfg)
    S = 0.5 * (S + S.T)
    off = ~np.eye(c, dtype=bool)
    lo, hi = S[off].min(), S[off].max()
    if hi > lo:
        S = (S - lo) / (hi - lo)
    D = np.where(off, 1.0 - S, 0.0)
    D = np.clip(D, 0.0, 1.0)
    return DissimilarityMatrix(Measure.TSD, D, dataset.class_names)


# -- classifier based -----------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.min(initial=0) < 0:
            raise DomainError("confusion counts must be a square non-negative matrix")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)


def cbd_confusion(dataset: TimeSeriesDataset, base: ClassifierSpec | None = None,
                  folds: int = 3, seed: int = 0) -> ConfusionMatrix:
    """Out-of-fold confusion counts from stratified cross-validation on ``dataset``."""
    base = base or ClassifierSpec(kind=ClassifierKind.SVM)
    smallest = int(dataset.class_counts().min())
    if smallest < 2:
        raise DomainError("CBD needs at least two samples per class")
    folds = max(2, min(folds, smallest))
    assignment = _stratified_assignment(dataset.labels, folds, seed)
    c = dataset.num_classes
    counts = np.zeros((c, c), dtype=np.int64)
    for f in range(folds):
        test = assignment == f
        model = fit(base, dataset.values[~test], dataset.labels[~test])
        pred = predict(model, dataset.values[test])
        np.add.at(counts, (dataset.labels[test], pred), 1)
    return ConfusionMatrix(counts)


def cbd_matrix(confusion, class_names=None) -> DissimilarityMatrix:
    """Per pair: accuracy within the 2x2 block of the confusion matrix.

    A pair the classifier never predicts into (empty block) gets 0.5.
    """
    if not isinstance(confusion, ConfusionMatrix):
        confusion = ConfusionMatrix(confusion)
    m = confusion.counts.astype(np.float64)
    c = m.shape[0]
    diag = np.diag(m)
    hits = diag[:, None] + diag[None, :]
    total = hits + m + m.T
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(total > 0, hits / total, 0.5)
    np.fill_diagonal(values, 0.0)
    names = class_names if class_names is not None else tuple(str(k) for k in range(c))
    return DissimilarityMatrix(Measure.CBD, values, names)


def dissimilarity(dataset: TimeSeriesDataset, measure, seed: int = 0,
                  base: ClassifierSpec | None = None) -> DissimilarityMatrix:
    """Build the matrix for ``measure`` with default settings."""
    measure = _as_measure(measure)
    if measure is Measure.JSD:
        return jsd_matrix(dataset)
    base = base or ClassifierSpec(kind=ClassifierKind.SVM)
    if measure is Measure.TSD:
        return tsd_matrix(dataset, TsdConfig(base_classifier=base, seed=seed))
    conf = cbd_confusion(dataset, base, seed=seed)
    return cbd_matrix(conf, dataset.class_names)
