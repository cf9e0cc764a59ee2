"""Benchmark grid: datasets x classifiers x {flat, hierarchical per measure} under k-fold CV."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .classifiers import ClassifierKind, ClassifierSpec, predict
from .data import DomainError, TimeSeriesDataset, load_ucr_dataset, stratified_kfold
from .dissim import Measure, dissimilarity
from .hc import predict_lcn, train_flat, train_lcn
from .hierarchy import build_hierarchy
from .stats import f1_macro
from .synth import PRESETS, generate_planted

log = logging.getLogger(__name__)

CSV_HEADER = ("dataset", "method", "fold", "f1_macro", "train_ms", "predict_ms")
MEASURES = ("jsd", "tsd", "cbd")
CLASSIFIERS = ("minirocket", "stsf", "svm")
MODES = ("hc", "fc")


@dataclass(frozen=True)
class FoldResult:
    dataset: str
    method: str
    fold: int
    f1_macro: float
    train_ms: int = 0
    predict_ms: int = 0

    def key(self):
        return (self.dataset, self.method, self.fold)


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[str, ...]
    measures: tuple[str, ...] = MEASURES
    classifiers: tuple[str, ...] = CLASSIFIERS
    modes: tuple[str, ...] = MODES
    folds: int = 5
    alpha: float = 0.05
    seed: int = 0
    out: str = "results"
    jobs: int = 0  # 0 means one worker per CPU
    timing: bool = False

    def __post_init__(self):
        for name, allowed in (("measures", MEASURES), ("classifiers", CLASSIFIERS), ("modes", MODES)):
            chosen = tuple(v.strip().lower() for v in getattr(self, name))
            if not chosen:
                raise DomainError(f"{name} must not be empty")
            bad = [v for v in chosen if v not in allowed]
            if bad:
                raise DomainError(f"unknown {name}: {', '.join(bad)} (choose from {', '.join(allowed)})")
            object.__setattr__(self, name, chosen)
        if not self.datasets:
            raise DomainError("datasets must not be empty")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if self.folds < 2:
            raise DomainError("folds must be at least 2")

    def methods(self) -> list[tuple[str, str, str | None]]:
        out = []
        for clf in self.classifiers:
            if "fc" in self.modes:
                out.append((clf, "fc", None))
            if "hc" in self.modes:
                out.extend((clf, "hc", m) for m in self.measures)
        return out


def method_key(classifier: str, mode: str, measure: str | None = None) -> str:
    return f"{classifier}-{mode}" + (f"-{measure}" if measure else "")


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise DomainError(f"not a boolean: {text!r}")


def parse_config(text: str) -> RunConfig:
    """Read ``key = value`` lines; list values are comma-separated, ``#`` starts a comment."""
    fields: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key in ("datasets", "measures", "classifiers", "modes"):
            fields[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key in ("folds", "seed", "jobs"):
            fields[key] = int(value)
        elif key == "alpha":
            fields[key] = float(value)
        elif key == "timing":
            fields[key] = _parse_bool(value)
        elif key == "out":
            fields[key] = value
        else:
            raise DomainError(f"config line {lineno}: unknown key {key!r}")
    if "datasets" not in fields:
        raise DomainError("config must list datasets")
    return RunConfig(**fields)


def load_dataset(ref: str, seed: int = 0) -> TimeSeriesDataset:
    """Resolve a dataset reference: ``synth:<preset>[:<seed>]`` or a path."""
    if ref.startswith("synth:"):
        parts = ref.split(":")
        preset = PRESETS.get(parts[1])
        if preset is None:
            raise DomainError(f"unknown synthetic preset {parts[1]!r}")
        s = int(parts[2]) if len(parts) > 2 else seed
        dataset, _ = generate_planted(replace(preset, seed=s))
        return TimeSeriesDataset(name=ref, values=dataset.values, labels=dataset.labels,
                                 class_names=dataset.class_names)
    return load_ucr_dataset(ref)


def derive_seed(*parts) -> int:
    ints = [p if isinstance(p, int) else zlib.crc32(str(p).encode()) for p in parts]
    return int(np.random.SeedSequence(ints).generate_state(1, dtype=np.uint64)[0])


def _ms(t0) -> int:
    return int(round((time.perf_counter() - t0) * 1000))


def _run_unit(config: RunConfig, dataset_ref: str, fold: int) -> list[FoldResult]:
    """All methods on one (dataset, fold); dissimilarities are shared across classifiers."""
    methods = config.methods()
    try:
        data = load_dataset(dataset_ref, config.seed)
        plan = stratified_kfold(data, config.folds, derive_seed(config.seed, dataset_ref))
        train_idx, test_idx = plan.train_test(fold)
        train = data.subset(train_idx)
        present = np.array([data.class_names.index(n) for n in train.class_names])
    except Exception as exc:  # the whole unit fails, cells are marked
        log.error("%s fold %d: %s", dataset_ref, fold, exc)
        return [FoldResult(dataset_ref, method_key(*m), fold, math.nan) for m in methods]
    X_test, y_test = data.values[test_idx], data.labels[test_idx]
    unit_seed = derive_seed(config.seed, dataset_ref, fold)
    trees: dict[str, object] = {}
    tree_ms: dict[str, int] = {}
    results = []
    for clf, mode, measure in methods:
        key = method_key(clf, mode, measure)
        spec = ClassifierSpec(kind=ClassifierKind(clf), seed=unit_seed)
        try:
            t0 = time.perf_counter()
            if mode == "fc":
                model = train_flat(spec, train)
                train_ms = _ms(t0)
                t0 = time.perf_counter()
                pred = predict(model, X_test)
            else:
                if measure not in trees:
                    t1 = time.perf_counter()
                    D = dissimilarity(train, Measure(measure.upper()), seed=unit_seed)
                    trees[measure] = build_hierarchy(D)
                    tree_ms[measure] = _ms(t1)
                t0 = time.perf_counter()
                model = train_lcn(trees[measure], spec, train)
                train_ms = _ms(t0) + tree_ms[measure]
                t0 = time.perf_counter()
                pred = predict_lcn(model, X_test)
            pred = present[pred]
            predict_ms = _ms(t0)
            score = f1_macro(y_test, pred, data.num_classes)
        except Exception as exc:
            log.error("%s fold %d %s: %s", dataset_ref, fold, key, exc)
            results.append(FoldResult(dataset_ref, key, fold, math.nan))
            continue
        if not config.timing:
            train_ms = predict_ms = 0
        log.info("%s fold %d %s f1=%.4f", dataset_ref, fold, key, score)
        results.append(FoldResult(dataset_ref, key, fold, score, train_ms, predict_ms))
    return results


def run_benchmark(config: RunConfig) -> list[FoldResult]:
    """Run every cell and return records sorted by (dataset, method, fold)."""
    units = [(ref, fold) for ref in config.datasets for fold in range(config.folds)]
    results: list[FoldResult] = []
    jobs = min(config.jobs or os.cpu_count() or 1, len(units))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_unit, config, ref, fold) for ref, fold in units]
            for fut in futures:
                results.extend(fut.result())
    else:
        for ref, fold in units:
            results.extend(_run_unit(config, ref, fold))
    return sorted(results, key=FoldResult.key)


def _fmt_score(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.6f}"


def results_to_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(results, key=FoldResult.key):
        writer.writerow([r.dataset, r.method, r.fold, _fmt_score(r.f1_macro), r.train_ms, r.predict_ms])
    return buf.getvalue()


def write_results_csv(results, path) -> None:
    Path(path).write_text(results_to_csv(results), encoding="utf-8", newline="")


def read_results_csv(path) -> list[FoldResult]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise DomainError(f"{path}: expected header {','.join(CSV_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(CSV_HEADER):
                raise DomainError(f"{path}:{lineno}: expected {len(CSV_HEADER)} columns")
            try:
                out.append(FoldResult(row[0], row[1], int(row[2]), float(row[3]), int(row[4]), int(row[5])))
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from None
        return out
