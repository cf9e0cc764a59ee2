"""Time series classifiers behind one fit / predict / predict_proba contract."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

from ..data import DomainError
from . import forest, minirocket, svm
from .forest import fisher_score
from .minirocket import minirocket_transform

__all__ = [
    "ClassifierKind",
    "ClassifierSpec",
    "ClassifierModel",
    "fit",
    "predict",
    "predict_proba",
    "constant_model",
    "model_to_json",
    "model_from_json",
    "minirocket_transform",
    "fisher_score",
]

MODEL_FORMAT_VERSION = 1


class ClassifierKind(str, Enum):
    MINIROCKET = "minirocket"
    STSF = "stsf"
    SVM = "svm"


DEFAULT_REGULARIZATION = {
    ClassifierKind.MINIROCKET: 1.0,  # ridge penalty of the linear head
    ClassifierKind.STSF: 1.0,  # unused
    ClassifierKind.SVM: 10.0,  # C on the mean hinge loss
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: ClassifierKind = ClassifierKind.SVM
    num_features: int = 512
    num_estimators: int = 50
    regularization: float | None = None
    seed: int = 0
    max_epochs: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "kind", ClassifierKind(self.kind))
        if self.regularization is not None and not self.regularization > 0:
            raise DomainError("regularization must be positive")
        if self.kind is ClassifierKind.MINIROCKET and self.num_features < minirocket.NUM_KERNELS:
            raise DomainError(f"num_features must be at least {minirocket.NUM_KERNELS}")
        if self.num_estimators < 1:
            raise DomainError("num_estimators must be positive")

    @property
    def reg(self) -> float:
        if self.regularization is None:
            return DEFAULT_REGULARIZATION[self.kind]
        return self.regularization

    def with_seed(self, seed: int) -> "ClassifierSpec":
        return replace(self, seed=int(seed) % 2**64)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


@dataclass(frozen=True)
class ClassifierModel:
    spec: ClassifierSpec | None
    classes_seen: tuple[int, ...]
    length: int
    state: dict

    @property
    def is_constant(self) -> bool:
        return self.spec is None


def constant_model(label: int, length: int) -> ClassifierModel:
    """A model that predicts ``label`` for every input."""
    return ClassifierModel(spec=None, classes_seen=(int(label),), length=int(length), state={})


def fit(spec: ClassifierSpec, X, y) -> ClassifierModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise DomainError("X must be n x L with one label per row")
    classes = np.unique(y)
    if len(X) < 2 or len(classes) < 2:
        raise DomainError("fit needs at least two samples and two distinct labels")
    classes_seen = tuple(int(c) for c in classes)
    if spec.kind is ClassifierKind.SVM:
        coef, intercept = svm.fit_ovr(X, y, classes, C=spec.reg, max_epochs=spec.max_epochs,
                                      tol=spec.tol, seed=spec.seed)
        state = {"coef": coef, "intercept": intercept}
    elif spec.kind is ClassifierKind.MINIROCKET:
        params = minirocket.fit_transform_params(X, spec.num_features, spec.seed)
        F = minirocket.apply_transform(params, X)
        coef, intercept = minirocket.fit_ridge(F, y, classes, alpha=spec.reg)
        state = {"biases": params["biases"], "coef": coef, "intercept": intercept}
    else:
        state = {"estimators": forest.fit_forest(X, y, classes, spec.num_estimators, spec.seed)}
    return ClassifierModel(spec=spec, classes_seen=classes_seen, length=X.shape[1], state=state)


def _check_width(model: ClassifierModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.length:
        raise DomainError(f"expected series of length {model.length}, got shape {X.shape}")
    return X


def _softmax(scores):
    z = np.exp(scores - scores.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def decision_scores(model: ClassifierModel, X) -> np.ndarray:
    X = _check_width(model, X)
    if model.is_constant:
        return np.zeros((len(X), 1))
    st = model.state
    kind = model.spec.kind
    if kind is ClassifierKind.SVM:
        return svm.decision_function(st["coef"], st["intercept"], X)
    if kind is ClassifierKind.MINIROCKET:
        params = {"length": model.length, "num_features": model.spec.num_features,
                  "biases": st["biases"]}
        F = minirocket.apply_transform(params, X)
        return F @ st["coef"].T + st["intercept"]
    return forest.vote_shares(st["estimators"], X, len(model.classes_seen))


def predict_proba(model: ClassifierModel, X) -> np.ndarray:
    """Class probabilities, columns ordered as ``model.classes_seen``."""
    scores = decision_scores(model, X)
    if model.is_constant:
        return np.ones_like(scores)
    if model.spec.kind is ClassifierKind.STSF:
        return scores  # already vote shares
    return _softmax(scores)


def predict(model: ClassifierModel, X) -> np.ndarray:
    proba = predict_proba(model, X)
    # argmax takes the first maximum, i.e. the lowest class on ties
    return np.asarray(model.classes_seen, dtype=np.int64)[np.argmax(proba, axis=1)]


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def model_to_dict(model: ClassifierModel) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "spec": None if model.spec is None else model.spec.to_dict(),
        "classes_seen": list(model.classes_seen),
        "length": model.length,
        "state": _jsonable(model.state),
    }


def model_from_dict(doc: dict) -> ClassifierModel:
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')!r}")
    spec = None if doc["spec"] is None else ClassifierSpec(**doc["spec"])
    state = dict(doc["state"])
    if spec is not None and spec.kind is not ClassifierKind.STSF:
        state = {k: np.asarray(v, dtype=np.float64) for k, v in state.items()}
    return ClassifierModel(spec=spec, classes_seen=tuple(doc["classes_seen"]),
                           length=int(doc["length"]), state=state)


def model_to_json(model: ClassifierModel) -> str:
    # json writes floats with repr, the shortest string that round-trips
    return json.dumps(model_to_dict(model), sort_keys=True)


def model_from_json(text: str) -> ClassifierModel:
    return model_from_dict(json.loads(text))
