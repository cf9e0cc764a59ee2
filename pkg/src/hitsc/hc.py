"""Flat classification and local-classifier-per-node hierarchical classification."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .classifiers import (
    ClassifierModel,
    ClassifierSpec,
    constant_model,
    fit,
    model_from_dict,
    model_to_dict,
    predict,
)
from .data import DomainError, TimeSeriesDataset
from .hierarchy import HierarchyNode, tree_from_dict, tree_to_dict


@dataclass
class HcModel:
    tree: HierarchyNode
    node_models: dict[int, ClassifierModel]
    length: int

    def to_json(self) -> str:
        return json.dumps({
            "tree": tree_to_dict(self.tree),
            "length": self.length,
            "node_models": {str(k): model_to_dict(m) for k, m in sorted(self.node_models.items())},
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "HcModel":
        doc = json.loads(text)
        models = {int(k): model_from_dict(v) for k, v in doc["node_models"].items()}
        return cls(tree=tree_from_dict(doc["tree"]), node_models=models, length=int(doc["length"]))


def node_seed(seed: int, node_id: int) -> int:
    # the root reuses the global seed, so a one-node tree matches the flat model
    return (int(seed) + int(node_id)) % 2**64


def train_flat(spec: ClassifierSpec, train: TimeSeriesDataset) -> ClassifierModel:
    return fit(spec, train.values, train.labels)


def train_lcn(tree: HierarchyNode, spec: ClassifierSpec, train: TimeSeriesDataset) -> HcModel:
    """Fit one binary "child 0 vs child 1" model at every internal node.

    A node whose samples all fall on one side gets a constant model.
    """
    if sorted(tree.leaves()) != list(range(train.num_classes)):
        raise DomainError("tree leaves must be exactly the training classes")
    models = {}
    for node in tree.internal_nodes():
        mask = np.isin(train.labels, node.members)
        if not mask.any():
            raise DomainError(f"node {node.id} has no training samples")
        branch = np.where(np.isin(train.labels[mask], node.children[0].members), 0, 1)
        if len(np.unique(branch)) < 2:
            models[node.id] = constant_model(int(branch[0]), train.length)
        else:
            node_spec = spec.with_seed(node_seed(spec.seed, node.id))
            models[node.id] = fit(node_spec, train.values[mask], branch)
    return HcModel(tree=tree, node_models=models, length=train.length)


def predict_lcn(model: HcModel, X) -> np.ndarray:
    """Route every series from the root down to a leaf by hard node decisions."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.length:
        raise DomainError(f"expected series of length {model.length}, got shape {X.shape}")
    position = np.full(len(X), model.tree.id, dtype=np.int64)
    # pre-order visits a parent before its children
    for node in model.tree.walk():
        if node.is_leaf:
            continue
        here = np.flatnonzero(position == node.id)
        if len(here) == 0:
            continue
        branch = predict(model.node_models[node.id], X[here])
        ids = np.array([c.id for c in node.children])
        position[here] = ids[branch]
    leaf_class = {n.id: n.members[0] for n in model.tree.walk() if n.is_leaf}
    return np.array([leaf_class[p] for p in position], dtype=np.int64)
