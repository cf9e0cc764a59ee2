"""Divisive class hierarchies from a dissimilarity matrix.

Every node is split in two by an exact 2-medoid search over the classes it
holds, using the one matrix computed at the root, until all leaves are
single classes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .data import DomainError


@dataclass
class HierarchyNode:
    id: int
    members: tuple[int, ...]
    children: tuple["HierarchyNode", ...] = ()
    medoids: tuple[int, int] | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        """Nodes in pre-order."""
        yield self
        for child in self.children:
            yield from child.walk()

    def leaves(self) -> list[int]:
        return [n.members[0] for n in self.walk() if n.is_leaf]

    def internal_nodes(self) -> list["HierarchyNode"]:
        return [n for n in self.walk() if not n.is_leaf]

    def validate(self) -> None:
        for node in self.walk():
            if len(node.members) == 0 or list(node.members) != sorted(set(node.members)):
                raise DomainError(f"node {node.id}: members must be sorted and distinct")
            if node.is_leaf != (len(node.members) == 1):
                raise DomainError(f"node {node.id}: leaf iff exactly one member")
            if not node.is_leaf:
                if len(node.children) != 2:
                    raise DomainError(f"node {node.id}: internal nodes need two children")
                a, b = (set(c.members) for c in node.children)
                if a & b or (a | b) != set(node.members):
                    raise DomainError(f"node {node.id}: children must partition the members")


def kmedoids2(D, items, seed: int = 0):
    """Exact 2-medoid partition of ``items`` under dissimilarity ``D``.

    Every medoid pair is scored by the total distance of the items to their
    nearer medoid; the cheapest pair wins, with exact ties going to the
    lexicographically first pair. Items tie toward the lower-indexed medoid
    and each medoid stays in its own cluster. ``seed`` is unused (the search
    is exhaustive).

    Returns ``(assignment, (m0, m1))`` where ``assignment[i]`` is 0 or 1 for
    ``items[i]``.
    """
    items = sorted(int(i) for i in items)
    if len(items) < 2:
        raise DomainError("kmedoids2 needs at least two items")
    sub = np.asarray(D, dtype=np.float64)[np.ix_(items, items)]
    n = len(items)
    a_idx, b_idx = np.triu_indices(n, k=1)  # lexicographic pair order
    nearest = np.minimum(sub[:, a_idx], sub[:, b_idx])
    # summed in item order so costs are reproducible bit for bit
    costs = np.zeros(len(a_idx))
    for row in nearest:
        costs += row
    best = int(np.argmin(costs))
    a, b = int(a_idx[best]), int(b_idx[best])
    assignment = (sub[:, b] < sub[:, a]).astype(np.int64)
    assignment[a], assignment[b] = 0, 1
    return assignment, (items[a], items[b])


def build_hierarchy(D, seed: int = 0) -> HierarchyNode:
    """Recursively bisect all classes of ``D`` down to singletons.

    ``D`` is a square matrix or anything with a ``values`` matrix attribute.
    Node ids follow pre-order; the cluster of the lower medoid is child 0.
    """
    values = np.asarray(getattr(D, "values", D), dtype=np.float64)
    c = values.shape[0]
    if values.ndim != 2 or values.shape != (c, c) or c < 2:
        raise DomainError("build_hierarchy needs a square matrix over at least two classes")
    counter = iter(range(2 * c))

    def split(members):
        node = HierarchyNode(id=next(counter), members=tuple(members))
        if len(members) > 1:
            assignment, medoids = kmedoids2(values, members, seed)
            node.medoids = medoids
            left = [m for m, a in zip(members, assignment) if a == 0]
            right = [m for m, a in zip(members, assignment) if a == 1]
            first = split(left)
            node.children = (first, split(right))
        return node

    return split(list(range(c)))


def renumber(root: HierarchyNode) -> HierarchyNode:
    """Reassign ids in pre-order (in place); returns ``root``."""
    for i, node in enumerate(root.walk()):
        node.id = i
    return root


def tree_to_dict(node: HierarchyNode) -> dict:
    doc = {"id": node.id, "members": sorted(node.members)}
    if node.medoids is not None:
        doc["medoids"] = list(node.medoids)
    if node.children:
        doc["children"] = [tree_to_dict(c) for c in node.children]
    return doc


def tree_to_json(root: HierarchyNode) -> str:
    """Canonical form: sorted keys, no whitespace, absent fields omitted."""
    return json.dumps(tree_to_dict(root), sort_keys=True, separators=(",", ":"))


def _node_from_dict(doc, path):
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected an object")
    members = doc.get("members")
    if not isinstance(members, list) or not all(isinstance(m, int) for m in members):
        raise ValueError(f"{path}.members: expected a list of integers")
    children = doc.get("children", [])
    if not isinstance(children, list) or len(children) not in (0, 2):
        raise ValueError(f"{path}.children: expected exactly two children or none")
    medoids = doc.get("medoids")
    if medoids is not None and (not isinstance(medoids, list) or len(medoids) != 2):
        raise ValueError(f"{path}.medoids: expected a pair of class indices")
    node_id = doc.get("id", -1)
    if not isinstance(node_id, int):
        raise ValueError(f"{path}.id: expected an integer")
    return HierarchyNode(
        id=node_id,
        members=tuple(sorted(members)),
        children=tuple(_node_from_dict(c, f"{path}.children[{i}]") for i, c in enumerate(children)),
        medoids=None if medoids is None else (int(medoids[0]), int(medoids[1])),
    )


def tree_from_dict(doc) -> HierarchyNode:
    root = _node_from_dict(doc, "$")
    if any(n.id < 0 for n in root.walk()):
        renumber(root)
    root.validate()
    return root


def tree_from_json(text: str) -> HierarchyNode:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"$: invalid JSON ({exc})") from None
    return tree_from_dict(doc)


def _newick_label(name: str) -> str:
    if re.fullmatch(r"[A-Za-z0-9_.\-]+", name):
        return name
    return "'" + name.replace("'", "''") + "'"


def to_newick(root: HierarchyNode, names=None) -> str:
    """Newick text; leaves are ``c<k>`` unless class ``names`` are given."""
    def render(node):
        if node.is_leaf:
            k = node.members[0]
            return f"c{k}" if names is None else _newick_label(str(names[k]))
        return "(" + ",".join(render(c) for c in node.children) + ")"

    return render(root) + ";"


def bipartitions(root: HierarchyNode) -> set[frozenset[int]]:
    """Non-trivial splits of the unrooted tree, each keyed by the side without the smallest leaf."""
    leaves = frozenset(root.members)
    anchor = min(leaves)
    splits = set()
    for node in root.walk():
        side = frozenset(node.members)
        if 2 <= len(side) <= len(leaves) - 2:
            splits.add(leaves - side if anchor in side else side)
    return splits


def robinson_foulds(t1: HierarchyNode, t2: HierarchyNode) -> int:
    if set(t1.members) != set(t2.members):
        raise DomainError("Robinson-Foulds distance needs identical leaf sets")
    return len(bipartitions(t1) ^ bipartitions(t2))
