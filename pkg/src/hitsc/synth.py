"""Synthetic datasets with a planted binary class hierarchy.

Class ``k`` of a depth-``d`` hierarchy is the ``d``-bit number whose most
significant bit is the branch taken at the top split. Each tree level owns
its own stretch of the time axis; there the class template carries a smooth
bump scaled by ``level_offsets[l]``, upright on branch 0 and flipped on
branch 1. Deeper levels get shorter stretches, so both the amplitude and the
amount of signal shrink going down the tree.

The bump is a tall Hann spike over the first quarter of the stretch followed
by a shallow Hann trough that cancels its area. Being zero-mean, flipping it
leaves each series' mean and spread alone (so per-series z-normalization
rescales every class alike), while its skew still makes the flipped and
upright versions differ in their pooled value distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TimeSeriesDataset, znormalize
from .hierarchy import HierarchyNode, renumber


@dataclass(frozen=True)
class PlantedSpec:
    depth: int = 3
    length: int = 128
    samples_per_class: int = 30
    level_offsets: tuple[float, ...] = (3.0, 1.5, 0.75)
    noise_sigma: float = 0.25
    seed: int = 0

    def __post_init__(self):
        offsets = tuple(float(v) for v in self.level_offsets)
        object.__setattr__(self, "level_offsets", offsets)
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if len(offsets) != self.depth:
            raise ValueError("need one offset per level")
        if any(v <= 0 for v in offsets) or any(a <= b for a, b in zip(offsets, offsets[1:])):
            raise ValueError("level offsets must be positive and strictly decreasing")
        if not self.noise_sigma > 0:
            raise ValueError("noise_sigma must be positive")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be positive")
        # the deepest level's stretch must hold a spike and a trough
        if min(e - s for s, e in level_supports(self.depth, self.length)) < 2:
            raise ValueError("series too short for the requested depth")


def level_supports(depth: int, length: int) -> list[tuple[int, int]]:
    """Disjoint [start, end) stretches; level ``l`` gets a share proportional to 2**(depth - l)."""
    weights = 2.0 ** np.arange(depth, 0, -1)
    bounds = np.round(np.concatenate([[0], np.cumsum(weights)]) / weights.sum() * length)
    bounds = bounds.astype(int)
    return [(int(bounds[l]), int(bounds[l + 1])) for l in range(depth)]


PRESETS = {
    "separable": PlantedSpec(),
}


def branch_bits(cls: int, depth: int) -> list[int]:
    return [(cls >> (depth - 1 - l)) & 1 for l in range(depth)]


SPIKE_FRACTION = 0.25


def bump(width: int) -> np.ndarray:
    """Zero-sum spike-then-trough pattern of peak height 1 over ``width`` points."""
    k = min(max(1, int(round(width * SPIKE_FRACTION))), width - 1)
    spike = np.hanning(k + 2)[1:-1]
    trough = np.hanning(width - k + 2)[1:-1]
    return np.concatenate([spike, -trough * (spike.sum() / trough.sum())])


def class_template(cls: int, spec: PlantedSpec) -> np.ndarray:
    template = np.zeros(spec.length)
    for level, ((start, end), bit) in enumerate(
        zip(level_supports(spec.depth, spec.length), branch_bits(cls, spec.depth))
    ):
        sign = 1.0 if bit == 0 else -1.0
        template[start:end] += sign * spec.level_offsets[level] * bump(end - start)
    return template


def planted_tree(depth: int) -> HierarchyNode:
    def build(prefix, level):
        lo = prefix << (depth - level)
        members = tuple(range(lo, lo + 2 ** (depth - level)))
        if level == depth:
            return HierarchyNode(id=0, members=members)
        children = (build(prefix << 1, level + 1), build((prefix << 1) | 1, level + 1))
        return HierarchyNode(id=0, members=members, children=children)

    return renumber(build(0, 0))


def generate_planted(spec: PlantedSpec, normalize: bool = True):
    """Return ``(dataset, ground_truth_tree)``; samples are grouped by class."""
    c = 2 ** spec.depth
    rows, labels = [], []
    for cls in range(c):
        # one stream per class keeps generation independent of class order
        rng = np.random.default_rng([int(spec.seed), cls])
        template = class_template(cls, spec)
        noise = rng.normal(0.0, spec.noise_sigma, size=(spec.samples_per_class, spec.length))
        rows.append(template + noise)
        labels.extend([cls] * spec.samples_per_class)
    values = np.vstack(rows)
    if normalize:
        values = znormalize(values)
    name = f"planted-d{spec.depth}-s{spec.seed}"
    dataset = TimeSeriesDataset(name=name, values=values, labels=np.array(labels))
    return dataset, planted_tree(spec.depth)
