"""Potential link search: loop pairs whose bounding boxes overlap.

Linked loops have overlapping convex bounds, so every actually-linked pair
appears in the output. Loop boxes are unions of tight per-segment boxes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bvh
from .geometry import CurveModel, ValidationError


@dataclass(frozen=True)
class PairList:
    """Sorted, deduplicated (i, j) loop-index pairs with i < j."""

    pairs: tuple = ()
    excluded: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        pairs = tuple(sorted({(int(i), int(j)) for i, j in self.pairs}))
        for i, j in pairs:
            if not i < j:
                raise ValidationError(f"pair ({i}, {j}) not ordered i < j")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "excluded", frozenset(
            (min(int(i), int(j)), max(int(i), int(j))) for i, j in self.excluded
        ))

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def loops_involved(self):
        out = set()
        for i, j in self.pairs:
            out.add(i)
            out.add(j)
        return out


def loop_boxes(model: CurveModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-loop AABB corners, unions of tight per-segment boxes."""
    lo = np.empty((model.num_loops, 3))
    hi = np.empty((model.num_loops, 3))
    for idx, loop in enumerate(model.loops):
        slo, shi = loop.boxes()
        lo[idx] = slo.min(axis=0)
        hi[idx] = shi.max(axis=0)
    return lo, hi


def potential_link_search(model: CurveModel, excluded=()) -> PairList:
    """All loop pairs with overlapping AABBs, minus the excluded set."""
    if model.num_loops < 1:
        raise ValidationError("model has no loops")
    if model.num_loops == 1:
        return PairList((), excluded)
    lo, hi = loop_boxes(model)
    raw = bvh.overlap_pairs_boxes(lo, hi, lo, hi)
    skip = {(min(i, j), max(i, j)) for i, j in excluded}
    pairs = {
        (int(i), int(j))
        for i, j in raw
        if i < j and (int(i), int(j)) not in skip
    }
    return PairList(tuple(sorted(pairs)), excluded)
