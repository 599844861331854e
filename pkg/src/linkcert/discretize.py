"""Adaptive, homotopy-preserving conversion of spline loops to polylines.

Segments of paired loops are refined until their tight bounding boxes are
pairwise disjoint, then replaced by chords with the same endpoints. Box
disjointness means the swept region between each curve piece and its chord
cannot touch the other loop, so the replacement never changes any linking
number. Loops that appear in no pair are chord-converted directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bvh
from .geometry import MACHINE_EPS, CurveModel, PolylineLoop, eval_cubics, tight_boxes
from .pls import PairList

ZERO_LENGTH_INPUT = "ZeroLengthInput"
CURVES_INTERSECT = "CurvesIntersect"
PASS_LIMIT_EXCEEDED = "PassLimitExceeded"


@dataclass
class DiscretizationParams:
    epsilon: float = MACHINE_EPS
    max_passes: int = 64
    # Per-loop cap on in-flight subsegments. Transversal near-intersections
    # refine toward the epsilon exit with O(1) live segments, but tangential
    # contact spawns ~2^(pass/2) of them and would exhaust memory first.
    max_subsegments: int = 1 << 22

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")
        if self.max_subsegments < 1:
            raise ValueError("max_subsegments must be >= 1")


class DiscretizationError(Exception):
    """Refinement failed; `kind` names the failure, `loops` the offenders."""

    def __init__(self, kind, loops, message):
        super().__init__(message)
        self.kind = kind
        self.loops = tuple(int(i) for i in loops)


class _LoopState:
    """Refinement work for one loop: unprocessed subsegments plus chords."""

    def __init__(self, loop):
        self.coeffs = loop.coeffs
        self.seg = np.arange(len(loop), dtype=np.int64)
        self.tlo = loop.t[:, 0].copy()
        self.thi = loop.t[:, 1].copy()
        self.done_seg = []
        self.done_tlo = []
        self.done_start = []
        self.marked = None
        self.partner = None

    @property
    def active(self):
        return len(self.seg) > 0

    def boxes(self):
        return tight_boxes(self.coeffs[self.seg], self.tlo, self.thi)

    def reset_marks(self):
        self.marked = np.zeros(len(self.seg), dtype=bool)
        self.partner = np.full(len(self.seg), -1, dtype=np.int64)

    def mark(self, indices, partner_loop):
        fresh = indices[~self.marked[indices]]
        self.marked[indices] = True
        self.partner[fresh] = partner_loop

    def finish(self, keep):
        """Move unmarked subsegments to the chord list."""
        seg = self.seg[keep]
        tlo = self.tlo[keep]
        if len(seg):
            self.done_seg.append(seg)
            self.done_tlo.append(tlo)
            self.done_start.append(eval_cubics(self.coeffs[seg], tlo))

    def split(self, split_mask):
        seg = self.seg[split_mask]
        tlo = self.tlo[split_mask]
        thi = self.thi[split_mask]
        tm = 0.5 * (tlo + thi)
        self.seg = np.concatenate([seg, seg])
        self.tlo = np.concatenate([tlo, tm])
        self.thi = np.concatenate([tm, thi])

    def chords(self, xi):
        seg = np.concatenate(self.done_seg)
        tlo = np.concatenate(self.done_tlo)
        starts = np.concatenate(self.done_start)
        order = np.lexsort((tlo, seg))
        return PolylineLoop(starts[order], xi_hint=xi)


def _chord_loop(loop, xi):
    return PolylineLoop(loop.start_points(), xi_hint=xi)


def discretize(model: CurveModel, pairs: PairList, params: DiscretizationParams | None = None):
    """Refine paired loops into link-equivalent closed polylines.

    Returns one PolylineLoop per input loop, vertex order following the
    input parameterization. Raises DiscretizationError when the input has
    degenerate segments, paired curves (nearly) intersect, or the pass
    budget runs out.
    """
    params = params or DiscretizationParams()
    xi = model.xi
    min_diam = params.epsilon * xi

    for idx, loop in enumerate(model.loops):
        lo, hi = loop.boxes()
        if float(np.min(np.linalg.norm(hi - lo, axis=1))) < min_diam:
            raise DiscretizationError(
                ZERO_LENGTH_INPUT, (idx,), "Input has zero-length segments."
            )

    paired = {}
    for i, j in pairs:
        paired.setdefault(i, []).append(j)
        paired.setdefault(j, []).append(i)

    output = [None] * model.num_loops
    states = {}
    for idx, loop in enumerate(model.loops):
        if idx in paired:
            states[idx] = _LoopState(loop)
        else:
            output[idx] = _chord_loop(loop, xi)

    for _ in range(params.max_passes):
        active = [i for i, st in states.items() if st.active]
        if not active:
            break
        boxes = {i: states[i].boxes() for i in active}
        for i in active:
            states[i].reset_marks()
        for i, j in pairs:
            if i not in boxes or j not in boxes:
                continue
            ilo, ihi = boxes[i]
            jlo, jhi = boxes[j]
            hits = bvh.overlap_pairs_boxes(ilo, ihi, jlo, jhi)
            if len(hits):
                states[i].mark(np.unique(hits[:, 0]), j)
                states[j].mark(np.unique(hits[:, 1]), i)
        for i in active:
            st = states[i]
            st.finish(~st.marked)
            partner = st.partner[st.marked]
            st.split(st.marked)
            if st.active:
                lo, hi = st.boxes()
                diam = np.linalg.norm(hi - lo, axis=1)
                bad = np.nonzero(diam < min_diam)[0]
                if len(bad):
                    j = int(partner[bad[0] % len(partner)])
                    a, b = sorted((i, j))
                    raise DiscretizationError(
                        CURVES_INTERSECT, (a, b), f"Curves {a} and {b} intersect."
                    )
                if len(st.seg) > params.max_subsegments:
                    raise DiscretizationError(
                        PASS_LIMIT_EXCEEDED, (i,),
                        f"loop {i} exceeded the {params.max_subsegments} "
                        "subsegment refinement budget",
                    )
    else:
        busy = sorted(i for i, st in states.items() if st.active)
        if busy:
            raise DiscretizationError(
                PASS_LIMIT_EXCEEDED, busy,
                f"refinement did not settle within {params.max_passes} passes",
            )

    for i, st in states.items():
        output[i] = st.chords(xi)
    return output
