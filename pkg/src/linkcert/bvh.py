"""Axis-aligned bounding-box hierarchy over primitive boxes.

Binary median-split tree (longest axis of the node box, split on box
centers, ties broken by input index). Overlap tests are closed-interval:
touching boxes count as overlapping. Build and queries are numba-compiled
flat-array kernels; trees are immutable after construction.
"""

from __future__ import annotations

import numpy as np
from numba import njit

DEFAULT_LEAF_SIZE = 2  # leaf payload never exceeds 4 primitives


@njit(cache=True)
def _build(lo, hi, leaf_size):
    m = lo.shape[0]
    centers = 0.5 * (lo + hi)
    max_nodes = 4 * m + 1
    node_lo = np.empty((max_nodes, 3))
    node_hi = np.empty((max_nodes, 3))
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    start = np.zeros(max_nodes, dtype=np.int64)
    end = np.zeros(max_nodes, dtype=np.int64)
    order = np.arange(m)

    n_nodes = 1
    stack = np.empty((64 + 2 * m, 3), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp, 0]
        s = stack[sp, 1]
        e = stack[sp, 2]
        # Node box = union of primitive boxes in [s, e).
        blo = lo[order[s]].copy()
        bhi = hi[order[s]].copy()
        for k in range(s + 1, e):
            p = order[k]
            for d in range(3):
                if lo[p, d] < blo[d]:
                    blo[d] = lo[p, d]
                if hi[p, d] > bhi[d]:
                    bhi[d] = hi[p, d]
        node_lo[node] = blo
        node_hi[node] = bhi
        start[node] = s
        end[node] = e
        if e - s <= leaf_size:
            continue
        # Longest axis of the node box.
        axis = 0
        best = bhi[0] - blo[0]
        for d in range(1, 3):
            w = bhi[d] - blo[d]
            if w > best:
                best = w
                axis = d
        idx = np.sort(order[s:e])  # ties in center broken by input index
        perm = np.argsort(centers[idx, axis], kind="mergesort")
        order[s:e] = idx[perm]
        mid = s + (e - s) // 2
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        stack[sp, 0] = lc
        stack[sp, 1] = s
        stack[sp, 2] = mid
        sp += 1
        stack[sp, 0] = rc
        stack[sp, 1] = mid
        stack[sp, 2] = e
        sp += 1
    return (
        node_lo[:n_nodes].copy(),
        node_hi[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        start[:n_nodes].copy(),
        end[:n_nodes].copy(),
        order,
    )


@njit(cache=True)
def _boxes_overlap(alo, ahi, blo, bhi):
    for d in range(3):
        if alo[d] > bhi[d] or blo[d] > ahi[d]:
            return False
    return True


@njit(cache=True)
def _dual_pairs(
    a_lo, a_hi, a_left, a_right, a_start, a_end, a_order, a_plo, a_phi,
    b_lo, b_hi, b_left, b_right, b_start, b_end, b_order, b_plo, b_phi,
):
    cap = 256
    out = np.empty((cap, 2), dtype=np.int64)
    n_out = 0
    stack = np.empty((4 * (len(a_lo) + len(b_lo)) + 64, 2), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        na = stack[sp, 0]
        nb = stack[sp, 1]
        if not _boxes_overlap(a_lo[na], a_hi[na], b_lo[nb], b_hi[nb]):
            continue
        a_leaf = a_left[na] < 0
        b_leaf = b_left[nb] < 0
        if a_leaf and b_leaf:
            for ia in range(a_start[na], a_end[na]):
                pa = a_order[ia]
                for ib in range(b_start[nb], b_end[nb]):
                    pb = b_order[ib]
                    if _boxes_overlap(a_plo[pa], a_phi[pa], b_plo[pb], b_phi[pb]):
                        if n_out == cap:
                            cap *= 2
                            grown = np.empty((cap, 2), dtype=np.int64)
                            grown[:n_out] = out[:n_out]
                            out = grown
                        out[n_out, 0] = pa
                        out[n_out, 1] = pb
                        n_out += 1
            continue
        # Descend the node covering more primitives (or the internal one).
        descend_a = not a_leaf and (
            b_leaf or (a_end[na] - a_start[na]) >= (b_end[nb] - b_start[nb])
        )
        if descend_a:
            stack[sp, 0] = a_left[na]
            stack[sp, 1] = nb
            sp += 1
            stack[sp, 0] = a_right[na]
            stack[sp, 1] = nb
            sp += 1
        else:
            stack[sp, 0] = na
            stack[sp, 1] = b_left[nb]
            sp += 1
            stack[sp, 0] = na
            stack[sp, 1] = b_right[nb]
            sp += 1
    return out[:n_out].copy()


class BvhTree:
    """Immutable flat BVH over a list of axis-aligned boxes."""

    def __init__(self, lo, hi, leaf_size=DEFAULT_LEAF_SIZE):
        lo = np.ascontiguousarray(lo, dtype=np.float64)
        hi = np.ascontiguousarray(hi, dtype=np.float64)
        if lo.ndim != 2 or lo.shape[1] != 3 or lo.shape != hi.shape or lo.shape[0] == 0:
            raise ValueError("expected matching (m, 3) box corner arrays, m >= 1")
        if np.any(lo > hi):
            raise ValueError("box min exceeds max")
        self.prim_lo = lo
        self.prim_hi = hi
        (
            self.node_lo,
            self.node_hi,
            self.left,
            self.right,
            self.start,
            self.end,
            self.prim_order,
        ) = _build(lo, hi, leaf_size)

    @property
    def num_primitives(self):
        return self.prim_lo.shape[0]

    @property
    def num_nodes(self):
        return self.node_lo.shape[0]

    def depth(self):
        depths = {0: 1}
        best = 1
        for node in range(self.num_nodes):
            d = depths[node]
            best = max(best, d)
            if self.left[node] >= 0:
                depths[int(self.left[node])] = d + 1
                depths[int(self.right[node])] = d + 1
        return best

    def _arrays(self):
        return (
            self.node_lo, self.node_hi, self.left, self.right,
            self.start, self.end, self.prim_order, self.prim_lo, self.prim_hi,
        )


def build_bvh(lo, hi=None, leaf_size=DEFAULT_LEAF_SIZE) -> BvhTree:
    """Build a BVH. Accepts (m, 3) lo/hi arrays or a list of Aabb."""
    if hi is None:
        boxes = list(lo)
        lo = np.array([b.min for b in boxes])
        hi = np.array([b.max for b in boxes])
    return BvhTree(lo, hi, leaf_size=leaf_size)


def intersecting_pairs(a: BvhTree, b: BvhTree) -> np.ndarray:
    """All primitive index pairs (i from a, j from b) with overlapping boxes.

    Closed-interval overlap; order unspecified. When a and b are the same
    tree, self-pairs (i, i) and both orderings of each pair are included.
    """
    return _dual_pairs(*a._arrays(), *b._arrays())


# Brute-force product below this size is cheaper than building/walking trees.
BRUTE_FORCE_LIMIT = 16384


def overlap_pairs_boxes(alo, ahi, blo, bhi):
    """Overlapping box pairs between two plain box lists (no tree reuse).

    Dispatches between a vectorized all-pairs check and BVH traversal.
    """
    alo = np.ascontiguousarray(alo, dtype=np.float64)
    ahi = np.ascontiguousarray(ahi, dtype=np.float64)
    blo = np.ascontiguousarray(blo, dtype=np.float64)
    bhi = np.ascontiguousarray(bhi, dtype=np.float64)
    if alo.shape[0] * blo.shape[0] <= BRUTE_FORCE_LIMIT:
        hit = np.all(
            (alo[:, None, :] <= bhi[None, :, :]) & (blo[None, :, :] <= ahi[:, None, :]),
            axis=2,
        )
        ii, jj = np.nonzero(hit)
        return np.stack([ii, jj], axis=1)
    return intersecting_pairs(BvhTree(alo, ahi), BvhTree(blo, bhi))
