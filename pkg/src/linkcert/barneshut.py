"""Barnes-Hut evaluation of the Gauss linking integral.

Each loop gets a segment BVH augmented with monopole/dipole/quadrupole
moments (a moment tree). A dual-tree traversal evaluates far-field node
pairs with a Taylor expansion of the Green's-function gradient and falls
back to the exact arctangent expression at leaf pairs. A running estimate
of the next-order truncation term drives an optional one-shot rerun with a
larger opening parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import bvh
from .direct import _pair_lambda

FOUR_PI = 4.0 * math.pi


@dataclass
class BarnesHutParams:
    beta_init: float = 2.0
    beta_max: float = 10.0
    e_target: float = 0.2
    k_const: float = 1.0 / FOUR_PI
    order: str = "quadrupole"  # "dipole" or "quadrupole"
    adaptive: bool = True

    def __post_init__(self):
        if not (1.0 <= self.beta_init <= self.beta_max):
            raise ValueError("require 1 <= beta_init <= beta_max")
        if not self.e_target > 0.0:
            raise ValueError("e_target must be positive")
        if self.order not in ("dipole", "quadrupole"):
            raise ValueError(f"unknown expansion order {self.order!r}")


@njit(cache=True)
def _compute_moments(node_lo, node_hi, left, right, start, end, order, seg_a, seg_b):
    n = node_lo.shape[0]
    center = 0.5 * (node_lo + node_hi)
    radius = np.empty(n)
    for v in range(n):
        dx = node_hi[v, 0] - node_lo[v, 0]
        dy = node_hi[v, 1] - node_lo[v, 1]
        dz = node_hi[v, 2] - node_lo[v, 2]
        radius[v] = 0.5 * math.sqrt(dx * dx + dy * dy + dz * dz)
    cm = np.zeros((n, 3))
    cd = np.zeros((n, 3, 3))
    cq = np.zeros((n, 3, 3, 3))
    # Children are allocated after their parent, so a reverse sweep sees
    # child moments before the parent accumulates them.
    for v in range(n - 1, -1, -1):
        if left[v] < 0:
            s = order[start[v]]
            mid = 0.5 * (seg_a[s] + seg_b[s])
            d = seg_b[s] - seg_a[s]
            cm[v] = d
            # Moments about the box center, which for a lone segment equals
            # the midpoint (so CD = 0 and CQ = (1/12) d (x) d (x) d); the
            # rloc terms keep this exact even if the centers ever differ.
            rloc = mid - center[v]
            for i in range(3):
                for j in range(3):
                    cd[v, i, j] = d[i] * rloc[j]
                    for kk in range(3):
                        cq[v, i, j, kk] = d[i] * (
                            d[j] * d[kk] / 12.0 + rloc[j] * rloc[kk]
                        )
        else:
            for c in (left[v], right[v]):
                rc = center[c] - center[v]
                for i in range(3):
                    cm[v, i] += cm[c, i]
                    for j in range(3):
                        cd[v, i, j] += cd[c, i, j] + cm[c, i] * rc[j]
                        for kk in range(3):
                            cq[v, i, j, kk] += (
                                cq[c, i, j, kk]
                                + cd[c, i, j] * rc[kk]
                                + cd[c, i, kk] * rc[j]
                                + cm[c, i] * rc[j] * rc[kk]
                            )
    return center, radius, cm, cd, cq


@njit(cache=True)
def _norms(cm, cd, cq):
    n = cm.shape[0]
    ncm = np.empty(n)
    ncd = np.empty(n)
    ncq = np.empty(n)
    for v in range(n):
        ncm[v] = math.sqrt(cm[v, 0] ** 2 + cm[v, 1] ** 2 + cm[v, 2] ** 2)
        s2 = 0.0
        for i in range(3):
            for j in range(3):
                s2 += cd[v, i, j] ** 2
        ncd[v] = math.sqrt(s2)
        s3 = 0.0
        for i in range(3):
            for j in range(3):
                for kk in range(3):
                    s3 += cq[v, i, j, kk] ** 2
        ncq[v] = math.sqrt(s3)
    return ncm, ncd, ncq


@njit(cache=True, inline="always")
def _cross(ax, ay, az, bx, by, bz):
    return ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx


@njit(cache=True)
def _far_field(r, cm1, cd1, cq1, cm2, cd2, cq2, quadrupole):
    rx, ry, rz = r[0], r[1], r[2]
    r2 = rx * rx + ry * ry + rz * rz
    rn = math.sqrt(r2)
    inv3 = 1.0 / (FOUR_PI * r2 * rn)
    inv5 = inv3 / r2
    inv7 = inv5 / r2
    # Monopole: -(cm1 x cm2) . grad G, grad G = r / (4 pi |r|^3).
    wx, wy, wz = _cross(cm1[0], cm1[1], cm1[2], cm2[0], cm2[1], cm2[2])
    total = -(wx * rx + wy * ry + wz * rz) * inv3
    # Dipole: contract (cm1 x CD2_col_b - CD1_col_b x cm2) against hess G.
    for b in range(3):
        u1x, u1y, u1z = _cross(cd1[0, b], cd1[1, b], cd1[2, b], cm2[0], cm2[1], cm2[2])
        u2x, u2y, u2z = _cross(cm1[0], cm1[1], cm1[2], cd2[0, b], cd2[1, b], cd2[2, b])
        vx = u2x - u1x
        vy = u2y - u1y
        vz = u2z - u1z
        rb = r[b]
        # H_ab = (delta_ab |r|^2 - 3 r_a r_b) / (4 pi |r|^5)
        dot_vr = vx * rx + vy * ry + vz * rz
        hv = vx * (1.0 if b == 0 else 0.0) + vy * (1.0 if b == 1 else 0.0) + vz * (
            1.0 if b == 2 else 0.0
        )
        total -= (hv * r2 - 3.0 * dot_vr * rb) * inv5
    if quadrupole:
        for b in range(3):
            for c in range(3):
                q1x, q1y, q1z = _cross(
                    cq1[0, b, c], cq1[1, b, c], cq1[2, b, c], cm2[0], cm2[1], cm2[2]
                )
                q2x, q2y, q2z = _cross(
                    cm1[0], cm1[1], cm1[2], cq2[0, b, c], cq2[1, b, c], cq2[2, b, c]
                )
                dxx, dxy, dxz = _cross(
                    cd1[0, b], cd1[1, b], cd1[2, b], cd2[0, c], cd2[1, c], cd2[2, c]
                )
                vx = q1x + q2x - 2.0 * dxx
                vy = q1y + q2y - 2.0 * dxy
                vz = q1z + q2z - 2.0 * dxz
                rb = r[b]
                rc = r[c]
                dot_vr = vx * rx + vy * ry + vz * rz
                # T_abc = -3 (r_a d_bc + r_b d_ac + r_c d_ab)/(4 pi |r|^5)
                #         + 15 r_a r_b r_c / (4 pi |r|^7)
                t = 0.0
                if b == c:
                    t += -3.0 * dot_vr * inv5
                t += -3.0 * (vx if b == 0 else (vy if b == 1 else vz)) * rc * inv5
                t += -3.0 * (vx if c == 0 else (vy if c == 1 else vz)) * rb * inv5
                t += 15.0 * dot_vr * rb * rc * inv7
                total -= 0.5 * t
    return total


@njit(cache=True)
def _dual_eval(
    a_left, a_right, a_start, a_end, a_order, a_center, a_radius,
    a_cm, a_cd, a_cq, a_ncm, a_ncd, a_ncq, a_seg_a, a_seg_b,
    b_left, b_right, b_start, b_end, b_order, b_center, b_radius,
    b_cm, b_cd, b_cq, b_ncm, b_ncd, b_ncq, b_seg_a, b_seg_b,
    beta, quadrupole, k_const,
):
    lam = 0.0
    e_est = 0.0
    stack = np.empty((4 * (a_left.shape[0] + b_left.shape[0]) + 64, 2), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        na = stack[sp, 0]
        nb = stack[sp, 1]
        rx = b_center[nb, 0] - a_center[na, 0]
        ry = b_center[nb, 1] - a_center[na, 1]
        rz = b_center[nb, 2] - a_center[na, 2]
        dist = math.sqrt(rx * rx + ry * ry + rz * rz)
        ra = a_radius[na]
        rb = b_radius[nb]
        if dist > beta * (ra + rb):
            r = np.empty(3)
            r[0] = rx
            r[1] = ry
            r[2] = rz
            lam += _far_field(
                r, a_cm[na], a_cd[na], a_cq[na], b_cm[nb], b_cd[nb], b_cq[nb], quadrupole
            )
            inv5 = 1.0 / dist**5
            e_est += k_const * inv5 * (
                ra * b_ncm[nb] * a_ncq[na]
                + rb * a_ncm[na] * b_ncq[nb]
                + 3.0 * (a_ncd[na] * b_ncq[nb] + a_ncq[na] * b_ncd[nb])
            )
            continue
        a_leaf = a_left[na] < 0
        b_leaf = b_left[nb] < 0
        if a_leaf and b_leaf:
            sa = a_order[a_start[na]]
            sb = b_order[b_start[nb]]
            lam += _pair_lambda(
                a_seg_a[sa, 0], a_seg_a[sa, 1], a_seg_a[sa, 2],
                a_seg_b[sa, 0], a_seg_b[sa, 1], a_seg_b[sa, 2],
                b_seg_a[sb, 0], b_seg_a[sb, 1], b_seg_a[sb, 2],
                b_seg_b[sb, 0], b_seg_b[sb, 1], b_seg_b[sb, 2],
            )
            continue
        descend_a = not a_leaf and (b_leaf or ra > rb)
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
    return lam, e_est


class MomentNode:
    """Read-only view of one node of a moment tree."""

    def __init__(self, tree, index):
        self._tree = tree
        self.index = index

    @property
    def box(self):
        from .geometry import Aabb

        return Aabb(self._tree.bvh.node_lo[self.index], self._tree.bvh.node_hi[self.index])

    @property
    def center(self):
        return self._tree.center[self.index]

    @property
    def radius(self):
        return float(self._tree.radius[self.index])

    @property
    def c_m(self):
        return self._tree.cm[self.index]

    @property
    def c_d(self):
        return self._tree.cd[self.index]

    @property
    def c_q(self):
        return self._tree.cq[self.index]

    @property
    def is_leaf(self):
        return self._tree.bvh.left[self.index] < 0

    def children(self):
        if self.is_leaf:
            return ()
        t = self._tree.bvh
        return (
            MomentNode(self._tree, int(t.left[self.index])),
            MomentNode(self._tree, int(t.right[self.index])),
        )

    def segment(self):
        t = self._tree
        s = int(t.bvh.prim_order[int(t.bvh.start[self.index])])
        return t.seg_a[s], t.seg_b[s]


class MomentTree:
    """Segment BVH of one polyline loop with multipole moments per node."""

    def __init__(self, loop):
        verts = loop.vertices if hasattr(loop, "vertices") else np.asarray(loop, float)
        self.seg_a = np.ascontiguousarray(verts)
        self.seg_b = np.ascontiguousarray(np.roll(verts, -1, axis=0))
        lo = np.minimum(self.seg_a, self.seg_b)
        hi = np.maximum(self.seg_a, self.seg_b)
        self.bvh = bvh.BvhTree(lo, hi, leaf_size=1)
        t = self.bvh
        self.center, self.radius, self.cm, self.cd, self.cq = _compute_moments(
            t.node_lo, t.node_hi, t.left, t.right, t.start, t.end, t.prim_order,
            self.seg_a, self.seg_b,
        )
        self.ncm, self.ncd, self.ncq = _norms(self.cm, self.cd, self.cq)
        self.loop_length = float(np.sum(np.linalg.norm(self.seg_b - self.seg_a, axis=1)))

    @property
    def root(self):
        return MomentNode(self, 0)

    def _arrays(self):
        t = self.bvh
        return (
            t.left, t.right, t.start, t.end, t.prim_order, self.center, self.radius,
            self.cm, self.cd, self.cq, self.ncm, self.ncd, self.ncq,
            self.seg_a, self.seg_b,
        )


def build_moment_tree(loop) -> MomentTree:
    return MomentTree(loop)


def far_field_eval(node1: MomentNode, node2: MomentNode, order="quadrupole") -> float:
    """Far-field expansion for one node pair (monopole+dipole[+quadrupole])."""
    r = np.ascontiguousarray(node2.center - node1.center)
    return float(
        _far_field(
            r,
            np.ascontiguousarray(node1.c_m),
            np.ascontiguousarray(node1.c_d),
            np.ascontiguousarray(node1.c_q),
            np.ascontiguousarray(node2.c_m),
            np.ascontiguousarray(node2.c_d),
            np.ascontiguousarray(node2.c_q),
            order == "quadrupole",
        )
    )


@dataclass
class BarnesHutResult:
    value: float
    e_estimate: float
    beta_used: float
    reran: bool


def barnes_hut_detailed(tree1: MomentTree, tree2: MomentTree, params=None) -> BarnesHutResult:
    params = params or BarnesHutParams()
    quad = params.order == "quadrupole"
    lam, e_est = _dual_eval(
        *tree1._arrays(), *tree2._arrays(), params.beta_init, quad, params.k_const
    )
    beta_used = params.beta_init
    reran = False
    if params.adaptive:
        beta_t = (e_est / params.e_target) ** 0.25 * params.beta_init
        if beta_t > params.beta_init:
            beta_used = min(beta_t, params.beta_max)
            lam, _ = _dual_eval(
                *tree1._arrays(), *tree2._arrays(), beta_used, quad, params.k_const
            )
            reran = True
    return BarnesHutResult(float(lam), float(e_est), float(beta_used), reran)


def link_barnes_hut(tree1: MomentTree, tree2: MomentTree, params=None) -> float:
    return barnes_hut_detailed(tree1, tree2, params).value
