"""Linking number by counting signed crossings in a regular projection.

A seeded random orthonormal frame is refined by two maximin rotations (about
z, then y) that push projected segment angles away from degenerate
directions. Crossing tests run through a floating-point filter in compiled
code; anything the filter cannot certify is re-checked with exact rational
arithmetic. Genuine degeneracies trigger a retry with a fresh frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from . import bvh
from .predicates import DegenerateProjection, _CCW_ERRBOUND, segments_cross


@dataclass
class CrossingParams:
    seed: int = 0
    max_retries: int = 16
    bvh_threshold: int = 750

    def __post_init__(self):
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


class ProjectionFailure(RuntimeError):
    """No regular projection found within the retry budget."""


def _random_frame(rng):
    # Uniform random rotation from a normalized quaternion.
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _largest_gap_midpoint(values, period):
    """Midpoint of the largest gap of values folded into [0, period)."""
    vals = np.sort(np.mod(values, period))
    if len(vals) == 0:
        return 0.5 * period
    gaps = np.diff(vals, append=vals[0] + period)
    k = int(np.argmax(gaps))
    return float(np.mod(vals[k] + 0.5 * gaps[k], period))


def _rot_z(phi):
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(phi):
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _regular_projection_frame(dirs, rng):
    """Random frame refined so projected angles avoid axis and z alignment."""
    frame = _random_frame(rng)
    d = dirs @ frame  # directions in frame coordinates
    # Rotate about z so projected angles sit maximin-far from the x/y axes:
    # fold angles mod 90 degrees and aim the largest gap's midpoint at 0.
    ang = np.arctan2(d[:, 1], d[:, 0])
    mid = _largest_gap_midpoint(ang, 0.5 * math.pi)
    frame = frame @ _rot_z(mid)
    d = dirs @ frame
    # Rotate about y away from z-alignment: a segment degenerates when its
    # xz-angle reaches +-90 degrees, so keep the rotation maximin-far from
    # those critical angles.
    crit = np.arctan2(d[:, 2], d[:, 0]) + 0.5 * math.pi
    mid = _largest_gap_midpoint(crit, math.pi)
    frame = frame @ _rot_y(-mid)
    return frame


@njit(cache=True)
def _pair_crossing(lx0, ly0, lz0, lx1, ly1, lz1, kx0, ky0, kz0, kx1, ky1, kz1, errb, zeps):
    """Filtered signed-crossing test for one projected segment pair.

    Returns (contribution, status): status 0 = certain, 1 = filter unsure,
    2 = degenerate (zero orientation or z tie inside the filter bound).
    """
    # Orientation of q endpoints against segment p (loop1 segment l).
    o = np.empty(4)
    px = (lx0, lx0, kx0, kx0)
    py = (ly0, ly0, ky0, ky0)
    qx = (lx1, lx1, kx1, kx1)
    qy = (ly1, ly1, ky1, ky1)
    cx = (kx0, kx1, lx0, lx1)
    cy = (ky0, ky1, ly0, ly1)
    for t in range(4):
        detl = (px[t] - cx[t]) * (qy[t] - cy[t])
        detr = (py[t] - cy[t]) * (qx[t] - cx[t])
        det = detl - detr
        if detl > 0.0:
            if detr <= 0.0:
                o[t] = det
                continue
            detsum = detl + detr
        elif detl < 0.0:
            if detr >= 0.0:
                o[t] = det
                continue
            detsum = -detl - detr
        else:
            o[t] = det
            continue
        if abs(det) > errb * detsum:
            o[t] = det
        else:
            return 0.0, 1  # filter unsure
    if o[0] == 0.0 or o[1] == 0.0 or o[2] == 0.0 or o[3] == 0.0:
        return 0.0, 1  # exact zero: let the rational path classify it
    if (o[0] > 0.0) == (o[1] > 0.0) or (o[2] > 0.0) == (o[3] > 0.0):
        return 0.0, 0  # no crossing
    # Transversal crossing; interpolate z on both segments.
    d1x = lx1 - lx0
    d1y = ly1 - ly0
    d2x = kx1 - kx0
    d2y = ky1 - ky0
    denom = d1x * d2y - d1y * d2x
    ex = kx0 - lx0
    ey = ky0 - ly0
    t1 = (ex * d2y - ey * d2x) / denom
    t2 = (ex * d1y - ey * d1x) / denom
    z1 = lz0 + t1 * (lz1 - lz0)
    z2 = kz0 + t2 * (kz1 - kz0)
    dz = z1 - z2
    zscale = abs(z1) + abs(z2)
    if abs(dz) <= zeps * zscale:
        return 0.0, 2
    sign = 1.0 if denom > 0.0 else -1.0
    if dz < 0.0:
        sign = -sign
    return sign, 0


@njit(cache=True)
def _count_pairs(cand, l3d, k3d, errb, zeps):
    total = 0.0
    unsure = np.empty(len(cand), dtype=np.int64)
    n_unsure = 0
    degen = False
    for idx in range(len(cand)):
        j = cand[idx, 0]
        i = cand[idx, 1]
        contrib, status = _pair_crossing(
            l3d[j, 0], l3d[j, 1], l3d[j, 2],
            l3d[j + 1, 0], l3d[j + 1, 1], l3d[j + 1, 2],
            k3d[i, 0], k3d[i, 1], k3d[i, 2],
            k3d[i + 1, 0], k3d[i + 1, 1], k3d[i + 1, 2],
            errb, zeps,
        )
        if status == 2:
            degen = True
            break
        if status == 1:
            unsure[n_unsure] = idx
            n_unsure += 1
        else:
            total += contrib
    return total, unsure[:n_unsure].copy(), degen


@njit(cache=True)
def _brute_candidates(l3d, k3d):
    nl = l3d.shape[0] - 1
    nk = k3d.shape[0] - 1
    cap = 256
    out = np.empty((cap, 2), dtype=np.int64)
    n = 0
    for j in range(nl):
        jlx = min(l3d[j, 0], l3d[j + 1, 0])
        jhx = max(l3d[j, 0], l3d[j + 1, 0])
        jly = min(l3d[j, 1], l3d[j + 1, 1])
        jhy = max(l3d[j, 1], l3d[j + 1, 1])
        for i in range(nk):
            ilx = min(k3d[i, 0], k3d[i + 1, 0])
            if ilx > jhx:
                continue
            ihx = max(k3d[i, 0], k3d[i + 1, 0])
            if jlx > ihx:
                continue
            ily = min(k3d[i, 1], k3d[i + 1, 1])
            if ily > jhy:
                continue
            ihy = max(k3d[i, 1], k3d[i + 1, 1])
            if jly > ihy:
                continue
            if n == cap:
                cap *= 2
                grown = np.empty((cap, 2), dtype=np.int64)
                grown[:n] = out[:n]
                out = grown
            out[n, 0] = j
            out[n, 1] = i
            n += 1
    return out[:n].copy()


def _segment_boxes_2d(closed):
    a = closed[:-1, :2]
    b = closed[1:, :2]
    lo = np.zeros((len(a), 3))
    hi = np.zeros((len(a), 3))
    lo[:, :2] = np.minimum(a, b)
    hi[:, :2] = np.maximum(a, b)
    return lo, hi


def _exact_pair(l3d, k3d, j, i):
    """Exact rational resolution of one filtered-out pair.

    Returns the signed contribution; raises DegenerateProjection on any
    touching configuration or z tie.
    """
    p0 = l3d[j, :2]
    p1 = l3d[j + 1, :2]
    q0 = k3d[i, :2]
    q1 = k3d[i + 1, :2]
    if not segments_cross(p0, p1, q0, q1):
        return 0.0
    fp0 = [Fraction(v) for v in l3d[j]]
    fp1 = [Fraction(v) for v in l3d[j + 1]]
    fq0 = [Fraction(v) for v in k3d[i]]
    fq1 = [Fraction(v) for v in k3d[i + 1]]
    d1 = [fp1[a] - fp0[a] for a in range(3)]
    d2 = [fq1[a] - fq0[a] for a in range(3)]
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    ex = fq0[0] - fp0[0]
    ey = fq0[1] - fp0[1]
    t1 = (ex * d2[1] - ey * d2[0]) / denom
    t2 = (ex * d1[1] - ey * d1[0]) / denom
    z1 = fp0[2] + t1 * d1[2]
    z2 = fq0[2] + t2 * d2[2]
    if z1 == z2:
        raise DegenerateProjection("segments at equal height at a crossing")
    sign = 1.0 if denom > 0 else -1.0
    if z1 < z2:
        sign = -sign
    return sign


def link_count_crossings(loop1, loop2, params: CrossingParams | None = None) -> int:
    """Integer linking number of two closed polylines via crossing counting."""
    params = params or CrossingParams()
    v1 = loop1.vertices if hasattr(loop1, "vertices") else np.asarray(loop1, float)
    v2 = loop2.vertices if hasattr(loop2, "vertices") else np.asarray(loop2, float)
    dirs = np.vstack(
        [np.roll(v1, -1, axis=0) - v1, np.roll(v2, -1, axis=0) - v2]
    )
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    rng = np.random.default_rng(np.uint64(params.seed))
    mean_size = 0.5 * (len(v1) + len(v2))
    zeps = 4.0 * np.finfo(np.float64).eps
    last_error = None
    for _ in range(params.max_retries):
        frame = _regular_projection_frame(dirs, rng)
        l3d = np.ascontiguousarray(np.vstack([v1, v1[:1]]) @ frame)
        k3d = np.ascontiguousarray(np.vstack([v2, v2[:1]]) @ frame)
        if mean_size > params.bvh_threshold:
            lo1, hi1 = _segment_boxes_2d(l3d)
            lo2, hi2 = _segment_boxes_2d(k3d)
            cand = bvh.intersecting_pairs(bvh.BvhTree(lo1, hi1), bvh.BvhTree(lo2, hi2))
        else:
            cand = _brute_candidates(l3d, k3d)
        total, unsure, degen = _count_pairs(cand, l3d, k3d, _CCW_ERRBOUND, zeps)
        if degen:
            last_error = DegenerateProjection("z tie at crossing")
            continue
        try:
            for idx in unsure:
                total += _exact_pair(l3d, k3d, int(cand[idx, 0]), int(cand[idx, 1]))
        except DegenerateProjection as e:
            last_error = e
            continue
        half_sum = round(total)
        if abs(total - half_sum) > 1e-9 or half_sum % 2 != 0:
            last_error = DegenerateProjection("non-integer signed crossing sum")
            continue
        return half_sum // 2
    raise ProjectionFailure(
        f"no regular projection after {params.max_retries} retries: {last_error}"
    )
