"""Gauss linking integral by exact segment-pair summation.

Two variants: one signed-solid-angle arctangent pair per segment pair, and
an angle-summation form that accumulates complex phases per outer segment
(counting negative-x-axis crossings) and spends a single arctangent per
outer segment.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True, fastmath=False)
def _pair_lambda(ljx, ljy, ljz, lj1x, lj1y, lj1z, kix, kiy, kiz, ki1x, ki1y, ki1z):
    ax = ljx - kix
    ay = ljy - kiy
    az = ljz - kiz
    bx = ljx - ki1x
    by = ljy - ki1y
    bz = ljz - ki1z
    cx = lj1x - ki1x
    cy = lj1y - ki1y
    cz = lj1z - ki1z
    dx = lj1x - kix
    dy = lj1y - kiy
    dz = lj1z - kiz
    an = math.sqrt(ax * ax + ay * ay + az * az)
    bn = math.sqrt(bx * bx + by * by + bz * bz)
    cn = math.sqrt(cx * cx + cy * cy + cz * cz)
    dn = math.sqrt(dx * dx + dy * dy + dz * dz)
    # One triple product: a.(b x c) == c.(d x a).
    p = ax * (by * cz - bz * cy) + ay * (bz * cx - bx * cz) + az * (bx * cy - by * cx)
    ab = ax * bx + ay * by + az * bz
    bc = bx * cx + by * cy + bz * cz
    ca = cx * ax + cy * ay + cz * az
    ad = ax * dx + ay * dy + az * dz
    dc = dx * cx + dy * cy + dz * cz
    d1 = an * bn * cn + ab * cn + bc * an + ca * bn
    d2 = an * dn * cn + ad * cn + dc * an + ca * dn
    return (math.atan2(p, d1) + math.atan2(p, d2)) / TWO_PI


@njit(cache=True)
def _link_atan(l, k):
    # l, k: closed vertex arrays (first vertex repeated at the end).
    nl = l.shape[0] - 1
    nk = k.shape[0] - 1
    total = 0.0
    for i in range(nk):
        row = 0.0
        for j in range(nl):
            row += _pair_lambda(
                l[j, 0], l[j, 1], l[j, 2],
                l[j + 1, 0], l[j + 1, 1], l[j + 1, 2],
                k[i, 0], k[i, 1], k[i, 2],
                k[i + 1, 0], k[i + 1, 1], k[i + 1, 2],
            )
        total += row
    return total


@njit(cache=True)
def _sgn(x, y):
    if y > 0.0 or (y == 0.0 and x < 0.0):
        return 1.0
    return -1.0


@njit(cache=True)
def _link_angle_sum(l, k):
    nl = l.shape[0] - 1
    nk = k.shape[0] - 1
    total = 0.0
    for i in range(nk):
        kix = k[i, 0]
        kiy = k[i, 1]
        kiz = k[i, 2]
        ki1x = k[i + 1, 0]
        ki1y = k[i + 1, 1]
        ki1z = k[i + 1, 2]
        xs = 1.0
        ys = 0.0
        s_prev = -1.0
        lam_i = 0.0
        for j in range(nl):
            ax = l[j, 0] - kix
            ay = l[j, 1] - kiy
            az = l[j, 2] - kiz
            bx = l[j, 0] - ki1x
            by = l[j, 1] - ki1y
            bz = l[j, 2] - ki1z
            cx = l[j + 1, 0] - ki1x
            cy = l[j + 1, 1] - ki1y
            cz = l[j + 1, 2] - ki1z
            dx = l[j + 1, 0] - kix
            dy = l[j + 1, 1] - kiy
            dz = l[j + 1, 2] - kiz
            an = math.sqrt(ax * ax + ay * ay + az * az)
            bn = math.sqrt(bx * bx + by * by + bz * bz)
            cn = math.sqrt(cx * cx + cy * cy + cz * cz)
            dn = math.sqrt(dx * dx + dy * dy + dz * dz)
            p = (
                ax * (by * cz - bz * cy)
                + ay * (bz * cx - bx * cz)
                + az * (bx * cy - by * cx)
            )
            ab = ax * bx + ay * by + az * bz
            bc = bx * cx + by * cy + bz * cz
            ca = cx * ax + cy * ay + cz * az
            ad = ax * dx + ay * dy + az * dz
            dc = dx * cx + dy * cy + dz * cz
            d1 = an * bn * cn + ab * cn + bc * an + ca * bn
            d2 = an * dn * cn + ad * cn + dc * an + ca * dn
            xp = d1 * d2 - p * p
            yp = p * (d1 + d2)
            if _sgn(d1, p) * _sgn(d2, p) > 0.0 and _sgn(d1, p) * _sgn(xp, yp) < 0.0:
                lam_i += _sgn(d1, p)
            xpp = xs * xp - ys * yp
            ypp = xs * yp + ys * xp
            if _sgn(xp, yp) * s_prev > 0.0 and _sgn(xpp, ypp) * s_prev < 0.0:
                lam_i += s_prev
            s_prev = _sgn(xpp, ypp)
            norm = max(abs(xpp), abs(ypp))
            xs = xpp / norm
            ys = ypp / norm
        lam_i += math.atan2(ys, xs) / TWO_PI
        total += lam_i
    return total


def segment_pair_lambda(l_j, l_j1, k_i, k_i1) -> float:
    """Linking contribution of one segment pair (signed solid angle form)."""
    return float(
        _pair_lambda(
            l_j[0], l_j[1], l_j[2],
            l_j1[0], l_j1[1], l_j1[2],
            k_i[0], k_i[1], k_i[2],
            k_i1[0], k_i1[1], k_i1[2],
        )
    )


def link_direct(loop1, loop2, variant="atan") -> float:
    """Exact linking number of two closed polylines (real-valued).

    variant "atan" sums one arctangent pair per segment pair; "anglesum"
    accumulates phase products per outer segment. The two agree to ~1e-9.
    """
    l = _closed(loop1)
    k = _closed(loop2)
    if variant == "atan":
        return float(_link_atan(l, k))
    if variant == "anglesum":
        return float(_link_angle_sum(l, k))
    raise ValueError(f"unknown direct-summation variant {variant!r}")


def _closed(loop):
    verts = loop.vertices if hasattr(loop, "vertices") else np.asarray(loop, dtype=np.float64)
    return np.ascontiguousarray(np.vstack([verts, verts[:1]]))
