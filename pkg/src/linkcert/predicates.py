"""Exact 2D orientation and segment-intersection predicates.

A floating-point static filter answers the common case; anything inside the
filter's error bound is recomputed with exact rational arithmetic (Python
floats are exact rationals, so Fraction gives the true sign).
"""

from __future__ import annotations

from fractions import Fraction

# Relative rounding bound for the 2x2 determinant filter (Shewchuk's
# ccwerrboundA for double precision).
_CCW_ERRBOUND = (3.0 + 16.0 * 2.0**-53) * 2.0**-53


def orient2d_filtered(ax, ay, bx, by, cx, cy):
    """Sign of the (b-a) x (c-a) determinant, or None if the filter is unsure."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    if detleft > 0.0:
        if detright <= 0.0:
            return _sign(det)
        detsum = detleft + detright
    elif detleft < 0.0:
        if detright >= 0.0:
            return _sign(det)
        detsum = -detleft - detright
    else:
        return _sign(det)
    if abs(det) > _CCW_ERRBOUND * detsum:
        return _sign(det)
    return None


def orient2d_exact(ax, ay, bx, by, cx, cy):
    det = (Fraction(ax) - Fraction(cx)) * (Fraction(by) - Fraction(cy)) - (
        Fraction(ay) - Fraction(cy)
    ) * (Fraction(bx) - Fraction(cx))
    return _sign(det)


def orient2d(ax, ay, bx, by, cx, cy):
    s = orient2d_filtered(ax, ay, bx, by, cx, cy)
    if s is None:
        s = orient2d_exact(ax, ay, bx, by, cx, cy)
    return s


def _sign(x):
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


class DegenerateProjection(Exception):
    """A projected configuration is not regular (collinear/touching)."""


def segments_cross(p0, p1, q0, q1):
    """Exact proper-crossing test for open 2D segments.

    Returns True for a transversal interior crossing, False for disjoint
    segments, and raises DegenerateProjection when any endpoint lies on the
    other segment's line within its span (including shared endpoints and
    collinear overlap).
    """
    o1 = orient2d(p0[0], p0[1], p1[0], p1[1], q0[0], q0[1])
    o2 = orient2d(p0[0], p0[1], p1[0], p1[1], q1[0], q1[1])
    o3 = orient2d(q0[0], q0[1], q1[0], q1[1], p0[0], p0[1])
    o4 = orient2d(q0[0], q0[1], q1[0], q1[1], p1[0], p1[1])
    if o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return o1 != o2 and o3 != o4
    # A zero orientation means an endpoint sits on the other segment's line;
    # that is degenerate only when it falls within the segment's box.
    if o1 == 0 and _in_box(q0, p0, p1):
        raise DegenerateProjection("endpoint on segment")
    if o2 == 0 and _in_box(q1, p0, p1):
        raise DegenerateProjection("endpoint on segment")
    if o3 == 0 and _in_box(p0, q0, q1):
        raise DegenerateProjection("endpoint on segment")
    if o4 == 0 and _in_box(p1, q0, q1):
        raise DegenerateProjection("endpoint on segment")
    return False


def _in_box(p, a, b):
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )
