"""Closing a braid of open curves into virtual loops.

Each open curve runs between two end volumes. Consecutive curves are joined
into closed loops by 3-chord connection paths routed through rail points at
per-connection offsets inside the end volumes, so connections can never
intersect one another. Loop pairs that share a curve are excluded from the
potential link search. Re-closing a deformed braid reuses the recorded rail
paths, mapped through the rigid transform relating the old and new ends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Aabb, CurveModel, LoopGeometry, ValidationError, eval_cubics


class BraidError(ValueError):
    """Invalid braid input or closure construction failure."""


@dataclass
class BraidModel:
    """Ordered open curves plus the end volumes they terminate in."""

    curves: list
    left_volume: Aabb
    right_volume: Aabb
    left_axis: np.ndarray
    right_axis: np.ndarray

    def __post_init__(self):
        if len(self.curves) < 4:
            raise BraidError(f"a braid needs >= 4 curves, got {len(self.curves)}")
        self.left_axis = _unit(self.left_axis)
        self.right_axis = _unit(self.right_axis)
        curves = []
        for idx, curve in enumerate(self.curves):
            if curve.closed:
                raise BraidError(f"curve {idx} must be open")
            first = curve.start_points()[0]
            last = curve.end_points()[-1]
            in_left = self.left_volume.contains(first)
            in_right = self.right_volume.contains(last)
            if not (in_left and in_right):
                if self.left_volume.contains(last) and self.right_volume.contains(first):
                    curve = _reversed_loop(curve)  # normalize to left -> right
                else:
                    raise BraidError(
                        f"curve {idx} endpoints are not inside the end volumes"
                    )
            _check_no_reentry(curve, idx, self.left_volume, self.right_volume)
            curves.append(curve)
        self.curves = curves


@dataclass
class ClosureTemplate:
    """Record of the connection paths used by a close_braid call."""

    num_curves: int
    left_endpoints: np.ndarray   # (L, 3) strand start points
    right_endpoints: np.ndarray  # (L, 3) strand end points
    left_rails: np.ndarray       # (L, 2, 3) rail points per left connection
    right_rails: np.ndarray


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if not n > 0:
        raise BraidError("outward axis must be nonzero")
    return v / n


def _reversed_loop(loop):
    coeffs = np.empty_like(loop.coeffs)
    t = loop.t
    for k in range(len(loop)):
        coeffs[len(loop) - 1 - k] = _reverse_cubic(loop.coeffs[k], t[k, 0], t[k, 1])
    return LoopGeometry(coeffs, t[::-1].copy(), closed=False,
                        control_points=loop.control_points[::-1].copy())


def _reverse_cubic(c, lo, hi):
    """Coefficients of p(lo + hi - t), same domain, reversed traversal."""
    s = lo + hi
    out = np.zeros_like(c)
    # (s - t)^k expanded in powers of t.
    out[0] = c[0] + c[1] * s + c[2] * s * s + c[3] * s**3
    out[1] = -(c[1] + 2.0 * c[2] * s + 3.0 * c[3] * s * s)
    out[2] = c[2] + 3.0 * c[3] * s
    out[3] = -c[3]
    return out


def _check_no_reentry(curve, idx, left, right, samples_per_segment=8):
    ts = np.linspace(0.0, 1.0, samples_per_segment)
    inside_left = []
    inside_right = []
    for k in range(len(curve)):
        lo, hi = curve.t[k]
        pts = eval_cubics(
            np.repeat(curve.coeffs[k][None], len(ts), axis=0), lo + (hi - lo) * ts
        )
        inside_left.extend(left.contains(p) for p in pts)
        inside_right.extend(right.contains(p) for p in pts)
    if _not_prefix(inside_left) or _not_prefix(inside_right[::-1]):
        raise BraidError(f"curve {idx} re-enters an end volume")


def _not_prefix(flags):
    seen_outside = False
    for f in flags:
        if not f:
            seen_outside = True
        elif seen_outside:
            return True
    return False


def _lateral_direction(axis):
    ref = np.zeros(3)
    ref[int(np.argmin(np.abs(axis)))] = 1.0
    w = np.cross(axis, ref)
    return w / np.linalg.norm(w)


def _rail_points(endpoints, pairs, volume, axis):
    """Rail points m1, m2 for each connection c joining endpoints pairs[c].

    Rails sit at axial level base + spacing*(c+1) with lateral offset
    proportional to (c+1). Distinct connections use distinct parallel
    mid-chord planes, and riser chords from different connections cannot
    meet because both offsets scale with the same factor.
    """
    levels = endpoints @ axis
    base = float(levels.max())
    # Axial headroom inside the volume along the outward axis.
    corners = np.array(volume.min), np.array(volume.max)
    head = max(
        float(np.dot(np.where(axis > 0, corners[1], corners[0]), axis)) - base, 0.0
    )
    n = len(pairs)
    if head <= 0.0:
        raise BraidError("no axial room left in the end volume for connections")
    spacing = head / (n + 1)
    lateral = _lateral_direction(axis)
    lat_room = float(min(np.asarray(volume.max) - np.asarray(volume.min)))
    dstep = 0.25 * lat_room / (n + 1)
    rails = np.empty((n, 2, 3))
    for c, (a, b) in enumerate(pairs):
        level = base + spacing * (c + 1)
        off = dstep * (c + 1)
        for slot, e in enumerate((a, b)):
            p = endpoints[e]
            rails[c, slot] = p + (level - levels[e]) * axis + off * lateral
    _validate_rail_chords(endpoints, pairs, rails)
    return rails


def _connection_chords(endpoints, pairs, rails):
    chords = []
    for c, (a, b) in enumerate(pairs):
        m1, m2 = rails[c]
        chords.append((endpoints[a], m1))
        chords.append((m1, m2))
        chords.append((m2, endpoints[b]))
    return chords


def _segment_distance(p0, p1, q0, q1):
    """Euclidean distance between two 3D segments."""
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    c = d1 @ r
    b = d1 @ d2
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 0 else 0.0
    t = (b * s + f) / e if e > 0 else 0.0
    if t < 0.0:
        t = 0.0
        s = np.clip(-c / a, 0.0, 1.0) if a > 0 else 0.0
    elif t > 1.0:
        t = 1.0
        s = np.clip((b - c) / a, 0.0, 1.0) if a > 0 else 0.0
    return float(np.linalg.norm((p0 + s * d1) - (q0 + t * d2)))


def _validate_rail_chords(endpoints, pairs, rails):
    chords = _connection_chords(endpoints, pairs, rails)
    owner = np.repeat(np.arange(len(pairs)), 3)
    scale = max(float(np.max(np.abs(endpoints))), 1.0)
    for x in range(len(chords)):
        for y in range(x + 1, len(chords)):
            cx, cy = owner[x], owner[y]
            if cx == cy:
                continue  # consecutive chords of one path legitimately touch
            # Connections at a shared strand endpoint touch there by design;
            # the loops involved share that strand and are PLS-excluded.
            if set(pairs[cx]) & set(pairs[cy]):
                continue
            d = _segment_distance(*chords[x], *chords[y])
            if d <= 1e-12 * scale:
                raise BraidError("connection paths intersect; widen the end volume")


def close_braid(braid: BraidModel):
    """Close consecutive strands into loops.

    Returns (model, excluded pair set, template). Loop i is strand i, the
    right connection, strand i+1 reversed, and the left connection back to
    strand i's start. Pairs of loops sharing a strand are excluded.
    """
    L = len(braid.curves)
    left_pts = np.array([c.start_points()[0] for c in braid.curves])
    right_pts = np.array([c.end_points()[-1] for c in braid.curves])
    right_pairs = [(i, (i + 1) % L) for i in range(L)]
    left_pairs = [((i + 1) % L, i) for i in range(L)]
    right_rails = _rail_points(right_pts, right_pairs, braid.right_volume, braid.right_axis)
    left_rails = _rail_points(left_pts, left_pairs, braid.left_volume, braid.left_axis)
    template = ClosureTemplate(L, left_pts, right_pts, left_rails, right_rails)
    model, excluded = _assemble(braid, template)
    return model, excluded, template


def _chain(points):
    """Straight cubic segments through consecutive points."""
    pts = np.asarray(points)
    m = len(pts) - 1
    coeffs = np.zeros((m, 4, 3))
    coeffs[:, 0] = pts[:-1]
    coeffs[:, 1] = pts[1:] - pts[:-1]
    return coeffs


def _assemble(braid, template):
    L = len(braid.curves)
    loops = []
    for i in range(L):
        j = (i + 1) % L
        fwd = braid.curves[i]
        rev = _reversed_loop(braid.curves[j])
        right_conn = _chain(
            [template.right_endpoints[i], *template.right_rails[i], template.right_endpoints[j]]
        )
        left_conn = _chain(
            [template.left_endpoints[j], *template.left_rails[i], template.left_endpoints[i]]
        )
        coeffs = np.concatenate([fwd.coeffs, right_conn, rev.coeffs, left_conn])
        t = np.concatenate(
            [fwd.t, np.tile([0.0, 1.0], (3, 1)), rev.t, np.tile([0.0, 1.0], (3, 1))]
        )
        loops.append(LoopGeometry(coeffs, t, closed=True))
    excluded = frozenset(
        (min(i, (i + 1) % L), max(i, (i + 1) % L)) for i in range(L)
    )
    return CurveModel(loops), excluded


def reclose_braid(braid: BraidModel, template: ClosureTemplate):
    """Close a deformed braid with the template's connection paths.

    The deformed end volumes must be rigid transforms of the template's;
    rails are carried through the fitted transform so connections cannot
    pull through each other between verifications.
    """
    L = len(braid.curves)
    if L != template.num_curves:
        raise BraidError("curve count differs from the closure template")
    left_pts = np.array([c.start_points()[0] for c in braid.curves])
    right_pts = np.array([c.end_points()[-1] for c in braid.curves])
    new = ClosureTemplate(
        L,
        left_pts,
        right_pts,
        _apply_rigid(_fit_rigid(template.left_endpoints, left_pts), template.left_rails),
        _apply_rigid(_fit_rigid(template.right_endpoints, right_pts), template.right_rails),
    )
    model, excluded = _assemble(braid, new)
    return model


def _fit_rigid(src, dst, rel_tol=1e-6):
    """Best rigid transform src -> dst; error when the fit is not rigid."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    sc = src.mean(axis=0)
    dc = dst.mean(axis=0)
    h = (src - sc).T @ (dst - dc)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    shift = dc - rot @ sc
    scale = max(float(np.max(np.linalg.norm(src - sc, axis=1))), 1e-30)
    resid = float(np.max(np.linalg.norm(dst - (src @ rot.T + shift), axis=1)))
    if resid > rel_tol * scale:
        raise BraidError(
            f"end volumes are not rigidly related (residual {resid:.3e})"
        )
    return rot, shift


def _apply_rigid(transform, points):
    rot, shift = transform
    return points @ rot.T + shift


def braid_from_dict(doc) -> BraidModel:
    """Build a BraidModel from a json-curves document with a "braid" block."""
    from .model_io import ParseError, model_from_dict

    if "braid" not in doc:
        raise ParseError("braid models need a top-level 'braid' object")
    meta = doc["braid"]
    model = model_from_dict(doc)
    try:
        left = Aabb(*(np.asarray(meta["left_volume"][k], float) for k in (0, 1)))
        right = Aabb(*(np.asarray(meta["right_volume"][k], float) for k in (0, 1)))
        axes = meta["axes"]
        return BraidModel(model.loops, left, right, axes[0], axes[1])
    except (KeyError, IndexError, TypeError) as exc:
        raise ParseError(f"bad braid block: {exc}") from exc
