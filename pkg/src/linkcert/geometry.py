"""Curve and loop representations: monomial cubic segments, loops, boxes.

Everything is double precision. Straight segments are normalized to
monomial cubics with zero quadratic/cubic coefficients so that splitting,
tight bounding boxes and chord conversion are uniform across segment kinds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MACHINE_EPS = np.finfo(np.float64).eps

# Absolute endpoint-continuity tolerance, scaled by the model's average
# coordinate magnitude.
CONTINUITY_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when input geometry violates a structural invariant."""


def _as_vec3(p, name="point"):
    v = np.asarray(p, dtype=np.float64)
    if v.shape != (3,):
        raise ValidationError(f"{name} must have 3 components, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite components: {v}")
    return v


@dataclass(frozen=True)
class CubicSegment:
    """p(t) = a0 + a1 t + a2 t^2 + a3 t^3 over [t_lo, t_hi] with 0 <= t_lo < t_hi <= 1."""

    coeffs: np.ndarray  # (4, 3) monomial coefficients a0..a3
    t_lo: float = 0.0
    t_hi: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.shape != (4, 3):
            raise ValidationError(f"cubic coeffs must be (4, 3), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValidationError("cubic coefficients must be finite")
        object.__setattr__(self, "coeffs", c)
        if not (0.0 <= self.t_lo < self.t_hi <= 1.0):
            raise ValidationError(f"bad parameter domain [{self.t_lo}, {self.t_hi}]")

    def point(self, t):
        t = np.asarray(t, dtype=np.float64)
        a0, a1, a2, a3 = self.coeffs
        return (
            a0
            + np.multiply.outer(t, a1)
            + np.multiply.outer(t * t, a2)
            + np.multiply.outer(t * t * t, a3)
        )

    @property
    def start(self):
        return self.point(self.t_lo)

    @property
    def end(self):
        return self.point(self.t_hi)

    @staticmethod
    def straight(p, q):
        p = _as_vec3(p)
        q = _as_vec3(q)
        z = np.zeros(3)
        return CubicSegment(np.array([p, q - p, z, z]))


@dataclass(frozen=True)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = _as_vec3(self.min, "box min")
        hi = _as_vec3(self.max, "box max")
        if np.any(lo > hi):
            raise ValidationError(f"box min {lo} exceeds max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def overlaps(self, other):
        return bool(np.all(self.min <= other.max) and np.all(other.min <= self.max))

    def contains(self, p, slack=0.0):
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(p >= self.min - slack) and np.all(p <= self.max + slack))

    @property
    def diameter(self):
        return float(np.linalg.norm(self.max - self.min))

    @property
    def center(self):
        return 0.5 * (self.min + self.max)


def eval_cubics(coeffs, t):
    """Evaluate (m, 4, 3) monomial coefficient array at parameters t (m,)."""
    t = np.asarray(t, dtype=np.float64)[:, None]
    return coeffs[:, 0] + coeffs[:, 1] * t + coeffs[:, 2] * t * t + coeffs[:, 3] * t**3


def tight_boxes(coeffs, t_lo, t_hi):
    """Tight axis-aligned boxes of monomial cubics over their domains.

    Per axis the extrema lie at the domain endpoints or at real roots of the
    derivative quadratic 3 a3 t^2 + 2 a2 t + a1 inside the domain.
    Vectorized over m segments; returns (lo, hi) each (m, 3).
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    t_lo = np.asarray(t_lo, dtype=np.float64)
    t_hi = np.asarray(t_hi, dtype=np.float64)
    m = coeffs.shape[0]
    # Candidate parameters per segment/axis: endpoints plus two derivative roots.
    cand = np.empty((m, 3, 4))
    cand[:, :, 0] = t_lo[:, None]
    cand[:, :, 1] = t_hi[:, None]
    a1 = coeffs[:, 1]
    a2 = coeffs[:, 2]
    a3 = coeffs[:, 3]
    qa = 3.0 * a3
    qb = 2.0 * a2
    qc = a1
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        disc = qb * qb - 4.0 * qa * qc
        sq = np.sqrt(np.maximum(disc, 0.0))
        # Stable quadratic roots: r1 = q / qa, r2 = qc / q with
        # q = -(qb + sign(qb) sq) / 2 avoids cancellation when qa is tiny,
        # and r2 degenerates to the linear root when qa is exactly zero.
        q = -0.5 * (qb + np.copysign(sq, qb))
        r1 = np.where((qa != 0.0) & (disc >= 0.0), q / np.where(qa != 0.0, qa, 1.0), np.nan)
        r2 = np.where((q != 0.0) & (disc >= 0.0), qc / np.where(q != 0.0, q, 1.0), np.nan)
    cand[:, :, 2] = np.where(np.isnan(r1), t_lo[:, None], np.clip(r1, t_lo[:, None], t_hi[:, None]))
    cand[:, :, 3] = np.where(np.isnan(r2), t_lo[:, None], np.clip(r2, t_lo[:, None], t_hi[:, None]))
    a0 = coeffs[:, 0][:, :, None]
    vals = (
        a0
        + coeffs[:, 1][:, :, None] * cand
        + coeffs[:, 2][:, :, None] * cand * cand
        + coeffs[:, 3][:, :, None] * cand**3
    )
    return vals.min(axis=2), vals.max(axis=2)


def tight_aabb_of_cubic(seg: CubicSegment) -> Aabb:
    lo, hi = tight_boxes(seg.coeffs[None], np.array([seg.t_lo]), np.array([seg.t_hi]))
    return Aabb(lo[0], hi[0])


def split_cubic(seg: CubicSegment):
    """Split the parameter domain in halves, keeping the same coefficients."""
    mid = 0.5 * (seg.t_lo + seg.t_hi)
    return (
        CubicSegment(seg.coeffs, seg.t_lo, mid),
        CubicSegment(seg.coeffs, mid, seg.t_hi),
    )


def catmull_rom_to_cubics(control_points) -> list[CubicSegment]:
    """Closed uniform Catmull-Rom cycle (tension 0.5) to monomial cubics.

    One segment per control point; the chain is C1 and interpolates the
    control points at segment endpoints.
    """
    pts = np.asarray(control_points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError("control points must be an (n, 3) array")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("control points must be finite")
    n = len(pts)
    if n < 4:
        raise ValidationError(f"need at least 4 control points, got {n}")
    if np.any(np.all(pts == np.roll(pts, -1, axis=0), axis=1)):
        raise ValidationError("duplicate adjacent control points (zero tangent)")
    coeffs = catmull_rom_coeffs(pts)
    return [CubicSegment(c) for c in coeffs]


def catmull_rom_coeffs(pts):
    """Monomial coefficients (n, 4, 3) for a closed uniform Catmull-Rom cycle."""
    pts = np.asarray(pts, dtype=np.float64)
    prev = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    nxt2 = np.roll(pts, -2, axis=0)
    m0 = 0.5 * (nxt - prev)
    m1 = 0.5 * (nxt2 - pts)
    p0, p1 = pts, nxt
    coeffs = np.empty((len(pts), 4, 3))
    coeffs[:, 0] = p0
    coeffs[:, 1] = m0
    coeffs[:, 2] = -3.0 * p0 + 3.0 * p1 - 2.0 * m0 - m1
    coeffs[:, 3] = 2.0 * p0 - 2.0 * p1 + m0 + m1
    return coeffs


class LoopGeometry:
    """An ordered chain of cubic segments, optionally closed.

    Stored as arrays: coeffs (m, 4, 3) and domains t (m, 2). Control points
    used for the model's coordinate-magnitude estimate are kept separately.
    """

    def __init__(self, coeffs, t=None, closed=True, control_points=None, xi_hint=None):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.ndim != 3 or coeffs.shape[1:] != (4, 3):
            raise ValidationError("loop coeffs must be (m, 4, 3)")
        if not np.all(np.isfinite(coeffs)):
            raise ValidationError("loop has non-finite coefficients")
        m = coeffs.shape[0]
        if t is None:
            t = np.tile(np.array([0.0, 1.0]), (m, 1))
        t = np.asarray(t, dtype=np.float64)
        if t.shape != (m, 2) or np.any(t[:, 0] >= t[:, 1]):
            raise ValidationError("bad segment parameter domains")
        self.coeffs = coeffs
        self.t = t
        self.closed = bool(closed)
        if control_points is None:
            control_points = self.start_points()
        self.control_points = np.asarray(control_points, dtype=np.float64)
        if closed and m < 3:
            raise ValidationError(f"closed loop needs >= 3 segments, got {m}")
        starts = self.start_points()
        ends = self.end_points()
        if xi_hint is None:
            xi_hint = float(np.mean(np.abs(self.control_points))) or 1.0
        tol = CONTINUITY_TOL * xi_hint
        if closed:
            gaps = np.linalg.norm(ends - np.roll(starts, -1, axis=0), axis=1)
        else:
            gaps = np.linalg.norm(ends[:-1] - starts[1:], axis=1)
        if gaps.size and float(gaps.max()) > tol:
            raise ValidationError(
                f"consecutive segments do not share endpoints (max gap {gaps.max():.3e})"
            )

    def __len__(self):
        return self.coeffs.shape[0]

    def start_points(self):
        return eval_cubics(self.coeffs, self.t[:, 0])

    def end_points(self):
        return eval_cubics(self.coeffs, self.t[:, 1])

    @property
    def is_polyline(self):
        return not np.any(self.coeffs[:, 2:])

    def boxes(self):
        return tight_boxes(self.coeffs, self.t[:, 0], self.t[:, 1])

    def aabb(self) -> Aabb:
        lo, hi = self.boxes()
        return Aabb(lo.min(axis=0), hi.max(axis=0))

    @staticmethod
    def from_polyline(vertices, closed=True):
        verts = np.asarray(vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValidationError("polyline vertices must be (n, 3)")
        if not np.all(np.isfinite(verts)):
            raise ValidationError("polyline has non-finite vertices")
        if closed:
            starts, ends = verts, np.roll(verts, -1, axis=0)
        else:
            starts, ends = verts[:-1], verts[1:]
        m = len(starts)
        coeffs = np.zeros((m, 4, 3))
        coeffs[:, 0] = starts
        coeffs[:, 1] = ends - starts
        return LoopGeometry(coeffs, closed=closed, control_points=verts)

    @staticmethod
    def from_segments(segments, closed=True):
        coeffs = np.stack([s.coeffs for s in segments])
        t = np.array([[s.t_lo, s.t_hi] for s in segments])
        return LoopGeometry(coeffs, t, closed=closed)

    @staticmethod
    def from_catmull_rom(control_points):
        pts = np.asarray(control_points, dtype=np.float64)
        segs = catmull_rom_to_cubics(pts)
        loop = LoopGeometry.from_segments(segs, closed=True)
        loop.control_points = pts
        return loop


@dataclass
class CurveModel:
    loops: list[LoopGeometry] = field(default_factory=list)
    xi: float = 0.0

    def __post_init__(self):
        if self.loops and self.xi == 0.0:
            self.xi = compute_xi(self.loops)
        if self.loops and not self.xi > 0.0:
            raise ValidationError("model coordinate magnitude must be positive")

    @property
    def num_loops(self):
        return len(self.loops)


def compute_xi(loops):
    """Average coordinate magnitude over all control points."""
    total = 0.0
    count = 0
    for loop in loops:
        pts = loop.control_points
        total += float(np.sum(np.abs(pts)))
        count += pts.size
    return total / count if count else 0.0


class PolylineLoop:
    """Closed vertex cycle; segment i runs vertex i -> vertex i+1, wrapping."""

    def __init__(self, vertices, xi_hint=None):
        verts = np.ascontiguousarray(vertices, dtype=np.float64)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValidationError("vertices must be (n, 3)")
        if len(verts) < 3:
            raise ValidationError("closed polyline needs >= 3 vertices")
        if not np.all(np.isfinite(verts)):
            raise ValidationError("polyline has non-finite vertices")
        seglen = np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)
        scale = xi_hint if xi_hint else float(np.mean(np.abs(verts))) or 1.0
        if float(seglen.min()) <= MACHINE_EPS * scale:
            raise ValidationError("polyline has a zero-length segment")
        self.vertices = verts

    def __len__(self):
        return len(self.vertices)

    @property
    def closed_vertices(self):
        """Vertices with the first one repeated at the end."""
        return np.vstack([self.vertices, self.vertices[:1]])

    def reversed(self):
        return PolylineLoop(self.vertices[::-1].copy())

    def total_length(self):
        return float(
            np.sum(np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1))
        )

    def aabb(self) -> Aabb:
        return Aabb(self.vertices.min(axis=0), self.vertices.max(axis=0))
