"""Synthetic scenario builders with analytically known linking structure.

Every builder returns (CurveModel, expected LinkMatrix). Orientations are
fixed so expected entries are positive where a canonical sign exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certify import LinkMatrix
from .geometry import CurveModel, LoopGeometry, ValidationError
from .model_io import model_digest

EXPECTED_TAG = "expected"

HOPF = "Hopf"
UNLINKED_CIRCLES = "UnlinkedCircles"
TORUS_LINK = "TorusLink"
DOUBLE_HELIX_RIBBON = "DoubleHelixRibbon"
SQUARE_LINK_GRID = "SquareLinkGrid"
WOUNDBALL = "Woundball"
PERTURBED_RANDOM_LINK = "PerturbedRandomLink"


def _circle(n, center, u, v, radius=1.0):
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return (
        np.asarray(center, dtype=float)
        + radius * np.outer(np.cos(t), u)
        + radius * np.outer(np.sin(t), v)
    )


def _expected(model, entries):
    return LinkMatrix(
        num_loops=model.num_loops,
        entries=tuple(sorted(entries)),
        model_digest=model_digest(model),
        kernel_tag=EXPECTED_TAG,
    )


def _finish(loops_pts, entries):
    model = CurveModel([LoopGeometry.from_polyline(p) for p in loops_pts])
    return model, _expected(model, entries)


def hopf(n=64):
    """Two interlocked circles in orthogonal planes, linking number +1."""
    ex, ey, ez = np.eye(3)
    a = _circle(n, (0.0, 0.0, 0.0), ex, ey)
    b = _circle(n, (1.0, 0.0, 0.0), ez, ex)
    return _finish([a, b], [(0, 1, 1)])


def unlinked_circles(count=16, n=32):
    """Disjoint parallel circles laid out on a plane grid; empty matrix."""
    ex, ey, _ = np.eye(3)
    cols = int(math.ceil(math.sqrt(count)))
    loops = [
        _circle(n, (20.0 * (k % cols), 20.0 * (k // cols), 0.0), ex, ey)
        for k in range(count)
    ]
    return _finish(loops, [])


def _torus_pair(T, P, n, big_radius=2.0, tube_radius=0.5):
    """Core circle traversed T times and a P-times poloidal winder."""
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    ang = 2.0 * math.pi * T * t
    core = np.stack(
        [big_radius * np.cos(ang), big_radius * np.sin(ang), np.zeros(n)], axis=1
    )
    tor = 2.0 * math.pi * t
    pol = 2.0 * math.pi * P * t
    rad = big_radius + tube_radius * np.cos(pol)
    # Negative z component orients the pair so the linking number is +T*P.
    winder = np.stack(
        [rad * np.cos(tor), rad * np.sin(tor), -tube_radius * np.sin(pol)], axis=1
    )
    return core, winder


def torus_link(T=1, P=1, n=256):
    """Torus link pair with linking number T * P."""
    if T < 1 or P < 1:
        raise ValidationError("T and P must be positive")
    core, winder = _torus_pair(T, P, n)
    return _finish([core, winder], [(0, 1, T * P)])


def double_helix_ribbon(lam=10, n=2000, axis_radius=10.0, tube_radius=1.0):
    """Two closed helices twisting lam times about a circular axis."""
    if lam < 1:
        raise ValidationError("lam must be positive")
    if tube_radius > 0.1 * axis_radius:
        raise ValidationError("tube radius must be <= 0.1 x axis radius")
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    tor = 2.0 * math.pi * t
    twist = 2.0 * math.pi * lam * t
    loops = []
    for phase in (0.0, math.pi):
        rad = axis_radius + tube_radius * np.cos(twist + phase)
        # Negative z picks the twist handedness whose linking number is +lam.
        loops.append(
            np.stack(
                [rad * np.cos(tor), rad * np.sin(tor), -tube_radius * np.sin(twist + phase)],
                axis=1,
            )
        )
    return _finish(loops, [(0, 1, lam)])


def square_link_grid(L=10, n=24, radius=1.0, spacing=1.2, row_gap=8.0):
    """Chain-link grid: L/2 chains of L/2 + 1 rings -> L^2/4 links of +1.

    Rings alternate between the xy and xz plane along each chain; interior
    rings interlock with exactly two neighbors.
    """
    if L < 2 or L % 2:
        raise ValidationError("L must be a positive even integer")
    ex, ey, ez = np.eye(3)
    half = L // 2
    loops = []
    entries = []
    for row in range(half):
        base = len(loops)
        y = row * row_gap
        for k in range(half + 1):
            center = (k * spacing, y, 0.0)
            if k % 2 == 0:
                ring = _circle(n, center, ex, ey, radius)
            else:
                ring = _circle(n, center, ez, ex, radius)
            # Reversing every other ring pair makes all links come out +1.
            if k % 4 in (2, 3):
                ring = ring[::-1].copy()
            loops.append(ring)
            if k:
                entries.append((base + k - 1, base + k, 1))
    return _finish(loops, entries)


def woundball(nu=8, n=None, radii=(1.0, 2.0), polar_margin=0.1):
    """Two concentric spherical winding curves; nothing links."""
    if nu < 1:
        raise ValidationError("nu must be positive")
    if n is None:
        n = max(64, 48 * nu)
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    loops = []
    for which, r in enumerate(radii):
        polar = 0.5 * math.pi - (0.5 * math.pi - polar_margin) * np.cos(
            2.0 * math.pi * nu * t + 0.5 * math.pi * which
        )
        azim = 2.0 * math.pi * t
        loops.append(
            np.stack(
                [
                    r * np.sin(polar) * np.cos(azim),
                    r * np.sin(polar) * np.sin(azim),
                    r * np.cos(polar),
                ],
                axis=1,
            )
        )
    return _finish(loops, [])


def _smooth_jitter(rng, n, amplitude, modes=5):
    """Band-limited periodic displacement field with bounded amplitude."""
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    out = np.zeros((n, 3))
    for k in range(1, modes + 1):
        a = rng.normal(size=3)
        b = rng.normal(size=3)
        out += np.outer(np.cos(2.0 * math.pi * k * t), a)
        out += np.outer(np.sin(2.0 * math.pi * k * t), b)
    peak = float(np.max(np.linalg.norm(out, axis=1)))
    return out * (amplitude / peak) if peak else out


def perturbed_random_link(T=2, P=3, n=256, seed=0, jitter=None, spline=False):
    """Torus link with seeded smooth jitter too small to change topology.

    The clearance between the core and the winder is the tube radius (0.5);
    jitter defaults to an amplitude safely under a quarter of it per loop.
    """
    tube_radius = 0.5  # also the clearance between the two curves
    if jitter is None:
        jitter = 0.1 * tube_radius
    if not 0.0 <= jitter < 0.25 * tube_radius:
        raise ValidationError("jitter must stay under a quarter of the clearance")
    rng = np.random.default_rng(np.uint64(seed))
    core, winder = _torus_pair(T, P, n, tube_radius=tube_radius)
    pts = [
        core + _smooth_jitter(rng, n, jitter),
        winder + _smooth_jitter(rng, n, jitter),
    ]
    if spline:
        model = CurveModel([LoopGeometry.from_catmull_rom(p) for p in pts])
        return model, _expected(model, [(0, 1, T * P)])
    return _finish(pts, [(0, 1, T * P)])


@dataclass
class ScenarioSpec:
    kind: str
    parameters: dict = field(default_factory=dict)


_BUILDERS = {
    HOPF: hopf,
    UNLINKED_CIRCLES: unlinked_circles,
    TORUS_LINK: torus_link,
    DOUBLE_HELIX_RIBBON: double_helix_ribbon,
    SQUARE_LINK_GRID: square_link_grid,
    WOUNDBALL: woundball,
    PERTURBED_RANDOM_LINK: perturbed_random_link,
}


def generate(spec: ScenarioSpec):
    """Build (model, expected matrix) for a scenario spec."""
    try:
        builder = _BUILDERS[spec.kind]
    except KeyError:
        raise ValidationError(f"unknown scenario kind {spec.kind!r}") from None
    return builder(**spec.parameters)
