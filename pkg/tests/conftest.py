"""Shared fixtures: simple analytic curves and synthetic braid builders."""

import math

import numpy as np
import pytest

from linkcert import Aabb, BraidModel, LoopGeometry


def circle_points(n, center=(0.0, 0.0, 0.0), u=(1.0, 0.0, 0.0), v=(0.0, 1.0, 0.0), radius=1.0):
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return (
        np.asarray(center, dtype=float)
        + radius * np.outer(np.cos(t), np.asarray(u, dtype=float))
        + radius * np.outer(np.sin(t), np.asarray(v, dtype=float))
    )


@pytest.fixture
def circle():
    return circle_points


def make_braid(L=6, wrap=None):
    """Straight strands along y in [0, 10] at x = 0..L-1, z = 0.

    `wrap=(a, b)` reroutes strand a so it winds once around strand b at
    mid-height, staying clear of every other strand.
    """
    strands = []
    for i in range(L):
        if wrap is not None and i == wrap[0]:
            a, b = (float(w) for w in wrap)
            pts = [
                (a, 0.0, 0.0), (a, 2.0, 0.0), (a, 3.0, 0.0),
                (a, 3.5, 0.8), (b, 4.2, 0.8),
                (b + 0.5, 4.6, 0.3), (b, 5.0, -0.5), (b - 0.5, 5.4, 0.3),
                (b, 5.8, 0.8),
                (a, 6.5, 0.8), (a, 7.0, 0.0), (a, 8.0, 0.0), (a, 10.0, 0.0),
            ]
        else:
            x = float(i)
            pts = [(x, 0.0, 0.0), (x, 2.0, 0.0), (x, 5.0, 0.0), (x, 8.0, 0.0), (x, 10.0, 0.0)]
        strands.append(LoopGeometry.from_polyline(np.array(pts, dtype=float), closed=False))
    left = Aabb((-1.0, -1.0, -1.0), (float(L), 0.5, 1.0))
    right = Aabb((-1.0, 9.5, -1.0), (float(L), 11.0, 1.0))
    return BraidModel(strands, left, right, (0.0, -1.0, 0.0), (0.0, 1.0, 0.0))


@pytest.fixture
def braid_factory():
    return make_braid
