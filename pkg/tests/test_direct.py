import math

import numpy as np
import pytest

from linkcert import link_direct, segment_pair_lambda
from conftest import circle_points


def _quadrature_pair(p0, p1, q0, q1, n=1024):
    """Midpoint-rule evaluation of the Gauss integrand over two segments."""
    d1 = p1 - p0
    d2 = q1 - q0
    s = (np.arange(n) + 0.5) / n
    x = p0 + np.outer(s, d1)
    y = q0 + np.outer(s, d2)
    r = x[:, None, :] - y[None, :, :]
    dist = np.linalg.norm(r, axis=2)
    num = np.einsum("k,ijk->ij", np.cross(d1, d2), r)
    return float(np.sum(num / dist**3)) / (4.0 * math.pi * n * n)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_segment_pair_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    p0, p1 = rng.normal(size=(2, 3))
    q0, q1 = rng.normal(size=(2, 3)) + np.array([4.0, 0.0, 0.0])
    got = segment_pair_lambda(p0, p1, q0, q1)
    want = _quadrature_pair(p0, p1, q0, q1)
    assert got == pytest.approx(want, abs=1e-6)


def test_hopf_polyline_is_exactly_one():
    a = circle_points(100)
    b = circle_points(100, center=(1.0, 0.0, 0.0), u=(0.0, 0.0, 1.0), v=(1.0, 0.0, 0.0))
    lam = link_direct(a, b)
    assert lam == pytest.approx(1.0, abs=1e-12)


def test_swap_and_flip_symmetries():
    a = circle_points(64)
    b = circle_points(64, center=(1.0, 0.0, 0.0), u=(0.0, 0.0, 1.0), v=(1.0, 0.0, 0.0))
    assert link_direct(a, b) == pytest.approx(link_direct(b, a), abs=1e-12)
    assert link_direct(a[::-1].copy(), b) == pytest.approx(-link_direct(a, b), abs=1e-12)
    assert link_direct(a, b[::-1].copy()) == pytest.approx(-link_direct(a, b), abs=1e-12)


def test_unlinked_coplanar_loops_are_zero():
    a = circle_points(48)
    b = circle_points(48, center=(5.0, 0.0, 0.0))
    assert link_direct(a, b) == pytest.approx(0.0, abs=1e-13)


def test_variants_agree():
    from linkcert.generators import torus_link

    model, _ = torus_link(2, 3, n=300)
    a = model.loops[0].start_points()
    b = model.loops[1].start_points()
    atan = link_direct(a, b, "atan")
    anglesum = link_direct(a, b, "anglesum")
    assert atan == pytest.approx(6.0, abs=1e-10)
    assert anglesum == pytest.approx(atan, abs=1e-9)


def test_unknown_variant_rejected():
    a = circle_points(8)
    with pytest.raises(ValueError):
        link_direct(a, a + [0.0, 0.0, 5.0], variant="simpson")


def test_accepts_polyline_loop_objects():
    from linkcert import PolylineLoop

    a = PolylineLoop(circle_points(32))
    b = PolylineLoop(
        circle_points(32, center=(1.0, 0.0, 0.0), u=(0.0, 0.0, 1.0), v=(1.0, 0.0, 0.0))
    )
    assert link_direct(a, b) == pytest.approx(1.0, abs=1e-12)
