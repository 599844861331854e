import numpy as np
import pytest

from linkcert import ValidationError, compute_linking_matrix, model_digest
from linkcert.generators import (
    ScenarioSpec,
    double_helix_ribbon,
    generate,
    hopf,
    perturbed_random_link,
    square_link_grid,
    torus_link,
    unlinked_circles,
    woundball,
)

ALL_SMALL = [
    (hopf, {}),
    (unlinked_circles, {"count": 6, "n": 16}),
    (torus_link, {"T": 2, "P": 3, "n": 160}),
    (double_helix_ribbon, {"lam": 3, "n": 500}),
    (square_link_grid, {"L": 4}),
    (woundball, {"nu": 3}),
    (perturbed_random_link, {"seed": 2, "n": 128}),
]


@pytest.mark.parametrize("builder,params", ALL_SMALL)
def test_expected_certificate_is_consistent(builder, params):
    model, expected = builder(**params)
    assert expected.num_loops == model.num_loops
    assert expected.model_digest == model_digest(model)
    computed = compute_linking_matrix(model)
    assert computed.entries == expected.entries


def test_structural_expectations():
    _, e = hopf()
    assert e.entries == ((0, 1, 1),)
    _, e = unlinked_circles(9)
    assert e.entries == ()
    _, e = torus_link(3, 5)
    assert e.entries == ((0, 1, 15),)
    _, e = double_helix_ribbon(7, 900)
    assert e.entries == ((0, 1, 7),)
    model, e = square_link_grid(6)
    assert model.num_loops == 3 * 4
    assert len(e.entries) == 9
    assert all(lam == 1 for _, _, lam in e.entries)
    _, e = woundball(4)
    assert e.entries == ()


def test_validation_errors():
    with pytest.raises(ValidationError):
        torus_link(0, 2)
    with pytest.raises(ValidationError):
        double_helix_ribbon(0)
    with pytest.raises(ValidationError):
        double_helix_ribbon(5, 500, axis_radius=1.0, tube_radius=0.5)
    with pytest.raises(ValidationError):
        square_link_grid(5)
    with pytest.raises(ValidationError):
        perturbed_random_link(jitter=0.2)
    with pytest.raises(ValidationError):
        woundball(0)


def test_perturbed_link_seeds():
    m1, e1 = perturbed_random_link(seed=1, n=96)
    m2, e2 = perturbed_random_link(seed=2, n=96)
    assert model_digest(m1) != model_digest(m2)
    assert e1.entries == e2.entries == ((0, 1, 6),)
    # The perturbation must keep the two curves well separated.
    a = m1.loops[0].start_points()
    b = m1.loops[1].start_points()
    dmin = np.min(np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2))
    assert dmin > 0.1


def test_perturbed_spline_variant():
    model, expected = perturbed_random_link(seed=0, n=64, spline=True)
    assert not model.loops[0].is_polyline
    assert expected.entries == ((0, 1, 6),)


def test_generate_dispatch():
    model, expected = generate(ScenarioSpec("Hopf", {"n": 32}))
    assert model.num_loops == 2
    assert expected.entries == ((0, 1, 1),)
    with pytest.raises(ValidationError):
        generate(ScenarioSpec("Klein"))
