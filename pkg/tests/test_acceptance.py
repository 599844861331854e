"""End-to-end acceptance checks: exactness, accuracy, scaling, robustness.

The heavyweight double-helix-ribbon measurements are shared through a
module-scoped fixture so each expensive kernel run happens once.
"""

import os
import time

import numpy as np
import pytest

from linkcert import (
    BarnesHutParams,
    CrossingParams,
    CurveModel,
    DiscretizationError,
    KernelChoice,
    LoopGeometry,
    barnes_hut_detailed,
    build_moment_tree,
    compute_link,
    compute_linking_matrix,
    discretize,
    link_count_crossings,
    link_direct,
    potential_link_search,
    serialize_matrix,
    verify,
)
from linkcert.certify import ABORTED, FAIL, PASS
from linkcert.discretize import CURVES_INTERSECT
from linkcert.geometry import eval_cubics
from linkcert.pls import PairList
from linkcert import generators
from conftest import circle_points, make_braid

ALL_KERNELS = ["cc", "ds", "bh"]

SMALL_SCENARIOS = {
    "hopf": generators.hopf(),
    "unlinked": generators.unlinked_circles(6, 16),
    "torus23": generators.torus_link(2, 3, n=160),
    "ribbon3": generators.double_helix_ribbon(3, 500),
    "grid4": generators.square_link_grid(4),
    "woundball": generators.woundball(3),
    "perturbed": generators.perturbed_random_link(seed=2, n=128),
}


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    """Pay the JIT compilation cost before any timed assertion."""
    model, _ = generators.hopf(16)
    for method in ALL_KERNELS:
        compute_linking_matrix(model, KernelChoice(method=method))


@pytest.fixture(scope="module")
def ribbon20k():
    model, _ = generators.double_helix_ribbon(10, 20000)
    verts = [loop.start_points() for loop in model.loops]
    out = {"verts": verts}
    t0 = time.perf_counter()
    out["ds_raw"] = link_direct(verts[0], verts[1])
    out["ds_time"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    trees = [build_moment_tree(v) for v in verts]
    out["bh_raw"] = barnes_hut_detailed(*trees).value
    out["bh_time"] = time.perf_counter() - t0
    out["trees"] = trees
    t0 = time.perf_counter()
    out["cc"] = link_count_crossings(verts[0], verts[1])
    out["cc_time"] = time.perf_counter() - t0
    return out


# --- exact results on small models -----------------------------------------

def test_exact_small_links_under_time_budget():
    cases = [generators.hopf(), generators.unlinked_circles(6, 16)]
    cases += [generators.torus_link(T, P, n=2000) for T, P in
              [(1, 1), (2, 3), (3, 5), (10, 10)]]
    t0 = time.perf_counter()
    for model, expected in cases:
        for method in ALL_KERNELS:
            matrix = compute_linking_matrix(model, KernelChoice(method=method))
            assert matrix.entries == expected.entries
    assert time.perf_counter() - t0 < 5.0


# --- ribbon accuracy and stress ---------------------------------------------

def test_ribbon_accuracy_at_20k_segments(ribbon20k):
    assert abs(ribbon20k["ds_raw"] - 10.0) < 1e-9
    assert abs(ribbon20k["bh_raw"] - 10.0) < 1e-2
    assert ribbon20k["cc"] == 10
    assert ribbon20k["ds_time"] + ribbon20k["bh_time"] + ribbon20k["cc_time"] < 30.0


def test_ribbon_high_twist_stress():
    model, _ = generators.double_helix_ribbon(1000, 20000)
    verts = [loop.start_points() for loop in model.loops]
    diag = {}
    lam = compute_link(verts[0], verts[1], KernelChoice(method="bh"), diag)
    assert abs(diag["raw"] - 1000.0) < 0.25
    assert lam == 1000


# --- fixed-opening-parameter error scaling ----------------------------------

def _beta_sweep_slope(trees, order):
    betas = [2.0, 3.0, 4.0, 6.0, 8.0]
    errs = [
        abs(
            barnes_hut_detailed(
                *trees,
                BarnesHutParams(beta_init=b, beta_max=b, order=order, adaptive=False),
            ).value
            - 10.0
        )
        for b in betas
    ]
    return float(np.polyfit(np.log(betas), np.log(errs), 1)[0])


def test_beta_scaling_quadrupole(ribbon20k):
    slope = _beta_sweep_slope(ribbon20k["trees"], "quadrupole")
    assert -4.8 <= slope <= -3.2, f"quadrupole error slope {slope:.2f} not within -4 +/- 0.8"


def test_beta_scaling_dipole(ribbon20k):
    slope = _beta_sweep_slope(ribbon20k["trees"], "dipole")
    assert -3.8 <= slope <= -2.2, f"dipole error slope {slope:.2f} not within -3 +/- 0.8"


# --- grid certificate, diff and early exit ----------------------------------

def test_grid_certificate_and_pull_through_diff():
    t0 = time.perf_counter()
    model, expected = generators.square_link_grid(20)
    matrix = compute_linking_matrix(model)
    assert len(matrix.entries) == 100
    assert all(abs(lam) == 1 for _, _, lam in matrix.entries)
    assert matrix.entries == expected.entries

    # Pull one interior ring out of both of its neighbors.
    loops = list(model.loops)
    loops[2] = LoopGeometry.from_polyline(loops[2].start_points() + [0.0, 0.0, 100.0])
    broken = CurveModel(loops)
    with pytest.warns(UserWarning):
        report = verify(broken, matrix)
    assert report.status == FAIL
    assert report.destroyed == [(1, 2), (2, 3)]
    assert report.created == [] and report.changed == []

    with pytest.warns(UserWarning):
        aborted = verify(broken, matrix, early_exit=True)
    assert aborted.status == ABORTED
    assert aborted.first_failure in {(1, 2), (2, 3)}
    assert time.perf_counter() - t0 < 10.0


# --- adaptive discretization matches uniform refinement ----------------------

def _uniform_chords(loop, k=8):
    cols = []
    for f in np.arange(k) / k:
        ts = loop.t[:, 0] + (loop.t[:, 1] - loop.t[:, 0]) * f
        cols.append(eval_cubics(loop.coeffs, ts))
    return np.stack(cols, axis=1).reshape(-1, 3)


def test_adaptive_discretization_matches_uniform_refinement():
    for seed in range(100):
        model, _ = generators.perturbed_random_link(T=2, P=3, n=128, seed=seed, spline=True)
        pairs = potential_link_search(model)
        polys = discretize(model, pairs)  # must never report an intersection
        adaptive = round(link_direct(polys[0], polys[1]))
        uniform = round(
            link_direct(_uniform_chords(model.loops[0]), _uniform_chords(model.loops[1]))
        )
        assert adaptive == uniform == 6, f"seed {seed}"


def test_intersecting_curves_reported_with_pair():
    a = LoopGeometry.from_catmull_rom(circle_points(16))
    b = LoopGeometry.from_catmull_rom(
        circle_points(16, center=(1.0, 0.0, 0.0), u=(0.0, 0.0, 1.0), v=(1.0, 0.0, 0.0))
    )
    c = LoopGeometry.from_catmull_rom(
        circle_points(16, center=(1.0, 0.0, 0.0), u=(0.0, 0.0, 1.0), v=(0.0, 1.0, 0.0))
    )
    model = CurveModel([a, b, c])
    with pytest.raises(DiscretizationError) as err:
        # Default budget of 64 passes must be enough to reach the verdict.
        discretize(model, PairList(((0, 1), (0, 2), (1, 2))))
    assert err.value.kind == CURVES_INTERSECT
    assert err.value.loops == (1, 2)


# --- crossing-counter robustness ---------------------------------------------

def test_crossing_counter_repeats_identically():
    model, _ = generators.square_link_grid(10)
    pairs = potential_link_search(model)
    polys = discretize(model, pairs)
    reference = None
    for run in range(5000):
        entries = tuple(
            (i, j, link_count_crossings(polys[i], polys[j], CrossingParams(seed=run)))
            for i, j in pairs
        )
        if reference is None:
            reference = entries
        assert entries == reference


# --- cross-kernel property suite ----------------------------------------------

@pytest.mark.parametrize("name", sorted(SMALL_SCENARIOS))
@pytest.mark.parametrize("method", ALL_KERNELS)
def test_every_kernel_reproduces_expected(name, method):
    model, expected = SMALL_SCENARIOS[name]
    matrix = compute_linking_matrix(model, KernelChoice(method=method))
    assert matrix.entries == expected.entries


def _linked_pair():
    model, _ = generators.torus_link(2, 3, n=200)
    return [loop.start_points() for loop in model.loops]


def test_symmetry_and_orientation_flip():
    a, b = _linked_pair()
    assert link_direct(a, b) == pytest.approx(link_direct(b, a), abs=1e-12)
    assert link_count_crossings(a, b) == link_count_crossings(b, a) == 6
    assert link_count_crossings(a[::-1].copy(), b) == -6
    assert link_direct(a[::-1].copy(), b) == pytest.approx(-link_direct(a, b), abs=1e-12)


def test_rigid_invariance():
    a, b = _linked_pair()
    rng = np.random.default_rng(1)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    rot = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
    shift = np.array([13.0, -7.0, 2.0])
    am, bm = a @ rot.T + shift, b @ rot.T + shift
    assert round(link_direct(am, bm)) == 6
    assert link_count_crossings(am, bm) == 6


def test_refinement_invariance():
    a, b = _linked_pair()

    def refine(v):
        mids = 0.5 * (v + np.roll(v, -1, axis=0))
        return np.stack([v, mids], axis=1).reshape(-1, 3)

    assert round(link_direct(refine(a), refine(b))) == 6
    assert link_count_crossings(refine(a), b) == 6


def test_variant_and_high_beta_agreement():
    for name, (model, _) in SMALL_SCENARIOS.items():
        pairs = potential_link_search(model)
        if not len(pairs):
            continue
        i, j = next(iter(pairs))
        polys = discretize(model, pairs)
        atan = link_direct(polys[i], polys[j], "atan")
        assert link_direct(polys[i], polys[j], "anglesum") == pytest.approx(atan, abs=1e-9)
        params = BarnesHutParams(beta_init=1e6, beta_max=1e6, adaptive=False)
        bh = barnes_hut_detailed(
            build_moment_tree(polys[i]), build_moment_tree(polys[j]), params
        ).value
        assert bh == pytest.approx(atan, abs=1e-12), name


def test_root_monopole_vanishes_everywhere():
    for model, _ in SMALL_SCENARIOS.values():
        for loop in model.loops:
            tree = build_moment_tree(loop.start_points())
            assert np.linalg.norm(tree.root.c_m) < 1e-9 * tree.loop_length


def test_crossing_sums_are_integers():
    for model, expected in SMALL_SCENARIOS.values():
        pairs = potential_link_search(model)
        polys = discretize(model, pairs)
        want = expected.as_dict()
        for i, j in pairs:
            lam = link_count_crossings(polys[i], polys[j])
            assert isinstance(lam, int)
            assert lam == want.get((i, j), 0)


def test_pls_complete_and_sound():
    for model, expected in SMALL_SCENARIOS.values():
        pairs = set(potential_link_search(model))
        for i, j, _ in expected.entries:
            assert (i, j) in pairs
    far_apart, _ = generators.unlinked_circles(16, 12)
    assert len(potential_link_search(far_apart)) == 0


def test_bvh_equivalence_on_medium_input():
    from linkcert import BvhTree, intersecting_pairs

    rng = np.random.default_rng(3)
    lo = rng.uniform(0.0, 40.0, size=(1000, 3))
    hi = lo + rng.uniform(0.0, 3.0, size=(1000, 3))
    got = {(int(i), int(j)) for i, j in
           intersecting_pairs(BvhTree(lo[:500], hi[:500]), BvhTree(lo[500:], hi[500:]))}
    hit = np.all(
        (lo[:500, None] <= hi[None, 500:]) & (lo[None, 500:] <= hi[:500, None]), axis=2
    )
    assert got == {(int(i), int(j)) for i, j in zip(*np.nonzero(hit))}


# --- wall-clock scaling --------------------------------------------------------

def test_time_scaling_from_20k_to_40k(ribbon20k):
    model, _ = generators.double_helix_ribbon(10, 40000)
    verts = [loop.start_points() for loop in model.loops]
    t0 = time.perf_counter()
    link_direct(verts[0], verts[1])
    ds_ratio = (time.perf_counter() - t0) / ribbon20k["ds_time"]
    t0 = time.perf_counter()
    barnes_hut_detailed(*(build_moment_tree(v) for v in verts))
    bh_ratio = (time.perf_counter() - t0) / ribbon20k["bh_time"]
    t0 = time.perf_counter()
    link_count_crossings(verts[0], verts[1])
    cc_ratio = (time.perf_counter() - t0) / ribbon20k["cc_time"]
    assert 3.2 <= ds_ratio <= 5.0, f"direct-summation time ratio {ds_ratio:.2f}"
    assert bh_ratio < 3.0, f"tree-code time ratio {bh_ratio:.2f}"
    assert cc_ratio < 3.0, f"crossing-counter time ratio {cc_ratio:.2f}"


# --- braid closure -------------------------------------------------------------

def test_braid_pull_through_detection():
    from linkcert import BraidError, close_braid

    model, excluded, _ = close_braid(make_braid(6))
    choice = KernelChoice(method="ds")
    trivial = compute_linking_matrix(model, choice, excluded=excluded)
    assert trivial.entries == ()
    for i in range(6):
        for j in range(i + 1, 6):
            wrapped, excl, _ = close_braid(make_braid(6, wrap=(i, j)))
            matrix = compute_linking_matrix(wrapped, choice, excluded=excl)
            assert len(matrix.entries) >= 1, f"wrap ({i}, {j}) left the certificate empty"
    with pytest.raises(BraidError):
        make_braid(3)


# --- determinism ----------------------------------------------------------------

def test_certificates_deterministic_across_threads_and_seeds():
    model, _ = generators.square_link_grid(8)
    blobs = set()
    for threads in (1, 4, os.cpu_count() or 1):
        for seed in (0, 424242):
            choice = KernelChoice(method="cc", cc=CrossingParams(seed=seed))
            blobs.add(serialize_matrix(compute_linking_matrix(model, choice, threads=threads)))
    assert len(blobs) == 1
