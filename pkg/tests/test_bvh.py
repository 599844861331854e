import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkcert import BvhTree, build_bvh, intersecting_pairs
from linkcert.bvh import overlap_pairs_boxes
from linkcert.geometry import Aabb


def _random_boxes(rng, m, scale=10.0, size=2.0):
    lo = rng.uniform(0.0, scale, size=(m, 3))
    hi = lo + rng.uniform(0.0, size, size=(m, 3))
    return lo, hi


def _brute_pairs(alo, ahi, blo, bhi):
    hit = np.all((alo[:, None] <= bhi[None]) & (blo[None] <= ahi[:, None]), axis=2)
    return {(int(i), int(j)) for i, j in zip(*np.nonzero(hit))}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 60), st.integers(1, 60))
def test_dual_traversal_matches_brute_force(seed, ma, mb):
    rng = np.random.default_rng(seed)
    alo, ahi = _random_boxes(rng, ma)
    blo, bhi = _random_boxes(rng, mb)
    got = {(int(i), int(j)) for i, j in intersecting_pairs(BvhTree(alo, ahi), BvhTree(blo, bhi))}
    assert got == _brute_pairs(alo, ahi, blo, bhi)


def test_touching_boxes_count_as_overlapping():
    alo = np.array([[0.0, 0.0, 0.0]])
    ahi = np.array([[1.0, 1.0, 1.0]])
    blo = np.array([[1.0, 0.0, 0.0]])
    bhi = np.array([[2.0, 1.0, 1.0]])
    assert len(intersecting_pairs(BvhTree(alo, ahi), BvhTree(blo, bhi))) == 1
    assert len(overlap_pairs_boxes(alo, ahi, blo, bhi)) == 1


def test_self_query_includes_self_pairs():
    rng = np.random.default_rng(0)
    lo, hi = _random_boxes(rng, 30)
    tree = BvhTree(lo, hi)
    got = {(int(i), int(j)) for i, j in intersecting_pairs(tree, tree)}
    assert got == _brute_pairs(lo, hi, lo, hi)
    assert all((i, i) in got for i in range(30))


def test_leaf_payload_bounded():
    rng = np.random.default_rng(5)
    lo, hi = _random_boxes(rng, 257)
    tree = BvhTree(lo, hi, leaf_size=2)
    leaves = np.nonzero(tree.left < 0)[0]
    payloads = tree.end[leaves] - tree.start[leaves]
    assert payloads.max() <= 2
    assert payloads.min() >= 1
    # Every primitive appears in exactly one leaf.
    assert sorted(np.concatenate([tree.prim_order[s:e] for s, e in
                                  zip(tree.start[leaves], tree.end[leaves])])) == list(range(257))
    assert tree.depth() <= 2 * int(np.ceil(np.log2(257))) + 2


def test_overlap_pairs_boxes_dispatch_consistency():
    rng = np.random.default_rng(9)
    # Large enough to take the tree path (m * m > brute-force limit).
    alo, ahi = _random_boxes(rng, 150, scale=30.0)
    blo, bhi = _random_boxes(rng, 150, scale=30.0)
    tree_path = {(int(i), int(j)) for i, j in overlap_pairs_boxes(alo, ahi, blo, bhi)}
    brute_path = {
        (int(i), int(j)) for i, j in overlap_pairs_boxes(alo[:40], ahi[:40], blo, bhi)
    }
    assert tree_path == _brute_pairs(alo, ahi, blo, bhi)
    assert brute_path == _brute_pairs(alo[:40], ahi[:40], blo, bhi)


def test_build_from_aabb_list_and_validation():
    boxes = [Aabb((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), Aabb((0.5, 0.0, 0.0), (1.5, 1.0, 1.0))]
    tree = build_bvh(boxes)
    assert tree.num_primitives == 2
    assert tree.num_nodes >= 1
    with pytest.raises(ValueError):
        BvhTree(np.zeros((0, 3)), np.zeros((0, 3)))
    with pytest.raises(ValueError):
        BvhTree(np.ones((2, 3)), np.zeros((2, 3)))


def test_single_box_tree():
    tree = BvhTree(np.zeros((1, 3)), np.ones((1, 3)))
    assert tree.num_nodes == 1
    pairs = intersecting_pairs(tree, tree)
    assert [(int(i), int(j)) for i, j in pairs] == [(0, 0)]
