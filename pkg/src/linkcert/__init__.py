"""Sparse linking-number certificates for collections of closed 3D curves."""

from .barneshut import (
    BarnesHutParams,
    BarnesHutResult,
    MomentNode,
    MomentTree,
    barnes_hut_detailed,
    build_moment_tree,
    far_field_eval,
    link_barnes_hut,
)
from .braid import (
    BraidError,
    BraidModel,
    ClosureTemplate,
    braid_from_dict,
    close_braid,
    reclose_braid,
)
from .bvh import BvhTree, build_bvh, intersecting_pairs
from .certify import (
    LinkMatrix,
    VerificationReport,
    compute_linking_matrix,
    diff_matrices,
    parse_matrix,
    serialize_matrix,
    verify,
)
from .crossings import CrossingParams, ProjectionFailure, link_count_crossings
from .direct import link_direct, segment_pair_lambda
from .discretize import DiscretizationError, DiscretizationParams, discretize
from .generators import ScenarioSpec, generate
from .geometry import (
    Aabb,
    CubicSegment,
    CurveModel,
    LoopGeometry,
    PolylineLoop,
    ValidationError,
)
from .kernels import KernelChoice, compute_link
from .model_io import (
    ParseError,
    load_model,
    model_digest,
    model_to_dict,
    save_json_curves,
)
from .pls import PairList, potential_link_search

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "BarnesHutParams",
    "BarnesHutResult",
    "BraidError",
    "BraidModel",
    "BvhTree",
    "ClosureTemplate",
    "CrossingParams",
    "CubicSegment",
    "CurveModel",
    "DiscretizationError",
    "DiscretizationParams",
    "KernelChoice",
    "LinkMatrix",
    "LoopGeometry",
    "MomentNode",
    "MomentTree",
    "PairList",
    "ParseError",
    "PolylineLoop",
    "ProjectionFailure",
    "ScenarioSpec",
    "ValidationError",
    "VerificationReport",
    "barnes_hut_detailed",
    "braid_from_dict",
    "build_bvh",
    "build_moment_tree",
    "close_braid",
    "compute_link",
    "compute_linking_matrix",
    "diff_matrices",
    "discretize",
    "far_field_eval",
    "generate",
    "intersecting_pairs",
    "link_barnes_hut",
    "link_count_crossings",
    "link_direct",
    "load_model",
    "model_digest",
    "model_to_dict",
    "parse_matrix",
    "potential_link_search",
    "reclose_braid",
    "save_json_curves",
    "segment_pair_lambda",
    "serialize_matrix",
    "verify",
]
