"""Kernel selection and integer linking-number dispatch for one loop pair.

Real-valued kernels are rounded; a raw value too far from any integer falls
back to the exact crossing counter, which never needs rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .barneshut import BarnesHutParams, barnes_hut_detailed, build_moment_tree
from .crossings import CrossingParams, link_count_crossings
from .direct import link_direct

COUNT_CROSSINGS = "cc"
DIRECT_SUM = "ds"
BARNES_HUT = "bh"

# Largest threshold that can never misround by a whole integer.
ROUNDING_THRESHOLD = 0.25


@dataclass
class KernelChoice:
    method: str = DIRECT_SUM
    ds_variant: str = "atan"
    bh: BarnesHutParams = field(default_factory=BarnesHutParams)
    cc: CrossingParams = field(default_factory=CrossingParams)

    def __post_init__(self):
        if self.method not in (COUNT_CROSSINGS, DIRECT_SUM, BARNES_HUT):
            raise ValueError(f"unknown kernel {self.method!r}")
        if self.ds_variant not in ("atan", "anglesum"):
            raise ValueError(f"unknown direct-summation variant {self.ds_variant!r}")

    @property
    def tag(self):
        if self.method == DIRECT_SUM:
            return f"ds:{self.ds_variant}"
        if self.method == BARNES_HUT:
            return f"bh:{self.bh.order}"
        return "cc"


def compute_link(loop1, loop2, choice: KernelChoice | None = None, diagnostics=None) -> int:
    """Integer linking number of a discretized loop pair.

    `diagnostics`, if given, is a dict updated in place with the raw kernel
    value and any fallback/rerun/retry bookkeeping.
    """
    choice = choice or KernelChoice()
    if diagnostics is None:
        diagnostics = {}
    if choice.method == COUNT_CROSSINGS:
        value = link_count_crossings(loop1, loop2, choice.cc)
        diagnostics["raw"] = float(value)
        return value
    if choice.method == DIRECT_SUM:
        raw = link_direct(loop1, loop2, variant=choice.ds_variant)
    else:
        result = barnes_hut_detailed(
            build_moment_tree(loop1), build_moment_tree(loop2), choice.bh
        )
        raw = result.value
        diagnostics["e_estimate"] = result.e_estimate
        diagnostics["beta_used"] = result.beta_used
        diagnostics["reran"] = result.reran
    diagnostics["raw"] = raw
    rounded = round(raw)
    if abs(raw - rounded) > ROUNDING_THRESHOLD:
        diagnostics["fallback"] = "cc"
        return link_count_crossings(loop1, loop2, choice.cc)
    return int(rounded)


def pair_choice(choice: KernelChoice, i: int, j: int) -> KernelChoice:
    """Kernel choice with a per-pair crossing seed, stable under threading."""
    seed = (choice.cc.seed * 0x9E3779B97F4A7C15 + (i << 20) + j) % (1 << 63)
    return replace(choice, cc=replace(choice.cc, seed=seed))
