"""Pipeline orchestration: certificates, verification, and diffing.

A certificate is a sparse integer matrix of pairwise linking numbers plus a
digest of the canonicalized model. Verification recomputes pairwise links
and diffs against a reference, optionally stopping at the first mismatch.
"""

from __future__ import annotations

import json
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .discretize import DiscretizationParams, discretize
from .geometry import CurveModel, ValidationError
from .kernels import KernelChoice, compute_link, pair_choice
from .model_io import ParseError, model_digest
from .pls import PairList, potential_link_search

PASS = "Pass"
FAIL = "Fail"
ABORTED = "Aborted"


@dataclass(frozen=True)
class LinkMatrix:
    """Sparse strictly-upper-triangular integer linking matrix."""

    num_loops: int
    entries: tuple = ()
    model_digest: str = ""
    kernel_tag: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        entries = tuple((int(i), int(j), int(lam)) for i, j, lam in self.entries)
        if list(entries) != sorted(entries) or len(set(e[:2] for e in entries)) != len(entries):
            raise ValidationError("entries must be sorted and unique")
        for i, j, lam in entries:
            if not 0 <= i < j < self.num_loops:
                raise ValidationError(f"entry ({i}, {j}) out of triangular range")
            if lam == 0:
                raise ValidationError("zero entries must not be stored")
        object.__setattr__(self, "entries", entries)

    def as_dict(self):
        return {(i, j): lam for i, j, lam in self.entries}

    def __getitem__(self, pair):
        i, j = min(pair), max(pair)
        return self.as_dict().get((i, j), 0)


@dataclass
class VerificationReport:
    status: str
    destroyed: list = field(default_factory=list)
    created: list = field(default_factory=list)
    changed: list = field(default_factory=list)
    first_failure: tuple | None = None
    message: str = ""

    @property
    def ok(self):
        return self.status == PASS

    def failing_pairs(self):
        return sorted(set(self.destroyed) | set(self.created) | set(self.changed))

    def as_dict(self):
        return {
            "status": self.status,
            "destroyed": [list(p) for p in self.destroyed],
            "created": [list(p) for p in self.created],
            "changed": [list(p) for p in self.changed],
            "first_failure": list(self.first_failure) if self.first_failure else None,
            "message": self.message,
        }


def serialize_matrix(m: LinkMatrix) -> bytes:
    """Canonical JSON bytes; byte equality is matrix equality."""
    doc = {
        "num_loops": m.num_loops,
        "digest": m.model_digest,
        "kernel": m.kernel_tag,
        "entries": [[i, j, lam] for i, j, lam in m.entries],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def parse_matrix(data: bytes) -> LinkMatrix:
    try:
        doc = json.loads(data)
        matrix = LinkMatrix(
            num_loops=int(doc["num_loops"]),
            entries=tuple((int(i), int(j), int(lam)) for i, j, lam in doc["entries"]),
            model_digest=str(doc["digest"]),
            kernel_tag=str(doc["kernel"]),
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"bad certificate: {exc}") from exc
    return matrix


def _evaluate_pairs(polylines, pair_items, choice, threads, diagnostics):
    """Integer link per (i, j), computed concurrently, merged in pair order."""

    def one(pair):
        i, j = pair
        diag = {}
        lam = compute_link(polylines[i], polylines[j], pair_choice(choice, i, j), diag)
        return pair, lam, diag

    if threads and threads > 1 and len(pair_items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, pair_items))
    else:
        results = [one(p) for p in pair_items]
    out = {}
    for pair, lam, diag in sorted(results, key=lambda r: r[0]):
        out[pair] = lam
        if diag.get("fallback") or diag.get("reran"):
            diagnostics[pair] = diag
    return out


def _prepare(model, choice, excluded, params, timings=None):
    tick = time.perf_counter()
    pairs = potential_link_search(model, excluded)
    tock = time.perf_counter()
    polylines = discretize(model, pairs, params)
    if timings is not None:
        timings["pls"] = tock - tick
        timings["discretize"] = time.perf_counter() - tock
    return pairs, polylines


def compute_linking_matrix(
    model: CurveModel,
    choice: KernelChoice | None = None,
    excluded=(),
    threads: int = 1,
    params: DiscretizationParams | None = None,
    timings: dict | None = None,
) -> LinkMatrix:
    """Full pipeline: potential link search, discretization, kernel per pair."""
    choice = choice or KernelChoice()
    pairs, polylines = _prepare(model, choice, excluded, params, timings)
    diagnostics = {}
    tick = time.perf_counter()
    values = _evaluate_pairs(polylines, list(pairs), choice, threads, diagnostics)
    if timings is not None:
        timings["kernel"] = time.perf_counter() - tick
    entries = tuple(
        (i, j, lam) for (i, j), lam in sorted(values.items()) if lam != 0
    )
    return LinkMatrix(
        num_loops=model.num_loops,
        entries=entries,
        model_digest=model_digest(model),
        kernel_tag=choice.tag,
        diagnostics=diagnostics,
    )


def verify(
    model: CurveModel,
    reference: LinkMatrix,
    choice: KernelChoice | None = None,
    early_exit: bool = False,
    excluded=(),
    threads: int = 1,
    params: DiscretizationParams | None = None,
) -> VerificationReport:
    """Recompute pairwise links and diff against a reference certificate."""
    choice = choice or KernelChoice()
    if model.num_loops != reference.num_loops:
        return VerificationReport(
            FAIL,
            message=(
                f"loop count mismatch: model has {model.num_loops}, "
                f"certificate has {reference.num_loops}"
            ),
        )
    digest = model_digest(model)
    if reference.model_digest and digest != reference.model_digest:
        warnings.warn(
            "model digest differs from certificate digest (deformed model?)",
            stacklevel=2,
        )
    pairs, polylines = _prepare(model, choice, excluded, params)
    ref = reference.as_dict()
    candidate = set(pairs)
    # Reference pairs first: most likely to expose a destroyed link early.
    ordering = sorted(ref) + sorted(candidate - set(ref))
    values = {}
    if early_exit:
        for pair in ordering:
            lam = (
                compute_link(
                    polylines[pair[0]], polylines[pair[1]], pair_choice(choice, *pair)
                )
                if pair in candidate
                else 0
            )
            values[pair] = lam
            if lam != ref.get(pair, 0):
                # Diff only what was evaluated; unvisited pairs are unknown.
                report = _diff({p: ref[p] for p in values if p in ref}, values)
                report.status = ABORTED
                report.first_failure = pair
                return report
        return VerificationReport(PASS)
    kernel_pairs = [p for p in ordering if p in candidate]
    values = _evaluate_pairs(polylines, kernel_pairs, choice, threads, {})
    for pair in ordering:
        values.setdefault(pair, 0)
    return _diff(ref, values)


def diff_matrices(a: LinkMatrix, b: LinkMatrix) -> VerificationReport:
    """Diff two certificates, treating `a` as the reference."""
    if a.num_loops != b.num_loops:
        return VerificationReport(
            FAIL,
            message=f"loop count mismatch: {a.num_loops} vs {b.num_loops}",
        )
    return _diff(a.as_dict(), b.as_dict())


def _diff(ref, computed):
    destroyed = []
    created = []
    changed = []
    for pair in sorted(set(ref) | set(computed)):
        want = ref.get(pair, 0)
        got = computed.get(pair, 0)
        if want == got:
            continue
        if want != 0 and got == 0:
            destroyed.append(pair)
        elif want == 0 and got != 0:
            created.append(pair)
        else:
            changed.append(pair)
    status = PASS if not (destroyed or created or changed) else FAIL
    return VerificationReport(status, destroyed, created, changed)
