"""Command-line front end: compute, verify, diff, gen, bench.

Exit codes: 0 = computed/verified, 1 = topology mismatch, 2 = operational
error (I/O, parsing, discretization, kernel failure).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import generators
from .barneshut import BarnesHutParams, barnes_hut_detailed, build_moment_tree
from .certify import (
    ABORTED,
    FAIL,
    PASS,
    LinkMatrix,
    compute_linking_matrix,
    diff_matrices,
    parse_matrix,
    serialize_matrix,
    verify,
)
from .crossings import CrossingParams, ProjectionFailure
from .direct import link_direct
from .discretize import DiscretizationError, discretize
from .geometry import ValidationError
from .kernels import KernelChoice
from .model_io import ParseError, load_model, model_digest, model_to_dict
from .pls import potential_link_search

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_ERROR = 2

_ORDER_NAMES = {"dipole": "dipole", "quad": "quadrupole", "quadrupole": "quadrupole"}

_GENERATORS = {
    "hopf": generators.hopf,
    "unlinked": generators.unlinked_circles,
    "torus": generators.torus_link,
    "ribbon": generators.double_helix_ribbon,
    "grid": generators.square_link_grid,
    "woundball": generators.woundball,
    "perturbed": generators.perturbed_random_link,
}


def _default_threads():
    env = os.environ.get("LINKCERT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _add_kernel_flags(p):
    p.add_argument("--kernel", choices=["cc", "ds", "bh"], default="ds")
    p.add_argument("--ds-variant", choices=["atan", "anglesum"], default="atan")
    p.add_argument("--beta-init", type=float, default=2.0)
    p.add_argument("--beta-max", type=float, default=10.0)
    p.add_argument("--e-target", type=float, default=0.2)
    p.add_argument("--order", choices=sorted(_ORDER_NAMES), default="quadrupole")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)


def _choice_from_args(args, beta_override=None, adaptive=True):
    bh = BarnesHutParams(
        beta_init=beta_override if beta_override is not None else args.beta_init,
        beta_max=beta_override if beta_override is not None else args.beta_max,
        e_target=args.e_target,
        order=_ORDER_NAMES[args.order],
        adaptive=adaptive,
    )
    cc = CrossingParams(seed=args.seed)
    return KernelChoice(method=args.kernel, ds_variant=args.ds_variant, bh=bh, cc=cc)


def _threads(args):
    return args.threads if args.threads else _default_threads()


def _emit(args, text_lines, json_doc):
    if args.format == "json":
        print(json.dumps(json_doc, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def run_compute(args) -> int:
    model = load_model(args.model, args.model_format)
    choice = _choice_from_args(args)
    timings = {}
    matrix = compute_linking_matrix(
        model, choice, threads=_threads(args), timings=timings
    )
    data = serialize_matrix(matrix)
    if args.output:
        with open(args.output, "wb") as f:
            f.write(data)
    else:
        sys.stdout.buffer.write(data + b"\n")
    reruns = sum(1 for d in matrix.diagnostics.values() if d.get("reran"))
    fallbacks = sum(1 for d in matrix.diagnostics.values() if d.get("fallback"))
    summary = {
        "loops": model.num_loops,
        "entries": len(matrix.entries),
        "kernel": matrix.kernel_tag,
        "bh_reruns": reruns,
        "cc_fallbacks": fallbacks,
        "pls_time_s": round(timings["pls"], 6),
        "discretize_time_s": round(timings["discretize"], 6),
        "kernel_time_s": round(timings["kernel"], 6),
    }
    _emit(args, [f"{k}: {v}" for k, v in summary.items()], summary)
    return EXIT_OK


def _report_lines(report):
    lines = [f"status: {report.status}"]
    if report.message:
        lines.append(f"message: {report.message}")
    for label, pairs in (
        ("destroyed", report.destroyed),
        ("created", report.created),
        ("changed", report.changed),
    ):
        if pairs:
            lines.append(f"{label}: " + " ".join(f"({i},{j})" for i, j in pairs))
    if report.first_failure:
        i, j = report.first_failure
        lines.append(f"first_failure: ({i},{j})")
    return lines


def run_verify(args) -> int:
    model = load_model(args.model, args.model_format)
    with open(args.certificate, "rb") as f:
        reference = parse_matrix(f.read())
    report = verify(
        model,
        reference,
        _choice_from_args(args),
        early_exit=args.early_exit,
        threads=_threads(args),
    )
    _emit(args, _report_lines(report), report.as_dict())
    return EXIT_OK if report.status == PASS else EXIT_MISMATCH


def run_diff(args) -> int:
    mats = []
    for path in (args.certificate, args.other):
        with open(path, "rb") as f:
            mats.append(parse_matrix(f.read()))
    a, b = mats
    report = diff_matrices(a, b)
    _emit(args, _report_lines(report), report.as_dict())
    return EXIT_OK if report.status == PASS else EXIT_MISMATCH


def _parse_params(items):
    out = {}
    for item in items or ():
        key, _, value = item.partition("=")
        if not _:
            raise ParseError(f"--param expects key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def run_gen(args) -> int:
    builder = _GENERATORS[args.scenario]
    model, expected = builder(**_parse_params(args.param))
    doc = model_to_dict(model)
    with open(args.output, "w") as f:
        json.dump(doc, f)
    if args.cert:
        with open(args.cert, "wb") as f:
            f.write(serialize_matrix(expected))
    print(f"wrote {args.output}: {model.num_loops} loops, "
          f"{len(expected.entries)} expected entries")
    return EXIT_OK


def _bench_row(args, model, expected, kernel, beta=None, order=None):
    t0 = time.perf_counter()
    pairs = potential_link_search(model)
    t1 = time.perf_counter()
    polys = discretize(model, pairs)
    t2 = time.perf_counter()
    want = expected.as_dict()
    errors = []
    if kernel == "ds":
        raws = {p: link_direct(polys[p[0]], polys[p[1]], args.ds_variant) for p in pairs}
    elif kernel == "cc":
        cc = CrossingParams(seed=args.seed)
        from .crossings import link_count_crossings

        raws = {p: float(link_count_crossings(polys[p[0]], polys[p[1]], cc)) for p in pairs}
    else:
        bh = BarnesHutParams(
            beta_init=beta if beta is not None else args.beta_init,
            beta_max=beta if beta is not None else args.beta_max,
            e_target=args.e_target,
            order=order or _ORDER_NAMES[args.order],
            adaptive=beta is None,
        )
        trees = {}
        for p in pairs:
            for k in p:
                if k not in trees:
                    trees[k] = build_moment_tree(polys[k])
        raws = {
            p: barnes_hut_detailed(trees[p[0]], trees[p[1]], bh).value for p in pairs
        }
    t3 = time.perf_counter()
    for p in set(want) | set(raws):
        errors.append(abs(raws.get(p, 0.0) - want.get(p, 0)))
    n = int(np.mean([len(pl) for pl in polys]))
    label = kernel if beta is None else f"{kernel}[beta={beta:g}]"
    return (
        f"{args.scenario},{label},{n},{t1 - t0:.6f},{t2 - t1:.6f},{t3 - t2:.6f},"
        f"{max(errors) if errors else 0.0:.6e}"
    )


def run_bench(args) -> int:
    builder = _GENERATORS[args.scenario]
    model, expected = builder(**_parse_params(args.param))
    print("scenario,kernel,n,pls_time,discretize_time,kernel_time,max_abs_error")
    if args.beta_sweep:
        betas = [float(b) for b in args.beta_sweep.split(",")]
        for beta in betas:
            print(_bench_row(args, model, expected, "bh", beta=beta))
    else:
        for kernel in args.kernels.split(","):
            if kernel not in ("cc", "ds", "bh"):
                raise ParseError(f"unknown kernel {kernel!r}")
            print(_bench_row(args, model, expected, kernel))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="linkcert",
        description="Linking-number certificates for collections of closed 3D curves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="compute a certificate for a model file")
    p.add_argument("model")
    p.add_argument("-o", "--output", help="certificate output path (default stdout)")
    p.add_argument("--model-format", choices=["json-curves", "polyline-text"],
                   default="json-curves")
    p.add_argument("--format", choices=["text", "json"], default="text")
    _add_kernel_flags(p)
    p.set_defaults(func=run_compute)

    p = sub.add_parser("verify", help="verify a model against a certificate")
    p.add_argument("model")
    p.add_argument("certificate")
    p.add_argument("--model-format", choices=["json-curves", "polyline-text"],
                   default="json-curves")
    p.add_argument("--early-exit", action="store_true")
    p.add_argument("--format", choices=["text", "json"], default="text")
    _add_kernel_flags(p)
    p.set_defaults(func=run_verify)

    p = sub.add_parser("diff", help="diff two certificate files")
    p.add_argument("certificate")
    p.add_argument("other")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=run_diff)

    p = sub.add_parser("gen", help="generate a scenario model and expected certificate")
    p.add_argument("scenario", choices=sorted(_GENERATORS))
    p.add_argument("-o", "--output", required=True, help="model output path")
    p.add_argument("--cert", help="expected-certificate output path")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=run_gen)

    p = sub.add_parser("bench", help="benchmark kernels on a generated scenario")
    p.add_argument("scenario", choices=sorted(_GENERATORS))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--kernels", default="ds,cc,bh")
    p.add_argument("--beta-sweep", help="comma-separated fixed beta values (BH only)")
    _add_kernel_flags(p)
    p.set_defaults(func=run_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ParseError, ValidationError, DiscretizationError,
            ProjectionFailure, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
