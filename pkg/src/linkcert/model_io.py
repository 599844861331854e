"""Model file loading and canonical serialization.

Two formats:

* ``json-curves``: ``{"loops": [{"type": "polyline"|"catmullrom"|"cubics",
  "closed": true, "points": [[x,y,z], ...]}, ...]}``. For ``"cubics"`` the
  ``points`` key is replaced by ``"segments": [{"coeffs": [[..] x4],
  "t": [lo, hi]}, ...]``. An optional top-level ``"braid"`` object carries
  end-volume data for open-curve models (see :mod:`linkcert.braid`).
* ``polyline-text``: one loop per block of ``v x y z`` lines; a blank line
  terminates a loop; all loops are implicitly closed.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from .geometry import CurveModel, LoopGeometry, ValidationError, compute_xi


class ParseError(ValueError):
    """Raised when a model file cannot be parsed under its declared format."""


def load_model(path, format="json-curves") -> CurveModel:
    if format == "json-curves":
        return load_json_curves(path)
    if format == "polyline-text":
        return load_polyline_text(path)
    raise ParseError(f"unknown model format: {format!r}")


def load_json_curves(path) -> CurveModel:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed JSON in {path}: {e}") from None
    return model_from_dict(doc)


def model_from_dict(doc) -> CurveModel:
    if not isinstance(doc, dict) or "loops" not in doc:
        raise ParseError("json-curves file must be an object with a 'loops' key")
    loops = []
    for idx, entry in enumerate(doc["loops"]):
        try:
            loops.append(_loop_from_dict(entry))
        except ValidationError as e:
            raise ValidationError(f"loop {idx}: {e}") from None
        except (ParseError, KeyError, TypeError, ValueError) as e:
            raise ParseError(f"loop {idx}: {e}") from None
    return CurveModel(loops)


def _loop_from_dict(entry):
    kind = entry.get("type", "polyline")
    closed = bool(entry.get("closed", True))
    if kind == "polyline":
        pts = _points(entry["points"])
        return LoopGeometry.from_polyline(pts, closed=closed)
    if kind == "catmullrom":
        if not closed:
            raise ParseError("catmullrom loops must be closed")
        return LoopGeometry.from_catmull_rom(_points(entry["points"]))
    if kind == "cubics":
        coeffs = []
        t = []
        for seg in entry["segments"]:
            c = np.asarray(seg["coeffs"], dtype=np.float64)
            if c.shape != (4, 3):
                raise ParseError(f"cubic coeffs must be 4x3, got {c.shape}")
            coeffs.append(c)
            t.append(seg.get("t", [0.0, 1.0]))
        return LoopGeometry(np.stack(coeffs), np.asarray(t, dtype=np.float64), closed=closed)
    raise ParseError(f"unknown loop type {kind!r}")


def _points(raw):
    pts = np.asarray(raw, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ParseError("points must be a list of [x, y, z] triples")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("points contain NaN or Inf")
    return pts


def load_polyline_text(path) -> CurveModel:
    loops = []
    current = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                if current:
                    loops.append(_polyline_block(current, lineno))
                    current = []
                continue
            parts = line.split()
            if parts[0] != "v" or len(parts) != 4:
                raise ParseError(f"{path}:{lineno}: expected 'v x y z', got {line!r}")
            try:
                current.append([float(p) for p in parts[1:]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad coordinate in {line!r}") from None
    if current:
        loops.append(_polyline_block(current, "eof"))
    return CurveModel(loops)


def _polyline_block(rows, where):
    pts = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(pts)):
        raise ValidationError(f"loop ending at line {where} has non-finite vertices")
    return LoopGeometry.from_polyline(pts, closed=True)


def model_to_dict(model: CurveModel, extra=None) -> dict:
    """Canonical json-curves dictionary; basis for the model digest."""
    loops = []
    for loop in model.loops:
        if loop.is_polyline and np.all(loop.t[:, 0] == 0.0) and np.all(loop.t[:, 1] == 1.0):
            loops.append(
                {
                    "type": "polyline",
                    "closed": loop.closed,
                    "points": [_triple(p) for p in loop.coeffs[:, 0]]
                    + ([] if loop.closed else [_triple(loop.end_points()[-1])]),
                }
            )
        else:
            loops.append(
                {
                    "type": "cubics",
                    "closed": loop.closed,
                    "segments": [
                        {"coeffs": [[_num(x) for x in row] for row in c], "t": [t0, t1]}
                        for c, (t0, t1) in zip(loop.coeffs, loop.t)
                    ],
                }
            )
    doc = {"loops": loops}
    if extra:
        doc.update(extra)
    return doc


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError("cannot serialize non-finite coordinate")
    return x


def _triple(p):
    return [_num(p[0]), _num(p[1]), _num(p[2])]


def save_json_curves(model: CurveModel, path, extra=None):
    with open(path, "w") as f:
        json.dump(model_to_dict(model, extra=extra), f, sort_keys=True)
        f.write("\n")


def model_digest(model: CurveModel) -> str:
    """SHA-256 hex digest of the canonicalized json-curves serialization."""
    blob = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def recompute_xi(model: CurveModel) -> float:
    return compute_xi(model.loops)
