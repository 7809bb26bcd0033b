"""JSON wire formats with bit-exact float round-trips.

Numbers are written as decimal with 17 significant digits, which pins down
a double uniquely, so dump -> parse -> dump is byte-stable and parse ->
dump -> parse reproduces every value bit-exactly.  Emission order is fixed,
making output byte-deterministic for fixed input.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .distributions import (
    DiscreteDistribution,
    Distribution,
    EmpiricalSample,
    Orientation,
    PiecewiseLinearDensity,
    TailSpec,
)


def format_float(v: float) -> str:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"non-finite number {v} is not serializable")
    return format(v, ".17g")


def dumps(obj: Any) -> str:
    """Deterministic JSON emission (insertion-ordered keys, 17-digit floats)."""
    pieces: list[str] = []
    _emit(obj, pieces)
    return "".join(pieces)


def _emit(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(repr(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k)))
            out.append(":")
            _emit(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    else:
        try:
            out.append(format_float(float(obj)))
        except (TypeError, ValueError):
            raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# distribution schema
#
# {"kind": "piecewise_linear"|"tail"|"discrete"|"empirical",
#  "orientation": "loss"|"return",
#  "alpha": <tail only>,
#  "knots": [[x, f], ...] | "atoms": [[x, p], ...] | "losses": [...]}

def dist_to_json_dict(dist: Distribution) -> dict:
    if isinstance(dist, PiecewiseLinearDensity):
        return {
            "kind": "piecewise_linear",
            "orientation": dist.orientation.value,
            "knots": [[x, f] for x, f in dist.knots],
        }
    if isinstance(dist, TailSpec):
        return {
            "kind": "tail",
            "orientation": dist.orientation.value,
            "alpha": dist.alpha,
            "knots": [[x, f] for x, f in dist.segments],
        }
    if isinstance(dist, DiscreteDistribution):
        return {
            "kind": "discrete",
            "orientation": dist.orientation.value,
            "atoms": [[x, p] for x, p in dist.atoms],
        }
    if isinstance(dist, EmpiricalSample):
        return {
            "kind": "empirical",
            "orientation": dist.orientation.value,
            "losses": [float(x) for x in dist.losses],
        }
    raise TypeError(f"not a distribution: {type(dist).__name__}")


def dist_from_json_dict(doc: dict) -> Distribution:
    if not isinstance(doc, dict):
        raise ValueError("distribution JSON must be an object")
    kind = doc.get("kind")
    try:
        orientation = Orientation(doc.get("orientation", "loss"))
    except ValueError:
        raise ValueError(f"unknown orientation {doc.get('orientation')!r}")
    try:
        if kind == "piecewise_linear":
            return PiecewiseLinearDensity(
                knots=tuple((float(x), float(f)) for x, f in doc["knots"]),
                orientation=orientation,
            )
        if kind == "tail":
            return TailSpec(
                alpha=float(doc["alpha"]),
                segments=tuple((float(x), float(f)) for x, f in doc["knots"]),
                orientation=orientation,
            )
        if kind == "discrete":
            return DiscreteDistribution(
                atoms=tuple((float(x), float(p)) for x, p in doc["atoms"]),
                orientation=orientation,
            )
        if kind == "empirical":
            return EmpiricalSample(
                losses=[float(x) for x in doc["losses"]], orientation=orientation
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed {kind!r} distribution JSON: {exc}") from exc
    raise ValueError(f"unknown distribution kind {kind!r}")


def dist_dumps(dist: Distribution) -> str:
    return dumps(dist_to_json_dict(dist))


def dist_loads(text: str) -> Distribution:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from exc
    return dist_from_json_dict(doc)
