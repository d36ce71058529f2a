"""JSON documents for systems, bundles, spectra and witnesses.

Every document is an object with a ``type`` tag and ``format_version``
(optional on input, always ``"1"`` on output).  Rationals travel as strings
``"p/q"`` or integers.  Output is canonical: sorted keys, no whitespace,
reduced fractions, trailing newline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Union

import jsonschema

from .duality import DualBundle
from .dynamics import FinBundle, FinSystem, validate_bundle
from .errors import DocumentError, PreconditionError
from .koopman import RationalAngle, RationalMeasure, invariance_witness
from .spectrum import GroupRotationBundle, IsoWitness, MeasuredSpectrumBundle, PointSpectrumBundle

FORMAT_VERSION = "1"

_RATIONAL = {
    "oneOf": [
        {"type": "integer"},
        {"type": "string", "pattern": r"^-?[0-9]+(/[0-9]+)?$"},
    ]
}
_INDEX_LIST = {"type": "array", "items": {"type": "integer", "minimum": 0}}
_COUNT = {"type": "integer", "minimum": 1}


def _envelope(kind: str, fields: dict[str, Any], optional: tuple[str, ...] = ()) -> dict:
    properties = {"type": {"const": kind}, "format_version": {"const": FORMAT_VERSION}, **fields}
    return {
        "type": "object",
        "properties": properties,
        "required": ["type", *[k for k in fields if k not in optional]],
        "additionalProperties": False,
    }


_SYSTEM = {"states": _COUNT, "map": _INDEX_LIST}
_BUNDLE = {**_SYSTEM, "base": _COUNT, "proj": _INDEX_LIST}
_WEIGHTS = {"type": "array", "items": _RATIONAL}


def _fiber_list(fields: dict[str, Any]) -> dict:
    return {
        "type": "array",
        "minItems": 1,
        "items": {
            "type": "object",
            "properties": fields,
            "required": list(fields),
            "additionalProperties": False,
        },
    }


SCHEMAS: dict[str, dict] = {
    "system": _envelope("system", _SYSTEM),
    "bundle": _envelope("bundle", _BUNDLE),
    "measured-system": _envelope("measured-system", {**_SYSTEM, "weights": _WEIGHTS}),
    "spectrum": _envelope("spectrum", {"fibers": _fiber_list({"order": _COUNT})}),
    "measured-spectrum": _envelope(
        "measured-spectrum", {"fibers": _fiber_list({"order": _COUNT, "weight": _RATIONAL})}
    ),
    "rotation-bundle": _envelope(
        "rotation-bundle",
        {"fibers": _fiber_list({"order": _COUNT, "step": {"type": "integer"}}), "weights": _WEIGHTS},
        optional=("weights",),
    ),
    "basemap": _envelope("basemap", {"map": {**_INDEX_LIST, "minItems": 1}}),
    "witness": _envelope("witness", {"state_map": _INDEX_LIST, "base_map": _INDEX_LIST}),
    "dual-bundle": _envelope(
        "dual-bundle", {"fibers": _fiber_list({"order": _COUNT, "iota": _RATIONAL})}
    ),
}

DOCUMENT_TYPES = tuple(SCHEMAS)


@dataclass(frozen=True)
class Document:
    """A parsed document: ``value`` is the domain object, ``weights`` the
    measure carried by measured systems and weighted rotation bundles."""

    type: str
    value: Any
    weights: Optional[RationalMeasure] = None


def _field_name(error: jsonschema.ValidationError) -> str:
    path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path)
    return path.lstrip(".") or "<document>"


def _validate(data: Any) -> str:
    if not isinstance(data, dict):
        raise DocumentError("document must be a JSON object")
    kind = data.get("type")
    if kind not in SCHEMAS:
        raise DocumentError(f"field 'type': expected one of {list(DOCUMENT_TYPES)}, got {kind!r}")
    validator = jsonschema.Draft202012Validator(SCHEMAS[kind])
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        raise DocumentError(f"schema violation at field '{_field_name(error)}': {error.message}")
    return kind


def _rational(x: Union[int, str], where: str) -> Fraction:
    try:
        return Fraction(x)
    except ZeroDivisionError:
        raise DocumentError(f"field '{where}': zero denominator") from None


def _measure(raw: list, n: int, where: str = "weights") -> RationalMeasure:
    if len(raw) != n:
        raise DocumentError(f"field '{where}': {len(raw)} weights for {n} states")
    return RationalMeasure(tuple(_rational(x, f"{where}[{i}]") for i, x in enumerate(raw)))


def _system(data: dict) -> FinSystem:
    n, table = data["states"], data["map"]
    if len(table) != n:
        raise DocumentError(f"field 'map': {len(table)} entries for {n} states")
    for i, x in enumerate(table):
        if x >= n:
            raise DocumentError(f"field 'map[{i}]': entry {x} out of range [0, {n})")
    return FinSystem(tuple(table))


def _decode(kind: str, data: dict) -> Document:
    if kind == "system":
        return Document(kind, _system(data))
    if kind == "bundle":
        s = _system(data)
        proj = data["proj"]
        if len(proj) != s.n_states:
            raise DocumentError(f"field 'proj': {len(proj)} entries for {s.n_states} states")
        for i, x in enumerate(proj):
            if x >= data["base"]:
                raise DocumentError(f"field 'proj[{i}]': entry {x} out of range [0, {data['base']})")
        b = FinBundle(s, data["base"], tuple(proj))
        report = validate_bundle(b)
        if report.missing_base:
            raise DocumentError(f"proj is not surjective: base points {list(report.missing_base)} have empty fibers")
        if report.violations:
            i, _ = report.violations[0]
            raise DocumentError(
                f"proj is not invariant: state {i} lies over {b.proj[i]} "
                f"but maps to {s.transition[i]} over {b.proj[s.transition[i]]}"
            )
        return Document(kind, b)
    if kind == "measured-system":
        s = _system(data)
        mu = _measure(data["weights"], s.n_states)
        bad = invariance_witness(s, mu)
        if bad is not None:
            raise DocumentError(f"weights are not invariant: mass at state {bad} is not preserved")
        return Document(kind, s, mu)
    if kind == "spectrum":
        return Document(kind, PointSpectrumBundle.from_orders([f["order"] for f in data["fibers"]]))
    if kind == "measured-spectrum":
        fibers = tuple(
            (f["order"], _rational(f["weight"], f"fibers[{i}].weight")) for i, f in enumerate(data["fibers"])
        )
        return Document(kind, MeasuredSpectrumBundle(fibers))
    if kind == "rotation-bundle":
        rot = GroupRotationBundle(tuple((f["order"], f["step"]) for f in data["fibers"]))
        mu = None
        if "weights" in data:
            mu = _measure(data["weights"], rot.n_states)
            bad = invariance_witness(rot.to_system(), mu)
            if bad is not None:
                raise DocumentError(f"weights are not invariant: mass at state {bad} is not preserved")
        return Document(kind, rot, mu)
    if kind == "basemap":
        return Document(kind, tuple(data["map"]))
    if kind == "witness":
        return Document(kind, IsoWitness(tuple(data["state_map"]), tuple(data["base_map"])))
    fibers = tuple(
        (f["order"], RationalAngle.of(_rational(f["iota"], f"fibers[{i}].iota")))
        for i, f in enumerate(data["fibers"])
    )
    return Document(kind, DualBundle(fibers))


def parse(text: str) -> Document:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    kind = _validate(data)
    try:
        return _decode(kind, data)
    except PreconditionError as exc:
        raise DocumentError(f"invalid {kind} document: {exc}") from None


def _fraction_text(x: Fraction) -> str:
    return str(Fraction(x))


def _weights(mu: RationalMeasure) -> list[str]:
    return [_fraction_text(w) for w in mu.weights]


def to_document(obj: Any, weights: Optional[RationalMeasure] = None) -> Document:
    """Wrap a domain object; a measure turns a system into a measured system."""
    if isinstance(obj, Document):
        return obj
    if isinstance(obj, FinBundle):
        return Document("bundle", obj)
    if isinstance(obj, FinSystem):
        return Document("measured-system" if weights is not None else "system", obj, weights)
    if isinstance(obj, PointSpectrumBundle):
        return Document("spectrum", obj)
    if isinstance(obj, MeasuredSpectrumBundle):
        return Document("measured-spectrum", obj)
    if isinstance(obj, GroupRotationBundle):
        return Document("rotation-bundle", obj, weights)
    if isinstance(obj, IsoWitness):
        return Document("witness", obj)
    if isinstance(obj, DualBundle):
        return Document("dual-bundle", obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode(doc: Document) -> dict:
    v, kind = doc.value, doc.type
    out: dict[str, Any] = {"type": kind, "format_version": FORMAT_VERSION}
    if kind in ("system", "measured-system"):
        out.update(states=v.n_states, map=list(v.transition))
        if kind == "measured-system":
            out["weights"] = _weights(doc.weights)
    elif kind == "bundle":
        out.update(states=v.n_states, map=list(v.system.transition), base=v.n_base, proj=list(v.proj))
    elif kind == "spectrum":
        out["fibers"] = [{"order": m} for m in v.orders]
    elif kind == "measured-spectrum":
        out["fibers"] = [{"order": m, "weight": _fraction_text(w)} for m, w in zip(v.orders, v.weights)]
    elif kind == "rotation-bundle":
        out["fibers"] = [{"order": m, "step": a} for m, a in v.fibers]
        if doc.weights is not None:
            out["weights"] = _weights(doc.weights)
    elif kind == "basemap":
        out["map"] = list(v)
    elif kind == "witness":
        out.update(state_map=list(v.state_bijection), base_map=list(v.base_bijection))
    elif kind == "dual-bundle":
        out["fibers"] = [{"order": m, "iota": str(iota)} for m, iota in v.fibers]
    else:
        raise DocumentError(f"unknown document type {kind!r}")
    return out


def serialize(obj: Any, weights: Optional[RationalMeasure] = None) -> str:
    data = _encode(to_document(obj, weights))
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def canonical_encoding(obj: Any, weights: Optional[RationalMeasure] = None) -> str:
    """Serialization after sorting fibers, for comparing spectra up to base relabeling."""
    if isinstance(obj, (PointSpectrumBundle, MeasuredSpectrumBundle)):
        obj = obj.canonical()
    return serialize(obj, weights)


def load(path: Union[str, Path]) -> Document:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from None
    return parse(text)


def dump(obj: Any, path: Union[str, Path], weights: Optional[RationalMeasure] = None) -> None:
    try:
        Path(path).write_text(serialize(obj, weights), encoding="utf-8", newline="\n")
    except OSError as exc:
        raise DocumentError(f"cannot write {path}: {exc}") from None
