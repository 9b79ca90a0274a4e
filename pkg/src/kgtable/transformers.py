"""Declarative request/response transformers for service adaptation.

A transformer rewrites one JSON object: outbound query documents on the
way to a service, inbound candidate or extension documents on the way
back. The declarative form supports field moves (dotted paths, which
covers renames plus nesting/unnesting) and constant injection; anything
richer goes through a named built-in implementation. Transformers are
pure per-call mappings and never mutate their input.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .errors import ConfigError

_MISSING = object()


def get_path(doc: dict[str, Any], path: str) -> Any:
    node: Any = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            return _MISSING
        node = node[part]
    return node


def pop_path(doc: dict[str, Any], path: str) -> Any:
    parts = path.split(".")
    node: Any = doc
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            return _MISSING
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        return _MISSING
    return node.pop(parts[-1])


def set_path(doc: dict[str, Any], path: str, value: Any) -> None:
    parts = path.split(".")
    node = doc
    for part in parts[:-1]:
        child = node.get(part)
        if not isinstance(child, dict):
            child = {}
            node[part] = child
        node = child
    node[parts[-1]] = value


class Transformer:
    """Base: the identity mapping."""

    name = "identity"

    def apply(self, doc: dict[str, Any]) -> dict[str, Any]:
        return copy.deepcopy(doc)

    def describe(self) -> dict[str, Any]:
        return {"builtin": self.name}


@dataclass
class DeclarativeTransformer(Transformer):
    """Field moves then constant injection, in declaration order.

    ``moves`` maps source path -> destination path; a missing source is
    skipped. ``inject`` sets constants at destination paths, clobbering
    whatever a move put there.
    """

    name = "declarative"  # unannotated on purpose: not a dataclass field

    moves: dict[str, str] = field(default_factory=dict)
    inject: dict[str, Any] = field(default_factory=dict)

    def apply(self, doc: dict[str, Any]) -> dict[str, Any]:
        out = copy.deepcopy(doc)
        for src, dst in self.moves.items():
            value = pop_path(out, src)
            if value is not _MISSING:
                set_path(out, dst, value)
        for dst, value in self.inject.items():
            set_path(out, dst, copy.deepcopy(value))
        return out

    def describe(self) -> dict[str, Any]:
        return {"rename": dict(self.moves), "inject": copy.deepcopy(self.inject)}


class _BuiltinTransformer(Transformer):
    def __init__(self, name: str, fn: Callable[[dict[str, Any]], dict[str, Any]]):
        self.name = name
        self._fn = fn

    def apply(self, doc: dict[str, Any]) -> dict[str, Any]:
        return self._fn(copy.deepcopy(doc))


def _percent_scores(doc: dict[str, Any]) -> dict[str, Any]:
    """Rescale candidate scores reported on a 0..100 scale down to 0..1."""
    score = doc.get("score")
    if isinstance(score, (int, float)) and not isinstance(score, bool):
        doc["score"] = float(score) / 100.0
    return doc


BUILTIN_TRANSFORMERS: dict[str, Callable[[dict[str, Any]], dict[str, Any]]] = {
    "identity": lambda doc: doc,
    "percent-scores": _percent_scores,
}

IDENTITY = Transformer()


def compile_transformer(spec: Any) -> Transformer:
    """Build a transformer from its config-file form.

    Accepted shapes: null/absent (identity), {"builtin": name}, or
    {"rename": {src: dst}, "inject": {dst: const}}.
    """
    if spec is None:
        return IDENTITY
    if not isinstance(spec, dict):
        raise ConfigError(f"transformer spec must be an object, got {type(spec).__name__}")
    if "builtin" in spec:
        name = spec["builtin"]
        fn = BUILTIN_TRANSFORMERS.get(name)
        if fn is None:
            known = ", ".join(sorted(BUILTIN_TRANSFORMERS))
            raise ConfigError(f"unknown builtin transformer {name!r} (known: {known})")
        extras = set(spec) - {"builtin"}
        if extras:
            raise ConfigError(f"builtin transformer spec has stray keys: {sorted(extras)}")
        return _BuiltinTransformer(name, fn)
    extras = set(spec) - {"rename", "inject"}
    if extras:
        raise ConfigError(f"transformer spec has unknown keys: {sorted(extras)}")
    moves = spec.get("rename", {})
    inject = spec.get("inject", {})
    if not isinstance(moves, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in moves.items()):
        raise ConfigError("transformer rename must map path strings to path strings")
    if not isinstance(inject, dict):
        raise ConfigError("transformer inject must be an object")
    if not moves and not inject:
        return IDENTITY
    return DeclarativeTransformer(moves=dict(moves), inject=dict(inject))


def is_identity(transformer: Optional[Transformer]) -> bool:
    return transformer is None or (
        type(transformer) is Transformer or getattr(transformer, "name", "") == "identity"
    )
