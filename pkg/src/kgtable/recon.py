"""Client for W3C-style reconciliation services (v0.1 draft protocol).

Three wire interactions: GET the service manifest at the endpoint root,
POST form-encoded ``queries=<JSON map>`` for batched reconciliation, and
POST form-encoded ``extend=<JSON>`` for data extension where the
manifest advertises it. Every response is normalized into internal
types before anything else sees it; malformed payloads raise typed
errors and never yield partially parsed results.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import requests

from .errors import (
    MalformedManifest,
    MalformedRequest,
    MalformedResponse,
    NetworkError,
    NoExtensionSupport,
    ServiceError,
)
from .model import Candidate, EntityType, sort_candidates

PROTOCOL_VERSION = "0.1"

#: Fields the reconciliation protocol requires in every service manifest.
MANIFEST_REQUIRED = ("name", "identifierSpace", "schemaSpace")

#: Fields the reconciliation protocol requires in every candidate.
CANDIDATE_REQUIRED = ("id", "name", "score", "match")


@dataclass
class ClientConfig:
    """Per-call HTTP behavior; headers support static auth injection."""

    timeout: float = 30.0
    max_batch: int = 50
    headers: dict[str, str] = field(default_factory=dict)


@dataclass
class ServiceManifest:
    name: str
    identifier_space: str
    schema_space: str
    endpoint_url: str
    extend_capability: bool = False
    propose_properties_url: Optional[str] = None
    raw: dict[str, Any] = field(default_factory=dict)


@dataclass
class ReconQuery:
    query_key: str
    query_text: str
    type_constraint: Optional[str] = None
    limit: Optional[int] = None

    def to_wire(self) -> dict[str, Any]:
        wire: dict[str, Any] = {"query": self.query_text}
        if self.type_constraint:
            wire["type"] = self.type_constraint
        if self.limit is not None:
            wire["limit"] = self.limit
        return wire


@dataclass
class ReconBatch:
    queries: dict[str, ReconQuery]

    def __post_init__(self):
        if not self.queries:
            raise MalformedRequest("reconciliation batch must not be empty")
        for key, query in self.queries.items():
            if key != query.query_key:
                raise MalformedRequest(f"batch key {key!r} != query key {query.query_key!r}")

    def to_wire(self) -> dict[str, Any]:
        return {key: q.to_wire() for key, q in self.queries.items()}


@dataclass
class ReconResult:
    query_key: str
    candidates: list[Candidate]


@dataclass
class ExtensionRequest:
    entity_ids: list[str]
    property_ids: list[str]

    def __post_init__(self):
        if not self.property_ids:
            raise MalformedRequest("extension request needs at least one property id")
        if not self.entity_ids:
            raise MalformedRequest("extension request needs at least one entity id")

    def to_wire(self) -> dict[str, Any]:
        return {"ids": list(self.entity_ids), "properties": [{"id": p} for p in self.property_ids]}


@dataclass
class ExtensionValue:
    """One returned value: a literal or a reference to a KG entity."""

    kind: str  # str | int | float | bool | date | entity
    text: str
    entity_id: Optional[str] = None

    @property
    def is_entity(self) -> bool:
        return self.kind == "entity"


@dataclass
class ExtensionResult:
    meta: list[tuple[str, str]]  # (property id, property name), in request order
    rows: dict[str, dict[str, list[ExtensionValue]]]
    omitted_entities: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


# ---- parsing / normalization ----

def parse_manifest(doc: Any, endpoint_url: str = "") -> ServiceManifest:
    """Validate and normalize a service manifest document."""
    if not isinstance(doc, dict):
        raise MalformedManifest("manifest is not a JSON object")
    for fieldname in MANIFEST_REQUIRED:
        value = doc.get(fieldname)
        if not isinstance(value, str) or not value:
            raise MalformedManifest(f"manifest missing required field {fieldname!r}", field=fieldname)
    extend = doc.get("extend")
    propose_url = None
    if isinstance(extend, dict):
        propose = extend.get("propose_properties")
        if isinstance(propose, dict):
            base = propose.get("service_url") or endpoint_url
            propose_url = str(base).rstrip("/") + str(propose.get("service_path", ""))
    return ServiceManifest(
        name=doc["name"],
        identifier_space=doc["identifierSpace"],
        schema_space=doc["schemaSpace"],
        endpoint_url=endpoint_url,
        extend_capability=isinstance(extend, dict),
        propose_properties_url=propose_url,
        raw=doc,
    )


def parse_candidate(doc: Any) -> Candidate:
    if not isinstance(doc, dict):
        raise MalformedResponse("candidate is not a JSON object")
    for fieldname in CANDIDATE_REQUIRED:
        if fieldname not in doc:
            raise MalformedResponse(f"candidate missing required field {fieldname!r}", field=fieldname)
    entity_id = doc["id"]
    if not isinstance(entity_id, str) or not entity_id:
        raise MalformedResponse("candidate id must be a non-empty string")
    score = doc["score"]
    if isinstance(score, bool) or not isinstance(score, (int, float)) or not math.isfinite(float(score)):
        raise MalformedResponse(f"candidate {entity_id!r} score is not a finite number")
    if not isinstance(doc["match"], bool):
        raise MalformedResponse(f"candidate {entity_id!r} match flag is not a boolean")
    types = []
    for t in doc.get("type") or []:
        if isinstance(t, dict) and "id" in t:
            types.append(EntityType(type_id=str(t["id"]), name=str(t.get("name", ""))))
        elif isinstance(t, str):
            types.append(EntityType(type_id=t, name=t))
        else:
            raise MalformedResponse(f"candidate {entity_id!r} has a malformed type entry")
    description = doc.get("description")
    return Candidate(
        entity_id=entity_id,
        name=str(doc["name"]),
        score=float(score),
        match=doc["match"],
        types=types,
        description=str(description) if description is not None else None,
    )


def parse_recon_response(doc: Any, query_keys: list[str]) -> dict[str, ReconResult]:
    """Normalize a reconciliation response for the given batch keys.

    Keys the service omitted become empty candidate lists; candidates
    come back sorted in the canonical table-model order.
    """
    if not isinstance(doc, dict):
        raise MalformedResponse("reconciliation response is not a JSON object")
    results: dict[str, ReconResult] = {}
    for key in query_keys:
        entry = doc.get(key)
        if entry is None:
            results[key] = ReconResult(query_key=key, candidates=[])
            continue
        if not isinstance(entry, dict) or not isinstance(entry.get("result"), list):
            raise MalformedResponse(f"response entry for {key!r} lacks a result array", queryKey=key)
        candidates = [parse_candidate(c) for c in entry["result"]]
        results[key] = ReconResult(query_key=key, candidates=sort_candidates(candidates))
    return results


def candidate_to_wire(candidate: Candidate) -> dict[str, Any]:
    """Candidate in the external response shape (no internal-only fields)."""
    wire: dict[str, Any] = {
        "id": candidate.entity_id,
        "name": candidate.name,
        "score": candidate.score,
        "match": candidate.match,
        "type": [{"id": t.type_id, "name": t.name} for t in candidate.types],
    }
    if candidate.description is not None:
        wire["description"] = candidate.description
    return wire


def recon_response_to_wire(results: dict[str, ReconResult]) -> dict[str, Any]:
    return {key: {"result": [candidate_to_wire(c) for c in r.candidates]} for key, r in results.items()}


def parse_extension_value(doc: Any) -> ExtensionValue:
    if isinstance(doc, dict):
        if "id" in doc:
            return ExtensionValue(kind="entity", text=str(doc.get("name", doc["id"])), entity_id=str(doc["id"]))
        for kind in ("str", "int", "float", "bool", "date"):
            if kind in doc:
                return ExtensionValue(kind=kind, text=_literal_text(doc[kind]))
        raise MalformedResponse(f"unrecognized extension value object: {sorted(doc)}")
    if isinstance(doc, (str, int, float, bool)):
        return ExtensionValue(kind="str", text=_literal_text(doc))
    raise MalformedResponse("extension value is neither an object nor a literal")


def _literal_text(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def parse_extension_response(doc: Any, request: ExtensionRequest) -> ExtensionResult:
    """Normalize an extension response against what was asked for.

    Every requested entity id is guaranteed a key in ``rows`` (omissions
    become empty maps and are reported); properties the service returned
    but were not requested are dropped with a warning.
    """
    if not isinstance(doc, dict) or not isinstance(doc.get("rows"), dict):
        raise MalformedResponse("extension response lacks a rows object")
    requested = list(request.property_ids)
    names: dict[str, str] = {}
    for entry in doc.get("meta") or []:
        if not isinstance(entry, dict) or "id" not in entry:
            raise MalformedResponse("extension meta entry lacks an id")
        names[str(entry["id"])] = str(entry.get("name", entry["id"]))
    meta = [(pid, names.get(pid, pid)) for pid in requested]

    warnings = []
    extra_meta = [pid for pid in names if pid not in requested]
    if extra_meta:
        warnings.append(f"service returned unrequested properties: {', '.join(sorted(extra_meta))}")

    rows: dict[str, dict[str, list[ExtensionValue]]] = {}
    omitted: list[str] = []
    raw_rows = doc["rows"]
    for entity_id in request.entity_ids:
        raw = raw_rows.get(entity_id)
        if raw is None:
            rows[entity_id] = {}
            omitted.append(entity_id)
            continue
        if not isinstance(raw, dict):
            raise MalformedResponse(f"extension row for {entity_id!r} is not an object")
        parsed: dict[str, list[ExtensionValue]] = {}
        for pid, values in raw.items():
            if pid not in requested:
                continue  # extras dropped; already warned via meta or silently here
            if not isinstance(values, list):
                raise MalformedResponse(f"extension values for ({entity_id!r}, {pid!r}) are not an array")
            parsed[pid] = [parse_extension_value(v) for v in values]
        rows[entity_id] = parsed
    return ExtensionResult(meta=meta, rows=rows, omitted_entities=omitted, warnings=warnings)


# ---- HTTP client ----

class ReconClient:
    """Stateless protocol client; safe to share across threads."""

    def __init__(self, config: Optional[ClientConfig] = None):
        self.config = config or ClientConfig()

    def _get(self, url: str) -> Any:
        try:
            response = requests.get(url, headers=self.config.headers, timeout=self.config.timeout)
        except requests.RequestException as exc:
            raise NetworkError(f"GET {url} failed: {exc}", url=url) from exc
        return self._json_or_error(response, url)

    def _post_form(self, url: str, form: dict[str, str]) -> Any:
        try:
            response = requests.post(url, data=form, headers=self.config.headers, timeout=self.config.timeout)
        except requests.RequestException as exc:
            raise NetworkError(f"POST {url} failed: {exc}", url=url) from exc
        return self._json_or_error(response, url)

    @staticmethod
    def _json_or_error(response: requests.Response, url: str) -> Any:
        if response.status_code >= 400:
            raise ServiceError(
                f"service at {url} answered {response.status_code}: {response.text[:200]}",
                status=response.status_code,
                url=url,
            )
        try:
            return response.json()
        except ValueError as exc:
            raise MalformedResponse(f"service at {url} returned non-JSON content", url=url) from exc

    def fetch_manifest(self, endpoint_url: str) -> ServiceManifest:
        """GET and validate the manifest at the service root."""
        return parse_manifest(self._get(endpoint_url), endpoint_url)

    def reconcile_raw(self, manifest: ServiceManifest, wire_queries: dict[str, Any]) -> Any:
        """POST already-shaped query documents; returns the raw response."""
        if not wire_queries:
            raise MalformedRequest("reconciliation batch must not be empty")
        if len(wire_queries) > self.config.max_batch:
            raise MalformedRequest(
                f"batch of {len(wire_queries)} exceeds the configured maximum of {self.config.max_batch}"
            )
        return self._post_form(manifest.endpoint_url, {"queries": json.dumps(wire_queries)})

    def reconcile_batch(self, manifest: ServiceManifest, batch: ReconBatch) -> dict[str, ReconResult]:
        """Run one batched reconciliation call, one result per query key."""
        doc = self.reconcile_raw(manifest, batch.to_wire())
        return parse_recon_response(doc, list(batch.queries))

    def extend_raw(self, manifest: ServiceManifest, wire_request: dict[str, Any]) -> Any:
        """POST an already-shaped extension document; returns the raw response."""
        if not manifest.extend_capability:
            raise NoExtensionSupport(f"service {manifest.name!r} does not advertise data extension")
        return self._post_form(manifest.endpoint_url, {"extend": json.dumps(wire_request)})

    def extend_entities(self, manifest: ServiceManifest, request: ExtensionRequest) -> ExtensionResult:
        """Fetch property values for reconciled entities."""
        doc = self.extend_raw(manifest, request.to_wire())
        return parse_extension_response(doc, request)

    def propose_properties(self, manifest: ServiceManifest, type_id: Optional[str] = None) -> list[tuple[str, str]]:
        """Ask the service which properties it can extend with."""
        if not manifest.extend_capability:
            raise NoExtensionSupport(f"service {manifest.name!r} does not advertise data extension")
        url = manifest.propose_properties_url or manifest.endpoint_url
        if type_id:
            sep = "&" if "?" in url else "?"
            url = f"{url}{sep}type={type_id}"
        doc = self._get(url)
        if not isinstance(doc, dict) or not isinstance(doc.get("properties"), list):
            raise MalformedResponse("propose-properties response lacks a properties array", url=url)
        out: list[tuple[str, str]] = []
        for entry in doc["properties"]:
            if not isinstance(entry, dict) or "id" not in entry:
                raise MalformedResponse("propose-properties entry lacks an id", url=url)
            out.append((str(entry["id"]), str(entry.get("name", entry["id"]))))
        return out
