"""Service registry: named reconciliation/extension services plus the
transformer pipeline that adapts each one to the internal standard.

Reads are lock-free snapshots of an immutable dict; registration and
config reloads swap the whole dict under a writer lock. Invocations are
stateless, so callers may run them in parallel.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from .errors import (
    ConfigError,
    DuplicateServiceId,
    KgTableError,
    ManifestValidationFailed,
    ParamValidationError,
    UnknownService,
)
from .recon import (
    ExtensionRequest,
    ExtensionResult,
    ReconClient,
    ReconQuery,
    ReconResult,
    ServiceManifest,
    parse_extension_response,
    parse_recon_response,
)
from .transformers import Transformer, compile_transformer

log = logging.getLogger(__name__)


class ServiceKind(str, Enum):
    RECONCILIATION = "RECONCILIATION"
    EXTENSION = "EXTENSION"
    BOTH = "BOTH"

    def supports(self, wanted: "ServiceKind") -> bool:
        return self is ServiceKind.BOTH or self is wanted


class ParamType(str, Enum):
    STRING = "STRING"
    NUMBER = "NUMBER"
    ENUM = "ENUM"
    COLUMN_REF = "COLUMN_REF"
    KG_TYPE = "KG_TYPE"


@dataclass
class ParamSpec:
    param_name: str
    param_type: ParamType
    required: bool = False
    enum_values: Optional[list[str]] = None

    def __post_init__(self):
        if self.param_type is ParamType.ENUM and not self.enum_values:
            raise ConfigError(f"ENUM param {self.param_name!r} needs a non-empty enumValues list")

    def check(self, value: Any) -> Optional[str]:
        """Return a problem description, or None when the value is fine."""
        if value is None:
            return f"param {self.param_name!r} is required" if self.required else None
        if self.param_type is ParamType.NUMBER:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return f"param {self.param_name!r} must be a number"
        elif self.param_type is ParamType.ENUM:
            if value not in (self.enum_values or []):
                return f"param {self.param_name!r} must be one of {self.enum_values}"
        elif not isinstance(value, str) or not value:
            return f"param {self.param_name!r} must be a non-empty string"
        return None

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "name": self.param_name,
            "type": self.param_type.value,
            "required": self.required,
        }
        if self.enum_values is not None:
            doc["enumValues"] = list(self.enum_values)
        return doc

    @staticmethod
    def from_doc(doc: dict[str, Any]) -> "ParamSpec":
        try:
            param_type = ParamType(doc["type"])
        except (KeyError, ValueError):
            raise ConfigError(f"param {doc.get('name')!r} has an invalid type {doc.get('type')!r}")
        if "name" not in doc or not isinstance(doc["name"], str) or not doc["name"]:
            raise ConfigError("param spec needs a non-empty name")
        enum_values = doc.get("enumValues")
        if enum_values is not None and not isinstance(enum_values, list):
            raise ConfigError(f"param {doc['name']!r} enumValues must be a list")
        return ParamSpec(
            param_name=doc["name"],
            param_type=param_type,
            required=bool(doc.get("required", False)),
            enum_values=list(enum_values) if enum_values is not None else None,
        )


@dataclass
class ServiceDescriptor:
    service_id: str
    kind: ServiceKind
    endpoint_url: str
    request_transformer: Transformer
    response_transformer: Transformer
    ui_hints: list[ParamSpec] = field(default_factory=list)
    manifest: Optional[ServiceManifest] = None  # None until lazily fetched

    def summary(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "serviceId": self.service_id,
            "kind": self.kind.value,
            "endpointUrl": self.endpoint_url,
            "params": [p.to_doc() for p in self.ui_hints],
        }
        if self.manifest is not None:
            doc["name"] = self.manifest.name
            doc["identifierSpace"] = self.manifest.identifier_space
            doc["extendCapability"] = self.manifest.extend_capability
        return doc


#: Param names the registry itself interprets when building queries.
TYPE_PARAM = "type"
LIMIT_PARAM = "limit"


class ServiceRegistry:
    def __init__(self, client: Optional[ReconClient] = None):
        self.client = client or ReconClient()
        self._services: dict[str, ServiceDescriptor] = {}
        self._write_lock = threading.Lock()

    # ---- registration / lookup ----

    def register(
        self,
        service_id: str,
        kind: ServiceKind,
        endpoint_url: str,
        request_transformer: Optional[Transformer] = None,
        response_transformer: Optional[Transformer] = None,
        params: Optional[list[ParamSpec]] = None,
        validate: bool = True,
    ) -> str:
        """Add one service; with validate=True the manifest is fetched now."""
        descriptor = ServiceDescriptor(
            service_id=service_id,
            kind=kind,
            endpoint_url=endpoint_url,
            request_transformer=request_transformer or Transformer(),
            response_transformer=response_transformer or Transformer(),
            ui_hints=list(params or []),
        )
        if validate:
            try:
                descriptor.manifest = self.client.fetch_manifest(endpoint_url)
            except KgTableError as exc:
                raise ManifestValidationFailed(
                    f"manifest check failed for {service_id!r}: {exc.message}", serviceId=service_id
                ) from exc
        with self._write_lock:
            if service_id in self._services:
                raise DuplicateServiceId(f"service id {service_id!r} is already registered")
            services = dict(self._services)
            services[service_id] = descriptor
            self._services = services
        log.info("registered service %s (%s) at %s", service_id, kind.value, endpoint_url)
        return service_id

    def get(self, service_id: str) -> ServiceDescriptor:
        descriptor = self._services.get(service_id)
        if descriptor is None:
            raise UnknownService(f"no service registered under id {service_id!r}", serviceId=service_id)
        return descriptor

    def list_services(self, kind_filter: Optional[ServiceKind] = None) -> list[dict[str, Any]]:
        services = self._services
        rows = []
        for service_id in sorted(services):
            descriptor = services[service_id]
            if kind_filter is not None and not descriptor.kind.supports(kind_filter):
                continue
            rows.append(descriptor.summary())
        return rows

    def manifest_for(self, descriptor: ServiceDescriptor) -> ServiceManifest:
        """Return the cached manifest, fetching it on first use."""
        if descriptor.manifest is None:
            descriptor.manifest = self.client.fetch_manifest(descriptor.endpoint_url)
        return descriptor.manifest

    # ---- invocation pipeline ----

    def check_params(self, descriptor: ServiceDescriptor, params: dict[str, Any]) -> None:
        problems = []
        known = {spec.param_name for spec in descriptor.ui_hints}
        for spec in descriptor.ui_hints:
            problem = spec.check(params.get(spec.param_name))
            if problem:
                problems.append(problem)
        for name in params:
            if name not in known and name not in (TYPE_PARAM, LIMIT_PARAM):
                problems.append(f"unexpected param {name!r}")
        if problems:
            raise ParamValidationError("; ".join(problems), serviceId=descriptor.service_id)

    def invoke_reconciliation(
        self,
        service_id: str,
        queries: dict[str, str],
        params: Optional[dict[str, Any]] = None,
    ) -> dict[str, ReconResult]:
        """Reconcile labels (keyed by caller ids) through the transformer pipeline."""
        descriptor = self.get(service_id)
        if not descriptor.kind.supports(ServiceKind.RECONCILIATION):
            raise UnknownService(
                f"service {service_id!r} does not offer reconciliation", serviceId=service_id
            )
        params = dict(params or {})
        self.check_params(descriptor, params)
        manifest = self.manifest_for(descriptor)

        type_constraint = params.get(TYPE_PARAM)
        limit = params.get(LIMIT_PARAM)
        wire = {}
        for key, label in queries.items():
            query = ReconQuery(
                query_key=key,
                query_text=label,
                type_constraint=str(type_constraint) if type_constraint else None,
                limit=int(limit) if limit is not None else None,
            )
            wire[key] = descriptor.request_transformer.apply(query.to_wire())

        raw = self.client.reconcile_raw(manifest, wire)
        shaped = self._reshape_response(raw, descriptor)
        return parse_recon_response(shaped, list(queries))

    @staticmethod
    def _reshape_response(raw: Any, descriptor: ServiceDescriptor) -> Any:
        """Run the response transformer over each candidate object."""
        if not isinstance(raw, dict):
            return raw
        shaped: dict[str, Any] = {}
        for key, entry in raw.items():
            if isinstance(entry, dict) and isinstance(entry.get("result"), list):
                shaped[key] = {
                    **entry,
                    "result": [
                        descriptor.response_transformer.apply(c) if isinstance(c, dict) else c
                        for c in entry["result"]
                    ],
                }
            else:
                shaped[key] = entry
        return shaped

    def invoke_extension(
        self,
        service_id: str,
        entity_ids: list[str],
        property_ids: list[str],
        params: Optional[dict[str, Any]] = None,
    ) -> ExtensionResult:
        """Fetch extension values through the transformer pipeline."""
        descriptor = self.get(service_id)
        if not descriptor.kind.supports(ServiceKind.EXTENSION):
            raise UnknownService(f"service {service_id!r} does not offer extension", serviceId=service_id)
        self.check_params(descriptor, dict(params or {}))
        manifest = self.manifest_for(descriptor)
        request = ExtensionRequest(entity_ids=list(entity_ids), property_ids=list(property_ids))
        wire = descriptor.request_transformer.apply(request.to_wire())
        raw = self.client.extend_raw(manifest, wire)
        if isinstance(raw, dict):
            raw = descriptor.response_transformer.apply(raw)
        return parse_extension_response(raw, request)

    def propose_properties(self, service_id: str, type_id: Optional[str] = None) -> list[tuple[str, str]]:
        descriptor = self.get(service_id)
        if not descriptor.kind.supports(ServiceKind.EXTENSION):
            raise UnknownService(f"service {service_id!r} does not offer extension", serviceId=service_id)
        return self.client.propose_properties(self.manifest_for(descriptor), type_id)

    # ---- config file ----

    def load_config(self, path: str | Path, validate: bool = True) -> list[str]:
        """Replace the registry contents from a JSON config file.

        Returns the loaded service ids. Errors point at the offending
        line where one can be determined.
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read service config {path}: {exc}", path=str(path)) from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"service config {path} is not valid JSON: {exc.msg}", path=str(path), line=exc.lineno
            ) from exc
        if not isinstance(doc, list):
            raise ConfigError(f"service config {path} must be a JSON array", path=str(path), line=1)

        loaded: dict[str, ServiceDescriptor] = {}
        for index, entry in enumerate(doc):
            try:
                descriptor = self._descriptor_from_config(entry)
            except KgTableError as exc:
                line = _line_of(text, entry.get("serviceId")) if isinstance(entry, dict) else None
                raise ConfigError(
                    f"service config entry {index}: {exc.message}",
                    path=str(path),
                    line=line,
                    entry=index,
                ) from exc
            if descriptor.service_id in loaded:
                raise ConfigError(
                    f"duplicate serviceId {descriptor.service_id!r} in config",
                    path=str(path),
                    line=_line_of(text, descriptor.service_id),
                )
            if validate:
                try:
                    descriptor.manifest = self.client.fetch_manifest(descriptor.endpoint_url)
                except KgTableError as exc:
                    raise ManifestValidationFailed(
                        f"manifest check failed for {descriptor.service_id!r}: {exc.message}",
                        serviceId=descriptor.service_id,
                    ) from exc
            loaded[descriptor.service_id] = descriptor
        with self._write_lock:
            self._services = loaded
        log.info("loaded %d services from %s", len(loaded), path)
        return sorted(loaded)

    @staticmethod
    def _descriptor_from_config(entry: Any) -> ServiceDescriptor:
        if not isinstance(entry, dict):
            raise ConfigError("service entry must be an object")
        service_id = entry.get("serviceId")
        if not isinstance(service_id, str) or not service_id:
            raise ConfigError("service entry needs a non-empty serviceId")
        try:
            kind = ServiceKind(entry.get("kind", "RECONCILIATION"))
        except ValueError:
            raise ConfigError(f"service {service_id!r} has an invalid kind {entry.get('kind')!r}")
        endpoint = entry.get("endpointUrl")
        if not isinstance(endpoint, str) or not endpoint:
            raise ConfigError(f"service {service_id!r} needs an endpointUrl")
        transformers = entry.get("transformers") or {}
        if not isinstance(transformers, dict):
            raise ConfigError(f"service {service_id!r} transformers must be an object")
        params_doc = entry.get("params") or []
        if not isinstance(params_doc, list):
            raise ConfigError(f"service {service_id!r} params must be a list")
        return ServiceDescriptor(
            service_id=service_id,
            kind=kind,
            endpoint_url=endpoint,
            request_transformer=compile_transformer(transformers.get("request")),
            response_transformer=compile_transformer(transformers.get("response")),
            ui_hints=[ParamSpec.from_doc(p) for p in params_doc],
        )


def _line_of(text: str, needle: Optional[str]) -> Optional[int]:
    """Best-effort 1-based line of the first occurrence of a config value."""
    if not needle:
        return None
    position = text.find(json.dumps(needle))
    if position < 0:
        position = text.find(str(needle))
    if position < 0:
        return None
    return text.count("\n", 0, position) + 1
