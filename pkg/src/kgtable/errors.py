"""Exception hierarchy shared by every layer of the package.

Each exception carries a stable ``code`` string used by the REST error
envelope and by the CLI exit-code mapping, plus an optional ``details``
dict with structured context (ids, field names, locations).
"""

from __future__ import annotations

from typing import Any


class KgTableError(Exception):
    """Base class for all errors raised by this package."""

    code = "EngineError"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details

    @property
    def message(self) -> str:
        return str(self)

    def envelope(self) -> dict[str, Any]:
        """The uniform JSON error shape: code, message, details."""
        return {"code": self.code, "message": self.message, "details": self.details}


# ---- table model ----

class UnknownTarget(KgTableError):
    code = "UnknownTarget"


class InvalidEdit(KgTableError):
    code = "InvalidEdit"


class EmptyHistory(KgTableError):
    code = "EmptyHistory"


# ---- reconciliation protocol client ----

class NetworkError(KgTableError):
    code = "NetworkError"


class MalformedManifest(KgTableError):
    code = "MalformedManifest"


class MalformedRequest(KgTableError):
    code = "MalformedRequest"


class MalformedResponse(KgTableError):
    code = "MalformedResponse"


class ServiceError(KgTableError):
    """Non-success status from an external service; keeps the service message."""

    code = "ServiceError"


class NoExtensionSupport(KgTableError):
    code = "NoExtensionSupport"


# ---- service registry ----

class DuplicateServiceId(KgTableError):
    code = "DuplicateServiceId"


class ManifestValidationFailed(KgTableError):
    code = "ManifestValidationFailed"


class UnknownService(KgTableError):
    code = "UnknownService"


class ParamValidationError(KgTableError):
    code = "ParamValidationError"


class ConfigError(KgTableError):
    code = "ConfigError"


# ---- annotation ----

class UnknownColumn(KgTableError):
    code = "UnknownColumn"


class UnknownCell(KgTableError):
    code = "UnknownCell"


class UnknownCandidate(KgTableError):
    code = "UnknownCandidate"


class DuplicateCandidate(KgTableError):
    code = "DuplicateCandidate"


class StaleCellId(KgTableError):
    code = "StaleCellId"


class SubjectConflict(KgTableError):
    code = "SubjectConflict"


class UnknownTargetColumn(KgTableError):
    code = "UnknownTargetColumn"


# ---- refinement ----

class InvalidFilter(KgTableError):
    code = "InvalidFilter"


class EmptyTypeSet(KgTableError):
    code = "EmptyTypeSet"


class NonFiniteThreshold(KgTableError):
    code = "NonFiniteThreshold"


class InvalidQuery(KgTableError):
    code = "InvalidQuery"


# ---- extension ----

class NoMatchedCells(KgTableError):
    code = "NoMatchedCells"


class PreconditionUnmatchedColumn(KgTableError):
    code = "PreconditionUnmatchedColumn"


# ---- persistence ----

class ParseError(KgTableError):
    code = "ParseError"


class EmptyTable(KgTableError):
    code = "EmptyTable"


class UnsupportedFormat(KgTableError):
    code = "UnsupportedFormat"


class UnknownTable(KgTableError):
    code = "UnknownTable"


class StorageError(KgTableError):
    code = "StorageError"


class VersionMismatch(KgTableError):
    code = "VersionMismatch"


# ---- service / jobs ----

class UnknownJob(KgTableError):
    code = "UnknownJob"


class PortBindError(KgTableError):
    code = "PortBindError"


#: Errors whose root cause is the network or a misbehaving external service.
SERVICE_FAMILY = (
    NetworkError,
    ServiceError,
    MalformedManifest,
    MalformedResponse,
    ManifestValidationFailed,
    NoExtensionSupport,
)

#: Errors caused by unreadable or unwritable files and stores.
IO_FAMILY = (ParseError, EmptyTable, UnsupportedFormat, StorageError, VersionMismatch)
