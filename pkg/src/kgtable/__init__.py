"""Semantic table enrichment: reconcile, refine, and extend tables
against knowledge-graph services, with full undo/redo and durable
storage. The same engine backs the CLI and the REST service.
"""

from .model import (
    AnnotatedTable,
    Candidate,
    Cell,
    Column,
    ColumnAnnotation,
    ColumnRole,
    EntityType,
    MatchStatus,
    PropertyAnnotation,
    Row,
    table_stats,
    validate_table,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedTable",
    "Candidate",
    "Cell",
    "Column",
    "ColumnAnnotation",
    "ColumnRole",
    "EntityType",
    "MatchStatus",
    "PropertyAnnotation",
    "Row",
    "table_stats",
    "validate_table",
    "__version__",
]
