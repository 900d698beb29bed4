"""screenloop: active-learning assistant for total-recall document screening."""

from .corpus import (
    Corpus,
    Document,
    ImportResult,
    IngestError,
    LabelJournal,
    LabelRecord,
    UnknownDocumentError,
    export_csv,
    import_csv,
    record_label,
)
from .engine import (
    RecallEstimate,
    Session,
    SessionConfig,
    StateError,
    start_session,
)
from .metrics import ConfusionTable, compute_tool_metrics, compute_vote_metrics
from .simharness import SimulationResult, generate_synthetic, simulate

__all__ = [
    "Corpus",
    "Document",
    "ImportResult",
    "IngestError",
    "LabelJournal",
    "LabelRecord",
    "UnknownDocumentError",
    "export_csv",
    "import_csv",
    "record_label",
    "RecallEstimate",
    "Session",
    "SessionConfig",
    "StateError",
    "start_session",
    "ConfusionTable",
    "compute_tool_metrics",
    "compute_vote_metrics",
    "SimulationResult",
    "generate_synthetic",
    "simulate",
]
