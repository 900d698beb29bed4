"""Document store for screening sessions.

Holds the candidate set, the human decisions made against it, and the
CSV/journal plumbing that moves both in and out of a session.  Label
history is append-only: relabeling a document adds a record with a higher
sequence number, and the active label of a document is always the record
with the highest sequence.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

INCLUDED = "included"
EXCLUDED = "excluded"
DECISIONS = (INCLUDED, EXCLUDED)

SOURCE_HUMAN = "human"
SOURCE_REPLAY = "replay"

# Export/import schema.  Fixed column order; `label` holds yes/no/empty.
CSV_COLUMNS = ["Document Title", "Abstract", "Year", "PDF Link", "label"]
REQUIRED_COLUMNS = ["Document Title", "Abstract"]


class IngestError(Exception):
    """Raised when a search-export file cannot be ingested."""


class UnknownDocumentError(KeyError):
    """Raised when a doc_id does not exist in the corpus."""


@dataclass(frozen=True)
class Document:
    doc_id: int
    title: str
    abstract: str = ""
    year: Optional[int] = None
    link: Optional[str] = None

    @property
    def text(self) -> str:
        """Title and abstract joined, the text the learners see."""
        return f"{self.title} {self.abstract}".strip()


@dataclass(frozen=True)
class LabelRecord:
    doc_id: int
    decision: str
    source: str
    sequence: int


class Corpus:
    """Ordered document collection plus append-only label history.

    Mutations (``record_label``) are expected to be serialized by the
    caller; readers can safely iterate ``documents`` and the label maps
    between mutations.
    """

    def __init__(self, documents: Iterable[Document] = ()):
        self.documents: list[Document] = list(documents)
        self._by_id: dict[int, Document] = {d.doc_id: d for d in self.documents}
        if len(self._by_id) != len(self.documents):
            raise ValueError("duplicate doc_id in corpus")
        self.history: list[LabelRecord] = []
        self._active: dict[int, LabelRecord] = {}

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def document(self, doc_id: int) -> Document:
        try:
            return self._by_id[doc_id]
        except KeyError:
            raise UnknownDocumentError(doc_id) from None

    @property
    def next_sequence(self) -> int:
        return self.history[-1].sequence + 1 if self.history else 0

    def record_label(
        self, doc_id: int, decision: str, source: str = SOURCE_HUMAN
    ) -> LabelRecord:
        """Record a decision for ``doc_id``, superseding any prior label."""
        if doc_id not in self._by_id:
            raise UnknownDocumentError(doc_id)
        if decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}, got {decision!r}")
        record = LabelRecord(doc_id, decision, source, self.next_sequence)
        self.history.append(record)
        self._active[doc_id] = record
        return record

    def active_label(self, doc_id: int) -> Optional[LabelRecord]:
        self.document(doc_id)
        return self._active.get(doc_id)

    # Set views, always in ascending doc_id order for determinism.
    def labeled_ids(self) -> list[int]:
        return sorted(self._active)

    def included_ids(self) -> list[int]:
        return sorted(i for i, r in self._active.items() if r.decision == INCLUDED)

    def excluded_ids(self) -> list[int]:
        return sorted(i for i, r in self._active.items() if r.decision == EXCLUDED)

    def unlabeled_ids(self) -> list[int]:
        return sorted(d.doc_id for d in self.documents if d.doc_id not in self._active)

    @property
    def n_labeled(self) -> int:
        return len(self._active)

    @property
    def n_included(self) -> int:
        return sum(1 for r in self._active.values() if r.decision == INCLUDED)

    @property
    def n_unlabeled(self) -> int:
        return len(self.documents) - len(self._active)

    def copy_documents(self) -> "Corpus":
        """Fresh corpus over the same documents with no labels."""
        return Corpus(self.documents)


@dataclass
class ImportResult:
    corpus: Corpus
    rows_read: int = 0
    skipped_empty_title: int = 0
    warnings: int = 0


def _label_to_decision(raw: str) -> Optional[str]:
    v = raw.strip().lower()
    if v == "yes":
        return INCLUDED
    if v == "no":
        return EXCLUDED
    return None


def import_csv(path: str | Path) -> ImportResult:
    """Ingest a search-export CSV into a Corpus.

    The header must contain `Document Title` and `Abstract`; `Year`,
    `PDF Link` and `label` are optional.  Rows with an empty title are
    skipped and counted.  A `label` of yes/no becomes a replay
    LabelRecord, which is how ground-truth corpora enter the system.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise IngestError(f"missing required column: {col}")
        has_label = "label" in header

        result = ImportResult(Corpus())
        docs: list[Document] = []
        pending_labels: list[tuple[int, str]] = []
        doc_id = 0
        for row in reader:
            result.rows_read += 1
            title = (row.get("Document Title") or "").strip()
            if not title:
                result.skipped_empty_title += 1
                continue
            abstract = (row.get("Abstract") or "").strip()
            year_raw = (row.get("Year") or "").strip()
            year: Optional[int] = None
            if year_raw:
                try:
                    year = int(year_raw)
                except ValueError:
                    result.warnings += 1
            link = (row.get("PDF Link") or "").strip() or None
            docs.append(Document(doc_id, title, abstract, year, link))
            if has_label:
                raw = row.get("label") or ""
                decision = _label_to_decision(raw)
                if decision is not None:
                    pending_labels.append((doc_id, decision))
                elif raw.strip():
                    result.warnings += 1
            doc_id += 1

        result.corpus = Corpus(docs)
        for did, decision in pending_labels:
            result.corpus.record_label(did, decision, source=SOURCE_REPLAY)
        return result


def record_label(
    corpus: Corpus, doc_id: int, decision: str, source: str = SOURCE_HUMAN
) -> LabelRecord:
    """Record a decision against the corpus (see Corpus.record_label)."""
    return corpus.record_label(doc_id, decision, source)


def export_csv(corpus: Corpus, path: str | Path) -> int:
    """Write the corpus with active label states; returns data rows written."""
    path = Path(path)
    try:
        fh = path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc
    with fh:
        fh.write(export_csv_text(corpus))
    return len(corpus)


def export_csv_text(corpus: Corpus) -> str:
    """Export as a CSV string (column order fixed, RFC-4180 quoting)."""
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for doc in corpus.documents:
        record = corpus.active_label(doc.doc_id)
        if record is None:
            label = ""
        else:
            label = "yes" if record.decision == INCLUDED else "no"
        writer.writerow(
            [doc.title, doc.abstract, "" if doc.year is None else doc.year, doc.link or "", label]
        )
    return buf.getvalue()


class LabelJournal:
    """Append-only JSON-lines journal of label events for crash recovery.

    One record per label event: {sequence, doc_id, decision, source,
    timestamp}.  Replaying the journal over a freshly imported corpus
    restores the exact label history of a session.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, record: LabelRecord, timestamp: Optional[float] = None) -> None:
        entry = {
            "sequence": record.sequence,
            "doc_id": record.doc_id,
            "decision": record.decision,
            "source": record.source,
            "timestamp": time.time() if timestamp is None else timestamp,
        }
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")
            fh.flush()

    def load(self) -> list[dict]:
        if not self.path.exists():
            return []
        entries = []
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    entries.append(json.loads(line))
        entries.sort(key=lambda e: e["sequence"])
        return entries
