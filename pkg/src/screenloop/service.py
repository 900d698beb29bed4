"""HTTP facade for the screening engine.

Endpoints (JSON unless noted):

* ``POST /sessions`` — create a session from an uploaded CSV (multipart
  field ``file``) or JSON (``csv_path`` or ``csv_content``), plus config
  fields; returns the session id.
* ``GET /sessions/{id}/next`` — current query batch; ``?force=true``
  resumes past a reached-target stop.
* ``POST /sessions/{id}/labels`` — submit decisions, returns fresh stats.
* ``GET /sessions/{id}/stats`` — read-only snapshot.
* ``GET /sessions/{id}/export`` — CSV of all documents with label states.
* ``GET /sessions/{id}/error-checks`` — likely-misclassified documents.
* ``GET /sessions/{id}/metrics`` — evaluation against attached ground
  truth (only for sessions created with ``labels_as_ground_truth``).

Sessions persist under the data directory (corpus CSV, config, label
journal); a restarted server resumes them on first touch.  Per-session
access is serialized with one lock each, so every response reflects a
consistent state.

The service layer holds no screening logic of its own; everything
statistical happens in the engine and models modules.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from . import metrics as metrics_mod
from .corpus import (
    DECISIONS,
    Corpus,
    IngestError,
    LabelJournal,
    UnknownDocumentError,
    export_csv_text,
    import_csv,
)
from .engine import (
    DONE,
    TARGET_REACHED,
    ConfigurationError,
    Session,
    SessionConfig,
    StateError,
    start_session,
)
from .simharness import ground_truth

DEFAULT_ERROR_CHECKS = 10

CONFIG_FIELDS = (
    "target_recall",
    "batch_size",
    "strategy_threshold",
    "rng_seed",
    "bootstrap_query",
)


class NotFoundError(Exception):
    pass


@dataclass
class SessionRuntime:
    session: Session
    truth: Optional[dict[int, bool]]
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """Disk-backed session registry; one directory per session."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        (self.data_dir / "sessions").mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, SessionRuntime] = {}
        self._registry_lock = threading.Lock()

    def _session_dir(self, session_id: str) -> Path:
        return self.data_dir / "sessions" / session_id

    def create(
        self,
        csv_text: str,
        config: SessionConfig,
        labels_as_ground_truth: bool = False,
    ) -> tuple[str, SessionRuntime]:
        session_id = uuid.uuid4().hex[:12]
        sdir = self._session_dir(session_id)
        sdir.mkdir(parents=True)
        (sdir / "corpus.csv").write_text(csv_text, encoding="utf-8")
        (sdir / "config.json").write_text(
            json.dumps(
                {
                    **{f: getattr(config, f) for f in CONFIG_FIELDS},
                    "labels_as_ground_truth": labels_as_ground_truth,
                }
            ),
            encoding="utf-8",
        )
        runtime = self._build(sdir, config, labels_as_ground_truth)
        with self._registry_lock:
            self._sessions[session_id] = runtime
        return session_id, runtime

    def _build(
        self, sdir: Path, config: SessionConfig, labels_as_ground_truth: bool
    ) -> SessionRuntime:
        result = import_csv(sdir / "corpus.csv")
        corpus = result.corpus
        truth: Optional[dict[int, bool]] = None
        if labels_as_ground_truth:
            truth = ground_truth(corpus)
            corpus = corpus.copy_documents()

        journal = LabelJournal(sdir / "journal.jsonl")
        session = start_session(corpus, config)
        for entry in journal.load():
            session.submit_labels(
                [(entry["doc_id"], entry["decision"])], source=entry["source"]
            )
        session.journal = journal
        return SessionRuntime(session=session, truth=truth)

    def get(self, session_id: str) -> SessionRuntime:
        with self._registry_lock:
            runtime = self._sessions.get(session_id)
        if runtime is not None:
            return runtime
        sdir = self._session_dir(session_id)
        if not (sdir / "config.json").exists():
            raise NotFoundError(session_id)
        raw = json.loads((sdir / "config.json").read_text(encoding="utf-8"))
        labels_as_truth = raw.pop("labels_as_ground_truth", False)
        runtime = self._build(sdir, SessionConfig(**raw), labels_as_truth)
        with self._registry_lock:
            # Another thread may have loaded it concurrently; keep the first.
            runtime = self._sessions.setdefault(session_id, runtime)
        return runtime


def _doc_payload(corpus: Corpus, doc_id: int) -> dict:
    doc = corpus.document(doc_id)
    return {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "abstract": doc.abstract,
        "year": doc.year,
        "link": doc.link,
    }


def create_app(data_dir: str | Path) -> FastAPI:
    app = FastAPI(title="screenloop")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(data_dir)
    app.state.store = store

    @app.exception_handler(NotFoundError)
    async def _not_found(_, exc):
        return JSONResponse({"error": f"unknown session: {exc}"}, status_code=404)

    @app.exception_handler(IngestError)
    async def _ingest(_, exc):
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.exception_handler(UnknownDocumentError)
    async def _unknown_doc(_, exc):
        return JSONResponse(
            {"error": "unknown doc_id", "doc_id": exc.args[0]}, status_code=400
        )

    @app.exception_handler(StateError)
    async def _state(_, exc):
        return JSONResponse({"error": str(exc)}, status_code=409)

    @app.exception_handler(ConfigurationError)
    async def _config(_, exc):
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.exception_handler(ValueError)
    async def _value(_, exc):
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.post("/sessions")
    async def create_session(request: Request):
        content_type = request.headers.get("content-type", "")
        params: dict = {}
        csv_text: Optional[str] = None
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("file")
            if upload is not None:
                csv_text = (await upload.read()).decode("utf-8")
            params = {k: v for k, v in form.items() if k != "file"}
        else:
            body = await request.json() if await request.body() else {}
            params = dict(body)
            csv_text = params.pop("csv_content", None)
            csv_path = params.pop("csv_path", None)
            if csv_text is None and csv_path:
                try:
                    csv_text = Path(csv_path).read_text(encoding="utf-8")
                except OSError as exc:
                    raise IngestError(f"cannot read {csv_path}: {exc}")
        if csv_text is None:
            raise IngestError("no corpus provided (file upload, csv_content, or csv_path)")

        kwargs = {}
        for name in CONFIG_FIELDS:
            if name in params and params[name] != "":
                value = params[name]
                if name in ("batch_size", "strategy_threshold", "rng_seed"):
                    value = int(value)
                elif name == "target_recall":
                    value = float(value)
                kwargs[name] = value
        truth_flag = str(params.get("labels_as_ground_truth", "false")).lower() in (
            "true",
            "1",
            "yes",
        )
        config = SessionConfig(**kwargs)
        session_id, runtime = store.create(csv_text, config, truth_flag)
        with runtime.lock:
            stats = runtime.session.stats()
        return {"session_id": session_id, **stats}

    @app.get("/sessions/{session_id}/next")
    def get_next(session_id: str, force: bool = False):
        runtime = store.get(session_id)
        with runtime.lock:
            session = runtime.session
            if session.phase == DONE:
                stopped, reason = session.should_stop()
                if force and reason == TARGET_REACHED:
                    session.resume()
                else:
                    return {"phase": DONE, "batch": [], "stop_reason": reason}
            batch = session.next_batch()
            return {
                "phase": session.phase,
                "batch": [_doc_payload(session.corpus, d) for d in batch],
                "stop_reason": None,
            }

    @app.post("/sessions/{session_id}/labels")
    async def post_labels(session_id: str, request: Request):
        body = await request.json()
        labels = body.get("labels", [])
        pairs: list[tuple[int, str]] = []
        for item in labels:
            decision = item.get("decision")
            if decision not in DECISIONS:
                raise ValueError(f"decision must be one of {DECISIONS}, got {decision!r}")
            pairs.append((int(item["doc_id"]), decision))
        runtime = store.get(session_id)
        with runtime.lock:
            runtime.session.submit_labels(pairs)
            return runtime.session.stats()

    @app.get("/sessions/{session_id}/stats")
    def get_stats(session_id: str):
        runtime = store.get(session_id)
        with runtime.lock:
            return runtime.session.stats()

    @app.get("/sessions/{session_id}/export")
    def get_export(session_id: str):
        runtime = store.get(session_id)
        with runtime.lock:
            text = export_csv_text(runtime.session.corpus)
        return Response(
            content=text,
            media_type="text/csv",
            headers={"Content-Disposition": "attachment; filename=screening.csv"},
        )

    @app.get("/sessions/{session_id}/error-checks")
    def get_error_checks(session_id: str, k: int = DEFAULT_ERROR_CHECKS):
        runtime = store.get(session_id)
        with runtime.lock:
            session = runtime.session
            if session.model is None:
                return {"doc_ids": [], "documents": []}
            ids = session.suggest_error_checks(k)
            return {
                "doc_ids": ids,
                "documents": [
                    {
                        **_doc_payload(session.corpus, d),
                        "decision": session.corpus.active_label(d).decision,
                    }
                    for d in ids
                ],
            }

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        runtime = store.get(session_id)
        if runtime.truth is None:
            return JSONResponse(
                {"error": "session has no attached ground truth"}, status_code=409
            )
        with runtime.lock:
            corpus = runtime.session.corpus
            truth = runtime.truth
            included = set(corpus.included_ids())
            excluded = set(corpus.excluded_ids())
            unlabeled = set(corpus.unlabeled_ids())
            table = metrics_mod.ConfusionTable(
                tool_yes_truth_yes=sum(1 for d in included if truth[d]),
                tool_no_truth_yes=sum(1 for d in excluded if truth[d]),
                tool_ignored_truth_yes=sum(1 for d in unlabeled if truth[d]),
                tool_yes_truth_no=sum(1 for d in included if not truth[d]),
                tool_no_truth_no=sum(1 for d in excluded if not truth[d]),
                tool_ignored_truth_no=sum(1 for d in unlabeled if not truth[d]),
                corpus_size=len(corpus),
            )
            trace = [(r.doc_id, r.decision) for r in corpus.history]
            curve = metrics_mod.recall_cost_curve(trace, truth) if trace else []
            return {
                "metrics": metrics_mod.compute_tool_metrics(table),
                "curve": [[s, r] for s, r in curve],
            }

    return app
