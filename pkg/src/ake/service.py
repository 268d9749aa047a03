"""Self-hosted annotation service backing the browser annotator.

Workers get stories assigned least-annotated-first under a per-story quota,
select token spans, and submit once per (worker, story). Durations are
stamped server-side; client clocks are never trusted. Submissions append to
a line-delimited HIT log so a crash loses at most the in-flight line, and
the export endpoint marks each HIT with any quality-heuristic flags.
"""

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from pydantic import BaseModel

from .corpus import Document
from .errors import DataError
from .goldstandard import Hit, Selection, filter_bad_hits, hit_to_record

log = logging.getLogger(__name__)

DEFAULT_QUOTA = 20


class SelectionIn(BaseModel):
    sentence: int
    start_token: int
    end_token: int


class SubmissionIn(BaseModel):
    worker: str
    selections: list[SelectionIn]


def load_guidelines() -> str:
    return resources.files("ake.data").joinpath("guidelines.txt").read_text("utf-8")


@dataclass
class AnnotationSession:
    session_id: str
    worker_id: str
    story_id: str
    started_at: float
    submitted: bool = False


class AnnotationService:
    """State and rules; the FastAPI app in :func:`build_app` is a thin shell."""

    def __init__(
        self,
        documents: Sequence[Document],
        data_dir: str | Path,
        quota: int = DEFAULT_QUOTA,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self.documents = {d.id: d for d in documents}
        if not self.documents:
            raise DataError("annotation service needs at least one story")
        self.quota = quota
        self.clock = clock
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / "hits.jsonl"
        self.guidelines = load_guidelines()
        self._lock = threading.Lock()
        self._sessions: dict[tuple[str, str], AnnotationSession] = {}
        self._hits: list[Hit] = []
        self._load_log()

    def _load_log(self) -> None:
        if not self.log_path.exists():
            return
        with self.log_path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    # a crash mid-append leaves at most one torn line
                    log.warning(
                        "skipping unparseable HIT log line %s:%d",
                        self.log_path,
                        lineno,
                    )
                    continue
                hit = Hit(
                    hit_id=rec["hit_id"],
                    worker_id=rec["worker_id"],
                    story_id=rec["story_id"],
                    selections=[
                        Selection(s["sentence"], s["start_token"], s["end_token"])
                        for s in rec["selections"]
                    ],
                    duration_seconds=float(rec["duration_seconds"]),
                )
                doc = self.documents.get(hit.story_id)
                if doc is not None:
                    hit.resolve(doc)
                self._hits.append(hit)

    def _append_log(self, hit: Hit) -> None:
        line = json.dumps(hit_to_record(hit), sort_keys=True) + "\n"
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())

    def _submission_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(self.documents, 0)
        for hit in self._hits:
            if hit.story_id in counts:
                counts[hit.story_id] += 1
        return counts

    def next_story(self, worker_id: str) -> tuple[AnnotationSession, Document] | None:
        """Assign (or re-serve) a story for this worker; None when exhausted."""
        with self._lock:
            for (w, sid), session in self._sessions.items():
                if w == worker_id and not session.submitted:
                    return session, self.documents[sid]
            done = {h.story_id for h in self._hits if h.worker_id == worker_id}
            done |= {
                sid
                for (w, sid), s in self._sessions.items()
                if w == worker_id and s.submitted
            }
            counts = self._submission_counts()
            open_stories = [
                (counts[sid], sid)
                for sid in self.documents
                if sid not in done and counts[sid] < self.quota
            ]
            if not open_stories:
                return None
            _, story_id = min(open_stories)
            session = AnnotationSession(
                session_id=f"s{len(self._sessions) + 1:06d}",
                worker_id=worker_id,
                story_id=story_id,
                started_at=self.clock(),
            )
            self._sessions[(worker_id, story_id)] = session
            return session, self.documents[story_id]

    def submit(
        self, worker_id: str, story_id: str, selections: Sequence[Selection]
    ) -> Hit:
        with self._lock:
            doc = self.documents.get(story_id)
            if doc is None:
                raise KeyError(story_id)
            if any(h.worker_id == worker_id and h.story_id == story_id for h in self._hits):
                raise DuplicateSubmission(worker_id, story_id)
            session = self._sessions.get((worker_id, story_id))
            if session is None:
                raise NoOpenSession(worker_id, story_id)
            if session.submitted:
                raise DuplicateSubmission(worker_id, story_id)
            if not selections:
                raise DataError("submission contains no selections")
            hit = Hit(
                hit_id=f"hit-{len(self._hits) + 1:06d}",
                worker_id=worker_id,
                story_id=story_id,
                selections=list(selections),
                duration_seconds=self.clock() - session.started_at,
            )
            hit.resolve(doc)  # raises DataError on spans outside the story
            session.submitted = True
            self._hits.append(hit)
            self._append_log(hit)
            return hit

    def export_records(self) -> list[dict]:
        """All stored HITs in the HIT file schema, flagged by the quality rules."""
        with self._lock:
            hits = list(self._hits)
        good, rejected = filter_bad_hits(hits)
        flags = {id(h): [] for h in good}
        flags.update({id(r.hit): r.reasons for r in rejected})
        return [hit_to_record(h, flags[id(h)]) for h in hits]


class DuplicateSubmission(Exception):
    def __init__(self, worker_id: str, story_id: str):
        super().__init__(f"worker {worker_id} already annotated story {story_id}")


class NoOpenSession(Exception):
    def __init__(self, worker_id: str, story_id: str):
        super().__init__(
            f"worker {worker_id} has no open session on story {story_id}; "
            "request /api/stories/next first"
        )


def _story_payload(doc: Document) -> dict:
    return {
        "story_id": doc.id,
        "title": doc.title,
        "category": doc.category,
        "sentences": [
            {
                "index": s.index,
                "from_title": s.from_title,
                "tokens": [t.surface for t in s.tokens],
            }
            for s in doc.sentences
        ],
    }


def build_app(service: AnnotationService, static_dir: str | Path | None = None):
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import PlainTextResponse

    app = FastAPI(title="ake annotation service")

    @app.get("/api/stories/next")
    def next_story(worker: str):
        assigned = service.next_story(worker)
        if assigned is None:
            raise HTTPException(
                status_code=404, detail="no unannotated stories left for this worker"
            )
        session, doc = assigned
        return {
            "session_id": session.session_id,
            "guidelines": service.guidelines,
            "story": _story_payload(doc),
        }

    @app.post("/api/stories/{story_id}/annotations")
    def submit(story_id: str, body: SubmissionIn):
        try:
            selections = [
                Selection(s.sentence, s.start_token, s.end_token)
                for s in body.selections
            ]
            hit = service.submit(body.worker, story_id, selections)
        except DuplicateSubmission as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except NoOpenSession as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown story {story_id!r}")
        except DataError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"hit_id": hit.hit_id, "duration_seconds": hit.duration_seconds}

    @app.get("/api/export", response_class=PlainTextResponse)
    def export():
        lines = [json.dumps(rec, sort_keys=True) for rec in service.export_records()]
        return "\n".join(lines) + ("\n" if lines else "")

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def serve_annotation(
    documents: Sequence[Document],
    port: int = 8080,
    data_dir: str | Path | None = None,
    quota: int = DEFAULT_QUOTA,
    static_dir: str | Path | None = None,
    host: str = "127.0.0.1",
) -> None:
    """Run the annotation service until interrupted."""
    import uvicorn

    if data_dir is None:
        data_dir = os.environ.get("AKE_DATA_DIR", "ake-data")
    service = AnnotationService(documents, data_dir=data_dir, quota=quota)
    app = build_app(service, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)
