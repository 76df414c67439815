"""HTTP service for live elicitation sessions.

Sessions walk a fixed order: the five lottery tasks, then the question
battery. State is an append-only JSON-lines event log per session
(created / choices / likert events), replayed on access, so responses
for the same history are identical across restarts.

Endpoints (JSON over HTTP):
    POST /sessions                  create a session
    GET  /sessions/{id}/task        payload of the next pending step
    POST /sessions/{id}/choices     submit a choice sheet or the battery
    GET  /sessions/{id}/scores      risk measures, complete sessions only
    GET  /export?ids=a,b            CSV of scored sessions

Money is integer cents on the wire; probabilities are {prob_num,
prob_den} pairs. Errors: 404 unknown session, 409 out-of-order or
duplicate submission, 422 invalid payload (with a field path).
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from . import elicitation as el
from .errors import ConflictError, UnknownTaskError, ValidationError
from .table import Column, DataTable, write_csv

TASK_SEQUENCE: tuple[int, ...] = el.TASK_IDS  # then the likert battery
LIKERT_STEP = "likert"


@dataclass
class Session:
    id: str
    created_at: str
    sheets: dict[int, el.ChoiceSheet] = field(default_factory=dict)
    likert: el.RiskMeasures | None = None

    @property
    def complete(self) -> bool:
        return len(self.sheets) == len(TASK_SEQUENCE) and self.likert is not None

    @property
    def status(self) -> str:
        return "complete" if self.complete else "in_progress"

    def next_step(self) -> str | int | None:
        for tid in TASK_SEQUENCE:
            if tid not in self.sheets:
                return tid
        if self.likert is None:
            return LIKERT_STEP
        return None

    def position(self) -> int:
        return len(self.sheets) + (1 if self.likert is not None else 0) + 1

    def scores(self) -> el.RiskMeasures:
        if not self.complete:
            raise ConflictError("session incomplete")
        avg = el.avg_safe(list(self.sheets.values()))
        return el.RiskMeasures(mpl_avg_safe=avg).merged_with(self.likert)

    def consistency_reports(self) -> dict[int, el.ConsistencyReport]:
        return {tid: el.consistency(sheet) for tid, sheet in sorted(self.sheets.items())}


class SessionStore:
    """In-memory sessions backed by per-session JSONL event logs."""

    def __init__(self, state_dir: str | Path | None = None):
        self.state_dir = Path(state_dir) if state_dir else None
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._global = threading.Lock()
        if self.state_dir is not None:
            self.state_dir.mkdir(parents=True, exist_ok=True)
            for log in sorted(self.state_dir.glob("*.jsonl")):
                session = self._replay(log)
                self._sessions[session.id] = session

    def _log_path(self, session_id: str) -> Path | None:
        if self.state_dir is None:
            return None
        return self.state_dir / f"{session_id}.jsonl"

    def _append(self, session_id: str, event: dict) -> None:
        path = self._log_path(session_id)
        if path is None:
            return
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    @staticmethod
    def _replay(log: Path) -> Session:
        session: Session | None = None
        for line in log.read_text(encoding="utf-8").splitlines():
            event = json.loads(line)
            if event["type"] == "created":
                session = Session(event["session_id"], event["created_at"])
            elif event["type"] == "choices":
                sheet = el.ChoiceSheet(event["task_id"], tuple(event["choices"]))
                session.sheets[sheet.task_id] = sheet
            elif event["type"] == "likert":
                answers = {k: v for k, v in event["answers"].items()}
                session.likert = el.record_likert(answers)
        if session is None:
            raise ValidationError(f"event log {log} has no creation event")
        return session

    def lock(self, session_id: str) -> threading.Lock:
        with self._global:
            return self._locks.setdefault(session_id, threading.Lock())

    def create(self) -> Session:
        session_id = uuid.uuid4().hex
        session = Session(session_id, datetime.now(timezone.utc).isoformat())
        with self._global:
            self._sessions[session_id] = session
        self._append(session_id, {"type": "created", "session_id": session_id,
                                  "created_at": session.created_at})
        return session

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def all_complete_ids(self) -> list[str]:
        return sorted(sid for sid, s in self._sessions.items() if s.complete)

    def record_choices(self, session: Session, sheet: el.ChoiceSheet) -> None:
        session.sheets[sheet.task_id] = sheet
        self._append(session.id, {"type": "choices", "task_id": sheet.task_id,
                                  "choices": list(sheet.choices)})

    def record_likert(self, session: Session, answers: dict, fragment: el.RiskMeasures) -> None:
        session.likert = fragment
        self._append(session.id, {"type": "likert", "answers": answers})


def _task_payload(session: Session) -> dict:
    step = session.next_step()
    if step is None:
        raise ConflictError("session complete")
    if step == LIKERT_STEP:
        battery = el.likert_battery()
        return {
            "kind": "likert",
            "position": session.position(),
            "total": len(TASK_SEQUENCE) + 1,
            "scale_min": battery.scale_min,
            "scale_max": battery.scale_max,
            "anchor_min": battery.anchor_min,
            "anchor_max": battery.anchor_max,
            "questions": [
                {"key": q.key, "text": q.text, "answerable": q.answerable,
                 "allows_na": q.allows_na}
                for q in battery.questions
            ],
        }
    task = next(t for t in el.builtin_tasks() if t.id == step)
    return {
        "kind": "mpl",
        "task_id": task.id,
        "position": session.position(),
        "total": len(TASK_SEQUENCE) + 1,
        "rows": [
            {"option_a": el.lottery_to_wire(r.option_a),
             "option_b": el.lottery_to_wire(r.option_b)}
            for r in task.rows
        ],
    }


def _scores_payload(session: Session) -> dict:
    measures = session.scores()
    reports = session.consistency_reports()
    return {
        "session_id": session.id,
        "mpl_avg_safe": measures.mpl_avg_safe,
        "risk_grq": measures.risk_grq,
        "likert": {
            "general": measures.likert.general,
            "occupation": measures.likert.occupation,
            "health": measures.likert.health,
            "personal_finances": measures.likert.personal_finances,
            "job_finances": measures.likert.job_finances,
        },
        "consistency": [
            {
                "task_id": tid,
                "switch_count": rep.switch_count,
                "multiple_switch": rep.multiple_switch,
                "dominated_rows": list(rep.dominated_choices),
            }
            for tid, rep in reports.items()
        ],
    }


def export_table(sessions: list[Session]) -> DataTable:
    """Completed sessions as a table the synthetic-data CSV reader accepts."""
    n = len(sessions)
    ids = np.array([s.id for s in sessions], dtype=object)
    measures = [s.scores() for s in sessions]
    reports = [s.consistency_reports() for s in sessions]
    no_mask = np.zeros(n, dtype=bool)
    columns = [Column("session_id", "categorical", ids, no_mask.copy())]
    for key in ("occupation", "health", "personal_finances", "job_finances"):
        raw = [getattr(m.likert, key) for m in measures]
        mask = np.array([v is None for v in raw])
        vals = np.array([np.nan if v is None else float(v) for v in raw])
        columns.append(Column(f"likert_{key}", "numerical", vals, mask))
    for tid in TASK_SEQUENCE:
        vals = np.array([float(r[tid].multiple_switch) for r in reports])
        columns.append(Column(f"mpl{tid}_multiple_switch", "numerical", vals, no_mask.copy()))
    targets = {
        "mpl_avg_safe": np.array([m.mpl_avg_safe for m in measures], dtype=np.float64),
        "risk_grq": np.array([float(m.risk_grq) for m in measures], dtype=np.float64),
    }
    return DataTable(columns, targets)


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse({"detail": detail}, status_code=status)


def create_app(state_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="riskbench elicitation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(state_dir)
    app.state.store = store

    def _get_session(session_id: str) -> Session:
        return store.get(session_id)

    @app.exception_handler(KeyError)
    async def _unknown(request: Request, exc: KeyError):
        return _error(404, "unknown session")

    @app.exception_handler(ConflictError)
    async def _conflict(request: Request, exc: ConflictError):
        return _error(409, str(exc))

    @app.exception_handler(ValidationError)
    async def _invalid(request: Request, exc: ValidationError):
        return _error(422, str(exc))

    @app.post("/sessions", status_code=201)
    def create_session():
        session = store.create()
        return {"session_id": session.id, "status": session.status,
                "next": {"kind": "mpl", "task_id": TASK_SEQUENCE[0]}}

    @app.get("/sessions/{session_id}/task")
    def get_task(session_id: str):
        return _task_payload(_get_session(session_id))

    @app.post("/sessions/{session_id}/choices")
    def submit(session_id: str, body: dict):
        session = _get_session(session_id)
        with store.lock(session_id):
            step = session.next_step()
            if step is None:
                raise ConflictError("session complete")
            if "likert" in body:
                if step != LIKERT_STEP:
                    raise ConflictError(f"expected choices for task {step}, got likert answers")
                answers = body["likert"]
                if not isinstance(answers, dict):
                    raise ValidationError("likert: answers must be an object")
                fragment = el.record_likert(answers)
                store.record_likert(session, answers, fragment)
            elif "task_id" in body:
                task_id = body["task_id"]
                if task_id in session.sheets:
                    raise ConflictError(f"task {task_id} already submitted")
                if task_id != step:
                    raise ConflictError(f"expected task {step}, got {task_id}")
                choices = body.get("choices")
                if not isinstance(choices, list):
                    raise ValidationError("choices: must be a list of 'A'/'B'")
                sheet = el.ChoiceSheet(task_id, tuple(choices))
                el.count_safe(sheet)  # validates the task id is registered
                store.record_choices(session, sheet)
            else:
                raise ValidationError("body: need either task_id+choices or likert")
            nxt = session.next_step()
            return {
                "status": session.status,
                "submitted": ("likert" if "likert" in body else f"mpl-{body['task_id']}"),
                "next": (None if nxt is None else
                         {"kind": "likert"} if nxt == LIKERT_STEP else
                         {"kind": "mpl", "task_id": nxt}),
            }

    @app.get("/sessions/{session_id}/scores")
    def get_scores(session_id: str):
        return _scores_payload(_get_session(session_id))

    @app.get("/export")
    def export(ids: str | None = None):
        if ids:
            wanted = [s for s in ids.split(",") if s]
            sessions = [store.get(s) for s in wanted]
            for s in sessions:
                if not s.complete:
                    raise ConflictError(f"session {s.id} incomplete")
        else:
            sessions = [store.get(s) for s in store.all_complete_ids()]
        csv_text = write_csv(export_table(sessions))
        return PlainTextResponse(csv_text, media_type="text/csv; charset=utf-8")

    @app.get("/tasks.json")
    def tasks_document():
        return Response(el.tasks_to_json(), media_type="application/json")

    return app
