"""HTTP session API over the elicitation engine.

Stateless except for the session store; per-session writes are serialized
and answers carry an optimistic-concurrency sequence number.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import elicitation, flowgraph, mdm
from .ceg import Ceg, CutQuery, separated
from .documents import ModelDocument, hash_model, load_document
from .errors import StructureError
from .flowgraph import FlowGraph, PathFlow
from .graphcore import Dag, d_separated
from .mdm import MdmSpec


class SessionStore:
    """Maps session id to a live Session plus its replayable answer log.

    Optionally file-backed: every answer is appended to a per-session log
    so sessions survive process restarts; on load the log replays and the
    resulting model hash is verified against the stored head.
    """

    def __init__(self, directory: Optional[str] = None):
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, elicitation.Session] = {}
        self.locks: dict[str, threading.Lock] = {}
        self.model_docs: dict[str, dict] = {}  # session id -> initial model document

    def create(self, model, model_doc: dict) -> elicitation.Session:
        sid = uuid.uuid4().hex[:12]
        session = elicitation.start_session(model, session_id=sid)
        self.sessions[sid] = session
        self.locks[sid] = threading.Lock()
        self.model_docs[sid] = model_doc
        self._persist_event(sid, {"event": "opened", "model": model_doc})
        return session

    def get(self, sid: str) -> elicitation.Session:
        if sid not in self.sessions and self.directory:
            self._load(sid)
        if sid not in self.sessions:
            raise HTTPException(404, f"unknown session {sid!r}")
        return self.sessions[sid]

    def lock(self, sid: str) -> threading.Lock:
        return self.locks.setdefault(sid, threading.Lock())

    def record_answer(self, sid: str, answer: elicitation.Answer, head_hash: str):
        self._persist_event(
            sid,
            {
                "event": "answer",
                "answer": {
                    "question_id": answer.question_id,
                    "verdict": answer.verdict,
                    "edge": list(answer.edge) if answer.edge else None,
                    "rationale": answer.rationale,
                },
                "model_hash": head_hash,
            },
        )

    def _log_path(self, sid: str) -> Optional[Path]:
        return self.directory / f"{sid}.log" if self.directory else None

    def _persist_event(self, sid: str, event: dict):
        path = self._log_path(sid)
        if path:
            with path.open("a") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _load(self, sid: str):
        path = self._log_path(sid)
        if not path or not path.exists():
            return
        events = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
        if not events or events[0].get("event") != "opened":
            raise HTTPException(500, f"corrupt session log for {sid!r}")
        doc = load_document(events[0]["model"])
        answers = []
        expected_hash = None
        for ev in events[1:]:
            if ev.get("event") != "answer":
                continue
            a = ev["answer"]
            answers.append(
                elicitation.Answer(
                    a["question_id"],
                    a["verdict"],
                    a.get("rationale", ""),
                    tuple(a["edge"]) if a.get("edge") else None,
                )
            )
            expected_hash = ev.get("model_hash")
        session = elicitation.replay(doc.model, answers)
        session.session_id = sid
        if expected_hash is not None and session.model_hash() != expected_hash:
            raise HTTPException(500, f"session {sid!r} log replay hash mismatch")
        self.sessions[sid] = session
        self.locks[sid] = threading.Lock()
        self.model_docs[sid] = events[0]["model"]


# ---------------------------------------------------------------------------
# wire schemas


class ModelIn(BaseModel):
    kind: str
    payload: dict
    metadata: dict = {}
    version: int = 1


class QueryIn(BaseModel):
    x: list[str]
    y: list[str]
    given: list[str] = []


class CutQueryIn(BaseModel):
    members: list
    flavour: str = "fine-cut"


class SessionIn(BaseModel):
    model_id: str


class AnswerIn(BaseModel):
    seq: int
    question_id: str
    verdict: str
    edge: Optional[list[str]] = None
    rationale: str = ""


class AdvisorIn(BaseModel):
    answers: dict[str, str]


class RunIn(BaseModel):
    data: dict[str, list[Optional[float]]]


class InterveneIn(BaseModel):
    masses: list[dict]
    actions: list[dict]


def _question_view(q: elicitation.Question) -> dict:
    return {
        "id": q.id,
        "statement": {"x": sorted(q.ci.x), "y": sorted(q.ci.y), "z": sorted(q.ci.z)},
        "text": q.text,
        "status": q.status,
    }


def _session_view(session: elicitation.Session) -> dict:
    return {
        "session_id": session.session_id,
        "seq": len(session.answers),
        "model_hash": session.model_hash(),
        "pending": [_question_view(q) for q in session.pending_questions()],
        "advisories": list(session.advisories),
        "confirmed": [str(s) for s in session.confirmed],
    }


def action_from_dict(d: dict) -> flowgraph.Action:
    kinds = {
        "partner_sponsor": lambda d: flowgraph.PartnerSponsor(tuple(d["sites"]), d["new_sponsor"]),
        "merge_sponsors": lambda d: flowgraph.MergeSponsors(
            tuple(d["sponsors"]), d.get("merged_label", "")
        ),
        "merge_sites": lambda d: flowgraph.MergeSites(
            d["site_a"], d["site_b"], d.get("merged_label", "")
        ),
        "change_vendor": lambda d: flowgraph.ChangeVendor(
            d["sponsor"], d["old_vendor"], d["new_vendor"]
        ),
        "transfer_sites": lambda d: flowgraph.TransferSites(
            d["from_sponsor"], d["to_sponsor"], tuple(d["sites"])
        ),
    }
    kind = d.get("type")
    if kind not in kinds:
        raise StructureError(f"unknown action type {kind!r}")
    return kinds[kind](d)


def path_flows_from_dicts(g: FlowGraph, rows: list[dict]) -> list[PathFlow]:
    from fractions import Fraction

    flows = []
    for row in rows:
        path = tuple(tuple(a) for a in row["path"])
        flows.append(PathFlow(path, Fraction(str(row["mass"]))))
    flowgraph.check_paths(g, flows)
    return flows


def make_app(store: Optional[SessionStore] = None) -> FastAPI:
    app = FastAPI(title="structelicit", version="0.1.0")
    store = store or SessionStore()
    models: dict[str, ModelDocument] = {}

    def get_model(model_id: str) -> ModelDocument:
        if model_id not in models:
            raise HTTPException(404, f"unknown model {model_id!r}")
        return models[model_id]

    def structure_error(exc: StructureError) -> HTTPException:
        return HTTPException(422, {"error": type(exc).__name__, "message": str(exc)})

    @app.post("/models")
    def create_model(body: ModelIn):
        try:
            doc = load_document(body.model_dump())
        except StructureError as exc:
            raise structure_error(exc)
        model_id = uuid.uuid4().hex[:12]
        models[model_id] = doc
        return {"id": model_id, "kind": doc.kind, "hash": hash_model(doc.model)}

    @app.get("/models/{model_id}")
    def read_model(model_id: str):
        return get_model(model_id).to_dict()

    @app.post("/models/{model_id}/query")
    def query_model(model_id: str, body: QueryIn):
        doc = get_model(model_id)
        model = doc.model
        try:
            if isinstance(model, Dag):
                verdict = d_separated(model, body.x, body.y, body.given)
                return {"separated": verdict, "certificate": "moralized-ancestral-graph"}
            if isinstance(model, Ceg):
                query = CutQuery(frozenset(body.x), flavour="fine-cut")
                result = separated(model, query)
                return {
                    "separated": result.separated,
                    "certificate": result.cut_variable if result.separated else None,
                    "witness": list(result.witness.labels) if result.witness else None,
                }
        except StructureError as exc:
            raise structure_error(exc)
        raise HTTPException(422, f"model kind {doc.kind!r} does not support CI queries")

    @app.post("/sessions")
    def open_session(body: SessionIn):
        doc = get_model(body.model_id)
        session = store.create(doc.model, doc.to_dict())
        return _session_view(session)

    @app.get("/sessions/{sid}/next")
    def next_question(sid: str):
        session = store.get(sid)
        with store.lock(sid):
            q = session.next_question()
        return {
            "seq": len(session.answers),
            "question": _question_view(q) if q else None,
        }

    @app.post("/sessions/{sid}/answers")
    def submit_answer(sid: str, body: AnswerIn):
        session = store.get(sid)
        with store.lock(sid):
            current = len(session.answers)
            if body.seq != current:
                raise HTTPException(
                    409,
                    {"error": "conflict", "expected_seq": current, "got": body.seq},
                )
            answer = elicitation.Answer(
                body.question_id,
                body.verdict,
                body.rationale,
                tuple(body.edge) if body.edge else None,
            )
            before = session.model_hash()
            try:
                elicitation.apply_answer(session, answer)
            except StructureError as exc:
                raise structure_error(exc)
            except ValueError as exc:
                raise HTTPException(422, str(exc))
            after = session.model_hash()
            store.record_answer(sid, answer, after)
            view = _session_view(session)
            view["revision"] = {
                "applied": after != before,
                "before_hash": before,
                "after_hash": after,
                "advisories": list(session.advisories),
            }
            return view

    @app.get("/sessions/{sid}/transcript")
    def transcript(sid: str):
        session = store.get(sid)
        return {
            "session_id": sid,
            "model_hash": session.model_hash(),
            "events": [asdict(ev) for ev in session.transcript],
            "answers": [
                {
                    "question_id": a.question_id,
                    "verdict": a.verdict,
                    "edge": list(a.edge) if a.edge else None,
                }
                for a in session.answers
            ],
        }

    @app.post("/advisor")
    def advisor(body: AdvisorIn):
        rec = elicitation.advise_framework(body.answers)
        return {
            "recommended": rec.recommended,
            "ranked": rec.ranked,
            "advisory_only": rec.advisory_only,
            "rationale": rec.rationale_text,
        }

    @app.post("/mdm/{model_id}/run")
    def mdm_run(model_id: str, body: RunIn):
        doc = get_model(model_id)
        if doc.kind != "mdm":
            raise HTTPException(422, f"model {model_id!r} is not an mdm")
        try:
            trajectory = mdm.run(doc.model, body.data)
        except StructureError as exc:
            raise structure_error(exc)
        return {"report": trajectory.residual_rows()}

    @app.post("/flow/{model_id}/intervene")
    def flow_intervene(model_id: str, body: InterveneIn):
        doc = get_model(model_id)
        if doc.kind != "flow_graph":
            raise HTTPException(422, f"model {model_id!r} is not a flow_graph")
        g = doc.model
        try:
            flows = path_flows_from_dicts(g, body.masses)
            diffs = []
            for action_dict in body.actions:
                g, flows, report = flowgraph.intervene(g, flows, action_from_dict(action_dict))
                diffs.append(
                    {
                        "action": action_dict,
                        "edges_added": [[list(a), list(b)] for a, b in report.edges_added],
                        "edges_removed": [[list(a), list(b)] for a, b in report.edges_removed],
                        "actors_removed": report.actors_removed,
                        "mass_changes": [
                            {"path": [list(a) for a in path], "before": str(b), "after": str(c)}
                            for path, b, c in report.mass_changes
                        ],
                    }
                )
        except StructureError as exc:
            raise structure_error(exc)
        from .documents import payload_of

        kind, payload = payload_of(g)
        return {
            "model": {"kind": kind, "version": 1, "payload": payload},
            "flows": [
                {"path": [list(a) for a in pf.path], "mass": str(pf.mass)} for pf in flows
            ],
            "diffs": diffs,
        }

    return app


app = make_app()
