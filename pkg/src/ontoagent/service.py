"""HTTP session API for live interviews, consumed by the chat UI.

Every endpoint is a thin adapter over the engine: the service never makes
interview decisions of its own. Sessions are serialized per id; a second
answer arriving while one is being processed gets a 409.
"""

from __future__ import annotations

import logging
import threading
from typing import Any

from fastapi import FastAPI, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from . import engine as engine_mod
from . import ontology as onto_mod
from .backend import Backend
from .config import AppConfig
from .engine import SessionConfig, SessionState
from .gym import FreeformInterviewer, OntologyInterviewer, Scenario, run_benchmark
from .induction import RequirementDoc, induce_ontology
from .store import DataStore, RecordFrozen, UnknownId, new_id

logger = logging.getLogger(__name__)


class ApiError(Exception):
    def __init__(self, status_code: int, detail: str):
        self.status_code = status_code
        self.detail = detail
        super().__init__(detail)


class OntologyBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    document: dict[str, Any] | None = None
    corpus: list[dict[str, Any]] | None = None
    aspects: list[str] | None = None
    domain_name: str = "domain"


class SessionBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    ontology_id: str
    initial_description: str
    max_turns: int | None = None
    gate_threshold: int | None = None


class AnswerBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    text: str


class EvaluationBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenarios: list[dict[str, Any]]
    interviewer: str = "ontoagent"
    ontology_id: str | None = None
    max_turns: int | None = None
    gate_threshold: int | None = None


class SessionHandle:
    """One live session plus the lock serializing its answers."""

    def __init__(self, state: SessionState):
        self.state = state
        self.lock = threading.Lock()


def create_app(
    config: AppConfig | None = None,
    backend: Backend | None = None,
    store: DataStore | None = None,
) -> FastAPI:
    config = config or AppConfig()
    backend = backend if backend is not None else config.build_backend()
    store = store or DataStore(config.data_dir)
    app = FastAPI(title="ontoagent session service")
    handles: dict[str, SessionHandle] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": jsonable_encoder(exc.errors())})

    @app.exception_handler(onto_mod.SchemaViolation)
    async def schema_handler(request: Request, exc: onto_mod.SchemaViolation):
        return JSONResponse(
            status_code=400, content={"detail": exc.message, "path": exc.path}
        )

    def get_handle(session_id: str) -> SessionHandle:
        with registry_lock:
            handle = handles.get(session_id)
            if handle is None:
                try:
                    record = store.load_session(session_id)
                except UnknownId:
                    raise ApiError(404, f"unknown session {session_id!r}") from None
                handle = SessionHandle(engine_mod.restore_session(record["snapshot"]))
                handles[session_id] = handle
            return handle

    def persist(state: SessionState) -> None:
        status = "finished" if state.finished else "active"
        try:
            store.save_session(state.session_id, engine_mod.snapshot(state), status)
        except RecordFrozen:
            raise ApiError(409, f"session {state.session_id!r} is finished") from None
        if state.finished:
            store.write_transcript(state.session_id, engine_mod.transcript_records(state))

    @app.post("/ontologies", status_code=201)
    def post_ontology(body: OntologyBody) -> dict[str, Any]:
        if body.document is not None:
            tree = onto_mod.deserialize(body.document)  # SchemaViolation -> 400
        elif body.corpus is not None and body.aspects is not None:
            try:
                docs = [RequirementDoc(d["id"], d["app_type"], d["body"]) for d in body.corpus]
                tree, _ = induce_ontology(docs, body.aspects, backend, domain_name=body.domain_name)
            except (KeyError, TypeError, ValueError) as exc:
                raise ApiError(400, f"invalid induction request: {exc}") from None
        else:
            raise ApiError(400, "provide either 'document' or both 'corpus' and 'aspects'")
        ontology_id = store.save_ontology(onto_mod.serialize(tree))
        return {"ontology_id": ontology_id, "version": tree.version}

    @app.get("/ontologies/{ontology_id}")
    def get_ontology(ontology_id: str) -> dict[str, Any]:
        try:
            return store.load_ontology(ontology_id)
        except UnknownId:
            raise ApiError(404, f"unknown ontology {ontology_id!r}") from None

    @app.post("/sessions", status_code=201)
    def post_session(body: SessionBody) -> dict[str, Any]:
        if not body.initial_description.strip():
            raise ApiError(400, "initial_description must be nonempty")
        try:
            document = store.load_ontology(body.ontology_id)
        except UnknownId:
            raise ApiError(404, f"unknown ontology {body.ontology_id!r}") from None
        tree = onto_mod.deserialize(document)
        session_config = SessionConfig(
            max_turns=body.max_turns or config.max_turns,
            gate_threshold=body.gate_threshold or config.gate_threshold,
        )
        session_id = new_id()
        try:
            state, outcome = engine_mod.start_session(
                tree, body.initial_description, session_config, backend, session_id=session_id
            )
        except engine_mod.EmptyOntology as exc:
            raise ApiError(400, str(exc)) from None
        with registry_lock:
            handles[session_id] = SessionHandle(state)
        persist(state)
        return {
            "session_id": session_id,
            "question": outcome.question,
            "question_kind": outcome.kind,
            "node_id": outcome.node_id,
        }

    @app.post("/sessions/{session_id}/answers")
    def post_answer(session_id: str, body: AnswerBody) -> dict[str, Any]:
        handle = get_handle(session_id)
        if not handle.lock.acquire(blocking=False):
            raise ApiError(409, "an answer is already being processed for this session")
        try:
            state = handle.state
            if state.finished:
                raise ApiError(409, f"session {session_id!r} is finished")
            try:
                outcome = engine_mod.step(state, body.text, backend)
            except engine_mod.SessionFinished:
                raise ApiError(409, f"session {session_id!r} is finished") from None
            persist(state)
            payload: dict[str, Any] = {
                "done": outcome.finished,
                "elicited_count": len(state.elicited),
                "ontology_digest": onto_mod.digest(state.onto),
            }
            if outcome.finished:
                payload["finish_reason"] = outcome.reason
            else:
                payload.update(
                    question=outcome.question,
                    question_kind=outcome.kind,
                    node_id=outcome.node_id,
                )
            return payload
        finally:
            handle.lock.release()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict[str, Any]:
        state = get_handle(session_id).state
        return {
            "session_id": session_id,
            "status": "finished" if state.finished else "active",
            "finish_reason": state.finish_reason,
            "turn": state.turn,
            "max_turns": state.max_turns,
            "elicited_count": len(state.elicited),
            "transcript": [turn.as_record() for turn in state.history],
        }

    @app.get("/sessions/{session_id}/ontology")
    def get_session_ontology(session_id: str) -> dict[str, Any]:
        return onto_mod.serialize(get_handle(session_id).state.onto)

    @app.get("/sessions/{session_id}/requirements")
    def get_session_requirements(session_id: str) -> dict[str, Any]:
        state = get_handle(session_id).state
        return {
            "session_id": session_id,
            "requirements": [
                {"slot_id": r.slot_id, "key": r.key, "excerpt": r.excerpt, "turn": r.turn}
                for r in state.elicited
            ],
        }

    @app.post("/evaluations", status_code=201)
    def post_evaluation(body: EvaluationBody) -> dict[str, Any]:
        if body.interviewer not in ("ontoagent", "freeform"):
            raise ApiError(400, "interviewer must be 'ontoagent' or 'freeform'")
        try:
            scenarios = [Scenario.from_dict(s) for s in body.scenarios]
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(400, f"invalid scenario: {exc}") from None
        if not scenarios:
            raise ApiError(400, "at least one scenario is required")
        session_config = SessionConfig(
            max_turns=body.max_turns or config.max_turns,
            gate_threshold=body.gate_threshold or config.gate_threshold,
        )
        if body.interviewer == "ontoagent":
            if not body.ontology_id:
                raise ApiError(400, "ontology_id is required for the ontoagent interviewer")
            try:
                tree = onto_mod.deserialize(store.load_ontology(body.ontology_id))
            except UnknownId:
                raise ApiError(404, f"unknown ontology {body.ontology_id!r}") from None

            def factory(scenario: Scenario):
                return OntologyInterviewer(tree, backend, session_config, session_id=scenario.id)

        else:

            def factory(scenario: Scenario):
                return FreeformInterviewer(backend, max_turns=session_config.max_turns)

        result = run_benchmark(scenarios, factory, backend, config.build_matcher(backend))
        evaluation_id = new_id()
        store.save_report(evaluation_id, result.as_dict())
        return {"evaluation_id": evaluation_id}

    @app.get("/evaluations/{evaluation_id}")
    def get_evaluation(evaluation_id: str) -> dict[str, Any]:
        try:
            return store.load_report(evaluation_id)
        except UnknownId:
            raise ApiError(404, f"unknown evaluation {evaluation_id!r}") from None

    return app
