"""Stage 2: the ontology-constrained interview loop.

A session owns a private working copy of the tree. Each turn it scores and
re-ranks the eligible slots, asks about the best one, interprets the
stakeholder's reply, and prunes branches the stakeholder has ruled out.
After enough consecutive fruitless questions under one aspect, a gate
question offers to close the whole aspect. Gate exchanges are recorded in
the transcript but do not consume the slot-question budget.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

from . import ontology as onto_mod
from .backend import Backend, BackendError, GenerationRequest, MalformedOutput, generate
from .ontology import ExperienceOntology, SlotState
from .prompts import render_prompt

logger = logging.getLogger(__name__)

DEFAULT_MAX_TURNS = 20
DEFAULT_GATE_THRESHOLD = 3
DEFAULT_RERANK_WINDOW = 10


class EngineError(Exception):
    pass


class EmptyOntology(EngineError):
    """The ontology offers no eligible slot to start from."""


class SessionFinished(EngineError):
    """step() was called on a completed session."""


class Speaker(str, Enum):
    AGENT = "agent"
    STAKEHOLDER = "stakeholder"


class TurnKind(str, Enum):
    INITIAL = "initial"
    SLOT_QUESTION = "slot_question"
    GATE_QUESTION = "gate_question"
    FREEFORM_QUESTION = "freeform_question"
    ANSWER = "answer"


@dataclass
class Turn:
    speaker: Speaker
    text: str
    kind: TurnKind
    node_id: str | None = None

    def as_record(self) -> dict[str, Any]:
        return {
            "speaker": self.speaker.value,
            "text": self.text,
            "kind": self.kind.value,
            "node_id": self.node_id,
        }


class Verdict(str, Enum):
    CONFIRMED_SLOT = "confirmed_slot"
    REJECTED_SLOT = "rejected_slot"
    REJECTED_DIMENSION = "rejected_dimension"
    ASPECT_DONE = "aspect_done"
    ASPECT_HAS_MORE = "aspect_has_more"


SLOT_VERDICTS = frozenset(
    {Verdict.CONFIRMED_SLOT, Verdict.REJECTED_SLOT, Verdict.REJECTED_DIMENSION}
)
GATE_VERDICTS = frozenset({Verdict.ASPECT_DONE, Verdict.ASPECT_HAS_MORE})


@dataclass
class UserJudgment:
    verdict: Verdict
    target_node_id: str | None
    excerpt: str = ""


@dataclass
class ElicitedRequirement:
    slot_id: str
    key: str
    excerpt: str
    turn: int


@dataclass(frozen=True)
class SessionConfig:
    max_turns: int = DEFAULT_MAX_TURNS
    gate_threshold: int = DEFAULT_GATE_THRESHOLD
    rerank_window: int = DEFAULT_RERANK_WINDOW

    def __post_init__(self) -> None:
        if self.max_turns < 1 or self.gate_threshold < 1 or self.rerank_window < 1:
            raise ValueError("max_turns, gate_threshold, and rerank_window must all be >= 1")


@dataclass
class Phase:
    status: str  # "awaiting_answer" | "finished"
    kind: str | None = None  # "slot" | "gate"
    node_id: str | None = None
    reason: str | None = None


@dataclass
class SessionState:
    session_id: str
    onto: ExperienceOntology
    history: list[Turn] = field(default_factory=list)
    elicited: list[ElicitedRequirement] = field(default_factory=list)
    turn: int = 0
    max_turns: int = DEFAULT_MAX_TURNS
    gate_threshold: int = DEFAULT_GATE_THRESHOLD
    rerank_window: int = DEFAULT_RERANK_WINDOW
    aspect_no_need_count: int = 0
    current_aspect: str | None = None
    phase: Phase = field(default_factory=lambda: Phase("awaiting_answer"))

    @property
    def finished(self) -> bool:
        return self.phase.status == "finished"

    @property
    def finish_reason(self) -> str | None:
        return self.phase.reason


@dataclass
class StepOutcome:
    question: str | None
    kind: str | None  # "slot" | "gate"
    node_id: str | None
    finished: bool = False
    reason: str | None = None


def render_history(history: list[Turn]) -> str:
    """Flatten the dialogue for prompt embedding."""
    lines = []
    for turn in history:
        who = "Interviewer" if turn.speaker is Speaker.AGENT else "Stakeholder"
        lines.append(f"{who}: {turn.text}")
    return "\n".join(lines)


def _node_listing(onto: ExperienceOntology) -> str:
    rows = []
    for aspect in onto.aspects:
        rows.append({"id": aspect.id, "level": "aspect", "label": aspect.name})
        for dim in aspect.dimensions:
            rows.append({"id": dim.id, "level": "dimension", "label": f"{aspect.name} / {dim.name}"})
            for slot in dim.slots:
                rows.append(
                    {"id": slot.id, "level": "slot", "label": f"{aspect.name} / {dim.name} / {slot.key}"}
                )
    return json.dumps(rows, ensure_ascii=False, indent=2)


def score_onto(u0: str, onto: ExperienceOntology, backend: Backend) -> ExperienceOntology:
    """Write initial relevance scores for every node onto the working copy.

    A malformed reply degrades to all-zero scores (insertion-order
    exploration) instead of failing the session.
    """
    system, user = render_prompt(
        "score_ontology", {"description": u0, "nodes": _node_listing(onto)}
    )
    try:
        response = generate(
            GenerationRequest(system, user, expects_structure=True, schema_name="score_map"),
            backend,
        )
    except MalformedOutput as exc:
        logger.warning("initial scoring failed, falling back to insertion order: %s", exc)
        return onto
    flagged = onto_mod.apply_scores(onto, response.parsed["scores"])
    if flagged:
        logger.warning("scores outside [0,1] clamped for nodes: %s", ", ".join(flagged))
    return onto


def rerank_onto(
    history: list[Turn],
    onto: ExperienceOntology,
    backend: Backend,
    window: int = DEFAULT_RERANK_WINDOW,
) -> str | None:
    """Pick the next slot to ask about, or None when nothing is eligible.

    The backend re-ranks the top-``window`` eligible slots against the
    dialogue so far; any backend failure falls back to the eligibility head.
    """
    eligible = onto_mod.eligible_slots(onto)
    if not eligible:
        return None
    candidates = eligible[:window]
    listing = []
    for slot_id in candidates:
        aspect, dim, slot = onto_mod.find_slot(onto, slot_id)
        listing.append(
            {
                "id": slot.id,
                "key": slot.key,
                "dimension": dim.name,
                "aspect": aspect.name,
                "question": slot.question,
            }
        )
    system, user = render_prompt(
        "rerank_slots",
        {
            "history": render_history(history),
            "candidates": json.dumps(listing, ensure_ascii=False, indent=2),
        },
    )
    try:
        response = generate(
            GenerationRequest(system, user, expects_structure=True, schema_name="rank_choice"),
            backend,
        )
    except BackendError as exc:
        logger.warning("re-rank failed, falling back to eligibility head: %s", exc)
        return candidates[0]
    parsed = response.parsed
    slot_scores = {
        node_id: value
        for node_id, value in parsed.get("scores", {}).items()
        if node_id in set(candidates)
    }
    if slot_scores:
        flagged = onto_mod.apply_scores(onto, slot_scores)
        if flagged:
            logger.warning("re-rank scores clamped for: %s", ", ".join(flagged))
    choice = parsed["choice"]
    if choice not in set(candidates):
        logger.warning("re-rank chose %r outside the candidate window, using head", choice)
        return candidates[0]
    return choice


def parse_user(
    answer: str, kind: str, context: dict[str, str], backend: Backend
) -> UserJudgment:
    """Interpret a stakeholder reply to the pending question.

    ``kind`` is "slot" or "gate" and bounds the verdict domain. A malformed
    reply (or an out-of-domain verdict) degrades to the conservative
    non-pruning default: confirm the slot, or keep the aspect open.
    """
    if kind == "slot":
        template = "parse_answer_slot"
        allowed = SLOT_VERDICTS
        fallback = UserJudgment(Verdict.CONFIRMED_SLOT, context.get("slot_id"), "")
    elif kind == "gate":
        template = "parse_answer_gate"
        allowed = GATE_VERDICTS
        fallback = UserJudgment(Verdict.ASPECT_HAS_MORE, context.get("aspect_id"), "")
    else:
        raise ValueError(f"unknown question kind {kind!r}")
    system, user = render_prompt(template, {**context, "answer": answer})
    try:
        response = generate(
            GenerationRequest(system, user, expects_structure=True, schema_name="user_judgment"),
            backend,
        )
    except MalformedOutput as exc:
        logger.warning("answer parsing failed, using conservative default: %s", exc)
        return fallback
    verdict = Verdict(response.parsed["verdict"])
    if verdict not in allowed:
        logger.warning(
            "verdict %s outside the %s-question domain, using conservative default",
            verdict.value, kind,
        )
        return fallback
    excerpt = response.parsed.get("excerpt", "")
    if verdict in (Verdict.CONFIRMED_SLOT, Verdict.REJECTED_SLOT):
        target = context.get("slot_id")
    elif verdict is Verdict.REJECTED_DIMENSION:
        target = context.get("dimension_id")
    else:
        target = context.get("aspect_id")
    return UserJudgment(verdict, target, excerpt)


def question_gen(history: list[Turn], slot_id: str, onto: ExperienceOntology, backend: Backend) -> str:
    """Phrase the interview question for a slot; never fatal.

    Any backend failure falls back to the slot's stored candidate question.
    """
    aspect, dim, slot = onto_mod.find_slot(onto, slot_id)
    system, user = render_prompt(
        "generate_question",
        {
            "history": render_history(history),
            "aspect_name": aspect.name,
            "dimension_name": dim.name,
            "slot_key": slot.key,
            "question_form": slot.question_form.value,
            "candidate_question": slot.question,
        },
    )
    try:
        response = generate(
            GenerationRequest(system, user, expects_structure=True, schema_name="question_text"),
            backend,
        )
    except BackendError as exc:
        logger.warning("question generation failed for %s, using stored question: %s", slot_id, exc)
        return slot.question
    return response.parsed["question"]


def gate_check(session: SessionState) -> str | None:
    """The macro confirmation question when the rejection gate has tripped."""
    if session.aspect_no_need_count < session.gate_threshold:
        return None
    if session.current_aspect is None:
        return None
    try:
        aspect = onto_mod.find_aspect(session.onto, session.current_aspect)
    except onto_mod.UnknownNode:
        return None
    if aspect.pruned:
        return None
    return f"Are there any other requirements related to {aspect.name.lower()}?"


def freeform_step(history: list[Turn], backend: Backend) -> str:
    """Baseline interviewer: one question from raw history, no ontology."""
    system, user = render_prompt("freeform_question", {"history": render_history(history)})
    response = generate(
        GenerationRequest(system, user, expects_structure=False, schema_name="freeform_question"),
        backend,
    )
    return response.raw_text.strip()


def _record(session: SessionState, speaker: Speaker, text: str, kind: TurnKind, node_id: str | None = None) -> None:
    session.history.append(Turn(speaker, text, kind, node_id))


def _finish(session: SessionState, reason: str) -> StepOutcome:
    session.phase = Phase("finished", reason=reason)
    return StepOutcome(question=None, kind=None, node_id=None, finished=True, reason=reason)


def _select_next(session: SessionState, backend: Backend) -> StepOutcome:
    """Run the selection part of the loop: budget check, gate, re-rank, ask."""
    if session.turn >= session.max_turns:
        return _finish(session, "max_turns")
    gate_question = gate_check(session)
    if gate_question is not None:
        _record(session, Speaker.AGENT, gate_question, TurnKind.GATE_QUESTION, session.current_aspect)
        session.phase = Phase("awaiting_answer", kind="gate", node_id=session.current_aspect)
        return StepOutcome(question=gate_question, kind="gate", node_id=session.current_aspect)
    slot_id = rerank_onto(session.history, session.onto, backend, session.rerank_window)
    if slot_id is None:
        return _finish(session, "no_eligible_slots")
    aspect, _, _ = onto_mod.find_slot(session.onto, slot_id)
    if aspect.id != session.current_aspect:
        # consecutive-rejection counting is per aspect
        session.current_aspect = aspect.id
        session.aspect_no_need_count = 0
    question = question_gen(session.history, slot_id, session.onto, backend)
    _record(session, Speaker.AGENT, question, TurnKind.SLOT_QUESTION, slot_id)
    session.phase = Phase("awaiting_answer", kind="slot", node_id=slot_id)
    return StepOutcome(question=question, kind="slot", node_id=slot_id)


def start_session(
    onto: ExperienceOntology,
    u0: str,
    config: SessionConfig | None,
    backend: Backend,
    session_id: str = "session",
) -> tuple[SessionState, StepOutcome]:
    """Open an interview: reset the working copy, score it, ask the first question.

    The caller's ontology is never mutated; the session works on a private
    copy with every slot back in Unexplored.
    """
    if not u0.strip():
        raise ValueError("the initial description must be nonempty")
    config = config or SessionConfig()
    working = onto_mod.clone(onto)
    onto_mod.reset_for_session(working)
    if not onto_mod.eligible_slots(working):
        raise EmptyOntology("the ontology has no slots to ask about")
    session = SessionState(
        session_id=session_id,
        onto=working,
        max_turns=config.max_turns,
        gate_threshold=config.gate_threshold,
        rerank_window=config.rerank_window,
    )
    _record(session, Speaker.STAKEHOLDER, u0, TurnKind.INITIAL)
    score_onto(u0, session.onto, backend)
    outcome = _select_next(session, backend)
    if outcome.finished:
        # only possible with max_turns < 1, which SessionConfig rejects
        raise EmptyOntology("no first question could be selected")
    return session, outcome


def step(session: SessionState, stakeholder_answer: str, backend: Backend) -> StepOutcome:
    """Consume one stakeholder answer and produce the next question or finish."""
    if session.finished:
        raise SessionFinished(f"session {session.session_id} is already finished")
    if session.phase.status != "awaiting_answer":
        raise EngineError(f"session is not awaiting an answer (phase {session.phase.status})")
    pending_kind = session.phase.kind
    pending_node = session.phase.node_id
    _record(session, Speaker.STAKEHOLDER, stakeholder_answer, TurnKind.ANSWER)

    if pending_kind == "slot":
        aspect, dim, slot = onto_mod.find_slot(session.onto, pending_node)
        question_text = _last_agent_question(session)
        judgment = parse_user(
            stakeholder_answer,
            "slot",
            {
                "question": question_text,
                "slot_key": slot.key,
                "dimension_name": dim.name,
                "aspect_name": aspect.name,
                "slot_id": slot.id,
                "dimension_id": dim.id,
                "aspect_id": aspect.id,
            },
            backend,
        )
        if judgment.verdict is Verdict.CONFIRMED_SLOT:
            onto_mod.mark_slot(session.onto, slot.id, SlotState.CONFIRMED)
            session.elicited.append(
                ElicitedRequirement(slot.id, slot.key, judgment.excerpt, session.turn + 1)
            )
        elif judgment.verdict is Verdict.REJECTED_SLOT:
            onto_mod.mark_slot(session.onto, slot.id, SlotState.REJECTED)
            session.aspect_no_need_count += 1
        else:  # REJECTED_DIMENSION
            onto_mod.mark_slot(session.onto, slot.id, SlotState.REJECTED)
            session.aspect_no_need_count += 1
            onto_mod.prune_dimension(session.onto, dim.id)
        session.turn += 1
    elif pending_kind == "gate":
        aspect = onto_mod.find_aspect(session.onto, pending_node)
        judgment = parse_user(
            stakeholder_answer,
            "gate",
            {
                "question": _last_agent_question(session),
                "aspect_name": aspect.name,
                "aspect_id": aspect.id,
            },
            backend,
        )
        if judgment.verdict is Verdict.ASPECT_DONE:
            onto_mod.prune_aspect(session.onto, aspect.id)
        session.aspect_no_need_count = 0
    else:
        raise EngineError(f"unknown pending question kind {pending_kind!r}")

    return _select_next(session, backend)


def _last_agent_question(session: SessionState) -> str:
    for turn in reversed(session.history):
        if turn.speaker is Speaker.AGENT:
            return turn.text
    return ""


def stop_session(session: SessionState, reason: str = "stopped") -> StepOutcome:
    """Explicitly end a session (interactive quit)."""
    if session.finished:
        return StepOutcome(None, None, None, finished=True, reason=session.finish_reason)
    return _finish(session, reason)


def elicited_requirements(session: SessionState) -> list[ElicitedRequirement]:
    """The confirmed slots, in confirmation order."""
    return list(session.elicited)


def transcript_records(session: SessionState) -> list[dict[str, Any]]:
    """Turn rows plus the closing summary record, ready for JSONL."""
    rows: list[dict[str, Any]] = [turn.as_record() for turn in session.history]
    rows.append(
        {
            "elicited": [asdict(req) for req in session.elicited],
            "final_ontology_state_digest": onto_mod.digest(session.onto),
            "finish_reason": session.finish_reason,
        }
    )
    return rows


def snapshot(session: SessionState) -> dict[str, Any]:
    """Serialize the full session, ontology embedded, for persistence."""
    return {
        "session_id": session.session_id,
        "onto": onto_mod.serialize(session.onto),
        "history": [turn.as_record() for turn in session.history],
        "elicited": [asdict(req) for req in session.elicited],
        "turn": session.turn,
        "max_turns": session.max_turns,
        "gate_threshold": session.gate_threshold,
        "rerank_window": session.rerank_window,
        "aspect_no_need_count": session.aspect_no_need_count,
        "current_aspect": session.current_aspect,
        "phase": asdict(session.phase),
    }


def restore_session(doc: dict[str, Any]) -> SessionState:
    """Rebuild a session from its snapshot."""
    try:
        phase = Phase(**doc["phase"])
        history = [
            Turn(Speaker(t["speaker"]), t["text"], TurnKind(t["kind"]), t.get("node_id"))
            for t in doc["history"]
        ]
        elicited = [ElicitedRequirement(**req) for req in doc["elicited"]]
        return SessionState(
            session_id=doc["session_id"],
            onto=onto_mod.deserialize(doc["onto"]),
            history=history,
            elicited=elicited,
            turn=doc["turn"],
            max_turns=doc["max_turns"],
            gate_threshold=doc["gate_threshold"],
            rerank_window=doc["rerank_window"],
            aspect_no_need_count=doc["aspect_no_need_count"],
            current_aspect=doc["current_aspect"],
            phase=phase,
        )
    except onto_mod.SchemaViolation:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise onto_mod.SchemaViolation("$.session", f"invalid session snapshot: {exc}") from None
