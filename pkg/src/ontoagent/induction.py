"""Stage 1: grow the experience ontology from domain requirement texts.

Induction runs two full passes over the corpus: first dimensions under the
expert-provided aspects, then slots under those dimensions. Nothing is ever
deleted; conflicts between overlapping slot keys keep the shorter
formulation. Every applied or skipped proposal is logged with its source
document for provenance.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from . import ontology as onto_mod
from .backend import Backend, GenerationRequest, generate
from .ontology import DuplicateName, ExperienceOntology, QuestionForm, normalize_text
from .prompts import render_prompt

logger = logging.getLogger(__name__)


class InductionError(Exception):
    pass


class EmptyCorpus(InductionError):
    pass


class EmptyAspectList(InductionError):
    pass


class CorpusFormatError(InductionError):
    """A corpus line failed to parse; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass(frozen=True)
class RequirementDoc:
    id: str
    app_type: str
    body: str

    def __post_init__(self) -> None:
        if not self.body.strip():
            raise ValueError(f"document {self.id!r} has an empty body")


@dataclass(frozen=True)
class InductionEvent:
    """One proposal and what became of it, for the provenance log."""

    doc_id: str
    proposal: dict[str, Any]
    action: str
    node_id: str | None = None

    def as_record(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "proposal": self.proposal,
            "action": self.action,
            "node_id": self.node_id,
        }


def load_corpus(path: str | Path) -> list[RequirementDoc]:
    """Read a JSONL corpus of {id, app_type, body} documents."""
    docs = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(line_no, f"invalid JSON ({exc.msg})") from None
        try:
            docs.append(RequirementDoc(record["id"], record["app_type"], record["body"]))
        except (KeyError, TypeError) as exc:
            raise CorpusFormatError(line_no, f"missing field {exc}") from None
        except ValueError as exc:
            raise CorpusFormatError(line_no, str(exc)) from None
    return docs


def write_induction_log(events: Iterable[InductionEvent], path: str | Path) -> None:
    lines = [json.dumps(e.as_record(), ensure_ascii=False) for e in events]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def dimension_outline(onto: ExperienceOntology) -> str:
    """Aspect -> dimension view embedded into the dimension-induction prompt."""
    doc = {
        "domain": onto.domain_name,
        "aspects": [
            {"name": a.name, "dimensions": [d.name for d in a.dimensions]} for a in onto.aspects
        ],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2)


def slot_outline(onto: ExperienceOntology) -> str:
    """Aspect -> dimension view with existing slot keys, for overlap detection."""
    doc = {
        "domain": onto.domain_name,
        "aspects": [
            {
                "name": a.name,
                "dimensions": [
                    {"name": d.name, "slots": [s.key for s in d.slots]} for d in a.dimensions
                ],
            }
            for a in onto.aspects
        ],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2)


def resolve_conflict(existing_key: str, new_key: str) -> str:
    """Pick which of two overlapping slot keys survives.

    The shorter normalized formulation wins; ties keep the existing key.
    """
    existing_norm = normalize_text(existing_key)
    new_norm = normalize_text(new_key)
    return new_norm if len(new_norm) < len(existing_norm) else existing_norm


def induce_dimensions(
    doc: RequirementDoc, onto: ExperienceOntology, backend: Backend
) -> list[InductionEvent]:
    """Apply one document's dimension proposals to the tree, in order.

    Merges are structural no-ops kept as evidence; unknown aspect references
    are skipped, never fatal. Backend failures propagate.
    """
    system, user = render_prompt(
        "dimension_induction", {"ontology": dimension_outline(onto), "requirements": doc.body}
    )
    response = generate(
        GenerationRequest(system, user, expects_structure=True, schema_name="dimension_induction"),
        backend,
    )
    events: list[InductionEvent] = []
    for proposal in response.parsed["proposals"]:
        aspect = onto_mod.aspect_by_name(onto, proposal["aspect"])
        if aspect is None:
            logger.warning("doc %s: unknown aspect %r, proposal dropped", doc.id, proposal["aspect"])
            events.append(InductionEvent(doc.id, proposal, "skipped_unknown_aspect"))
            continue
        existing = onto_mod.dimension_by_name(aspect, proposal["dimension"])
        if proposal["action"] == "merge":
            if existing is None:
                logger.warning(
                    "doc %s: merge target %r missing under %s, proposal dropped",
                    doc.id, proposal["dimension"], aspect.name,
                )
                events.append(InductionEvent(doc.id, proposal, "skipped_unknown_dimension"))
            else:
                events.append(InductionEvent(doc.id, proposal, "merged_dimension", existing.id))
            continue
        if existing is not None:
            # an "add" that collides is recorded as a merge, not a failure
            events.append(InductionEvent(doc.id, proposal, "merged_dimension", existing.id))
            continue
        dim_id = onto_mod.add_dimension(onto, aspect.id, proposal["dimension"])
        events.append(InductionEvent(doc.id, proposal, "added_dimension", dim_id))
    return events


def induce_slots(
    doc: RequirementDoc, onto: ExperienceOntology, backend: Backend
) -> list[InductionEvent]:
    """Apply one document's slot proposals, resolving key conflicts."""
    system, user = render_prompt(
        "slot_induction", {"ontology": slot_outline(onto), "instruction": doc.body}
    )
    response = generate(
        GenerationRequest(system, user, expects_structure=True, schema_name="slot_induction"),
        backend,
    )
    events: list[InductionEvent] = []
    for proposal in response.parsed["proposals"]:
        aspect = onto_mod.aspect_by_name(onto, proposal["aspect"])
        dim = onto_mod.dimension_by_name(aspect, proposal["dimension"]) if aspect else None
        if dim is None:
            logger.warning(
                "doc %s: unknown dimension %r/%r, proposal dropped",
                doc.id, proposal["aspect"], proposal["dimension"],
            )
            events.append(InductionEvent(doc.id, proposal, "skipped_unknown_dimension"))
            continue
        new_key = normalize_text(proposal["key"])
        if not new_key:
            events.append(InductionEvent(doc.id, proposal, "skipped_empty_key"))
            continue
        overlap_key = proposal.get("overlaps_with") or None
        existing = None
        if overlap_key:
            existing = onto_mod.slot_by_key(dim, overlap_key)
        if existing is None:
            existing = onto_mod.slot_by_key(dim, new_key)
        if existing is not None:
            kept = resolve_conflict(existing.key, new_key)
            if kept == existing.key:
                events.append(InductionEvent(doc.id, proposal, "dropped_conflict", existing.id))
            else:
                onto_mod.reword_slot(onto, existing.id, kept, proposal["question"])
                events.append(InductionEvent(doc.id, proposal, "reworded_slot", existing.id))
            continue
        slot_id = onto_mod.add_slot(
            onto, dim.id, new_key, proposal["question"], QuestionForm(proposal["form"])
        )
        events.append(InductionEvent(doc.id, proposal, "added_slot", slot_id))
    return events


def induce_ontology(
    corpus: list[RequirementDoc],
    aspects: list[str],
    backend: Backend,
    domain_name: str = "domain",
) -> tuple[ExperienceOntology, list[InductionEvent]]:
    """Build a full tree: a dimension pass over the corpus, then a slot pass."""
    if not corpus:
        raise EmptyCorpus("the induction corpus is empty")
    if not aspects:
        raise EmptyAspectList(
            "aspect list is empty: the aspect layer is provided by domain experts"
        )
    try:
        onto = onto_mod.new_ontology(domain_name, aspects)
    except DuplicateName as exc:
        raise EmptyAspectList(str(exc)) from None
    events: list[InductionEvent] = []
    for doc in corpus:
        events.extend(induce_dimensions(doc, onto, backend))
    for doc in corpus:
        events.extend(induce_slots(doc, onto, backend))
    return onto, events
